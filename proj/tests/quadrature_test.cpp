#include "fplab/quadrature.hpp"

#include <gtest/gtest.h>

using namespace fplab;

namespace {

// Exact mean of prod lambda_k^{a_k} over a simplex: (prod a_k!) d! / (sum a + d)!
template <int Dim>
double exact_monomial_mean(const std::array<int, Dim + 1>& a) {
  double num = factorial(Dim);
  int total = Dim;
  for (int k : a) {
    num *= std::tgamma(k + 1.0);
    total += k;
  }
  return num / std::tgamma(total + 1.0);
}

template <int Dim>
void check_rule(int degree) {
  const auto& rule = quadrature_rule<Dim>(degree);
  EXPECT_GE(rule.degree, degree);
  double wsum = 0.0;
  for (double w : rule.weights) {
    EXPECT_GT(w, 0.0);
    wsum += w;
  }
  EXPECT_NEAR(wsum, 1.0, 1e-14);
  std::array<int, Dim + 1> a{};
  // enumerate all exponent tuples with total degree <= rule.degree
  std::function<void(int, int)> rec = [&](int k, int left) {
    if (k == Dim + 1) {
      double s = 0.0;
      for (std::size_t q = 0; q < rule.size(); ++q) {
        double m = 1.0;
        for (int j = 0; j <= Dim; ++j) m *= std::pow(rule.points[q][j], a[j]);
        s += rule.weights[q] * m;
      }
      EXPECT_NEAR(s, exact_monomial_mean<Dim>(a), 1e-13);
      return;
    }
    for (int e = 0; e <= left; ++e) {
      a[k] = e;
      rec(k + 1, left - e);
    }
  };
  rec(0, rule.degree);
}

}  // namespace

TEST(Quadrature, TriangleRulesAreExact) {
  for (int d = 1; d <= 5; ++d) check_rule<2>(d);
}

TEST(Quadrature, TetrahedronRulesAreExact) {
  for (int d = 1; d <= 5; ++d) check_rule<3>(d);
}

TEST(Quadrature, BarycentricPointsAreInside) {
  for (const auto& p : quadrature_rule<3>(4).points) {
    double s = 0.0;
    for (double l : p) {
      EXPECT_GT(l, 0.0);
      s += l;
    }
    EXPECT_NEAR(s, 1.0, 1e-15);
  }
}

TEST(Quadrature, GaussLegendreIntegratesPolynomials) {
  const GaussLegendre gl(8);
  EXPECT_NEAR(gl.integrate([](double x) { return std::pow(x, 15); }, 0.0, 1.0), 1.0 / 16.0, 1e-15);
  EXPECT_NEAR(gl.integrate([](double x) { return std::cos(x); }, 0.0, M_PI / 2), 1.0, 1e-14);
}

TEST(Quadrature, RejectsUnsupportedDegree) { EXPECT_THROW(quadrature_rule<2>(9), Error); }
