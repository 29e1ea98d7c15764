#pragma once

#include "fplab/core.hpp"

#include <array>
#include <vector>

namespace fplab {

// Rule on the reference simplex in barycentric coordinates; weights sum to one.
template <int Dim>
struct QuadratureRule {
  int degree = 0;
  std::vector<std::array<double, Dim + 1>> points;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

namespace detail {

template <int Dim>
void add_orbit(QuadratureRule<Dim>& rule, std::array<double, Dim + 1> p, double w) {
  std::sort(p.begin(), p.end());
  do {
    rule.points.push_back(p);
    rule.weights.push_back(w);
  } while (std::next_permutation(p.begin(), p.end()));
}

inline QuadratureRule<2> make_triangle_rule(int degree) {
  QuadratureRule<2> r;
  if (degree <= 1) {
    r.degree = 1;
    add_orbit<2>(r, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1.0);
  } else if (degree == 2) {
    r.degree = 2;
    add_orbit<2>(r, {2.0 / 3, 1.0 / 6, 1.0 / 6}, 1.0 / 3);
  } else if (degree <= 4) {
    r.degree = 4;
    const double a1 = 0.445948490915965, a2 = 0.091576213509771;
    add_orbit<2>(r, {a1, a1, 1 - 2 * a1}, 0.223381589678011);
    add_orbit<2>(r, {a2, a2, 1 - 2 * a2}, 0.109951743655322);
  } else {
    r.degree = 5;
    const double a1 = 0.470142064105115, a2 = 0.101286507323456;
    add_orbit<2>(r, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.225);
    add_orbit<2>(r, {a1, a1, 1 - 2 * a1}, 0.132394152788506);
    add_orbit<2>(r, {a2, a2, 1 - 2 * a2}, 0.125939180544827);
  }
  return r;
}

inline QuadratureRule<3> make_tetrahedron_rule(int degree) {
  QuadratureRule<3> r;
  if (degree <= 1) {
    r.degree = 1;
    add_orbit<3>(r, {0.25, 0.25, 0.25, 0.25}, 1.0);
  } else if (degree == 2) {
    r.degree = 2;
    const double a = 0.1381966011250105;
    add_orbit<3>(r, {a, a, a, 1 - 3 * a}, 0.25);
  } else {
    // 14 points, all weights positive, exact through degree 5.
    r.degree = 5;
    const double a1 = 0.31088591926330060980, a2 = 0.092735250310891226402, a3 = 0.045503704125649649492;
    add_orbit<3>(r, {a1, a1, a1, 1 - 3 * a1}, 6 * 0.018781320953002641800);
    add_orbit<3>(r, {a2, a2, a2, 1 - 3 * a2}, 6 * 0.012248840519393658257);
    add_orbit<3>(r, {a3, a3, 0.5 - a3, 0.5 - a3}, 6 * 0.0070910034628469110730);
  }
  return r;
}

// Gauss-Legendre nodes and weights on [-1, 1] via Newton on the Legendre recurrence.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

}  // namespace detail

// Lowest-cost positive-weight rule exact for polynomials of at least the requested degree (max 5).
template <int Dim>
const QuadratureRule<Dim>& quadrature_rule(int degree = 4) {
  require(degree >= 1 && degree <= 5, ErrorCode::InvalidArgument, "quadrature degree must be in [1, 5]");
  static const std::array<QuadratureRule<Dim>, 6> rules = [] {
    std::array<QuadratureRule<Dim>, 6> out;
    for (int d = 1; d <= 5; ++d) {
      if constexpr (Dim == 2) out[d] = detail::make_triangle_rule(d);
      else out[d] = detail::make_tetrahedron_rule(d);
    }
    return out;
  }();
  return rules[degree];
}

struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(int n) { detail::gauss_legendre(n, nodes, weights); }

  template <typename F>
  double integrate(F&& f, double a, double b) const {
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(mid + half * nodes[i]);
    return s * half;
  }
};

}  // namespace fplab
