#pragma once

#include "fplab/coefficients.hpp"

#include <vector>

namespace fplab {

// Smooth scalar with closed-form derivatives.
template <int Dim>
struct AnalyticScalar {
  ScalarField<Dim> value;
  VectorField<Dim> gradient;
  MatrixField<Dim> hessian;
};

// Smooth vector field with its closed-form divergence.
template <int Dim>
struct AnalyticVector {
  VectorField<Dim> value;
  ScalarField<Dim> divergence;
};

// Non-divergence form: L u = trace(A hess u) + <div A + H, grad u>.
template <int Dim>
double nondivergence_apply(const CoefficientSet<Dim>& cs, const AnalyticScalar<Dim>& u, const Point<Dim>& x) {
  const VectorField<Dim>& divA = cs.require_div_A();
  require(static_cast<bool>(u.hessian), ErrorCode::MissingDerivative, "second derivatives of u are required");
  const Matrix<Dim> a = cs.A(x);
  return (a * u.hessian(x)).trace() + (divA(x) + cs.H(x)).dot(u.gradient(x));
}

// Product with derivatives from the Leibniz rule.
template <int Dim>
AnalyticScalar<Dim> product(const AnalyticScalar<Dim>& u, const AnalyticScalar<Dim>& v) {
  AnalyticScalar<Dim> w;
  w.value = [u, v](const Point<Dim>& x) { return u.value(x) * v.value(x); };
  w.gradient = [u, v](const Point<Dim>& x) {
    return Point<Dim>(u.value(x) * v.gradient(x) + v.value(x) * u.gradient(x));
  };
  w.hessian = [u, v](const Point<Dim>& x) {
    const Point<Dim> gu = u.gradient(x), gv = v.gradient(x);
    return Matrix<Dim>(u.value(x) * v.hessian(x) + v.value(x) * u.hessian(x) + gu * gv.transpose() +
                       gv * gu.transpose());
  };
  return w;
}

// max over points of |div(uF) - (<grad u, F> + u div F)|, with div(uF) supplied in closed form.
template <int Dim>
double product_rule_div_check(const AnalyticScalar<Dim>& u, const AnalyticVector<Dim>& F,
                              const ScalarField<Dim>& div_uF, const std::vector<Point<Dim>>& points) {
  double worst = 0.0;
  for (const auto& x : points) {
    const double expanded = u.gradient(x).dot(F.value(x)) + u.value(x) * F.divergence(x);
    worst = std::max(worst, std::abs(div_uF(x) - expanded));
  }
  return worst;
}

// max over points of |L(chi u) - (u L chi + chi L u + <A grad chi, grad u> + <A grad u, grad chi>)|
template <int Dim>
double product_rule_residual(const CoefficientSet<Dim>& cs, const AnalyticScalar<Dim>& chi,
                             const AnalyticScalar<Dim>& u, const std::vector<Point<Dim>>& points) {
  const auto chiu = product(chi, u);
  double worst = 0.0;
  for (const auto& x : points) {
    const Matrix<Dim> a = cs.A(x);
    const Point<Dim> gc = chi.gradient(x), gu = u.gradient(x);
    const double lhs = nondivergence_apply(cs, chiu, x);
    const double rhs = u.value(x) * nondivergence_apply(cs, chi, x) + chi.value(x) * nondivergence_apply(cs, u, x) +
                       (a * gc).dot(gu) + (a * gu).dot(gc);
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }
  return worst;
}

// Hand-expanded test cases for the product rules.
template <int Dim>
struct ProductRuleCase {
  std::string name;
  AnalyticScalar<Dim> u;
  AnalyticVector<Dim> F;
  ScalarField<Dim> div_uF;
};

template <int Dim>
std::vector<ProductRuleCase<Dim>> product_rule_corpus() {
  using P = Point<Dim>;
  std::vector<ProductRuleCase<Dim>> out;
  {
    // u = x1^2 x2, F = (x2, x1 x2, ...0): uF = (x1^2 x2^2, x1^3 x2^2), div = 2 x1 x2^2 + 2 x1^3 x2
    ProductRuleCase<Dim> c;
    c.name = "cubic_times_bilinear";
    c.u.value = [](const P& x) { return x[0] * x[0] * x[1]; };
    c.u.gradient = [](const P& x) {
      P g = P::Zero();
      g[0] = 2 * x[0] * x[1];
      g[1] = x[0] * x[0];
      return g;
    };
    c.F.value = [](const P& x) {
      P f = P::Zero();
      f[0] = x[1];
      f[1] = x[0] * x[1];
      return f;
    };
    c.F.divergence = [](const P& x) { return x[0]; };
    c.div_uF = [](const P& x) { return 2 * x[0] * x[1] * x[1] + 2 * x[0] * x[0] * x[0] * x[1]; };
    out.push_back(c);
  }
  {
    // u = 1 + |x|^2, F = x: uF = x + |x|^2 x, div = d + (d + 2)|x|^2
    ProductRuleCase<Dim> c;
    c.name = "radial";
    c.u.value = [](const P& x) { return 1 + x.squaredNorm(); };
    c.u.gradient = [](const P& x) { return P(2 * x); };
    c.F.value = [](const P& x) { return x; };
    c.F.divergence = [](const P&) { return static_cast<double>(Dim); };
    c.div_uF = [](const P& x) { return Dim + (Dim + 2) * x.squaredNorm(); };
    out.push_back(c);
  }
  {
    // u = x1 x2 - 3, F = (x2^2, -x1^3, ...): div F = 0, div(uF) = x2 * x2^2 + x1 * (-x1^3)
    ProductRuleCase<Dim> c;
    c.name = "solenoidal";
    c.u.value = [](const P& x) { return x[0] * x[1] - 3; };
    c.u.gradient = [](const P& x) {
      P g = P::Zero();
      g[0] = x[1];
      g[1] = x[0];
      return g;
    };
    c.F.value = [](const P& x) {
      P f = P::Zero();
      f[0] = x[1] * x[1];
      f[1] = -x[0] * x[0] * x[0];
      return f;
    };
    c.F.divergence = [](const P&) { return 0.0; };
    c.div_uF = [](const P& x) { return x[1] * x[1] * x[1] - x[0] * x[0] * x[0] * x[0]; };
    out.push_back(c);
  }
  return out;
}

// Polynomials and a smooth bump for checking the operator identities.
template <int Dim>
std::vector<AnalyticScalar<Dim>> polynomial_corpus() {
  using P = Point<Dim>;
  using Mt = Matrix<Dim>;
  std::vector<AnalyticScalar<Dim>> out;
  out.push_back({[](const P& x) { return 1.0 + 2 * x[0] - x[Dim - 1]; },
                 [](const P&) {
                   P g = P::Zero();
                   g[0] += 2;
                   g[Dim - 1] -= 1;
                   return g;
                 },
                 [](const P&) { return Mt(Mt::Zero()); }});
  out.push_back({[](const P& x) { return x.squaredNorm(); }, [](const P& x) { return P(2 * x); },
                 [](const P&) { return Mt(2 * Mt::Identity()); }});
  out.push_back({[](const P& x) { return x[0] * x[0] * x[1] + x[1] * x[1] * x[1]; },
                 [](const P& x) {
                   P g = P::Zero();
                   g[0] = 2 * x[0] * x[1];
                   g[1] = x[0] * x[0] + 3 * x[1] * x[1];
                   return g;
                 },
                 [](const P& x) {
                   Mt h = Mt::Zero();
                   h(0, 0) = 2 * x[1];
                   h(0, 1) = h(1, 0) = 2 * x[0];
                   h(1, 1) = 6 * x[1];
                   return h;
                 }});
  out.push_back({[](const P& x) { return std::sin(x[0]) * std::exp(x[1]); },
                 [](const P& x) {
                   P g = P::Zero();
                   g[0] = std::cos(x[0]) * std::exp(x[1]);
                   g[1] = std::sin(x[0]) * std::exp(x[1]);
                   return g;
                 },
                 [](const P& x) {
                   Mt h = Mt::Zero();
                   h(0, 0) = -std::sin(x[0]) * std::exp(x[1]);
                   h(0, 1) = h(1, 0) = std::cos(x[0]) * std::exp(x[1]);
                   h(1, 1) = std::sin(x[0]) * std::exp(x[1]);
                   return h;
                 }});
  return out;
}

}  // namespace fplab
