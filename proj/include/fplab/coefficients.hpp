#pragma once

#include "fplab/core.hpp"
#include "fplab/mesh.hpp"

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace fplab {

// Coefficients of the double-divergence problem
//   int (div(A grad phi) + <H, grad phi> + c phi) h dx = int f phi dx + int <F, grad phi> dx.
template <int Dim>
struct CoefficientSet {
  std::string name;
  MatrixField<Dim> A;
  double lambda = 1.0;  // lambda |xi|^2 <= <A xi, xi>
  double M = 1.0;       // max |a_ij|
  std::optional<VectorField<Dim>> div_A;  // e_j = sum_i d_i a_ij; absent when A is not weakly differentiable
  VectorField<Dim> H;
  ScalarField<Dim> c;
  ScalarField<Dim> f_tilde;
  VectorField<Dim> F_tilde;
  double p = 2.0 * Dim;  // integrability of H, c, F
  double q = 2.0;
  std::optional<ScalarField<Dim>> exact_density;  // invariant density up to a constant, when known in closed form

  const VectorField<Dim>& require_div_A() const {
    if (!div_A) fail(ErrorCode::MissingDerivative, "div A is not available for preset '" + name + "'");
    return *div_A;
  }
};

namespace detail {

template <int Dim>
CoefficientSet<Dim> base_set(std::string name) {
  CoefficientSet<Dim> cs;
  cs.name = std::move(name);
  cs.A = [](const Point<Dim>&) { return Matrix<Dim>::Identity(); };
  cs.div_A = [](const Point<Dim>&) { return Point<Dim>::Zero(); };
  cs.H = [](const Point<Dim>&) { return Point<Dim>::Zero(); };
  cs.c = [](const Point<Dim>&) { return 0.0; };
  cs.f_tilde = [](const Point<Dim>&) { return 0.0; };
  cs.F_tilde = [](const Point<Dim>&) { return Point<Dim>::Zero(); };
  return cs;
}

}  // namespace detail

// phi(x) = 2 + |x|^2 + cos(log log(1 + 1/|x|)), phi(0) = 0: bounded below by 1 away from the origin,
// in VMO but not continuous at 0.
template <int Dim>
double example_i_phi(const Point<Dim>& x) {
  const double r = x.norm();
  if (r == 0.0) return 0.0;
  return 2.0 + r * r + std::cos(std::log(std::log1p(1.0 / r)));
}

// eta(t) = t sin(1/t) for t > 0, 0 otherwise.
inline double example_ii_eta(double t) { return t > 0.0 ? t * std::sin(1.0 / t) : 0.0; }

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"identity", "gaussian_gradient", "example_i", "example_ii", "rotator"};
  return names;
}

template <int Dim>
CoefficientSet<Dim> preset(const std::string& name) {
  if (name == "identity") {
    auto cs = detail::base_set<Dim>(name);
    cs.exact_density = [](const Point<Dim>&) { return 1.0; };
    return cs;
  }
  if (name == "gaussian_gradient") {
    // H = grad V with V = -|x|^2 / 2, so rho is proportional to exp(V).
    auto cs = detail::base_set<Dim>(name);
    cs.H = [](const Point<Dim>& x) { return Point<Dim>(-x); };
    cs.exact_density = [](const Point<Dim>& x) { return std::exp(-0.5 * x.squaredNorm()); };
    return cs;
  }
  if (name == "example_i") {
    auto cs = detail::base_set<Dim>(name);
    cs.A = [](const Point<Dim>& x) {
      // evaluation points are nudged off the origin, where phi is set to zero
      Point<Dim> y = x;
      if (y.norm() < 1e-14) y[0] += 1e-14;
      return Matrix<Dim>(example_i_phi<Dim>(y) * Matrix<Dim>::Identity());
    };
    cs.lambda = 1.0;
    cs.M = 4.0;  // valid on the unit ball: phi <= 3 + |x|^2
    cs.div_A.reset();
    cs.exact_density = [](const Point<Dim>&) { return 1.0; };
    return cs;
  }
  if (name == "example_ii") {
    auto cs = detail::base_set<Dim>(name);
    cs.A = [](const Point<Dim>& x) {
      Matrix<Dim> a = Matrix<Dim>::Zero();
      for (int i = 0; i < Dim; ++i) a(i, i) = std::exp(example_ii_eta(x[(i + 1) % Dim]));
      return a;
    };
    // a_ii does not depend on x_i, so div A = 0. Bounds hold for |x_i| <= 1, where eta lies in [-0.2173, sin 1].
    cs.lambda = 0.8;
    cs.M = std::exp(std::sin(1.0));
    cs.exact_density = [](const Point<Dim>&) { return 1.0; };
    return cs;
  }
  if (name == "rotator") {
    // Divergence-free rotation in the (x_1, x_2) plane, tangent to every sphere centered at the origin.
    auto cs = detail::base_set<Dim>(name);
    cs.H = [](const Point<Dim>& x) {
      Point<Dim> h = Point<Dim>::Zero();
      h[0] = -x[1];
      h[1] = x[0];
      return h;
    };
    cs.exact_density = [](const Point<Dim>&) { return 1.0; };
    return cs;
  }
  fail(ErrorCode::UnknownPreset, "unknown coefficient preset '" + name + "'");
}

struct EllipticityAudit {
  bool passed = true;
  double min_ratio = 0.0;  // min <A xi, xi> / |xi|^2 over samples
  double max_ratio = 0.0;
  double max_entry = 0.0;  // max |a_ij|
  std::size_t samples = 0;
};

// Random points in the ball and random directions; checks lambda |xi|^2 <= <A xi, xi> <= d M |xi|^2 and |a_ij| <= M.
template <int Dim>
EllipticityAudit ellipticity_audit(const CoefficientSet<Dim>& cs, const Ball<Dim>& region, std::size_t samples,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  EllipticityAudit out;
  out.samples = samples;
  out.min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < samples; ++s) {
    Point<Dim> dir, xi;
    for (int i = 0; i < Dim; ++i) dir[i] = normal(rng);
    for (int i = 0; i < Dim; ++i) xi[i] = normal(rng);
    const Point<Dim> x = region.center + region.radius * std::pow(unif(rng), 1.0 / Dim) * dir.normalized();
    const Matrix<Dim> a = cs.A(x);
    require(a.allFinite(), ErrorCode::NonFiniteValue, "A is not finite at a sample point");
    const double ratio = xi.dot(a * xi) / xi.squaredNorm();
    out.min_ratio = std::min(out.min_ratio, ratio);
    out.max_ratio = std::max(out.max_ratio, ratio);
    out.max_entry = std::max(out.max_entry, a.cwiseAbs().maxCoeff());
  }
  const double slack = 1e-12;
  out.passed = out.min_ratio >= cs.lambda * (1 - slack) && out.max_ratio <= Dim * cs.M * (1 + slack) &&
               out.max_entry <= cs.M * (1 + slack);
  return out;
}

}  // namespace fplab
