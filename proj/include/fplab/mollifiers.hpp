#pragma once

#include "fplab/core.hpp"
#include "fplab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace fplab {

inline constexpr int kMollifierNodes = 64;

namespace detail {

inline const GaussLegendre& mollifier_rule() {
  static const GaussLegendre rule(kMollifierNodes);
  return rule;
}

inline double bump(double s) { return std::abs(s) < 1.0 ? std::exp(1.0 / (s * s - 1.0)) : 0.0; }

// int_{(-1,1)} e^{1/(s^2-1)} ds by the same rule used for every convolution, computed once.
inline double bump_mass() {
  static const double mass = mollifier_rule().integrate(bump, -1.0, 1.0);
  return mass;
}

}  // namespace detail

// Standard mollifier on the line.
inline double eta(double t) { return detail::bump(t) / detail::bump_mass(); }

inline double eta_eps(double t, double eps) { return eta(t / eps) / eps; }

// int_{-inf}^{x} eta
inline double eta_cdf(double x) {
  if (x <= -1.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // integrate the shorter tail so the result stays symmetric
  if (x > 0.0) return 1.0 - eta_cdf(-x);
  return detail::mollifier_rule().integrate(eta, -1.0, x);
}

inline double psi_eps(double t, double eps) { return std::max(std::min(t, 1.0 + eps), -eps); }

namespace detail {

inline void require_eps(double eps) {
  require(std::isfinite(eps) && eps > 0.0, ErrorCode::InvalidArgument, "epsilon must be positive");
}

// int_{-eps/2}^{eps/2} eta_{eps/2}(s) psi_eps(t - s) ds, split where psi_eps has a corner.
inline double phi_convolution(double t, double eps) {
  const double h = 0.5 * eps;
  std::vector<double> cuts{-h, h};
  for (double k : {t + eps, t - 1.0 - eps})
    if (k > -h && k < h) cuts.push_back(k);
  std::sort(cuts.begin(), cuts.end());
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    s += mollifier_rule().integrate([&](double u) { return eta_eps(u, h) * psi_eps(t - u, eps); }, cuts[i], cuts[i + 1]);
  return s;
}

}  // namespace detail

// phi_eps = eta_{eps/2} * psi_eps with the closed forms on the three plateaus.
inline double phi_eps(double t, double eps) {
  detail::require_eps(eps);
  if (t >= -0.5 * eps && t <= 1.0 + 0.5 * eps) return t;
  if (t <= -1.5 * eps) return -eps;
  if (t >= 1.0 + 1.5 * eps) return 1.0 + eps;
  return detail::phi_convolution(t, eps);
}

// Convolution quadrature everywhere, for auditing the closed forms.
inline double phi_eps_quadrature(double t, double eps) {
  detail::require_eps(eps);
  return detail::phi_convolution(t, eps);
}

// phi' = int eta_{eps/2}(s) 1{-eps < t - s < 1 + eps} ds
inline double phi_eps_derivative(double t, double eps) {
  detail::require_eps(eps);
  const double h = 0.5 * eps;
  return eta_cdf((t + eps) / h) - eta_cdf((t - 1.0 - eps) / h);
}

struct CapitalPhi {
  double value = 0.0;
  double first = 0.0;
  double second = 0.0;
};

// Phi_eps(t) = int_{-inf}^t zeta_eps, zeta_eps(t) = int_{-inf}^t eta_{eps/2}(s - 1 - eps/2) ds.
inline CapitalPhi capital_phi_eps(double t, double eps) {
  detail::require_eps(eps);
  const double h = 0.5 * eps, c = 1.0 + h;
  CapitalPhi r;
  r.second = eta_eps(t - c, h);
  r.first = eta_cdf((t - c) / h);
  if (t <= 1.0) {
    r.value = 0.0;
  } else if (t >= 1.0 + eps) {
    // zeta is symmetric about c, so int_1^{1+eps} zeta = eps/2
    r.value = t - c;
  } else {
    // Phi(t) = int (t - s) eta_{eps/2}(s - c) ds over s < t
    r.value = detail::mollifier_rule().integrate([&](double s) { return (t - s) * eta_eps(s - c, h); }, 1.0, t);
  }
  return r;
}

struct MollifierLimits {
  std::vector<double> eps;
  std::vector<double> phi, phi_prime, capital_phi_prime;
  double phi_limit = 0.0, phi_prime_limit = 0.0, capital_phi_prime_limit = 0.0;  // values at the smallest eps
};

inline double phi_limit_exact(double t) { return std::min(std::max(t, 0.0), 1.0); }
inline double phi_prime_limit_exact(double t) { return t >= 0.0 && t <= 1.0 ? 1.0 : 0.0; }
inline double capital_phi_prime_limit_exact(double t) { return t > 1.0 ? 1.0 : 0.0; }

// phi' here is the central difference of phi_eps at step eps^2.
inline MollifierLimits phi_eps_limits(double t, const std::vector<double>& eps_sequence) {
  require(!eps_sequence.empty(), ErrorCode::InvalidArgument, "empty epsilon sequence");
  for (std::size_t i = 1; i < eps_sequence.size(); ++i)
    require(eps_sequence[i] < eps_sequence[i - 1], ErrorCode::InvalidArgument, "epsilon sequence must decrease");
  MollifierLimits r;
  for (double e : eps_sequence) {
    const double step = e * e;
    r.eps.push_back(e);
    r.phi.push_back(phi_eps(t, e));
    r.phi_prime.push_back((phi_eps(t + step, e) - phi_eps(t - step, e)) / (2.0 * step));
    r.capital_phi_prime.push_back(capital_phi_eps(t, e).first);
  }
  r.phi_limit = r.phi.back();
  r.phi_prime_limit = r.phi_prime.back();
  r.capital_phi_prime_limit = r.capital_phi_prime.back();
  return r;
}

struct MollifierRow {
  double t = 0.0, phi = 0.0, phi_prime = 0.0, capital_phi = 0.0, capital_phi_prime = 0.0;
};

inline std::vector<MollifierRow> mollifier_table(double eps, double t0, double t1, int points) {
  require(points >= 2 && t1 > t0, ErrorCode::InvalidArgument, "mollifier grid needs t1 > t0 and at least two points");
  std::vector<MollifierRow> rows;
  rows.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double t = t0 + (t1 - t0) * i / (points - 1);
    const auto cp = capital_phi_eps(t, eps);
    rows.push_back({t, phi_eps(t, eps), phi_eps_derivative(t, eps), cp.value, cp.first});
  }
  return rows;
}

}  // namespace fplab
