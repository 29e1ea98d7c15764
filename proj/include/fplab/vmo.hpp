#pragma once

#include "fplab/mesh.hpp"

#include <random>
#include <vector>

namespace fplab {

template <int Dim>
struct VmoOptions {
  std::vector<double> radii;           // R_k
  std::vector<Point<Dim>> centers;     // z
  std::size_t pairs = 4000;            // Monte Carlo pairs per (z, r)
  std::uint64_t seed = 1;
};

// omega(R) = sup_{z, r <= R} r^{-2d} int_{B_r(z)} int_{B_r(z)} |g(x) - g(y)| dx dy, estimated as
// |B_1|^2 * mean |g(x) - g(y)| over uniform pairs; reported as a running max so it is non-decreasing in R.
struct VmoReport {
  std::vector<double> radii;
  std::vector<double> modulus;
  std::vector<double> standard_error;  // of the (z, r) estimate attaining the max
  std::vector<double> radius_mean;     // average over centers at exactly r = R_k
  std::size_t centers = 0;
  std::size_t pairs = 0;
  std::uint64_t seed = 0;
};

struct ProductInequalityReport {
  std::vector<double> radii;
  std::vector<double> lhs;    // omega_{fg}
  std::vector<double> rhs;    // |f|_inf omega_g + |g|_inf omega_f
  std::vector<double> slack;  // 3 combined standard errors
  double sup_f = 0.0;
  double sup_g = 0.0;
  bool holds = true;
};

namespace detail {

template <int Dim>
Point<Dim> uniform_in_ball(std::mt19937_64& rng, const Point<Dim>& c, double r) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  Point<Dim> d;
  for (int i = 0; i < Dim; ++i) d[i] = normal(rng);
  return c + r * std::pow(unif(rng), 1.0 / Dim) * d.normalized();
}

struct OscillationTable {
  // [field][center][radius] -> mean |g(x) - g(y)| and its standard error
  std::vector<std::vector<std::vector<double>>> mean, se;
  std::vector<double> sup;  // max |g| over all sample points, per field
};

// Common random numbers: every field sees the same sample points, drawn from a stream per center.
template <int Dim>
OscillationTable sample_oscillations(const std::vector<ScalarField<Dim>>& fields, const Ball<Dim>& domain,
                                     const VmoOptions<Dim>& opts) {
  require(!opts.radii.empty(), ErrorCode::InvalidArgument, "no radii given");
  require(!opts.centers.empty(), ErrorCode::InvalidArgument, "no centers given");
  require(opts.pairs >= 2, ErrorCode::InvalidArgument, "need at least two sample pairs");
  for (double r : opts.radii)
    require(std::isfinite(r) && r > 0.0 && r <= domain.radius, ErrorCode::DegenerateRadius,
            "radius " + std::to_string(r) + " is not in (0, domain radius]");
  const std::size_t nf = fields.size(), nc = opts.centers.size(), nr = opts.radii.size();
  OscillationTable t;
  t.mean.assign(nf, std::vector<std::vector<double>>(nc, std::vector<double>(nr, 0.0)));
  t.se = t.mean;
  t.sup.assign(nf, 0.0);
  std::vector<double> gx(nf), gy(nf), s1(nf), s2(nf);
  for (std::size_t c = 0; c < nc; ++c) {
    std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                      static_cast<std::uint32_t>(c)};
    std::mt19937_64 rng(seq);
    for (std::size_t k = 0; k < nr; ++k) {
      std::fill(s1.begin(), s1.end(), 0.0);
      std::fill(s2.begin(), s2.end(), 0.0);
      for (std::size_t p = 0; p < opts.pairs; ++p) {
        const Point<Dim> x = uniform_in_ball<Dim>(rng, opts.centers[c], opts.radii[k]);
        const Point<Dim> y = uniform_in_ball<Dim>(rng, opts.centers[c], opts.radii[k]);
        for (std::size_t f = 0; f < nf; ++f) {
          gx[f] = fields[f](x);
          gy[f] = fields[f](y);
          require(std::isfinite(gx[f]) && std::isfinite(gy[f]), ErrorCode::NonFiniteValue, "field is not finite");
          const double d = std::abs(gx[f] - gy[f]);
          s1[f] += d;
          s2[f] += d * d;
          t.sup[f] = std::max({t.sup[f], std::abs(gx[f]), std::abs(gy[f])});
        }
      }
      const double n = static_cast<double>(opts.pairs);
      for (std::size_t f = 0; f < nf; ++f) {
        const double m = s1[f] / n;
        const double var = std::max(0.0, (s2[f] / n - m * m) * n / (n - 1.0));
        t.mean[f][c][k] = m;
        t.se[f][c][k] = std::sqrt(var / n);
      }
    }
  }
  return t;
}

template <int Dim>
VmoReport assemble_report(const OscillationTable& t, std::size_t f, const VmoOptions<Dim>& opts) {
  const double scale = std::pow(unit_ball_volume(Dim), 2);
  VmoReport rep;
  rep.radii = opts.radii;
  rep.centers = opts.centers.size();
  rep.pairs = opts.pairs;
  rep.seed = opts.seed;
  double best = 0.0, best_se = 0.0;
  for (std::size_t k = 0; k < opts.radii.size(); ++k) {
    double avg = 0.0;
    for (std::size_t c = 0; c < opts.centers.size(); ++c) {
      avg += t.mean[f][c][k];
      if (scale * t.mean[f][c][k] > best) {
        best = scale * t.mean[f][c][k];
        best_se = scale * t.se[f][c][k];
      }
    }
    rep.modulus.push_back(best);
    rep.standard_error.push_back(best_se);
    rep.radius_mean.push_back(scale * avg / static_cast<double>(opts.centers.size()));
  }
  return rep;
}

template <int Dim>
VmoOptions<Dim> sorted(VmoOptions<Dim> opts) {
  std::sort(opts.radii.begin(), opts.radii.end());
  return opts;
}

}  // namespace detail

template <int Dim>
VmoReport vmo_modulus(const ScalarField<Dim>& g, const Ball<Dim>& domain, const VmoOptions<Dim>& options) {
  const auto opts = detail::sorted(options);
  const auto table = detail::sample_oscillations<Dim>({g}, domain, opts);
  return detail::assemble_report<Dim>(table, 0, opts);
}

// omega_{fg}(R) <= |f|_inf omega_g(R) + |g|_inf omega_f(R), checked on shared samples up to 3 standard errors.
template <int Dim>
ProductInequalityReport vmo_product_inequality_check(const ScalarField<Dim>& f, const ScalarField<Dim>& g,
                                                     const Ball<Dim>& domain, const VmoOptions<Dim>& options) {
  const auto opts = detail::sorted(options);
  const ScalarField<Dim> fg = [f, g](const Point<Dim>& x) { return f(x) * g(x); };
  const auto table = detail::sample_oscillations<Dim>({f, g, fg}, domain, opts);
  const auto wf = detail::assemble_report<Dim>(table, 0, opts);
  const auto wg = detail::assemble_report<Dim>(table, 1, opts);
  const auto wfg = detail::assemble_report<Dim>(table, 2, opts);
  ProductInequalityReport rep;
  rep.radii = opts.radii;
  rep.sup_f = table.sup[0];
  rep.sup_g = table.sup[1];
  for (std::size_t k = 0; k < opts.radii.size(); ++k) {
    rep.lhs.push_back(wfg.modulus[k]);
    rep.rhs.push_back(rep.sup_f * wg.modulus[k] + rep.sup_g * wf.modulus[k]);
    const double se = std::sqrt(std::pow(wfg.standard_error[k], 2) + std::pow(rep.sup_f * wg.standard_error[k], 2) +
                                std::pow(rep.sup_g * wf.standard_error[k], 2));
    rep.slack.push_back(3.0 * se);
    if (rep.lhs[k] > rep.rhs[k] + rep.slack[k]) rep.holds = false;
  }
  return rep;
}

template <int Dim>
std::vector<Point<Dim>> sample_centers_in_ball(const Ball<Dim>& ball, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Point<Dim>> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(detail::uniform_in_ball<Dim>(rng, ball.center, ball.radius));
  return out;
}

// Uniform directions, radii uniform in [r_in, r_out].
template <int Dim>
std::vector<Point<Dim>> sample_centers_in_annulus(const Point<Dim>& center, double r_in, double r_out, std::size_t n,
                                                  std::uint64_t seed) {
  require(0.0 <= r_in && r_in <= r_out, ErrorCode::InvalidArgument, "annulus radii out of order");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(r_in, r_out);
  std::vector<Point<Dim>> out;
  for (std::size_t i = 0; i < n; ++i) {
    Point<Dim> d;
    for (int k = 0; k < Dim; ++k) d[k] = normal(rng);
    out.push_back(center + unif(rng) * d.normalized());
  }
  return out;
}

// Points of {x_axis = 0} inside the ball of the given radius around the origin.
template <int Dim>
std::vector<Point<Dim>> sample_centers_on_hyperplane(int axis, double radius, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Point<Dim>> out;
  for (std::size_t i = 0; i < n; ++i) {
    Point<Dim> p = detail::uniform_in_ball<Dim>(rng, Point<Dim>::Zero(), radius);
    p[axis] = 0.0;
    out.push_back(p);
  }
  return out;
}

}  // namespace fplab
