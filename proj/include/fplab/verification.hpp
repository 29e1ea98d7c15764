#pragma once

#include "fplab/calculus.hpp"
#include "fplab/mollifiers.hpp"
#include "fplab/regularity.hpp"
#include "fplab/vmo.hpp"

#include <chrono>
#include <functional>
#include <random>

namespace fplab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;                                   // first failing check, or "ok"
  std::vector<std::pair<std::string, double>> metrics;  // in insertion order
  double seconds = 0.0;                                 // wall time; kept out of the report files

  double metric(const std::string& key) const {
    for (const auto& [k, v] : metrics)
      if (k == key) return v;
    fail(ErrorCode::InvalidArgument, "criterion " + std::to_string(id) + " has no metric '" + key + "'");
  }
};

inline constexpr int kCriterionCount = 10;

template <int Dim>
struct PresetPipeline {
  SimplicialMesh<Dim> mesh;
  CoefficientSet<Dim> cs;
  DensityField<Dim> density;
  DriftDecomposition<Dim> dec;
  FormMatrices<Dim> form;

  PresetPipeline(SimplicialMesh<Dim> m, CoefficientSet<Dim> c, DriftMode mode = DriftMode::skew,
                 SolverOptions opts = {})
      : mesh(std::move(m)), cs(std::move(c)), density(solve_invariant_density(mesh, cs, density_options(opts))),
        dec(decompose_drift(cs, density, mesh)), form(assemble_form(mesh, cs, density, dec, mode)) {}

  static DensityOptions density_options(const SolverOptions& opts) {
    DensityOptions d;
    d.solver = opts;
    return d;
  }
};

template <int Dim>
PresetPipeline<Dim> ball_pipeline(const std::string& preset_name, int level, DriftMode mode = DriftMode::skew) {
  return PresetPipeline<Dim>(build_ball_mesh<Dim>(Point<Dim>::Zero(), 1.0, level), preset<Dim>(preset_name), mode);
}

// Relative L2(dx) error of the normalized rho_h against the normalized closed form.
template <int Dim>
double density_relative_error(const SimplicialMesh<Dim>& mesh, const DensityField<Dim>& d,
                              const ScalarField<Dim>& exact) {
  const double mean = integrate(mesh, exact, Weight<Dim>::lebesgue(), 5) / mesh.total_volume();
  double err = 0.0, ref = 0.0;
  for_each_quadrature_point(mesh, quadrature_rule<Dim>(5), [&](Index e, const auto&, std::size_t, const auto& bary,
                                                               const Point<Dim>& x, double w) {
    const double ex = exact(x) / mean;
    const double diff = evaluate_in_element(mesh, d.rho, e, bary) - ex;
    err += w * diff * diff;
    ref += w * ex * ex;
  });
  return std::sqrt(err / ref);
}

namespace detail {

// Collects checks; the first failure becomes the detail line.
class Ledger {
 public:
  Ledger(int id, std::string name) {
    r_.id = id;
    r_.name = std::move(name);
    start_ = std::chrono::steady_clock::now();
  }

  void metric(const std::string& key, double v) { r_.metrics.emplace_back(key, v); }

  bool check(bool ok, const std::string& what) {
    if (!ok && failure_.empty()) failure_ = what;
    return ok;
  }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  CriterionResult finish() {
    r_.seconds = elapsed();
    r_.passed = failure_.empty();
    r_.detail = r_.passed ? "ok" : failure_;
    return r_;
  }

 private:
  CriterionResult r_;
  std::string failure_;
  std::chrono::steady_clock::time_point start_;
};

inline Vector random_normal(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector r(n);
  for (Index i = 0; i < n; ++i) r[i] = normal(rng);
  return r;
}

template <int Dim>
Vector random_interior(const FormMatrices<Dim>& form, std::mt19937_64& rng) {
  return form.interior.extend(random_normal(form.interior.size(), rng), form.size());
}

inline std::string tag(const std::string& name, int dim) { return name + "_" + std::to_string(dim) + "d"; }

inline double order(double coarse, double fine) { return std::log2(coarse / fine); }

// 2D disk at level 3 and 3D ball at level 2, as in the acceptance setups.
template <typename F>
void for_each_verification_mesh(F&& f) {
  for (const auto& name : preset_names()) f(ball_pipeline<2>(name, 3), name);
  for (const auto& name : preset_names()) f(ball_pipeline<3>(name, 2), name);
}

}  // namespace detail

inline CriterionResult verify_invariant_density() {
  detail::Ledger l(1, "invariant density oracle");
  auto run = [&]<int Dim>(int level) {
    const auto mesh = build_ball_mesh<Dim>(Point<Dim>::Zero(), 1.0, level);
    const auto cs = preset<Dim>("gaussian_gradient");
    const double err = density_relative_error(mesh, solve_invariant_density(mesh, cs), *cs.exact_density);
    l.metric("rel_l2_error_" + std::to_string(Dim) + "d", err);
    l.check(err <= 0.05, "gaussian_gradient " + std::to_string(Dim) + "d error " + format_double(err) + " > 0.05");
  };
  run.template operator()<2>(3);
  run.template operator()<3>(2);
  l.check(l.elapsed() <= 120.0, "runtime above 2 minutes");
  return l.finish();
}

inline CriterionResult verify_divergence_free() {
  detail::Ledger l(2, "divergence-free identity");
  double worst = 0.0;
  detail::for_each_verification_mesh([&](const auto& p, const std::string& name) {
    const auto rep = divergence_free_residual(p.mesh, p.cs, p.density, p.dec);
    const double rel = rep.max_residual / rep.scale;
    worst = std::max(worst, rel);
    constexpr int dim = std::decay_t<decltype(p.mesh)>::dimension;
    l.check(rel <= 1e-10, detail::tag(name, dim) + " residual/scale " + format_double(rel));
  });
  l.metric("max_residual_over_scale", worst);
  return l.finish();
}

inline CriterionResult verify_energy_identity(std::uint64_t seed) {
  detail::Ledger l(3, "energy identity and raw symmetric defect");
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  detail::for_each_verification_mesh([&](const auto& p, const std::string& name) {
    constexpr int dim = std::decay_t<decltype(p.mesh)>::dimension;
    for (int t = 0; t < 50; ++t) {
      const Vector f = detail::random_interior(p.form, rng);
      const double e = p.form.energy(f);
      const double h1 = h1_seminorm(p.mesh, FeFunction<dim>{p.mesh.id(), f}, p.cs.A, p.density.weight());
      const double rel = std::abs(e - h1 * h1) / e;
      worst = std::max(worst, rel);
      l.check(rel <= 1e-12, detail::tag(name, dim) + " energy identity off by " + format_double(rel));
    }
  });
  l.metric("max_energy_identity_error", worst);
  std::vector<double> probe, frob;
  for (int level = 2; level <= 5; ++level) {
    const auto p = ball_pipeline<2>("gaussian_gradient", level, DriftMode::raw);
    probe.push_back(p.form.symmetric_defect);
    frob.push_back(p.form.symmetric_defect_norm);
  }
  double min_probe = 1e300, min_frob = 1e300;
  for (std::size_t i = 1; i < probe.size(); ++i) {
    min_probe = std::min(min_probe, detail::order(probe[i - 1], probe[i]));
    min_frob = std::min(min_frob, detail::order(frob[i - 1], frob[i]));
  }
  l.metric("raw_defect_min_order_probe", min_probe);
  l.metric("raw_defect_min_order_frobenius", min_frob);
  l.metric("raw_defect_level5", probe.back());
  l.check(min_probe >= 0.8, "raw defect order " + format_double(min_probe) + " < 0.8");
  l.check(min_frob >= 0.8, "raw defect Frobenius order " + format_double(min_frob) + " < 0.8");
  return l.finish();
}

inline CriterionResult verify_sector(std::uint64_t seed) {
  detail::Ledger l(4, "sector condition");
  const auto p = ball_pipeline<3>("rotator", 2);
  const double bound = theoretical_sector_bound(p.mesh, p.cs, p.density, p.dec);
  const auto rep = sector_constant(p.form, 200, seed, bound);
  l.metric("empirical", rep.empirical);
  l.metric("theoretical", bound);
  l.metric("pairs", rep.pairs);
  l.check(rep.empirical <= 1.05 * bound,
          "empirical sector ratio " + format_double(rep.empirical) + " above 1.05 x " + format_double(bound));
  return l.finish();
}

inline CriterionResult verify_resolvent_axioms(std::uint64_t seed) {
  detail::Ledger l(5, "resolvent axioms");
  std::mt19937_64 rng(seed);
  double max_ratio = 0.0, max_identity = 0.0;
  detail::for_each_verification_mesh([&](const auto& p, const std::string& name) {
    constexpr int dim = std::decay_t<decltype(p.mesh)>::dimension;
    const auto rep = evaluate_contraction(p.form, {1.0, 10.0, 100.0, 1000.0}, 4, rng());
    max_ratio = std::max(max_ratio, rep.max_ratio);
    l.check(rep.max_ratio <= 1.0 + 1e-10, detail::tag(name, dim) + " contraction ratio " + format_double(rep.max_ratio));
    const Vector f = detail::random_normal(p.form.size(), rng);
    for (const auto& [a, b] : {std::pair{1.0, 10.0}, std::pair{10.0, 100.0}}) {
      const double res = check_resolvent_identity(p.form, a, b, f);
      max_identity = std::max(max_identity, res);
      l.check(res <= 1e-8, detail::tag(name, dim) + " resolvent identity residual " + format_double(res));
    }
  });
  l.metric("max_contraction_ratio", max_ratio);
  l.metric("max_resolvent_identity_residual", max_identity);

  // Consistent mass loses the M-matrix structure once alpha h^2 is large, so it is only swept at small alpha.
  double sub_lo = 0.0, sub_hi = 0.0;
  auto submarkov = [&]<int Dim>(int cells) {
    for (const auto& name : preset_names()) {
      const PresetPipeline<Dim> p(build_box_mesh<Dim>(Point<Dim>::Constant(-1.0), Point<Dim>::Constant(1.0), cells),
                                  preset<Dim>(name));
      const auto q = mesh_quality(p.mesh);
      if (!l.check(q.acute, detail::tag(name, Dim) + " Kuhn box mesh is not acute")) continue;
      Vector interior_one = Vector::Zero(p.form.size()), half = Vector::Zero(p.form.size());
      for (Index i : p.form.interior.interior) interior_one[i] = 1.0;
      for (Index i = 0; i < p.mesh.vertex_count(); ++i) half[i] = p.mesh.vertex(i)[0] < 0.0 ? 1.0 : 0.0;
      const Vector one = Vector::Ones(p.form.size());
      auto sweep = [&](MassMode mass, std::initializer_list<double> alphas) {
        for (double a : alphas)
          for (const Vector* f : std::array<const Vector*, 3>{&interior_one, &half, &one}) {
            const auto r = evaluate_submarkov(p.form, q, a, *f, mass);
            sub_lo = std::min(sub_lo, r.min_value);
            sub_hi = std::max(sub_hi, r.max_value - 1.0);
            l.check(r.min_value >= -1e-8 && r.max_value <= 1.0 + 1e-8,
                    detail::tag(name, Dim) + " sub-Markov range [" + format_double(r.min_value) + ", " +
                        format_double(r.max_value) + "] at alpha " + format_double(a));
          }
      };
      sweep(MassMode::lumped, {0.1, 1.0, 10.0, 100.0, 1000.0});
      sweep(MassMode::consistent, {0.1, 1.0, 10.0});
    }
  };
  submarkov.template operator()<2>(12);
  submarkov.template operator()<3>(4);
  l.metric("submarkov_min", sub_lo);
  l.metric("submarkov_excess", sub_hi);

  double eig_err = 0.0;
  auto eigen_case = [&]<int Dim>(int level) {
    const auto p = ball_pipeline<Dim>("identity", level);
    const auto ep = first_dirichlet_eigenpair(p.form);
    l.metric("lambda1_" + std::to_string(Dim) + "d", ep.lambda);
    for (double a : {1.0, 10.0, 100.0, 1000.0}) {
      const Vector u = a * Resolvent<Dim>(p.form, a).apply(ep.psi);
      const double err = std::abs(p.form.mass_norm(u) / p.form.mass_norm(ep.psi) - a / (a + ep.lambda));
      eig_err = std::max(eig_err, err);
      l.check(err <= 1e-8, "eigen case " + std::to_string(Dim) + "d misses a/(a+lambda) by " + format_double(err));
    }
  };
  eigen_case.template operator()<2>(3);
  eigen_case.template operator()<3>(2);
  l.metric("eigen_closed_form_error", eig_err);
  return l.finish();
}

inline CriterionResult verify_generator(std::uint64_t seed) {
  detail::Ledger l(6, "generator identity and product rule");
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  // relative to the Cauchy-Schwarz scale |v| |(S + D) u|
  detail::for_each_verification_mesh([&](const auto& p, const std::string& name) {
    constexpr int dim = std::decay_t<decltype(p.mesh)>::dimension;
    for (int t = 0; t < 10; ++t) {
      const Vector u = detail::random_interior(p.form, rng);
      const Vector v = detail::random_interior(p.form, rng);
      const Vector ku = p.form.interior.restrict(Vector(p.form.S * u + p.form.D * u));
      const double lhs = p.form.bilinear(u, v);
      const double rhs = -v.dot(p.form.M * apply_generator(p.form, u));
      const double rel = std::abs(lhs - rhs) / (v.norm() * ku.norm());
      worst = std::max(worst, rel);
      l.check(rel <= 1e-12, detail::tag(name, dim) + " generator identity off by " + format_double(rel));
    }
  });
  l.metric("max_generator_identity_error", worst);

  double prod = 0.0;
  auto products = [&]<int Dim>() {
    std::mt19937_64 prng(seed + Dim);
    std::vector<Point<Dim>> pts;
    for (int i = 0; i < 60; ++i) pts.push_back(detail::uniform_in_ball<Dim>(prng, Point<Dim>::Zero(), 0.9));
    const auto corpus = polynomial_corpus<Dim>();
    for (const auto& name : preset_names()) {
      const auto cs = preset<Dim>(name);
      if (!cs.div_A) continue;  // example_i has no classical divergence
      for (const auto& chi : corpus)
        for (const auto& u : corpus) {
          const double r = product_rule_residual(cs, chi, u, pts);
          prod = std::max(prod, r);
          l.check(r <= 1e-10, detail::tag(name, Dim) + " product rule residual " + format_double(r));
        }
    }
  };
  products.template operator()<2>();
  products.template operator()<3>();
  l.metric("max_product_rule_residual", prod);
  return l.finish();
}

namespace detail {

inline void experiment_checks(Ledger& l, const std::string& label, const EnergyBoundReport& rep) {
  const auto d = convergence_diagnostics(rep);
  l.metric(label + "_sup_energy", rep.sup_energy);
  l.metric(label + "_bound", rep.bound);
  l.metric(label + "_margin", rep.margin);
  l.metric(label + "_gap_ratio", d.gap_ratio);
  l.metric(label + "_cut_ratio", d.cut_ratio);
  l.check(rep.margin >= 0.0, label + " energy above C1^2 + 2 C2 (margin " + format_double(rep.margin) + ")");
  l.check(d.gap_monotone, label + " gap is not monotone");
  l.check(d.gap_ratio <= 1e-3, label + " gap ratio " + format_double(d.gap_ratio) + " > 1e-3");
}

}  // namespace detail

inline CriterionResult verify_experiment() {
  detail::Ledger l(7, "resolvent approximation experiment");
  const auto chi = build_cutoff<3>(Point<3>::Zero(), 0.5, 0.9);
  const auto g = ball_pipeline<3>("gaussian_gradient", 2);
  detail::experiment_checks(
      l, "gaussian", run_experiment(g.mesh, g.cs, g.density, g.form, chi, g.density.rho, default_alpha_grid()));
  const auto e = ball_pipeline<3>("identity", 2);
  const auto ep = first_dirichlet_eigenpair(e.form);
  detail::experiment_checks(l, "eigen",
                            run_experiment(e.mesh, e.cs, e.density, e.form, chi, FeFunction<3>{e.mesh.id(), ep.psi},
                                           default_alpha_grid()));
  l.check(l.elapsed() <= 600.0, "runtime above 10 minutes");
  return l.finish();
}

inline CriterionResult verify_constants() {
  detail::Ledger l(8, "constants ledger");
  const auto chi = build_cutoff<3>(Point<3>::Zero(), 0.5, 0.9);
  for (const std::string name : {"gaussian_gradient", "identity", "rotator", "example_ii"}) {
    const auto p = ball_pipeline<3>(name, 2);
    const auto r = compute_constants(p.mesh, p.cs, p.density, chi, p.density.rho);
    const auto& c = r.c;
    l.check(r.C1 == c[1] + 2.0 * c[2] + c[4] + c[5] + c[6] + c[7] + 2.0 * c[9], name + " C1 recomposition");
    l.check(r.C2 == c[3] + c[8] + 2.0 * c[10], name + " C2 recomposition");
    l.check(r.bound == r.C1 * r.C1 + 2.0 * r.C2, name + " bound recomposition");
    l.check(c[3] == c[8] && c[8] == c[10], name + " c3 = c8 = c10");
    if (name == "gaussian_gradient") {
      l.metric("gaussian_C1", r.C1);
      l.metric("gaussian_C2", r.C2);
      l.metric("gaussian_K", r.K);
    }
  }
  const auto p = ball_pipeline<3>("identity", 2);
  const auto ep = first_dirichlet_eigenpair(p.form);
  const auto rep = run_experiment(p.mesh, p.cs, p.density, p.form, chi, FeFunction<3>{p.mesh.id(), ep.psi},
                                  default_alpha_grid());
  const Vector chin = interpolate(p.mesh, ScalarField<3>([&](const Point<3>& x) { return chi.value(x); })).values;
  const double base = p.form.energy(Vector(chin.cwiseProduct(ep.psi.cwiseQuotient(p.density.rho.values))));
  double worst = 0.0;
  for (const auto& row : rep.rows) {
    const double t = row.alpha / (row.alpha + ep.lambda);
    const double rel = std::abs(row.energy - t * t * base) / base;
    worst = std::max(worst, rel);
    l.check(rel <= 1e-8, "eigen E_alpha off by " + format_double(rel) + " at alpha " + format_double(row.alpha));
  }
  l.metric("eigen_energy_error", worst);
  return l.finish();
}

inline CriterionResult verify_mollifiers() {
  detail::Ledger l(9, "mollifier suite");
  double plateau = 0.0;
  for (double eps : {0.1, 0.01}) {
    auto at = [&](double t, double expected) {
      const double err = std::abs(phi_eps_quadrature(t, eps) - expected);
      plateau = std::max(plateau, err);
      l.check(err <= 1e-8, "phi plateau off by " + format_double(err) + " at t = " + format_double(t));
    };
    for (int i = 0; i <= 200; ++i) {
      const double t = -0.5 * eps + (1.0 + eps) * i / 200.0;
      at(t, t);
    }
    for (double t : {-5.0, -2.0 * eps, -1.5 * eps}) at(t, -eps);
    for (double t : {1.0 + 1.5 * eps, 1.0 + 3.0 * eps, 7.0}) at(t, 1.0 + eps);
    for (double t : {-1.0, 0.5, 1.0}) {
      const double v = capital_phi_eps(t, eps).value;
      plateau = std::max(plateau, std::abs(v));
      l.check(v == 0.0, "Phi does not vanish at t = " + format_double(t));
    }
    for (double t : {1.0 + eps, 1.5, 3.0}) {
      const auto c = capital_phi_eps(t, eps);
      const double err = std::max(std::abs(c.value - (t - 1.0 - 0.5 * eps)), std::abs(c.first - 1.0));
      plateau = std::max(plateau, err);
      l.check(err <= 1e-8, "Phi linear branch off by " + format_double(err) + " at t = " + format_double(t));
    }
  }
  l.metric("max_plateau_error", plateau);

  double worst_step = 0.0, worst_drop = 0.0;
  for (double eps : {0.1, 0.01}) {
    const int n = 10000;
    const double a = -0.5, b = 1.5, dt = (b - a) / n;
    double prev = phi_eps(a, eps), prev_cap = capital_phi_eps(a, eps).first;
    for (int i = 1; i <= n; ++i) {
      const double t = a + i * dt;
      const double v = phi_eps(t, eps), cap = capital_phi_eps(t, eps).first;
      worst_step = std::max(worst_step, (v - prev) / dt);
      worst_drop = std::min({worst_drop, v - prev, cap - prev_cap});
      prev = v;
      prev_cap = cap;
    }
  }
  l.metric("max_difference_quotient", worst_step);
  l.metric("min_increment", worst_drop);
  l.check(worst_drop >= -1e-12, "mollified functions are not monotone");
  l.check(worst_step <= 1.0 + 1e-8, "phi_eps is not 1-Lipschitz");

  const std::vector<double> eps_seq{1e-1, 1e-2, 1e-3, 1e-4};
  double limit_excess = 0.0;
  for (double t : {-1.0, -0.3, 0.0, 0.25, 0.5, 0.75, 1.0, 1.2, 2.0}) {
    const auto r = phi_eps_limits(t, eps_seq);
    for (std::size_t k = 0; k < eps_seq.size(); ++k) {
      const double e = std::max({std::abs(r.phi[k] - phi_limit_exact(t)),
                                 std::abs(r.phi_prime[k] - phi_prime_limit_exact(t)),
                                 std::abs(r.capital_phi_prime[k] - capital_phi_prime_limit_exact(t))});
      limit_excess = std::max(limit_excess, e / eps_seq[k]);
      l.check(e <= 2.0 * eps_seq[k], "limit missed by " + format_double(e) + " at t = " + format_double(t) +
                                         ", eps = " + format_double(eps_seq[k]));
    }
  }
  l.metric("max_limit_error_over_eps", limit_excess);
  return l.finish();
}

inline CriterionResult verify_vmo(std::uint64_t seed) {
  detail::Ledger l(10, "VMO diagnostics");
  const Ball<2> unit{Point<2>::Zero(), 1.0};
  auto opts = [&](std::vector<double> radii, std::vector<Point<2>> centers, std::size_t pairs, std::uint64_t s) {
    VmoOptions<2> o;
    o.radii = std::move(radii);
    o.centers = std::move(centers);
    o.pairs = pairs;
    o.seed = s;
    return o;
  };

  const auto flat = vmo_modulus<2>([](const Point<2>&) { return 3.0; }, unit,
                                   opts({0.1, 0.2, 0.4}, sample_centers_in_ball(unit, 5, seed), 500, seed + 1));
  double flat_max = 0.0;
  for (double w : flat.modulus) flat_max = std::max(flat_max, w);
  l.metric("constant_modulus", flat_max);
  l.check(flat_max == 0.0, "constant field has modulus " + format_double(flat_max));

  // balls centered on the hyperplane split in half, so the modulus is omega_d^2 / 2
  const auto half2 = vmo_modulus<2>([](const Point<2>& x) { return x[0] > 0 ? 1.0 : 0.0; }, unit,
                                    opts({0.3}, {Point<2>(0, 0.1)}, 40000, seed + 2));
  const double w2 = M_PI;
  l.metric("half_space_2d", half2.modulus[0]);
  l.metric("half_space_2d_expected", 0.5 * w2 * w2);
  l.check(std::abs(half2.modulus[0] - 0.5 * w2 * w2) <= 3.0 * half2.standard_error[0],
          "2d half-space modulus outside 3 standard errors");
  VmoOptions<3> o3;
  o3.radii = {0.25};
  o3.centers = {Point<3>(0, 0.2, -0.1)};
  o3.pairs = 40000;
  o3.seed = seed + 3;
  const auto half3 =
      vmo_modulus<3>([](const Point<3>& x) { return x[0] > 0 ? 1.0 : 0.0; }, Ball<3>{Point<3>::Zero(), 1.0}, o3);
  const double w3 = 4.0 * M_PI / 3.0;
  l.metric("half_space_3d", half3.modulus[0]);
  l.metric("half_space_3d_expected", 0.5 * w3 * w3);
  l.check(std::abs(half3.modulus[0] - 0.5 * w3 * w3) <= 3.0 * half3.standard_error[0],
          "3d half-space modulus outside 3 standard errors");

  const ScalarField<2> smooth = [](const Point<2>& x) { return std::cos(3 * x[0]) + 0.5; };
  const ScalarField<2> step = [](const Point<2>& x) { return x[1] > 0.1 ? 2.0 : -1.0; };
  const ScalarField<2> phi = [](const Point<2>& x) { return example_i_phi<2>(x); };
  const ScalarField<2> wave = [](const Point<2>& x) { return std::sin(4 * x[0] * x[1]); };
  const std::vector<std::pair<ScalarField<2>, ScalarField<2>>> corpus{{smooth, step}, {phi, step}, {phi, wave}, {smooth, wave}};
  int product_failures = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto rep = vmo_product_inequality_check<2>(
        corpus[i].first, corpus[i].second, unit,
        opts({0.05, 0.1, 0.2}, sample_centers_in_ball(Ball<2>{Point<2>::Zero(), 0.6}, 6, seed + 10 + i), 2000,
             seed + 20 + i));
    if (!rep.holds) ++product_failures;
  }
  l.metric("product_inequality_failures", product_failures);
  l.check(product_failures == 0, "product inequality fails on " + std::to_string(product_failures) + " pairs");

  const std::vector<double> radii{0.2, 0.1, 0.05, 0.025, 0.0125};
  auto decreasing = [](const VmoReport& r) {
    for (std::size_t k = 1; k < r.modulus.size(); ++k)
      if (!(r.modulus[k - 1] < r.modulus[k])) return false;
    return true;
  };
  const auto origin = vmo_modulus<2>(phi, unit, opts(radii, {Point<2>::Zero()}, 4000, seed + 30));
  const auto annulus = vmo_modulus<2>(
      phi, unit, opts(radii, sample_centers_in_annulus<2>(Point<2>::Zero(), 0.3, 0.6, 6, seed + 31), 1500, seed + 32));
  l.metric("example_i_origin_ratio", origin.modulus.front() / origin.modulus.back());
  l.metric("example_i_annulus_ratio", annulus.modulus.front() / annulus.modulus.back());
  l.check(decreasing(origin), "example_i modulus at the origin does not decrease with the radius");
  l.check(decreasing(annulus), "example_i modulus on the annulus does not decrease with the radius");
  l.check(annulus.modulus.front() < 0.15 * annulus.modulus.back(), "example_i annulus modulus does not approach 0");
  return l.finish();
}

// The invariant suite on one user-configured pipeline (skew form): id 0 in verify reports.
template <int Dim>
CriterionResult verify_configured_case(const PresetPipeline<Dim>& p, const std::vector<double>& alphas, int trials,
                                       std::uint64_t seed, SolverOptions opts = {}) {
  require(p.form.mode == DriftMode::skew, ErrorCode::InvalidArgument, "the configured case is checked in skew mode");
  detail::Ledger l(0, "configured case " + detail::tag(p.cs.name, Dim));
  std::mt19937_64 rng(seed);
  const auto div = divergence_free_residual(p.mesh, p.cs, p.density, p.dec);
  l.metric("divergence_residual_over_scale", div.max_residual / div.scale);
  l.check(div.max_residual <= 1e-10 * div.scale, "divergence-free residual above 1e-10 x scale");
  if (p.cs.exact_density)
    l.metric("density_rel_l2_error", density_relative_error(p.mesh, p.density, *p.cs.exact_density));

  double energy = 0.0, generator = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Vector f = detail::random_interior(p.form, rng);
    const double e = p.form.energy(f);
    const double h1 = h1_seminorm(p.mesh, FeFunction<Dim>{p.mesh.id(), f}, p.cs.A, p.density.weight());
    energy = std::max(energy, std::abs(e - h1 * h1) / e);
    const Vector v = detail::random_interior(p.form, rng);
    const Vector kf = p.form.interior.restrict(Vector(p.form.S * f + p.form.D * f));
    const double rhs = -v.dot(p.form.M * apply_generator(p.form, f, opts));
    generator = std::max(generator, std::abs(p.form.bilinear(f, v) - rhs) / (v.norm() * kf.norm()));
  }
  l.metric("energy_identity_error", energy);
  l.metric("generator_identity_error", generator);
  l.check(energy <= 1e-12, "energy identity off by " + format_double(energy));
  l.check(generator <= 1e-12, "generator identity off by " + format_double(generator));

  const auto con = evaluate_contraction(p.form, alphas, trials, rng(), opts);
  l.metric("max_contraction_ratio", con.max_ratio);
  l.check(con.max_ratio <= 1.0 + 1e-10, "contraction ratio " + format_double(con.max_ratio));
  const Vector f = detail::random_normal(p.form.size(), rng);
  double identity = 0.0;
  for (const auto& [a, b] : {std::pair{1.0, 10.0}, std::pair{10.0, 100.0}})
    identity = std::max(identity, check_resolvent_identity(p.form, a, b, f, opts));
  l.metric("resolvent_identity_residual", identity);
  l.check(identity <= 1e-8, "resolvent identity residual " + format_double(identity));

  // consistent mass on acute meshes at alpha <= 10, lumped mass everywhere
  const auto q = mesh_quality(p.mesh);
  l.metric("acute", q.acute ? 1.0 : 0.0);
  Vector half = Vector::Zero(p.form.size());
  double mid = 0.0;  // indicator of the vertices left of the vertex centroid
  for (Index i = 0; i < p.mesh.vertex_count(); ++i) mid += p.mesh.vertex(i)[0] / p.mesh.vertex_count();
  for (Index i = 0; i < p.mesh.vertex_count(); ++i) half[i] = p.mesh.vertex(i)[0] < mid ? 1.0 : 0.0;
  double lo = 0.0, hi = 0.0;
  for (double a : alphas) {
    std::vector<MassMode> modes{MassMode::lumped};
    if (q.acute && a <= 10.0) modes.push_back(MassMode::consistent);
    for (MassMode m : modes) {
      const auto r = evaluate_submarkov(p.form, q, a, half, m, opts);
      lo = std::min(lo, r.min_value);
      hi = std::max(hi, r.max_value - 1.0);
    }
  }
  l.metric("submarkov_min", lo);
  l.metric("submarkov_excess", hi);
  l.check(lo >= -1e-8 && hi <= 1e-8, "sub-Markov bounds violated");

  if constexpr (Dim >= 3) {
    const double bound = theoretical_sector_bound(p.mesh, p.cs, p.density, p.dec);
    const auto sec = sector_constant(p.form, 200, rng(), bound);
    l.metric("sector_empirical", sec.empirical);
    l.metric("sector_theoretical", bound);
    l.check(sec.empirical <= 1.05 * bound, "sector ratio above 1.05 x bound");
  }
  return l.finish();
}

inline CriterionResult verify_criterion(int id, std::uint64_t seed) {
  switch (id) {
    case 1: return verify_invariant_density();
    case 2: return verify_divergence_free();
    case 3: return verify_energy_identity(seed);
    case 4: return verify_sector(seed);
    case 5: return verify_resolvent_axioms(seed);
    case 6: return verify_generator(seed);
    case 7: return verify_experiment();
    case 8: return verify_constants();
    case 9: return verify_mollifiers();
    case 10: return verify_vmo(seed);
  }
  fail(ErrorCode::InvalidArgument, "no criterion " + std::to_string(id));
}

// Errors inside a criterion become a failed result naming the error.
inline std::vector<CriterionResult> run_verification(std::uint64_t seed,
                                                     const std::function<void(const CriterionResult&)>& on_done = {}) {
  std::vector<CriterionResult> out;
  for (int id = 1; id <= kCriterionCount; ++id) {
    CriterionResult r;
    try {
      r = verify_criterion(id, seed);
    } catch (const Error& e) {
      r.id = id;
      r.name = "criterion " + std::to_string(id);
      r.detail = std::string(to_string(e.code())) + ": " + e.what();
    }
    if (on_done) on_done(r);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace fplab
