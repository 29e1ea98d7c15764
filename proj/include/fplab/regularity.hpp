#pragma once

#include "fplab/dirichlet_form.hpp"

#include <Eigen/SparseCholesky>

#include <array>
#include <map>

namespace fplab {

struct DoubleDivergenceSolution {
  Vector h_tilde;
  double residual = 0.0;  // relative residual of the reduced system
};

namespace detail {

// C_ij = int c phi_i phi_j dx; c may change sign, so the positive weight path is not usable.
template <int Dim>
SparseMatrix assemble_potential(const SimplicialMesh<Dim>& mesh, const ScalarField<Dim>& c, int degree) {
  std::vector<Triplet> trip;
  for_each_quadrature_point(mesh, quadrature_rule<Dim>(degree), [&](Index e, const ElementGeometry<Dim>&, std::size_t,
                                                                    const auto& bary, const Point<Dim>& x, double w) {
    const double cv = c(x);
    require(std::isfinite(cv), ErrorCode::NonFiniteValue, "zeroth-order coefficient is not finite");
    if (cv == 0.0) return;
    const auto& el = mesh.element(e);
    for (int i = 0; i <= Dim; ++i)
      for (int j = 0; j <= Dim; ++j) trip.emplace_back(el[i], el[j], w * cv * bary[i] * bary[j]);
  });
  return from_triplets(mesh.vertex_count(), trip);
}

inline bool symmetric_part_positive(const SparseMatrix& k) {
  const SparseMatrix sym = 0.5 * (k + SparseMatrix(k.transpose()));
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(sym);
  return ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() > 0.0;
}

}  // namespace detail

// Weak form of int (L phi + c phi) h~ dx = int f~ phi + <F~, grad phi> dx after one integration by parts:
//   int <A^T grad h~, grad phi> - int h~ <H, grad phi> - int c h~ phi = -int f~ phi - int <F~, grad phi>
// for interior phi, with h~ = g on boundary vertices.
template <int Dim>
DoubleDivergenceSolution solve_double_divergence(const SimplicialMesh<Dim>& mesh, const CoefficientSet<Dim>& cs,
                                                 const ScalarField<Dim>& g, SolverOptions opts = {},
                                                 int degree = kDefaultQuadratureDegree) {
  const SparseMatrix k0 = assemble_density_operator(mesh, cs, degree);
  const SparseMatrix k = k0 - detail::assemble_potential(mesh, cs.c, degree);
  const Vector rhs = -assemble_load(mesh, cs.f_tilde, cs.F_tilde, Weight<Dim>::lebesgue(), degree);
  Vector gv(mesh.vertex_count());
  for (Index i = 0; i < mesh.vertex_count(); ++i) gv[i] = mesh.is_boundary(i) ? g(mesh.vertex(i)) : 0.0;
  const auto sys = apply_dirichlet(k, rhs, mesh, gv);
  const auto im = interior_map(mesh);
  if (!detail::symmetric_part_positive(sys.matrix) && detail::symmetric_part_positive(im.restrict_both(k0)))
    fail(ErrorCode::IndefiniteSystem, "the zeroth-order term makes the double-divergence system indefinite");
  DoubleDivergenceSolution sol;
  SolveStats st;
  try {
    const LinearSolver solver(sys.matrix, opts, ErrorCode::IndefiniteSystem);
    sol.h_tilde = sys.extend(solver.solve(sys.rhs, &st));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SolverDivergence && opts.backend == SolverBackend::direct)
      fail(ErrorCode::IndefiniteSystem, std::string("double-divergence system is singular: ") + e.what());
    throw;
  }
  sol.residual = st.relative_residual;
  return sol;
}

// Radial cutoff 1 - S((|x - x0| - s)/(r - s)) with the quintic smoothstep S(t) = 6t^5 - 15t^4 + 10t^3.
template <int Dim>
struct Cutoff {
  Point<Dim> center = Point<Dim>::Zero();
  double s = 0.0;
  double r = 0.0;

  // profile g(|x - x0|) and its first two radial derivatives
  std::array<double, 3> profile(double rad) const {
    if (rad <= s) return {1.0, 0.0, 0.0};
    if (rad >= r) return {0.0, 0.0, 0.0};
    const double w = r - s, t = (rad - s) / w;
    const double t2 = t * t;
    return {1.0 - t2 * t * (10.0 - 15.0 * t + 6.0 * t2), -30.0 * t2 * (1.0 - t) * (1.0 - t) / w,
            -60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (w * w)};
  }

  double value(const Point<Dim>& x) const { return profile((x - center).norm())[0]; }

  Point<Dim> gradient(const Point<Dim>& x) const {
    const Point<Dim> y = x - center;
    const double rad = y.norm();
    const auto g = profile(rad);
    return g[1] == 0.0 ? Point<Dim>::Zero() : Point<Dim>(g[1] / rad * y);
  }

  Matrix<Dim> hessian(const Point<Dim>& x) const {
    const Point<Dim> y = x - center;
    const double rad = y.norm();
    if (rad <= s || rad >= r) return Matrix<Dim>::Zero();
    const auto g = profile(rad);
    const Point<Dim> n = y / rad;
    const Matrix<Dim> nn = n * n.transpose();
    return g[2] * nn + g[1] / rad * (Matrix<Dim>::Identity() - nn);
  }

  // |g'| peaks at t = 1/2
  double gradient_sup() const { return 15.0 / 8.0 / (r - s); }

  AnalyticScalar<Dim> analytic() const {
    const Cutoff c = *this;
    return {[c](const Point<Dim>& x) { return c.value(x); }, [c](const Point<Dim>& x) { return c.gradient(x); },
            [c](const Point<Dim>& x) { return c.hessian(x); }};
  }
};

template <int Dim>
Cutoff<Dim> build_cutoff(const Point<Dim>& center, double s, double r) {
  require(std::isfinite(s) && std::isfinite(r) && s > 0.0 && s < r, ErrorCode::InvalidRadii,
          "cutoff radii must satisfy 0 < s < r (got s = " + std::to_string(s) + ", r = " + std::to_string(r) + ")");
  require(center.allFinite(), ErrorCode::InvalidArgument, "cutoff center is not finite");
  return {center, s, r};
}

struct ConstantsReport {
  int dim = 3;
  double K = 0.0;                  // K_{d,rho}
  std::array<double, 11> c{};      // c[1] .. c[10]; c[0] unused
  double C1 = 0.0, C2 = 0.0, bound = 0.0;
  double h_l2 = 0.0, Lchi_ld = 0.0, grad_chi_sup = 0.0, c_ld = 0.0, f_l2star = 0.0, F_l2 = 0.0;
  double lambda = 0.0, M = 0.0, rho_min = 0.0, rho_max = 0.0, gamma = 0.0;
  std::map<std::string, std::string> provenance;  // ingredient -> analytic | fe
};

namespace detail {

// (int |v|^p rho_h dx)^{1/p} with v evaluated per quadrature point from (e, bary, x, rho_h).
template <int Dim, typename Fn>
double mu_norm(const SimplicialMesh<Dim>& mesh, const DensityField<Dim>& density, double p, Fn&& value) {
  double s = 0.0;
  for_each_quadrature_point(mesh, quadrature_rule<Dim>(kDefaultQuadratureDegree),
                            [&](Index e, const ElementGeometry<Dim>&, std::size_t, const auto& bary,
                                const Point<Dim>& x, double w) {
                              const double rho = evaluate_in_element(mesh, density.rho, e, bary);
                              const double v = std::abs(value(x, rho));
                              require(std::isfinite(v), ErrorCode::NonFiniteValue, "norm integrand is not finite");
                              s += w * rho * std::pow(v, p);
                            });
  return std::pow(s, 1.0 / p);
}

}  // namespace detail

// C1 = c1 + 2c2 + c4 + c5 + c6 + c7 + 2c9 and C2 = c3 + c8 + 2c10 from the stored ingredient norms.
inline void recompose(ConstantsReport& r) {
  const double d = r.dim;
  const double sqdm = std::sqrt(d * r.M);
  r.gamma = 2.0 * (d - 1.0) / (d - 2.0);
  r.K = std::pow(r.rho_max, 0.5 - 1.0 / d) / (std::sqrt(r.lambda) * std::sqrt(r.rho_min)) * r.gamma;
  const double quad = 2.0 * d * r.M * r.grad_chi_sup * r.grad_chi_sup * r.h_l2 * r.h_l2;
  r.c[1] = r.h_l2 * r.Lchi_ld * r.K;
  r.c[2] = sqdm * r.grad_chi_sup * r.h_l2;
  r.c[3] = quad;
  r.c[4] = r.c_ld * r.h_l2 * r.K;
  r.c[5] = r.f_l2star * r.K;
  r.c[6] = r.F_l2 / std::sqrt(r.lambda);
  r.c[7] = r.K * (2.0 * r.Lchi_ld) * r.h_l2;
  r.c[8] = quad;
  r.c[9] = 2.0 * sqdm * r.grad_chi_sup * r.h_l2;
  r.c[10] = quad;
  r.C1 = r.c[1] + 2.0 * r.c[2] + r.c[4] + r.c[5] + r.c[6] + r.c[7] + 2.0 * r.c[9];
  r.C2 = r.c[3] + r.c[8] + 2.0 * r.c[10];
  r.bound = r.C1 * r.C1 + 2.0 * r.C2;
}

// h is in L^2(mu) scaling (h = h~ / rho); f = f~ / rho and F = F~ / rho likewise.
template <int Dim>
ConstantsReport compute_constants(const SimplicialMesh<Dim>& mesh, const CoefficientSet<Dim>& cs,
                                  const DensityField<Dim>& density, const Cutoff<Dim>& chi, const FeFunction<Dim>& h) {
  if constexpr (Dim < 3) {
    fail(ErrorCode::DimensionUnsupported, "the Sobolev constant K_{d,rho} needs d >= 3");
  } else {
    check_same_mesh(mesh, h);
    check_same_mesh(mesh, density.rho);
    const auto chi_a = chi.analytic();
    cs.require_div_A();
    ConstantsReport r;
    r.dim = Dim;
    r.lambda = cs.lambda;
    r.M = cs.M;
    r.rho_min = density.rho_min;
    r.rho_max = density.rho_max;
    r.grad_chi_sup = chi.gradient_sup();
    const double d = Dim;
    r.h_l2 = norm(mesh, h, 2.0, density.weight());
    r.Lchi_ld = detail::mu_norm(mesh, density, d, [&](const Point<Dim>& x, double) { return nondivergence_apply(cs, chi_a, x); });
    r.c_ld = detail::mu_norm(mesh, density, d, [&](const Point<Dim>& x, double) { return cs.c(x); });
    r.f_l2star = detail::mu_norm(mesh, density, 2.0 * d / (d + 2.0),
                                 [&](const Point<Dim>& x, double rho) { return cs.f_tilde(x) / rho; });
    r.F_l2 = detail::mu_norm(mesh, density, 2.0, [&](const Point<Dim>& x, double rho) { return cs.F_tilde(x).norm() / rho; });
    r.provenance = {{"div_A", "analytic"}, {"H", "analytic"}, {"grad_chi", "analytic"}, {"hess_chi", "analytic"},
                    {"rho", "fe"}, {"h", "fe"}};
    recompose(r);
    return r;
  }
}

struct EnergyRow {
  double alpha = 0.0;
  double energy = 0.0;       // E(chi alpha G h, chi alpha G h)
  double gap = 0.0;          // |alpha G h - P0 h|_mu
  double raw_gap = 0.0;      // |alpha G h - h|_mu
  double cut_gap = 0.0;      // |chi (alpha G h - P0 h)|_mu
  double cut_l2 = 0.0;       // |chi alpha G h|_mu
  double h1_seminorm = 0.0;  // of chi alpha G h in H^1(A, mu)
};

struct EnergyBoundReport {
  std::vector<EnergyRow> rows;
  double sup_energy = 0.0;
  double bound = 0.0;
  double margin = 0.0;
  double h_l2 = 0.0;
  double projection_l2 = 0.0;  // |P0 h|_mu
  ConstantsReport constants;
};

inline std::vector<double> dyadic_grid(int lo, int hi) {
  std::vector<double> g;
  for (int k = lo; k <= hi; ++k) g.push_back(std::ldexp(1.0, k));
  return g;
}

inline const std::vector<double>& default_alpha_grid() {
  static const std::vector<double> grid = dyadic_grid(0, 16);
  return grid;
}

// L^2(mu) projection onto P1 functions vanishing on the boundary: the limit of alpha G_alpha h on the mesh.
template <int Dim>
Vector interior_projection(const FormMatrices<Dim>& form, const Vector& h, SolverOptions opts = {}) {
  const LinearSolver m(form.M_II, opts, ErrorCode::SingularMass);
  return form.interior.extend(m.solve(Vector(form.M_I * h)), form.size());
}

// h = h~ / rho nodewise; chi alpha G h by nodal multiplication.
template <int Dim>
EnergyBoundReport run_experiment(const SimplicialMesh<Dim>& mesh, const CoefficientSet<Dim>& cs,
                                 const DensityField<Dim>& density, const FormMatrices<Dim>& form, const Cutoff<Dim>& chi,
                                 const FeFunction<Dim>& h_tilde, const std::vector<double>& alphas,
                                 SolverOptions opts = {}) {
  require(form.mode == DriftMode::skew, ErrorCode::InvalidArgument, "the energy experiment needs the skew-mode form");
  require(form.mesh_id == mesh.id(), ErrorCode::MeshMismatch, "form belongs to another mesh");
  check_same_mesh(mesh, h_tilde);
  require(!alphas.empty(), ErrorCode::InvalidArgument, "empty alpha grid");
  const FeFunction<Dim> h{mesh.id(), h_tilde.values.cwiseQuotient(density.rho.values)};
  EnergyBoundReport rep;
  rep.constants = compute_constants(mesh, cs, density, chi, h);
  rep.bound = rep.constants.bound;
  rep.h_l2 = form.mass_norm(h.values);
  const Vector p0 = interior_projection(form, h.values, opts);
  rep.projection_l2 = form.mass_norm(p0);
  const Vector chin = interpolate(mesh, ScalarField<Dim>([&chi](const Point<Dim>& x) { return chi.value(x); })).values;
  const auto rho = density.weight();
  for (double a : alphas) {
    const Vector u = a * Resolvent<Dim>(form, a, opts).apply(h.values);
    const Vector cu = chin.cwiseProduct(u);
    EnergyRow row;
    row.alpha = a;
    row.energy = form.energy(cu);
    row.gap = form.mass_norm(Vector(u - p0));
    row.raw_gap = form.mass_norm(Vector(u - h.values));
    row.cut_gap = form.mass_norm(Vector(chin.cwiseProduct(u - p0)));
    row.cut_l2 = form.mass_norm(cu);
    row.h1_seminorm = h1_seminorm(mesh, FeFunction<Dim>{mesh.id(), cu}, cs.A, rho);
    rep.sup_energy = std::max(rep.sup_energy, row.energy);
    rep.rows.push_back(row);
  }
  rep.margin = rep.bound - rep.sup_energy;
  return rep;
}

struct ConvergenceDiagnostics {
  bool gap_monotone = true;
  double gap_ratio = 0.0;  // final / initial
  bool gap_decays = false;
  double d1_sup = 0.0;     // sup sqrt(E) + |chi alpha G h|_mu
  double d1_bound = 0.0;   // sqrt(bound) + |h|_mu
  bool d1_bounded = false;
  double cut_ratio = 0.0;
  bool cut_decays = false;
  bool margin_ok = false;
  bool passed() const { return gap_monotone && gap_decays && d1_bounded && cut_decays && margin_ok; }
};

inline ConvergenceDiagnostics convergence_diagnostics(const EnergyBoundReport& rep, double decay = 1e-3) {
  ConvergenceDiagnostics d;
  const auto& rows = rep.rows;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].gap > rows[i - 1].gap * (1.0 + 1e-12) + 1e-300) d.gap_monotone = false;
  auto ratio = [](double last, double first) { return first > 0.0 ? last / first : 0.0; };
  d.gap_ratio = rows.empty() ? 0.0 : ratio(rows.back().gap, rows.front().gap);
  d.gap_decays = d.gap_ratio <= decay;
  for (const auto& r : rows) d.d1_sup = std::max(d.d1_sup, std::sqrt(std::max(0.0, r.energy)) + r.cut_l2);
  d.d1_bound = std::sqrt(rep.bound) + rep.h_l2;
  d.d1_bounded = d.d1_sup <= d.d1_bound;
  d.cut_ratio = rows.empty() ? 0.0 : ratio(rows.back().cut_gap, rows.front().cut_gap);
  d.cut_decays = d.cut_ratio <= decay;
  d.margin_ok = rep.margin >= 0.0;
  return d;
}

// |I(chi) u - I(chi u)|_{L^2(dx)}, the error committed by forming cutoff products nodewise.
template <int Dim>
double cutoff_product_consistency(const SimplicialMesh<Dim>& mesh, const Cutoff<Dim>& chi, const ScalarField<Dim>& u) {
  const auto ic = interpolate(mesh, ScalarField<Dim>([&chi](const Point<Dim>& x) { return chi.value(x); }));
  const auto iu = interpolate(mesh, u);
  const FeFunction<Dim> prod{mesh.id(), ic.values.cwiseProduct(iu.values)};
  double s = 0.0;
  for_each_quadrature_point(mesh, quadrature_rule<Dim>(kDefaultQuadratureDegree),
                            [&](Index e, const ElementGeometry<Dim>&, std::size_t, const auto& bary, const Point<Dim>&,
                                double w) {
                              const double diff = evaluate_in_element(mesh, ic, e, bary) * evaluate_in_element(mesh, iu, e, bary) -
                                                  evaluate_in_element(mesh, prod, e, bary);
                              s += w * diff * diff;
                            });
  return std::sqrt(s);
}

}  // namespace fplab
