#pragma once

#include "fplab/calculus.hpp"
#include "fplab/invariant_density.hpp"

#include <random>

namespace fplab {

enum class DriftMode { raw, skew };
enum class MassMode { consistent, lumped };

inline std::string to_string(DriftMode m) { return m == DriftMode::raw ? "raw" : "skew"; }

inline DriftMode parse_drift_mode(const std::string& s) {
  if (s == "raw") return DriftMode::raw;
  if (s == "skew") return DriftMode::skew;
  fail(ErrorCode::InvalidArgument, "unknown drift mode '" + s + "'");
}

// E(u, v) = v^T (S + D) u on interior degrees of freedom, with
//   S_ij = int <A grad phi_j, grad phi_i> rho,  D_ij = -int <B, grad phi_j> phi_i rho,  M_ij = int phi_i phi_j rho.
// In skew mode D is replaced by (D - D^T)/2, which makes E(f, f) = f^T S f exactly.
template <int Dim>
struct FormMatrices {
  std::uint64_t mesh_id = 0;
  DriftMode mode = DriftMode::skew;
  SparseMatrix S, D, D_raw, M;
  InteriorMap interior;
  SparseMatrix K_II;  // (S + D) on interior rows and columns
  SparseMatrix M_II;
  SparseMatrix M_I;   // interior rows, all columns
  double symmetric_defect = 0.0;       // max over smooth probes f of |f^T D_raw f| / f^T S f
  double symmetric_defect_norm = 0.0;  // |(D_raw + D_raw^T)/2|_F / |S|_F

  Index size() const { return S.rows(); }

  double bilinear(const Vector& u, const Vector& v) const { return v.dot(S * u + D * u); }
  double energy(const Vector& u) const { return bilinear(u, u); }
  double mass_inner(const Vector& u, const Vector& v) const { return v.dot(M * u); }
  double mass_norm(const Vector& u) const { return std::sqrt(std::max(0.0, mass_inner(u, u))); }
};

namespace detail {

// Smooth functions vanishing on the domain boundary.
template <int Dim>
std::vector<ScalarField<Dim>> boundary_bumps(const Domain<Dim>& domain) {
  ScalarField<Dim> bump;
  if (const auto* b = std::get_if<Ball<Dim>>(&domain)) {
    const Ball<Dim> ball = *b;
    bump = [ball](const Point<Dim>& x) { return std::max(0.0, 1.0 - (x - ball.center).squaredNorm() / (ball.radius * ball.radius)); };
  } else if (const auto* b = std::get_if<Box<Dim>>(&domain)) {
    const Box<Dim> box = *b;
    bump = [box](const Point<Dim>& x) {
      double v = 1.0;
      for (int i = 0; i < Dim; ++i) v *= 4.0 * (x[i] - box.lo[i]) * (box.hi[i] - x[i]) / std::pow(box.hi[i] - box.lo[i], 2);
      return std::max(0.0, v);
    };
  } else {
    return {};
  }
  return {bump, [bump](const Point<Dim>& x) { return bump(x) * (1.0 + 0.5 * std::sin(M_PI * x[0])); },
          [bump](const Point<Dim>& x) { return bump(x) * bump(x) * (1.0 + 0.5 * std::cos(M_PI * x[Dim - 1])); }};
}

}  // namespace detail

template <int Dim>
FormMatrices<Dim> assemble_form(const SimplicialMesh<Dim>& mesh, const CoefficientSet<Dim>& cs,
                                const DensityField<Dim>& density, const DriftDecomposition<Dim>& dec,
                                DriftMode mode = DriftMode::skew) {
  check_same_mesh(mesh, density.rho);
  require(dec.mesh_id == mesh.id(), ErrorCode::MeshMismatch, "drift decomposition belongs to another mesh");
  FormMatrices<Dim> f;
  f.mesh_id = mesh.id();
  f.mode = mode;
  const auto rho = density.weight();
  f.S = assemble_weighted_stiffness(mesh, cs.A, rho);
  f.D_raw = assemble_drift_at(mesh, dec.field(), rho);
  f.D = mode == DriftMode::skew ? SparseMatrix(0.5 * (f.D_raw - SparseMatrix(f.D_raw.transpose()))) : f.D_raw;
  f.M = assemble_mass(mesh, rho);
  f.interior = interior_map(mesh);
  require(f.interior.size() > 0, ErrorCode::EmptyInterior, "mesh has no interior vertices");
  f.K_II = f.interior.restrict_both(SparseMatrix(f.S + f.D));
  f.M_II = f.interior.restrict_both(f.M);
  f.M_I = f.interior.restrict_rows(f.M);
  f.symmetric_defect_norm = (0.5 * (f.D_raw + SparseMatrix(f.D_raw.transpose()))).norm() / f.S.norm();
  for (const auto& probe : detail::boundary_bumps<Dim>(mesh.domain())) {
    Vector v = interpolate(mesh, probe).values;
    for (Index i = 0; i < v.size(); ++i)
      if (mesh.is_boundary(i)) v[i] = 0.0;
    const double s = v.dot(f.S * v);
    if (s > 0.0) f.symmetric_defect = std::max(f.symmetric_defect, std::abs(v.dot(f.D_raw * v)) / s);
  }
  return f;
}

// G_alpha f solves (alpha M + S + D) u = M f on interior vertices with u = 0 on the boundary.
template <int Dim>
class Resolvent {
 public:
  Resolvent(const FormMatrices<Dim>& form, double alpha, SolverOptions opts = {}, MassMode mass = MassMode::consistent)
      : form_(&form), alpha_(alpha), mass_(mass) {
    require(std::isfinite(alpha) && alpha > 0.0, ErrorCode::InvalidArgument, "alpha must be positive");
    if (mass == MassMode::lumped) {
      lumped_ = lump(form.M);
      m_ii_ = form.interior.restrict_both(lumped_);
      m_i_ = form.interior.restrict_rows(lumped_);
    } else {
      m_ii_ = form.M_II;
      m_i_ = form.M_I;
    }
    solver_.factor(SparseMatrix(alpha * m_ii_ + form.K_II), opts, ErrorCode::SolverDivergence);
  }

  double alpha() const { return alpha_; }

  // Full-length nodal vector, zero on the boundary.
  Vector apply(const Vector& f, SolveStats* stats = nullptr) const {
    require(f.size() == form_->size(), ErrorCode::MeshMismatch, "vector length does not match the form");
    const Vector u = solver_.solve(Vector(m_i_ * f), stats);
    return form_->interior.extend(u, form_->size());
  }

  const SparseMatrix& mass() const { return mass_ == MassMode::lumped ? lumped_ : form_->M; }

 private:
  const FormMatrices<Dim>* form_;
  double alpha_;
  MassMode mass_;
  SparseMatrix lumped_, m_ii_, m_i_;
  LinearSolver solver_;
};

template <int Dim>
FeFunction<Dim> solve_resolvent(const FormMatrices<Dim>& form, double alpha, const FeFunction<Dim>& f,
                                SolverOptions opts = {}) {
  require(f.mesh_id == form.mesh_id, ErrorCode::MeshMismatch, "function belongs to a different mesh");
  return {form.mesh_id, Resolvent<Dim>(form, alpha, opts).apply(f.values)};
}

struct ResolventReport {
  double alpha = 0.0;
  int iterations = 0;
  double residual = 0.0;
  double contraction_ratio = 0.0;  // |alpha G f|_mu / |f|_mu
  double submarkov_min = 0.0;      // min and max of alpha G f
  double submarkov_max = 0.0;
};

template <int Dim>
ResolventReport resolvent_report(const FormMatrices<Dim>& form, double alpha, const Vector& f, SolverOptions opts = {}) {
  ResolventReport r;
  r.alpha = alpha;
  SolveStats st;
  const Vector u = alpha * Resolvent<Dim>(form, alpha, opts).apply(f, &st);
  r.iterations = st.iterations;
  r.residual = st.relative_residual;
  r.contraction_ratio = form.mass_norm(u) / form.mass_norm(f);
  r.submarkov_min = u.minCoeff();
  r.submarkov_max = u.maxCoeff();
  return r;
}

struct ContractionReport {
  double max_ratio = 0.0;
  std::vector<std::pair<double, double>> ratios;  // (alpha, ratio) per trial
};

// |alpha G_alpha f|_mu <= |f|_mu for random f; non-throwing.
template <int Dim>
ContractionReport evaluate_contraction(const FormMatrices<Dim>& form, const std::vector<double>& alphas, int trials,
                                       std::uint64_t seed, SolverOptions opts = {}) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  ContractionReport rep;
  for (double alpha : alphas) {
    const Resolvent<Dim> g(form, alpha, opts);
    for (int t = 0; t < trials; ++t) {
      Vector f(form.size());
      for (Index i = 0; i < f.size(); ++i) f[i] = normal(rng);
      const double ratio = form.mass_norm(Vector(alpha * g.apply(f))) / form.mass_norm(f);
      rep.ratios.emplace_back(alpha, ratio);
      rep.max_ratio = std::max(rep.max_ratio, ratio);
    }
  }
  return rep;
}

template <int Dim>
ContractionReport check_contraction(const FormMatrices<Dim>& form, const std::vector<double>& alphas, int trials = 5,
                                    std::uint64_t seed = 1, SolverOptions opts = {}) {
  auto rep = evaluate_contraction(form, alphas, trials, seed, opts);
  require(rep.max_ratio <= 1.0 + 1e-10, ErrorCode::ContractionViolation,
          "contraction ratio " + std::to_string(rep.max_ratio) + " exceeds 1 (drift mode " + to_string(form.mode) + ")");
  return rep;
}

// |(G_a - G_b) f - (b - a) G_a G_b f|_mu / |G_a f|_mu
template <int Dim>
double check_resolvent_identity(const FormMatrices<Dim>& form, double a, double b, const Vector& f,
                                SolverOptions opts = {}) {
  const Resolvent<Dim> ga(form, a, opts), gb(form, b, opts);
  const Vector gaf = ga.apply(f), gbf = gb.apply(f);
  const Vector defect = (gaf - gbf) - (b - a) * ga.apply(gbf);
  return form.mass_norm(defect) / form.mass_norm(gaf);
}

struct SubmarkovReport {
  double min_value = 0.0;
  double max_value = 0.0;
  Index worst_vertex = -1;
};

// 0 <= f <= 1 implies 0 <= alpha G_alpha f <= 1 when the system is an M-matrix.
template <int Dim>
SubmarkovReport evaluate_submarkov(const FormMatrices<Dim>& form, const MeshQuality& quality, double alpha,
                                   const Vector& f, MassMode mass = MassMode::consistent, SolverOptions opts = {}) {
  require(quality.acute || mass == MassMode::lumped, ErrorCode::InvalidArgument,
          "sub-Markov bounds need an acute mesh or lumped mass");
  require(f.minCoeff() >= 0.0 && f.maxCoeff() <= 1.0, ErrorCode::InvalidArgument, "f must take values in [0, 1]");
  const Vector u = alpha * Resolvent<Dim>(form, alpha, opts, mass).apply(f);
  SubmarkovReport rep;
  Index imin = 0, imax = 0;
  rep.min_value = u.minCoeff(&imin);
  rep.max_value = u.maxCoeff(&imax);
  rep.worst_vertex = -rep.min_value > rep.max_value - 1.0 ? imin : imax;
  return rep;
}

template <int Dim>
SubmarkovReport check_submarkov(const FormMatrices<Dim>& form, const MeshQuality& quality, double alpha,
                                const Vector& f, MassMode mass = MassMode::consistent, double tol = 1e-8,
                                SolverOptions opts = {}) {
  const auto rep = evaluate_submarkov(form, quality, alpha, f, mass, opts);
  require(rep.min_value >= -tol && rep.max_value <= 1.0 + tol, ErrorCode::SubmarkovViolation,
          "alpha G f leaves [0, 1] at vertex " + std::to_string(rep.worst_vertex) + " (range [" +
              std::to_string(rep.min_value) + ", " + std::to_string(rep.max_value) + "])");
  return rep;
}

// L_h u = -M_II^{-1} (S + D) u on the interior, so that E(u, v) = -<M L_h u, v>.
template <int Dim>
Vector apply_generator(const FormMatrices<Dim>& form, const Vector& u, SolverOptions opts = {}) {
  const Vector ku = form.interior.restrict(Vector(form.S * u + form.D * u));
  const LinearSolver m(form.M_II, opts, ErrorCode::SingularMass);
  return form.interior.extend(Vector(-m.solve(ku)), form.size());
}

struct StrongContinuityReport {
  std::vector<double> alphas;
  std::vector<double> gaps;  // |alpha G_alpha f - f|_mu
  double bound = 0.0;        // |(S + D) f|_{M^-1} / alpha_max
  bool monotone = true;
};

// For interior-supported f, alpha G f - f = -G (S + D) f, so the gap is at most |(S + D) f|_{M^-1} / alpha.
template <int Dim>
StrongContinuityReport strong_continuity(const FormMatrices<Dim>& form, const Vector& f, const std::vector<double>& alphas,
                                         SolverOptions opts = {}) {
  require(!alphas.empty(), ErrorCode::InvalidArgument, "empty alpha grid");
  for (Index i = 0; i < f.size(); ++i)
    require(form.interior.full_to_reduced[i] >= 0 || f[i] == 0.0, ErrorCode::InvalidArgument,
            "strong continuity needs f supported on interior vertices");
  StrongContinuityReport rep;
  rep.alphas = alphas;
  for (double a : alphas) {
    const Vector u = a * Resolvent<Dim>(form, a, opts).apply(f);
    rep.gaps.push_back(form.mass_norm(Vector(u - f)));
    if (rep.gaps.size() > 1 && rep.gaps.back() > rep.gaps[rep.gaps.size() - 2] * (1.0 + 1e-12)) rep.monotone = false;
  }
  const Vector kf = form.interior.restrict(Vector(form.S * f + form.D * f));
  const LinearSolver m(form.M_II, opts, ErrorCode::SingularMass);
  rep.bound = std::sqrt(std::max(0.0, kf.dot(m.solve(kf)))) / *std::max_element(alphas.begin(), alphas.end());
  return rep;
}

struct Eigenpair {
  double lambda = 0.0;
  Vector psi;  // M-normalized, zero on the boundary
};

// Smallest Dirichlet eigenpair of S psi = lambda M psi by inverse iteration; requires a drift-free form.
template <int Dim>
Eigenpair first_dirichlet_eigenpair(const FormMatrices<Dim>& form, SolverOptions opts = {}) {
  require(form.D.norm() <= 1e-12 * form.S.norm(), ErrorCode::InvalidArgument,
          "the eigen case needs B = 0 so that S is the whole form");
  const SparseMatrix s_ii = form.interior.restrict_both(form.S);
  const LinearSolver solver(s_ii, opts);
  Vector x = Vector::Ones(s_ii.rows());
  double lambda = 0.0;
  for (int it = 0; it < 500; ++it) {
    x = solver.solve(Vector(form.M_II * x));
    x /= std::sqrt(x.dot(form.M_II * x));
    const double next = x.dot(s_ii * x);
    const bool done = std::abs(next - lambda) <= 1e-15 * next && it > 20;
    lambda = next;
    if (done) break;
  }
  // polish: the eigenvector error is of order the square root of the Rayleigh error
  for (int it = 0; it < 50; ++it) {
    x = solver.solve(Vector(form.M_II * x));
    x /= std::sqrt(x.dot(form.M_II * x));
  }
  lambda = x.dot(s_ii * x);
  if (x.sum() < 0.0) x = -x;
  return {lambda, form.interior.extend(x, form.size())};
}

struct SectorReport {
  double empirical = 0.0;  // max |E(f, g)| / sqrt(E(f, f) E(g, g)) over sampled pairs
  std::optional<double> theoretical;
  bool exceeds_bound = false;
  int pairs = 0;
};

// 1 + (gamma / lambda) (rho_max / rho_min) |B|_{L^d}, gamma = 2(d-1)/(d-2); only for d >= 3.
template <int Dim>
double theoretical_sector_bound(const SimplicialMesh<Dim>& mesh, const CoefficientSet<Dim>& cs,
                                const DensityField<Dim>& density, const DriftDecomposition<Dim>& dec) {
  if constexpr (Dim < 3) {
    fail(ErrorCode::DimensionUnsupported, "the Sobolev-based sector bound needs d >= 3");
  } else {
    const double gamma = 2.0 * (Dim - 1) / (Dim - 2);
    return 1.0 + gamma / cs.lambda * (density.rho_max / density.rho_min) * drift_norm(mesh, dec, Dim);
  }
}

template <int Dim>
SectorReport sector_constant(const FormMatrices<Dim>& form, int pairs, std::uint64_t seed,
                             std::optional<double> bound = std::nullopt) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  SectorReport rep;
  rep.pairs = pairs;
  rep.theoretical = bound;
  const Index n = form.interior.size();
  for (int t = 0; t < pairs; ++t) {
    Vector a(n), b(n);
    for (Index i = 0; i < n; ++i) a[i] = normal(rng);
    for (Index i = 0; i < n; ++i) b[i] = normal(rng);
    const Vector f = form.interior.extend(a, form.size()), g = form.interior.extend(b, form.size());
    const double ratio = std::abs(form.bilinear(f, g)) / std::sqrt(form.energy(f) * form.energy(g));
    rep.empirical = std::max(rep.empirical, ratio);
  }
  if (bound) rep.exceeds_bound = rep.empirical > *bound;
  return rep;
}

}  // namespace fplab
