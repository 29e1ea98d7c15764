#pragma once

#include "fplab/coefficients.hpp"
#include "fplab/fem.hpp"
#include "fplab/linear_solver.hpp"

#include <iomanip>
#include <map>
#include <sstream>

namespace fplab {

template <int Dim>
struct DensityField {
  FeFunction<Dim> rho;
  double rho_min = 0.0;
  double rho_max = 0.0;
  bool normalized = false;
  double residual = 0.0;           // max_i |(K rho)_i|
  double relative_residual = 0.0;  // residual / (|K|_inf |rho|_inf)
  Index pinned_vertex = -1;
  bool used_inverse_iteration = false;

  Weight<Dim> weight() const { return Weight<Dim>::nodal(rho); }
};

struct DensityOptions {
  double pin_value = 1.0;
  SolverOptions solver;
  double kernel_tolerance = 1e-8;
  bool normalize = true;
};

// K_ij = int <A^T grad phi_j, grad phi_i> dx - int phi_j <H, grad phi_i> dx over the full P1 space,
// the weak form of div(A^T grad rho - rho H) = 0 with no-flux boundary. Column sums vanish.
template <int Dim>
SparseMatrix assemble_density_operator(const SimplicialMesh<Dim>& mesh, const CoefficientSet<Dim>& cs,
                                       int degree = kDefaultQuadratureDegree) {
  const MatrixField<Dim> At = [&cs](const Point<Dim>& x) { return Matrix<Dim>(cs.A(x).transpose()); };
  const SparseMatrix s = assemble_weighted_stiffness(mesh, At, Weight<Dim>::lebesgue(), degree);
  const SparseMatrix d = assemble_drift(mesh, cs.H, Weight<Dim>::lebesgue(), degree);
  return SparseMatrix(s + SparseMatrix(d.transpose()));
}

namespace detail {

inline double inf_norm(const SparseMatrix& k) {
  Vector rows = Vector::Zero(k.rows());
  for (Index c = 0; c < k.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(k, c); it; ++it) rows[it.row()] += std::abs(it.value());
  return rows.maxCoeff();
}

template <int Dim>
Index pick_pin(const SimplicialMesh<Dim>& mesh) {
  Point<Dim> centroid = Point<Dim>::Zero();
  for (const auto& p : mesh.vertices()) centroid += p;
  centroid /= static_cast<double>(mesh.vertex_count());
  Index best = -1;
  double dist = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < mesh.vertex_count(); ++i) {
    if (mesh.is_boundary(i)) continue;
    const double d = (mesh.vertex(i) - centroid).squaredNorm();
    if (d < dist) dist = d, best = i;
  }
  return best >= 0 ? best : 0;
}

// Null vector of K by shifted inverse iteration from a given start.
inline Vector inverse_iteration(const SparseMatrix& k, Vector x, const SolverOptions& opts) {
  SparseMatrix shifted = k;
  const double shift = 1e-10 * inf_norm(k);
  for (Index i = 0; i < k.rows(); ++i) shifted.coeffRef(i, i) += shift;
  LinearSolver solver(shifted, opts, ErrorCode::KernelDimensionError);
  for (int it = 0; it < 30; ++it) {
    x = solver.solve(x);
    x /= x.norm();
  }
  return x;
}

}  // namespace detail

// Solves for the invariant density: pins one interior vertex and solves the reduced adjoint system.
// Falls back to inverse iteration if the pinned system is singular.
template <int Dim>
DensityField<Dim> solve_invariant_density(const SimplicialMesh<Dim>& mesh, const CoefficientSet<Dim>& cs,
                                          const DensityOptions& opts = {}) {
  const SparseMatrix k = assemble_density_operator(mesh, cs);
  const Index n = mesh.vertex_count();
  const Index pin = detail::pick_pin(mesh);
  DensityField<Dim> out;
  out.pinned_vertex = pin;
  auto pinned_solve = [&](Index p) {
    std::vector<Triplet> t;
    Vector rhs = Vector::Zero(n - 1);
    auto reduce = [p](Index i) { return i < p ? i : i - 1; };
    for (Index c = 0; c < k.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(k, c); it; ++it) {
        if (it.row() == p) continue;
        if (c == p) rhs[reduce(it.row())] -= opts.pin_value * it.value();
        else t.emplace_back(reduce(it.row()), reduce(c), it.value());
      }
    SparseMatrix reduced(n - 1, n - 1);
    reduced.setFromTriplets(t.begin(), t.end());
    reduced.makeCompressed();
    LinearSolver solver(reduced, opts.solver, ErrorCode::KernelDimensionError);
    const Vector x = solver.solve(rhs);
    Vector full(n);
    for (Index i = 0; i < n; ++i) full[i] = i == p ? opts.pin_value : x[reduce(i)];
    return full;
  };
  // A second pin far from the first must give the same line; otherwise the kernel is larger than one.
  auto same_line = [](const Vector& a, const Vector& b) {
    return std::abs(a.normalized().dot(b.normalized())) >= 1.0 - 1e-8;
  };
  Vector rho(n);
  try {
    rho = pinned_solve(pin);
    Index far = pin;
    double dist = -1.0;
    for (Index i = 0; i < n; ++i) {
      const double d = (mesh.vertex(i) - mesh.vertex(pin)).squaredNorm();
      if (d > dist) dist = d, far = i;
    }
    require(rho.allFinite() && same_line(rho, pinned_solve(far)), ErrorCode::KernelDimensionError,
            "the discrete kernel is not one-dimensional");
  } catch (const Error& e) {
    if (e.code() != ErrorCode::KernelDimensionError) throw;
    out.used_inverse_iteration = true;
    const Vector a = detail::inverse_iteration(k, Vector::Ones(n), opts.solver);
    const Vector b = detail::inverse_iteration(k, Vector::LinSpaced(n, 1.0, 2.0), opts.solver);
    require(same_line(a, b), ErrorCode::KernelDimensionError, "the discrete kernel is not one-dimensional");
    rho = a.sum() < 0.0 ? Vector(-a) : a;
  }
  require(rho.allFinite(), ErrorCode::KernelDimensionError, "density solve produced non-finite values");
  const double knorm = detail::inf_norm(k);
  out.residual = (k * rho).cwiseAbs().maxCoeff();
  out.relative_residual = out.residual / (knorm * rho.cwiseAbs().maxCoeff());
  require(out.relative_residual <= opts.kernel_tolerance, ErrorCode::KernelDimensionError,
          "density residual " + std::to_string(out.relative_residual) + " exceeds kernel tolerance");
  Index argmin = 0;
  const double mn = rho.minCoeff(&argmin);
  require(mn > 0.0, ErrorCode::DensityNotPositive,
          "discrete density is not positive at vertex " + std::to_string(argmin) + " (value " + std::to_string(mn) +
              "); refine the mesh");
  if (opts.normalize) {
    const double mean = integrate(mesh, FeFunction<Dim>{mesh.id(), rho}) / mesh.total_volume();
    rho /= mean;
    out.residual /= mean;
    out.normalized = true;
  }
  out.rho = make_fe_function(mesh, rho);
  out.rho_min = rho.minCoeff();
  out.rho_max = rho.maxCoeff();
  return out;
}

// B = H - (1/rho) A^T grad rho at the quadrature points of the assembly rule (grad rho_h is piecewise constant).
template <int Dim>
struct DriftDecomposition {
  std::uint64_t mesh_id = 0;
  int degree = kDefaultQuadratureDegree;
  std::size_t points_per_element = 0;
  std::vector<Point<Dim>> B;

  const Point<Dim>& at(Index e, std::size_t q) const { return B[static_cast<std::size_t>(e) * points_per_element + q]; }

  // Callable for assemble_drift_at.
  auto field() const {
    return [this](Index e, std::size_t q, const Point<Dim>&) { return at(e, q); };
  }
};

template <int Dim>
DriftDecomposition<Dim> decompose_drift(const CoefficientSet<Dim>& cs, const DensityField<Dim>& density,
                                        const SimplicialMesh<Dim>& mesh) {
  check_same_mesh(mesh, density.rho);
  const auto& rule = quadrature_rule<Dim>(kDefaultQuadratureDegree);
  DriftDecomposition<Dim> out;
  out.mesh_id = mesh.id();
  out.points_per_element = rule.size();
  out.B.resize(static_cast<std::size_t>(mesh.element_count()) * rule.size());
  Index current = -1;
  Point<Dim> grad;
  for_each_quadrature_point(mesh, rule, [&](Index e, const ElementGeometry<Dim>& g, std::size_t q, const auto& bary,
                                            const Point<Dim>& x, double) {
    if (e != current) {
      grad = gradient_in_element(mesh, density.rho, e, g);
      current = e;
    }
    const double r = evaluate_in_element(mesh, density.rho, e, bary);
    require(r > 0.0, ErrorCode::DensityNotPositive, "density is not positive at a quadrature point");
    const Point<Dim> b = cs.H(x) - cs.A(x).transpose() * grad / r;
    require(b.allFinite(), ErrorCode::NonFiniteValue, "drift is not finite");
    out.B[static_cast<std::size_t>(e) * rule.size() + q] = b;
  });
  return out;
}

struct DivergenceResidualReport {
  double max_residual = 0.0;    // max over interior j of |int <rho_h B_h, grad phi_j> dx|
  double scale = 0.0;           // rho_max (|H|_inf + M / diam) max_j int |grad phi_j| dx
  double quadratic_defect = 0.0;  // max over interior j of |int <B, grad phi_j^2> dmu|
  std::vector<std::pair<Index, double>> table;  // (vertex, r_j) for interior vertices
};

template <int Dim>
DivergenceResidualReport divergence_free_residual(const SimplicialMesh<Dim>& mesh, const CoefficientSet<Dim>& cs,
                                                  const DensityField<Dim>& density,
                                                  const DriftDecomposition<Dim>& dec) {
  check_same_mesh(mesh, density.rho);
  require(dec.mesh_id == mesh.id(), ErrorCode::MeshMismatch, "drift decomposition belongs to another mesh");
  const Index n = mesh.vertex_count();
  Vector r = Vector::Zero(n), quad = Vector::Zero(n), grad_mass = Vector::Zero(n);
  double hmax = 0.0;
  for_each_quadrature_point(mesh, quadrature_rule<Dim>(dec.degree),
                            [&](Index e, const ElementGeometry<Dim>& g, std::size_t q, const auto& bary,
                                const Point<Dim>& x, double w) {
                              const double rho = evaluate_in_element(mesh, density.rho, e, bary);
                              const Point<Dim>& b = dec.at(e, q);
                              hmax = std::max(hmax, cs.H(x).norm());
                              const auto& el = mesh.element(e);
                              for (int k = 0; k <= Dim; ++k) {
                                const double bg = g.grad.row(k).dot(b);
                                r[el[k]] += w * rho * bg;
                                quad[el[k]] += w * rho * 2.0 * bary[k] * bg;
                                grad_mass[el[k]] += w * g.grad.row(k).norm();
                              }
                            });
  DivergenceResidualReport rep;
  double gm = 0.0;
  for (Index j = 0; j < n; ++j) {
    if (mesh.is_boundary(j)) continue;
    rep.table.emplace_back(j, r[j]);
    rep.max_residual = std::max(rep.max_residual, std::abs(r[j]));
    rep.quadratic_defect = std::max(rep.quadratic_defect, std::abs(quad[j]));
    gm = std::max(gm, grad_mass[j]);
  }
  double diam = domain_diameter(mesh.domain());
  if (diam == 0.0) {
    for (const auto& p : mesh.vertices()) diam = std::max(diam, (p - mesh.vertex(0)).norm());
  }
  rep.scale = density.rho_max * (hmax + cs.M / diam) * gm;
  return rep;
}

// ||B||_{L^p(dx)} from the quadrature values.
template <int Dim>
double drift_norm(const SimplicialMesh<Dim>& mesh, const DriftDecomposition<Dim>& dec, double p) {
  double s = 0.0;
  for_each_quadrature_point(mesh, quadrature_rule<Dim>(dec.degree),
                            [&](Index e, const ElementGeometry<Dim>&, std::size_t q, const auto&, const Point<Dim>&,
                                double w) { s += w * std::pow(dec.at(e, q).norm(), p); });
  return std::pow(s, 1.0 / p);
}

// Density file: '#'-prefixed metadata lines, then one nodal value per line.
template <int Dim>
void write_density(std::ostream& os, const DensityField<Dim>& d, const std::map<std::string, std::string>& meta = {}) {
  os << "# density_field\n";
  os << "# dim " << Dim << '\n';
  os << "# vertices " << d.rho.size() << '\n';
  os << "# normalized " << (d.normalized ? 1 : 0) << '\n';
  os << "# rho_min " << format_double(d.rho_min) << '\n';
  os << "# rho_max " << format_double(d.rho_max) << '\n';
  os << "# residual " << format_double(d.residual) << '\n';
  for (const auto& [k, v] : meta) os << "# " << k << ' ' << v << '\n';
  write_vector(os, d.rho.values);
}

template <int Dim>
DensityField<Dim> read_density(std::istream& is, const SimplicialMesh<Dim>& mesh) {
  DensityField<Dim> d;
  std::string line;
  std::vector<double> values;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string key;
      ls >> key;
      if (key == "normalized") {
        int v = 0;
        ls >> v;
        d.normalized = v == 1;
      } else if (key == "residual") {
        ls >> d.residual;
      } else if (key == "dim") {
        int dim = 0;
        ls >> dim;
        require(dim == Dim, ErrorCode::MeshMismatch, "density file has the wrong dimension");
      }
      continue;
    }
    values.push_back(std::stod(line));
  }
  require(static_cast<Index>(values.size()) == mesh.vertex_count(), ErrorCode::MeshMismatch,
          "density file has " + std::to_string(values.size()) + " values for " + std::to_string(mesh.vertex_count()) +
              " vertices");
  d.rho = make_fe_function(mesh, Eigen::Map<Vector>(values.data(), static_cast<Index>(values.size())));
  d.rho_min = d.rho.values.minCoeff();
  d.rho_max = d.rho.values.maxCoeff();
  require(d.rho_min > 0.0, ErrorCode::DensityNotPositive, "density file contains non-positive values");
  return d;
}

// Density from a closed form, normalized to mean one over the mesh.
template <int Dim>
DensityField<Dim> interpolate_density(const SimplicialMesh<Dim>& mesh, const ScalarField<Dim>& rho) {
  DensityField<Dim> d;
  Vector v = interpolate(mesh, rho).values;
  require(v.minCoeff() > 0.0, ErrorCode::DensityNotPositive, "closed-form density is not positive");
  v /= integrate(mesh, FeFunction<Dim>{mesh.id(), v}) / mesh.total_volume();
  d.rho = make_fe_function(mesh, v);
  d.rho_min = v.minCoeff();
  d.rho_max = v.maxCoeff();
  d.normalized = true;
  return d;
}

}  // namespace fplab
