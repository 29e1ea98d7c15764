#pragma once

#include "fplab/mesh.hpp"
#include "fplab/mesh_io.hpp"
#include "fplab/quadrature.hpp"

#include <optional>
#include <ostream>

namespace fplab {

inline constexpr int kDefaultQuadratureDegree = 4;

// Nodal P1 values tied to the mesh they were built on.
template <int Dim>
struct FeFunction {
  std::uint64_t mesh_id = 0;
  Vector values;

  Index size() const { return values.size(); }
  double operator[](Index i) const { return values[i]; }
};

template <int Dim>
FeFunction<Dim> make_fe_function(const SimplicialMesh<Dim>& mesh, Vector values) {
  require(values.size() == mesh.vertex_count(), ErrorCode::MeshMismatch, "nodal vector has wrong length");
  require(values.allFinite(), ErrorCode::NonFiniteValue, "nodal values must be finite");
  return {mesh.id(), std::move(values)};
}

template <int Dim>
void check_same_mesh(const SimplicialMesh<Dim>& mesh, const FeFunction<Dim>& u) {
  require(u.mesh_id == mesh.id() && u.values.size() == mesh.vertex_count(), ErrorCode::MeshMismatch,
          "function belongs to a different mesh");
}

template <int Dim>
FeFunction<Dim> interpolate(const SimplicialMesh<Dim>& mesh, const ScalarField<Dim>& f) {
  Vector v(mesh.vertex_count());
  for (Index i = 0; i < mesh.vertex_count(); ++i) {
    v[i] = f(mesh.vertex(i));
    require(std::isfinite(v[i]), ErrorCode::NonFiniteValue, "interpolated value is not finite at vertex " + std::to_string(i));
  }
  return {mesh.id(), std::move(v)};
}

template <int Dim>
double evaluate_in_element(const SimplicialMesh<Dim>& mesh, const FeFunction<Dim>& u, Index e,
                           const std::array<double, Dim + 1>& bary) {
  double s = 0.0;
  const auto& el = mesh.element(e);
  for (int k = 0; k <= Dim; ++k) s += bary[k] * u.values[el[k]];
  return s;
}

template <int Dim>
Point<Dim> gradient_in_element(const SimplicialMesh<Dim>& mesh, const FeFunction<Dim>& u, Index e,
                               const ElementGeometry<Dim>& g) {
  Point<Dim> grad = Point<Dim>::Zero();
  const auto& el = mesh.element(e);
  for (int k = 0; k <= Dim; ++k) grad += u.values[el[k]] * g.grad.row(k).transpose();
  return grad;
}

// A positive weight: Lebesgue (1), a nodal FE density, or an analytic density.
template <int Dim>
class Weight {
 public:
  static Weight lebesgue() { return Weight(); }
  static Weight nodal(FeFunction<Dim> rho) {
    Weight w;
    w.nodal_ = std::move(rho);
    return w;
  }
  static Weight analytic(ScalarField<Dim> rho) {
    Weight w;
    w.analytic_ = std::move(rho);
    return w;
  }

  bool is_lebesgue() const { return !nodal_ && !analytic_; }

  double at(const SimplicialMesh<Dim>& mesh, Index e, const std::array<double, Dim + 1>& bary,
            const Point<Dim>& x) const {
    if (nodal_) return evaluate_in_element(mesh, *nodal_, e, bary);
    if (analytic_) return (*analytic_)(x);
    return 1.0;
  }

  void check(const SimplicialMesh<Dim>& mesh) const {
    if (nodal_) check_same_mesh(mesh, *nodal_);
  }

 private:
  std::optional<FeFunction<Dim>> nodal_;
  std::optional<ScalarField<Dim>> analytic_;
};

template <int Dim>
using Measure = Weight<Dim>;

// Calls fn(e, geometry, q, bary, x, weight * |T|) for every quadrature point.
template <int Dim, typename Fn>
void for_each_quadrature_point(const SimplicialMesh<Dim>& mesh, const QuadratureRule<Dim>& rule, Fn&& fn) {
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const auto v = mesh.element_vertices(e);
    const auto g = simplex_geometry<Dim>(v);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      Point<Dim> x = Point<Dim>::Zero();
      for (int k = 0; k <= Dim; ++k) x += rule.points[q][k] * v[k];
      fn(e, g, q, rule.points[q], x, rule.weights[q] * g.volume);
    }
  }
}

namespace detail {

template <int Dim>
double weight_value(const SimplicialMesh<Dim>& mesh, const Weight<Dim>& rho, Index e,
                    const std::array<double, Dim + 1>& bary, const Point<Dim>& x) {
  const double r = rho.at(mesh, e, bary, x);
  require(std::isfinite(r), ErrorCode::NonFiniteValue, "density is not finite at a quadrature point");
  require(r > 0.0, ErrorCode::NonPositiveDensity, "density is not positive at a quadrature point in element " + std::to_string(e));
  return r;
}

inline SparseMatrix from_triplets(Index n, const std::vector<Triplet>& t) {
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

}  // namespace detail

// S_ij = int <A grad phi_j, grad phi_i> rho dx
template <int Dim>
SparseMatrix assemble_weighted_stiffness(const SimplicialMesh<Dim>& mesh, const MatrixField<Dim>& A,
                                         const Weight<Dim>& rho, int degree = kDefaultQuadratureDegree) {
  rho.check(mesh);
  const auto& rule = quadrature_rule<Dim>(degree);
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(mesh.element_count()) * (Dim + 1) * (Dim + 1));
  Eigen::Matrix<double, Dim + 1, Dim + 1> local;
  Index current = -1;
  auto flush = [&](Index e) {
    const auto& el = mesh.element(e);
    for (int i = 0; i <= Dim; ++i)
      for (int j = 0; j <= Dim; ++j) trip.emplace_back(el[i], el[j], local(i, j));
  };
  for_each_quadrature_point(mesh, rule, [&](Index e, const ElementGeometry<Dim>& g, std::size_t, const auto& bary,
                                            const Point<Dim>& x, double w) {
    if (e != current) {
      if (current >= 0) flush(current);
      current = e;
      local.setZero();
    }
    const Matrix<Dim> a = A(x);
    require(a.allFinite(), ErrorCode::NonFiniteValue, "coefficient matrix is not finite");
    const double r = detail::weight_value(mesh, rho, e, bary, x);
    local += (w * r) * (g.grad * a * g.grad.transpose());
  });
  if (current >= 0) flush(current);
  return detail::from_triplets(mesh.vertex_count(), trip);
}

// D_ij = -int <B, grad phi_j> phi_i rho dx, with B given per quadrature point.
template <int Dim, typename DriftFn>
SparseMatrix assemble_drift_at(const SimplicialMesh<Dim>& mesh, DriftFn&& B, const Weight<Dim>& rho,
                               int degree = kDefaultQuadratureDegree) {
  rho.check(mesh);
  const auto& rule = quadrature_rule<Dim>(degree);
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(mesh.element_count()) * (Dim + 1) * (Dim + 1));
  Eigen::Matrix<double, Dim + 1, Dim + 1> local;
  Index current = -1;
  auto flush = [&](Index e) {
    const auto& el = mesh.element(e);
    for (int i = 0; i <= Dim; ++i)
      for (int j = 0; j <= Dim; ++j) trip.emplace_back(el[i], el[j], local(i, j));
  };
  for_each_quadrature_point(mesh, rule, [&](Index e, const ElementGeometry<Dim>& g, std::size_t q, const auto& bary,
                                            const Point<Dim>& x, double w) {
    if (e != current) {
      if (current >= 0) flush(current);
      current = e;
      local.setZero();
    }
    const Point<Dim> b = B(e, q, x);
    require(b.allFinite(), ErrorCode::NonFiniteValue, "drift is not finite");
    const double r = detail::weight_value(mesh, rho, e, bary, x);
    const Eigen::Matrix<double, Dim + 1, 1> bgrad = g.grad * b;  // <B, grad phi_j>
    for (int i = 0; i <= Dim; ++i) local.row(i) -= (w * r * bary[i]) * bgrad.transpose();
  });
  if (current >= 0) flush(current);
  return detail::from_triplets(mesh.vertex_count(), trip);
}

template <int Dim>
SparseMatrix assemble_drift(const SimplicialMesh<Dim>& mesh, const VectorField<Dim>& B, const Weight<Dim>& rho,
                            int degree = kDefaultQuadratureDegree) {
  return assemble_drift_at(mesh, [&](Index, std::size_t, const Point<Dim>& x) { return B(x); }, rho, degree);
}

// M_ij = int phi_i phi_j rho dx
template <int Dim>
SparseMatrix assemble_mass(const SimplicialMesh<Dim>& mesh, const Weight<Dim>& rho,
                           int degree = kDefaultQuadratureDegree) {
  rho.check(mesh);
  const auto& rule = quadrature_rule<Dim>(degree);
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(mesh.element_count()) * (Dim + 1) * (Dim + 1));
  Eigen::Matrix<double, Dim + 1, Dim + 1> local;
  Index current = -1;
  auto flush = [&](Index e) {
    const auto& el = mesh.element(e);
    for (int i = 0; i <= Dim; ++i)
      for (int j = 0; j <= Dim; ++j) trip.emplace_back(el[i], el[j], local(i, j));
  };
  for_each_quadrature_point(mesh, rule, [&](Index e, const ElementGeometry<Dim>&, std::size_t, const auto& bary,
                                            const Point<Dim>& x, double w) {
    if (e != current) {
      if (current >= 0) flush(current);
      current = e;
      local.setZero();
    }
    const double r = detail::weight_value(mesh, rho, e, bary, x);
    Eigen::Matrix<double, Dim + 1, 1> b;
    for (int k = 0; k <= Dim; ++k) b[k] = bary[k];
    local += (w * r) * b * b.transpose();
  });
  if (current >= 0) flush(current);
  return detail::from_triplets(mesh.vertex_count(), trip);
}

// b_i = int f phi_i rho dx + int <F, grad phi_i> rho dx
template <int Dim>
Vector assemble_load(const SimplicialMesh<Dim>& mesh, const ScalarField<Dim>& f, const VectorField<Dim>& F,
                     const Weight<Dim>& rho, int degree = kDefaultQuadratureDegree) {
  rho.check(mesh);
  Vector b = Vector::Zero(mesh.vertex_count());
  for_each_quadrature_point(mesh, quadrature_rule<Dim>(degree),
                            [&](Index e, const ElementGeometry<Dim>& g, std::size_t, const auto& bary,
                                const Point<Dim>& x, double w) {
                              const double r = detail::weight_value(mesh, rho, e, bary, x);
                              const double fv = f ? f(x) : 0.0;
                              const Point<Dim> Fv = F ? F(x) : Point<Dim>::Zero();
                              require(std::isfinite(fv) && Fv.allFinite(), ErrorCode::NonFiniteValue, "load is not finite");
                              const auto& el = mesh.element(e);
                              for (int i = 0; i <= Dim; ++i)
                                b[el[i]] += w * r * (fv * bary[i] + g.grad.row(i).dot(Fv));
                            });
  return b;
}

// Lumped mass: row sums of the consistent mass.
inline SparseMatrix lump(const SparseMatrix& m) {
  const Vector rows = m * Vector::Ones(m.cols());
  SparseMatrix out(m.rows(), m.cols());
  std::vector<Triplet> t;
  for (Index i = 0; i < m.rows(); ++i) t.emplace_back(i, i, rows[i]);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

template <int Dim>
double integrate(const SimplicialMesh<Dim>& mesh, const ScalarField<Dim>& f, const Weight<Dim>& rho = Weight<Dim>::lebesgue(),
                 int degree = kDefaultQuadratureDegree) {
  double s = 0.0;
  for_each_quadrature_point(mesh, quadrature_rule<Dim>(degree),
                            [&](Index e, const ElementGeometry<Dim>&, std::size_t, const auto& bary, const Point<Dim>& x,
                                double w) { s += w * rho.at(mesh, e, bary, x) * f(x); });
  return s;
}

template <int Dim>
double integrate(const SimplicialMesh<Dim>& mesh, const FeFunction<Dim>& u) {
  check_same_mesh(mesh, u);
  double s = 0.0;
  for (Index e = 0; e < mesh.element_count(); ++e) {
    double mean = 0.0;
    for (Index v : mesh.element(e)) mean += u.values[v];
    s += mesh.geometry(e).volume * mean / (Dim + 1);
  }
  return s;
}

// ||u||_{L^p(measure)}; p = infinity gives the max nodal modulus (exact for P1).
template <int Dim>
double norm(const SimplicialMesh<Dim>& mesh, const FeFunction<Dim>& u, double p,
            const Measure<Dim>& measure = Measure<Dim>::lebesgue(), int degree = kDefaultQuadratureDegree) {
  check_same_mesh(mesh, u);
  require(p >= 1.0, ErrorCode::InvalidArgument, "norm exponent must be >= 1");
  if (std::isinf(p)) return u.values.cwiseAbs().maxCoeff();
  double s = 0.0;
  for_each_quadrature_point(mesh, quadrature_rule<Dim>(degree),
                            [&](Index e, const ElementGeometry<Dim>&, std::size_t, const auto& bary, const Point<Dim>& x,
                                double w) {
                              const double v = std::abs(evaluate_in_element(mesh, u, e, bary));
                              s += w * detail::weight_value(mesh, measure, e, bary, x) * std::pow(v, p);
                            });
  return std::pow(s, 1.0 / p);
}

// ||g||_{L^p(measure)} for an analytic field sampled at quadrature points.
template <int Dim>
double norm(const SimplicialMesh<Dim>& mesh, const ScalarField<Dim>& g, double p,
            const Measure<Dim>& measure = Measure<Dim>::lebesgue(), int degree = kDefaultQuadratureDegree) {
  require(p >= 1.0, ErrorCode::InvalidArgument, "norm exponent must be >= 1");
  double s = 0.0;
  const bool sup = std::isinf(p);
  for_each_quadrature_point(mesh, quadrature_rule<Dim>(degree),
                            [&](Index e, const ElementGeometry<Dim>&, std::size_t, const auto& bary, const Point<Dim>& x,
                                double w) {
                              const double v = std::abs(g(x));
                              require(std::isfinite(v), ErrorCode::NonFiniteValue, "field is not finite");
                              if (sup) s = std::max(s, v);
                              else s += w * detail::weight_value(mesh, measure, e, bary, x) * std::pow(v, p);
                            });
  return sup ? s : std::pow(s, 1.0 / p);
}

// (int <A grad u, grad u> d measure)^{1/2}
template <int Dim>
double h1_seminorm(const SimplicialMesh<Dim>& mesh, const FeFunction<Dim>& u, const MatrixField<Dim>& A,
                   const Measure<Dim>& measure = Measure<Dim>::lebesgue(), int degree = kDefaultQuadratureDegree) {
  check_same_mesh(mesh, u);
  double s = 0.0;
  Index current = -1;
  Point<Dim> grad;
  for_each_quadrature_point(mesh, quadrature_rule<Dim>(degree),
                            [&](Index e, const ElementGeometry<Dim>& g, std::size_t, const auto& bary, const Point<Dim>& x,
                                double w) {
                              if (e != current) {
                                grad = gradient_in_element(mesh, u, e, g);
                                current = e;
                              }
                              const double q = grad.dot(A(x) * grad);
                              require(q >= 0.0, ErrorCode::NonEllipticSample,
                                      "<A grad u, grad u> < 0 in element " + std::to_string(e));
                              s += w * detail::weight_value(mesh, measure, e, bary, x) * q;
                            });
  return std::sqrt(s);
}

// Interior degrees of freedom and the map between full and reduced numbering.
struct InteriorMap {
  std::vector<Index> interior;      // reduced -> full
  std::vector<Index> full_to_reduced;  // full -> reduced, -1 on the boundary

  Index size() const { return static_cast<Index>(interior.size()); }

  Vector restrict(const Vector& full) const {
    Vector r(size());
    for (Index k = 0; k < size(); ++k) r[k] = full[interior[k]];
    return r;
  }

  Vector extend(const Vector& reduced, Index full_size) const {
    Vector f = Vector::Zero(full_size);
    for (Index k = 0; k < size(); ++k) f[interior[k]] = reduced[k];
    return f;
  }

  SparseMatrix restrict_rows(const SparseMatrix& m) const {
    std::vector<Triplet> t;
    for (Index c = 0; c < m.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(m, c); it; ++it)
        if (full_to_reduced[it.row()] >= 0) t.emplace_back(full_to_reduced[it.row()], it.col(), it.value());
    SparseMatrix out(size(), m.cols());
    out.setFromTriplets(t.begin(), t.end());
    return out;
  }

  SparseMatrix restrict_both(const SparseMatrix& m) const {
    std::vector<Triplet> t;
    for (Index c = 0; c < m.outerSize(); ++c) {
      const Index rc = full_to_reduced[c];
      if (rc < 0) continue;
      for (SparseMatrix::InnerIterator it(m, c); it; ++it)
        if (full_to_reduced[it.row()] >= 0) t.emplace_back(full_to_reduced[it.row()], rc, it.value());
    }
    SparseMatrix out(size(), size());
    out.setFromTriplets(t.begin(), t.end());
    out.makeCompressed();
    return out;
  }
};

template <int Dim>
InteriorMap interior_map(const SimplicialMesh<Dim>& mesh) {
  InteriorMap m;
  m.full_to_reduced.assign(static_cast<std::size_t>(mesh.vertex_count()), -1);
  for (Index i = 0; i < mesh.vertex_count(); ++i) {
    if (mesh.is_boundary(i)) continue;
    m.full_to_reduced[i] = static_cast<Index>(m.interior.size());
    m.interior.push_back(i);
  }
  return m;
}

struct ReducedSystem {
  SparseMatrix matrix;
  Vector rhs;
  InteriorMap map;
  Vector boundary_values;  // full-length lift, zero at interior vertices

  Vector extend(const Vector& reduced) const {
    Vector full = boundary_values;
    for (Index k = 0; k < map.size(); ++k) full[map.interior[k]] = reduced[k];
    return full;
  }
};

// Eliminates boundary rows and columns; boundary values enter the right-hand side.
template <int Dim>
ReducedSystem apply_dirichlet(const SparseMatrix& matrix, const Vector& rhs, const SimplicialMesh<Dim>& mesh,
                              const Vector& boundary_values) {
  require(matrix.rows() == mesh.vertex_count() && rhs.size() == mesh.vertex_count(), ErrorCode::MeshMismatch,
          "system size does not match mesh");
  ReducedSystem sys;
  sys.map = interior_map(mesh);
  require(sys.map.size() > 0, ErrorCode::EmptyInterior, "mesh has no interior vertices");
  sys.boundary_values = Vector::Zero(mesh.vertex_count());
  for (Index i = 0; i < mesh.vertex_count(); ++i)
    if (mesh.is_boundary(i)) sys.boundary_values[i] = boundary_values[i];
  sys.matrix = sys.map.restrict_both(matrix);
  sys.rhs = sys.map.restrict(Vector(rhs - matrix * sys.boundary_values));
  return sys;
}

template <int Dim>
ReducedSystem apply_dirichlet(const SparseMatrix& matrix, const Vector& rhs, const SimplicialMesh<Dim>& mesh) {
  return apply_dirichlet(matrix, rhs, mesh, Vector::Zero(mesh.vertex_count()));
}

// Coordinate-triplet export: header "rows cols nnz", then "i j value" lines.
inline void write_triplets(std::ostream& os, const SparseMatrix& m) {
  os << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  for (Index c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it)
      os << it.row() << ' ' << it.col() << ' ' << format_double(it.value()) << '\n';
}

inline void write_vector(std::ostream& os, const Vector& v) {
  for (Index i = 0; i < v.size(); ++i) os << format_double(v[i]) << '\n';
}

}  // namespace fplab
