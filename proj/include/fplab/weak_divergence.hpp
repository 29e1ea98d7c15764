#pragma once

#include "fplab/fem.hpp"
#include "fplab/linear_solver.hpp"

#include <optional>

namespace fplab {

template <int Dim>
struct WeakDivergence {
  std::array<FeFunction<Dim>, Dim> components;
  double projection_residual = 0.0;       // max over interior test functions, relative to the load scale
  std::optional<double> analytic_error;   // L2 error against a supplied closed form
};

namespace detail {

// Barycentric rule on a facet (segment or triangle), exact through degree 5.
template <int Dim>
QuadratureRule<Dim - 1> facet_rule() {
  if constexpr (Dim == 2) {
    QuadratureRule<1> r;
    r.degree = 5;
    const GaussLegendre gl(3);
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double t = 0.5 * (gl.nodes[i] + 1.0);
      r.points.push_back({1.0 - t, t});
      r.weights.push_back(0.5 * gl.weights[i]);
    }
    return r;
  } else {
    return quadrature_rule<2>(5);
  }
}

}  // namespace detail

// Weak divergence of a matrix field, e_j = sum_i d_i a_ij, recovered as the P1 function E with
//   int <E, Phi> dx = -int sum_ij a_ij d_i Phi_j dx + boundary flux
// for all P1 test fields Phi. The flux term makes the identity the L2 projection of div A, and on
// interior test fields it is exactly the defining relation of the weak divergence.
template <int Dim>
WeakDivergence<Dim> weak_divergence_matrix(const SimplicialMesh<Dim>& mesh, const MatrixField<Dim>& A,
                                           const std::optional<VectorField<Dim>>& exact = std::nullopt) {
  const Index n = mesh.vertex_count();
  Eigen::MatrixXd volume_term = Eigen::MatrixXd::Zero(n, Dim);
  Eigen::MatrixXd flux_term = Eigen::MatrixXd::Zero(n, Dim);
  for_each_quadrature_point(mesh, quadrature_rule<Dim>(kDefaultQuadratureDegree),
                            [&](Index e, const ElementGeometry<Dim>& g, std::size_t, const auto&, const Point<Dim>& x,
                                double w) {
                              const Matrix<Dim> a = A(x);
                              require(a.allFinite(), ErrorCode::NonFiniteValue, "A is not finite");
                              const auto& el = mesh.element(e);
                              for (int k = 0; k <= Dim; ++k)
                                volume_term.row(el[k]) -= w * (g.grad.row(k) * a);  // (grad phi_k^T A)_j
                            });
  const auto rule = detail::facet_rule<Dim>();
  for (const auto& f : boundary_facets(mesh)) {
    for (std::size_t q = 0; q < rule.size(); ++q) {
      Point<Dim> x = Point<Dim>::Zero();
      for (int k = 0; k < Dim; ++k) x += rule.points[q][k] * mesh.vertex(f.vertices[k]);
      const Eigen::Matrix<double, 1, Dim> na = f.normal.transpose() * A(x);
      for (int k = 0; k < Dim; ++k) flux_term.row(f.vertices[k]) += (rule.weights[q] * f.measure * rule.points[q][k]) * na;
    }
  }
  const SparseMatrix mass = assemble_mass(mesh, Weight<Dim>::lebesgue());
  LinearSolver solver(mass, SolverOptions{}, ErrorCode::SingularMass);
  const Eigen::MatrixXd rhs = volume_term + flux_term;
  WeakDivergence<Dim> out;
  Eigen::MatrixXd values(n, Dim);
  for (int j = 0; j < Dim; ++j) {
    values.col(j) = solver.solve(rhs.col(j));
    out.components[j] = make_fe_function(mesh, Vector(values.col(j)));
  }
  const double scale = std::max(rhs.cwiseAbs().maxCoeff(), volume_term.cwiseAbs().maxCoeff());
  const Eigen::MatrixXd defect = mass * values - volume_term;
  double worst = 0.0;
  for (Index i = 0; i < n; ++i)
    if (!mesh.is_boundary(i)) worst = std::max(worst, defect.row(i).cwiseAbs().maxCoeff());
  out.projection_residual = scale > 0.0 ? worst / scale : worst;
  if (exact) {
    double err = 0.0, ref = 0.0;
    for_each_quadrature_point(mesh, quadrature_rule<Dim>(kDefaultQuadratureDegree),
                              [&](Index e, const ElementGeometry<Dim>&, std::size_t, const auto& bary,
                                  const Point<Dim>& x, double w) {
                                const Point<Dim> ex = (*exact)(x);
                                Point<Dim> eh;
                                for (int j = 0; j < Dim; ++j) eh[j] = evaluate_in_element(mesh, out.components[j], e, bary);
                                err += w * (eh - ex).squaredNorm();
                                ref += w * ex.squaredNorm();
                              });
    out.analytic_error = ref > 0.0 ? std::sqrt(err / ref) : std::sqrt(err);
  }
  return out;
}

}  // namespace fplab
