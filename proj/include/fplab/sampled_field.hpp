#pragma once

#include "fplab/coefficients.hpp"
#include "fplab/mesh_io.hpp"

#include <fstream>
#include <memory>

namespace fplab {

// Vertex-indexed data on a simplicial mesh, evaluated by barycentric interpolation.
// Points outside the data mesh take the value of the nearest element, with barycentric weights clamped.
template <int Dim>
class SampledField {
 public:
  SampledField(SimplicialMesh<Dim> mesh, Eigen::MatrixXd values) : mesh_(std::move(mesh)), values_(std::move(values)) {
    require(values_.rows() == mesh_.vertex_count(), ErrorCode::MeshMismatch, "one value row per vertex is required");
    require(values_.allFinite(), ErrorCode::NonFiniteValue, "sampled values must be finite");
    build_index();
  }

  Index components() const { return values_.cols(); }
  const SimplicialMesh<Dim>& mesh() const { return mesh_; }

  Eigen::VectorXd operator()(const Point<Dim>& x) const {
    Index best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    Eigen::Matrix<double, Dim + 1, 1> best_bary;
    auto consider = [&](Index e) {
      const auto b = barycentric(e, x);
      const double score = b.minCoeff();
      if (score > best_score) {
        best_score = score;
        best = e;
        best_bary = b;
      }
    };
    for (Index e : bucket(x)) {
      consider(e);
      if (best_score >= -1e-12) break;
    }
    if (best_score < -1e-12)
      for (Index e = 0; e < mesh_.element_count(); ++e) consider(e);
    Eigen::Matrix<double, Dim + 1, 1> b = best_bary.cwiseMax(0.0);
    b /= b.sum();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(values_.cols());
    for (int k = 0; k <= Dim; ++k) out += b[k] * values_.row(mesh_.element(best)[k]).transpose();
    return out;
  }

 private:
  Eigen::Matrix<double, Dim + 1, 1> barycentric(Index e, const Point<Dim>& x) const {
    const auto v = mesh_.element_vertices(e);
    Matrix<Dim> jac;
    for (int k = 0; k < Dim; ++k) jac.col(k) = v[k + 1] - v[0];
    const Point<Dim> l = jac.partialPivLu().solve(x - v[0]);
    Eigen::Matrix<double, Dim + 1, 1> b;
    b[0] = 1.0 - l.sum();
    b.template tail<Dim>() = l;
    return b;
  }

  void build_index() {
    lo_ = hi_ = mesh_.vertex(0);
    for (const auto& p : mesh_.vertices()) {
      lo_ = lo_.cwiseMin(p);
      hi_ = hi_.cwiseMax(p);
    }
    const double cells = std::max(1.0, std::pow(static_cast<double>(mesh_.element_count()), 1.0 / Dim));
    n_ = static_cast<int>(std::ceil(cells));
    buckets_.assign(static_cast<std::size_t>(std::pow(n_, Dim)), {});
    for (Index e = 0; e < mesh_.element_count(); ++e) {
      const auto v = mesh_.element_vertices(e);
      Point<Dim> a = v[0], b = v[0];
      for (const auto& p : v) {
        a = a.cwiseMin(p);
        b = b.cwiseMax(p);
      }
      const auto ia = cell(a), ib = cell(b);
      std::array<int, Dim> i = ia;
      while (true) {
        buckets_[flat(i)].push_back(e);
        int k = 0;
        while (k < Dim && ++i[k] > ib[k]) i[k] = ia[k], ++k;
        if (k == Dim) break;
      }
    }
  }

  std::array<int, Dim> cell(const Point<Dim>& x) const {
    std::array<int, Dim> c;
    for (int k = 0; k < Dim; ++k) {
      const double span = hi_[k] - lo_[k];
      const double t = span > 0.0 ? (x[k] - lo_[k]) / span : 0.0;
      c[k] = std::clamp(static_cast<int>(std::floor(t * n_)), 0, n_ - 1);
    }
    return c;
  }

  std::size_t flat(const std::array<int, Dim>& c) const {
    std::size_t id = 0;
    for (int k = Dim - 1; k >= 0; --k) id = id * static_cast<std::size_t>(n_) + static_cast<std::size_t>(c[k]);
    return id;
  }

  const std::vector<Index>& bucket(const Point<Dim>& x) const { return buckets_[flat(cell(x))]; }

  SimplicialMesh<Dim> mesh_;
  Eigen::MatrixXd values_;
  Point<Dim> lo_, hi_;
  int n_ = 1;
  std::vector<std::vector<Index>> buckets_;
};

// Data file: a mesh in the plain-text mesh format, then "values <ncomp>" and one row per vertex.
template <int Dim>
SampledField<Dim> read_sampled_field(const std::string& path, Index expected_components) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::MeshFormat, "cannot open coefficient data file " + path);
  auto mesh = read_mesh<Dim>(is);
  std::string tag;
  Index ncomp = 0;
  require(static_cast<bool>(is >> tag >> ncomp) && tag == "values", ErrorCode::MeshFormat,
          "expected 'values <ncomp>' after the mesh block in " + path);
  require(ncomp == expected_components, ErrorCode::MeshFormat,
          path + " has " + std::to_string(ncomp) + " components, expected " + std::to_string(expected_components));
  Eigen::MatrixXd v(mesh.vertex_count(), ncomp);
  for (Index i = 0; i < v.rows(); ++i)
    for (Index k = 0; k < ncomp; ++k) require(static_cast<bool>(is >> v(i, k)), ErrorCode::MeshFormat, "truncated values in " + path);
  return SampledField<Dim>(std::move(mesh), std::move(v));
}

template <int Dim>
void write_sampled_field(std::ostream& os, const SimplicialMesh<Dim>& mesh, const Eigen::MatrixXd& values) {
  write_mesh(os, mesh);
  os << "values " << values.cols() << '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index k = 0; k < values.cols(); ++k) os << (k ? " " : "") << format_double(values(i, k));
    os << '\n';
  }
}

template <int Dim>
MatrixField<Dim> as_matrix_field(std::shared_ptr<const SampledField<Dim>> f) {
  require(f->components() == Dim * Dim, ErrorCode::InvalidArgument, "matrix data needs d*d components");
  return [f](const Point<Dim>& x) {
    const Eigen::VectorXd v = (*f)(x);
    Matrix<Dim> a;
    for (int i = 0; i < Dim; ++i)
      for (int j = 0; j < Dim; ++j) a(i, j) = v[i * Dim + j];
    return a;
  };
}

template <int Dim>
VectorField<Dim> as_vector_field(std::shared_ptr<const SampledField<Dim>> f) {
  require(f->components() == Dim, ErrorCode::InvalidArgument, "vector data needs d components");
  return [f](const Point<Dim>& x) { return Point<Dim>((*f)(x)); };
}

template <int Dim>
ScalarField<Dim> as_scalar_field(std::shared_ptr<const SampledField<Dim>> f) {
  require(f->components() == 1, ErrorCode::InvalidArgument, "scalar data needs one component");
  return [f](const Point<Dim>& x) { return (*f)(x)[0]; };
}

}  // namespace fplab
