#pragma once

#include "fplab/core.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <map>
#include <numeric>
#include <variant>
#include <vector>

namespace fplab {

template <int Dim>
struct Ball {
  Point<Dim> center = Point<Dim>::Zero();
  double radius = 1.0;
};

template <int Dim>
struct Box {
  Point<Dim> lo = Point<Dim>::Zero();
  Point<Dim> hi = Point<Dim>::Ones();
};

struct UnspecifiedDomain {};

template <int Dim>
using Domain = std::variant<UnspecifiedDomain, Ball<Dim>, Box<Dim>>;

inline constexpr int kMaxRefinementLevel = 8;

template <int Dim>
double domain_volume(const Domain<Dim>& domain) {
  if (const auto* b = std::get_if<Ball<Dim>>(&domain)) return unit_ball_volume(Dim) * std::pow(b->radius, Dim);
  if (const auto* b = std::get_if<Box<Dim>>(&domain)) return (b->hi - b->lo).prod();
  return 0.0;
}

template <int Dim>
double domain_diameter(const Domain<Dim>& domain) {
  if (const auto* b = std::get_if<Ball<Dim>>(&domain)) return 2.0 * b->radius;
  if (const auto* b = std::get_if<Box<Dim>>(&domain)) return (b->hi - b->lo).norm();
  return 0.0;
}

namespace detail {

template <int Dim>
bool analytic_boundary(const Domain<Dim>& domain, const Point<Dim>& x) {
  if (const auto* b = std::get_if<Ball<Dim>>(&domain)) {
    return std::abs((x - b->center).norm() - b->radius) <= 1e-12 * b->radius;
  }
  if (const auto* b = std::get_if<Box<Dim>>(&domain)) {
    const double tol = 1e-12 * (b->hi - b->lo).maxCoeff();
    for (int i = 0; i < Dim; ++i) {
      if (std::abs(x[i] - b->lo[i]) <= tol || std::abs(x[i] - b->hi[i]) <= tol) return true;
    }
    return false;
  }
  return false;
}

inline std::uint64_t next_mesh_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

}  // namespace detail

// Barycentric gradients and measure of one simplex.
template <int Dim>
struct ElementGeometry {
  double volume = 0.0;
  double signed_det = 0.0;
  Eigen::Matrix<double, Dim + 1, Dim> grad;  // row k: gradient of barycentric coordinate k
};

template <int Dim>
ElementGeometry<Dim> simplex_geometry(const std::array<Point<Dim>, Dim + 1>& v) {
  Matrix<Dim> jac;
  for (int k = 0; k < Dim; ++k) jac.col(k) = v[k + 1] - v[0];
  ElementGeometry<Dim> g;
  g.signed_det = jac.determinant();
  g.volume = std::abs(g.signed_det) / factorial(Dim);
  if (g.volume > 0.0) {
    const Matrix<Dim> inv = jac.inverse();
    for (int k = 0; k < Dim; ++k) g.grad.row(k + 1) = inv.row(k);
    g.grad.row(0) = -inv.colwise().sum();
  } else {
    g.grad.setZero();
  }
  return g;
}

template <int Dim>
class SimplicialMesh {
 public:
  static_assert(Dim == 2 || Dim == 3, "only triangles and tetrahedra are supported");
  static constexpr int dimension = Dim;
  static constexpr int nodes_per_element = Dim + 1;
  using Element = std::array<Index, Dim + 1>;

  // Boundary flags are derived from the analytic distance to the domain boundary.
  SimplicialMesh(std::vector<Point<Dim>> vertices, std::vector<Element> elements, Domain<Dim> domain)
      : vertices_(std::move(vertices)), elements_(std::move(elements)), domain_(std::move(domain)) {
    require(!std::holds_alternative<UnspecifiedDomain>(domain_), ErrorCode::InvalidArgument,
            "an unspecified domain needs explicit boundary flags");
    boundary_.resize(vertices_.size());
    for (std::size_t i = 0; i < vertices_.size(); ++i) boundary_[i] = detail::analytic_boundary(domain_, vertices_[i]);
    finalize();
  }

  SimplicialMesh(std::vector<Point<Dim>> vertices, std::vector<Element> elements, std::vector<bool> boundary,
                 Domain<Dim> domain = UnspecifiedDomain{})
      : vertices_(std::move(vertices)),
        elements_(std::move(elements)),
        boundary_(std::move(boundary)),
        domain_(std::move(domain)) {
    require(boundary_.size() == vertices_.size(), ErrorCode::InvalidArgument, "boundary flag count mismatch");
    finalize();
  }

  std::uint64_t id() const { return id_; }
  Index vertex_count() const { return static_cast<Index>(vertices_.size()); }
  Index element_count() const { return static_cast<Index>(elements_.size()); }
  const std::vector<Point<Dim>>& vertices() const { return vertices_; }
  const Point<Dim>& vertex(Index i) const { return vertices_[static_cast<std::size_t>(i)]; }
  const std::vector<Element>& elements() const { return elements_; }
  const Element& element(Index e) const { return elements_[static_cast<std::size_t>(e)]; }
  const std::vector<bool>& boundary_flags() const { return boundary_; }
  bool is_boundary(Index i) const { return boundary_[static_cast<std::size_t>(i)]; }
  const Domain<Dim>& domain() const { return domain_; }

  std::array<Point<Dim>, Dim + 1> element_vertices(Index e) const {
    std::array<Point<Dim>, Dim + 1> v;
    for (int k = 0; k <= Dim; ++k) v[k] = vertices_[static_cast<std::size_t>(elements_[e][k])];
    return v;
  }

  ElementGeometry<Dim> geometry(Index e) const { return simplex_geometry<Dim>(element_vertices(e)); }

  double total_volume() const {
    double v = 0.0;
    for (Index e = 0; e < element_count(); ++e) v += geometry(e).volume;
    return v;
  }

  Index interior_count() const {
    return static_cast<Index>(std::count(boundary_.begin(), boundary_.end(), false));
  }

 private:
  void finalize() {
    id_ = detail::next_mesh_id();
    const Index nv = vertex_count();
    for (const auto& p : vertices_) require(p.allFinite(), ErrorCode::NonFiniteValue, "non-finite vertex coordinate");
    double scale = 0.0;
    for (auto& el : elements_) {
      for (Index idx : el) require(idx >= 0 && idx < nv, ErrorCode::InvalidArgument, "element index out of range");
      auto g = simplex_geometry<Dim>(element_vertices_of(el));
      if (g.signed_det < 0.0) std::swap(el[0], el[1]);
      scale = std::max(scale, g.volume);
    }
    for (const auto& el : elements_) {
      const auto g = simplex_geometry<Dim>(element_vertices_of(el));
      require(g.signed_det > 1e-14 * scale * factorial(Dim), ErrorCode::SingularElement, "degenerate element");
    }
  }

  std::array<Point<Dim>, Dim + 1> element_vertices_of(const Element& el) const {
    std::array<Point<Dim>, Dim + 1> v;
    for (int k = 0; k <= Dim; ++k) v[k] = vertices_[static_cast<std::size_t>(el[k])];
    return v;
  }

  std::vector<Point<Dim>> vertices_;
  std::vector<Element> elements_;
  std::vector<bool> boundary_;
  Domain<Dim> domain_;
  std::uint64_t id_ = 0;
};

// Maps between the straight-sided reference polytope the ball mesh is built on and the ball.
// In 2D the reference is the regular octagon and the map is polar (rings of equal spacing);
// in 3D the reference is the octahedron |x|_1 <= 1 and the map rescales each ray.
namespace detail {

template <int Dim>
struct BallMap;

template <>
struct BallMap<2> {
  static Point<2> corner(int k) {
    const double t = k * M_PI / 4.0;
    return {std::cos(t), std::sin(t)};
  }
  static Point<2> to_ball(const Point<2>& x) {
    const double nx = x.norm();
    if (nx == 0.0) return Point<2>::Zero();
    double theta = std::atan2(x[1], x[0]);
    if (theta < 0.0) theta += 2.0 * M_PI;
    int k = std::min(7, static_cast<int>(std::floor(theta / (M_PI / 4.0))));
    Eigen::Matrix2d basis;
    basis.col(0) = corner(k);
    basis.col(1) = corner(k + 1);
    const Eigen::Vector2d ab = basis.partialPivLu().solve(x);
    const double gauge = ab.sum();
    const double s = ab[1] / gauge;
    const double phi = (k + s) * M_PI / 4.0;
    return gauge * Point<2>(std::cos(phi), std::sin(phi));
  }
  static Point<2> to_reference(const Point<2>& y) {
    const double r = y.norm();
    if (r == 0.0) return Point<2>::Zero();
    double theta = std::atan2(y[1], y[0]);
    if (theta < 0.0) theta += 2.0 * M_PI;
    const double u = theta / (M_PI / 4.0);
    int k = std::min(7, static_cast<int>(std::floor(u)));
    const double s = u - k;
    return r * ((1.0 - s) * corner(k) + s * corner(k + 1));
  }
};

template <>
struct BallMap<3> {
  static Point<3> to_ball(const Point<3>& x) {
    const double n2 = x.norm();
    if (n2 == 0.0) return Point<3>::Zero();
    return x * (x.lpNorm<1>() / n2);
  }
  static Point<3> to_reference(const Point<3>& y) {
    const double n1 = y.lpNorm<1>();
    if (n1 == 0.0) return Point<3>::Zero();
    return y * (y.norm() / n1);
  }
};

struct EdgeKey {
  Index a, b;
  bool operator<(const EdgeKey& o) const { return a < o.a || (a == o.a && b < o.b); }
};

inline EdgeKey edge_key(Index i, Index j) { return i < j ? EdgeKey{i, j} : EdgeKey{j, i}; }

template <int Dim>
using FacetKey = std::array<Index, Dim>;

template <int Dim>
FacetKey<Dim> facet_of(const std::array<Index, Dim + 1>& el, int opposite) {
  FacetKey<Dim> f;
  int n = 0;
  for (int k = 0; k <= Dim; ++k)
    if (k != opposite) f[n++] = el[k];
  std::sort(f.begin(), f.end());
  return f;
}

// Red refinement, midpoints supplied by the caller.
template <int Dim, typename MidpointFn>
std::vector<std::array<Index, Dim + 1>> red_refine(const std::vector<std::array<Index, Dim + 1>>& elements,
                                                   MidpointFn&& midpoint) {
  std::vector<std::array<Index, Dim + 1>> out;
  out.reserve(elements.size() * (Dim == 2 ? 4 : 8));
  for (const auto& el : elements) {
    if constexpr (Dim == 2) {
      const Index a = el[0], b = el[1], c = el[2];
      const Index ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
      out.push_back({a, ab, ca});
      out.push_back({ab, b, bc});
      out.push_back({ca, bc, c});
      out.push_back({ab, bc, ca});
    } else {
      const Index v0 = el[0], v1 = el[1], v2 = el[2], v3 = el[3];
      const Index m01 = midpoint(v0, v1), m02 = midpoint(v0, v2), m03 = midpoint(v0, v3);
      const Index m12 = midpoint(v1, v2), m13 = midpoint(v1, v3), m23 = midpoint(v2, v3);
      out.push_back({v0, m01, m02, m03});
      out.push_back({m01, v1, m12, m13});
      out.push_back({m02, m12, v2, m23});
      out.push_back({m03, m13, m23, v3});
      // Inner octahedron: split along the shortest of its three diagonals.
      const int diag = midpoint.shortest_diagonal({{m02, m13}}, {{m01, m23}}, {{m03, m12}});
      std::array<Index, 6> ring;
      if (diag == 0) ring = {m02, m13, m01, m03, m23, m12};
      else if (diag == 1) ring = {m01, m23, m02, m03, m13, m12};
      else ring = {m03, m12, m01, m02, m23, m13};
      const Index a = ring[0], a2 = ring[1], p = ring[2], q = ring[3], p2 = ring[4], q2 = ring[5];
      out.push_back({a, a2, p, q});
      out.push_back({a, a2, q, p2});
      out.push_back({a, a2, p2, q2});
      out.push_back({a, a2, q2, p});
    }
  }
  return out;
}

// Tracks edge midpoints so each edge is split once.
template <int Dim, typename PlaceFn>
struct MidpointTable {
  std::vector<Point<Dim>>& vertices;
  PlaceFn place;
  std::map<EdgeKey, Index> table;

  Index operator()(Index i, Index j) {
    const EdgeKey key = edge_key(i, j);
    auto it = table.find(key);
    if (it != table.end()) return it->second;
    vertices.push_back(place(key.a, key.b));
    const Index id = static_cast<Index>(vertices.size()) - 1;
    table.emplace(key, id);
    return id;
  }

  int shortest_diagonal(std::array<Index, 2> d0, std::array<Index, 2> d1, std::array<Index, 2> d2) const {
    const double l0 = (vertices[d0[0]] - vertices[d0[1]]).squaredNorm();
    const double l1 = (vertices[d1[0]] - vertices[d1[1]]).squaredNorm();
    const double l2 = (vertices[d2[0]] - vertices[d2[1]]).squaredNorm();
    if (l0 <= l1 && l0 <= l2) return 0;
    return l1 <= l2 ? 1 : 2;
  }
};

template <int Dim, typename PlaceFn>
MidpointTable<Dim, PlaceFn> make_midpoint_table(std::vector<Point<Dim>>& v, PlaceFn place) {
  return MidpointTable<Dim, PlaceFn>{v, std::move(place), {}};
}

template <int Dim>
std::map<FacetKey<Dim>, int> facet_use_counts(const std::vector<std::array<Index, Dim + 1>>& elements) {
  std::map<FacetKey<Dim>, int> counts;
  for (const auto& el : elements)
    for (int k = 0; k <= Dim; ++k) ++counts[facet_of<Dim>(el, k)];
  return counts;
}

}  // namespace detail

// One red refinement step: 4 children per triangle, 8 per tetrahedron.
// On balls, midpoints are placed through the reference map so new boundary vertices land on the sphere.
template <int Dim>
SimplicialMesh<Dim> refine_uniform(const SimplicialMesh<Dim>& mesh) {
  std::vector<Point<Dim>> verts = mesh.vertices();
  const Domain<Dim>& domain = mesh.domain();
  if (const auto* ball = std::get_if<Ball<Dim>>(&domain)) {
    const Ball<Dim> b = *ball;
    auto ref = [&](Index i) { return detail::BallMap<Dim>::to_reference((verts[i] - b.center) / b.radius); };
    auto table = detail::make_midpoint_table<Dim>(verts, [&, b](Index i, Index j) -> Point<Dim> {
      const Point<Dim> m = 0.5 * (ref(i) + ref(j));
      return b.center + b.radius * detail::BallMap<Dim>::to_ball(m);
    });
    auto elements = detail::red_refine<Dim>(mesh.elements(), table);
    return SimplicialMesh<Dim>(std::move(verts), std::move(elements), domain);
  }
  if (std::holds_alternative<Box<Dim>>(domain)) {
    auto table = detail::make_midpoint_table<Dim>(
        verts, [&](Index i, Index j) -> Point<Dim> { return 0.5 * (verts[i] + verts[j]); });
    auto elements = detail::red_refine<Dim>(mesh.elements(), table);
    return SimplicialMesh<Dim>(std::move(verts), std::move(elements), domain);
  }
  // No analytic boundary: a midpoint is on the boundary when its edge lies on a boundary facet.
  const auto counts = detail::facet_use_counts<Dim>(mesh.elements());
  std::map<detail::EdgeKey, bool> boundary_edge;
  for (const auto& [facet, n] : counts) {
    if (n != 1) continue;
    for (int i = 0; i < Dim; ++i)
      for (int j = i + 1; j < Dim; ++j) boundary_edge[detail::edge_key(facet[i], facet[j])] = true;
  }
  auto table = detail::make_midpoint_table<Dim>(
      verts, [&](Index i, Index j) -> Point<Dim> { return 0.5 * (verts[i] + verts[j]); });
  auto elements = detail::red_refine<Dim>(mesh.elements(), table);
  std::vector<bool> flags = mesh.boundary_flags();
  flags.resize(verts.size(), false);
  for (const auto& [key, id] : table.table) flags[id] = boundary_edge.count(key) > 0;
  return SimplicialMesh<Dim>(std::move(verts), std::move(elements), std::move(flags), domain);
}

template <int Dim>
SimplicialMesh<Dim> build_ball_mesh(const Point<Dim>& center, double radius, int levels) {
  require(std::isfinite(radius) && radius > 0.0, ErrorCode::InvalidRadius, "ball radius must be positive");
  require(levels >= 0, ErrorCode::InvalidArgument, "refinement level must be non-negative");
  require(levels <= kMaxRefinementLevel, ErrorCode::RefinementTooDeep,
          "refinement level " + std::to_string(levels) + " exceeds " + std::to_string(kMaxRefinementLevel));
  std::vector<Point<Dim>> verts;
  std::vector<std::array<Index, Dim + 1>> elements;
  verts.push_back(center);
  if constexpr (Dim == 2) {
    for (int k = 0; k < 8; ++k) verts.push_back(center + radius * detail::BallMap<2>::corner(k));
    for (Index k = 0; k < 8; ++k) elements.push_back({0, 1 + k, 1 + (k + 1) % 8});
  } else {
    for (int axis = 0; axis < 3; ++axis)
      for (double sign : {1.0, -1.0}) {
        Point<3> p = Point<3>::Zero();
        p[axis] = sign;
        verts.push_back(center + radius * p);
      }
    for (Index sx : {1, 2})
      for (Index sy : {3, 4})
        for (Index sz : {5, 6}) elements.push_back({0, sx, sy, sz});
  }
  SimplicialMesh<Dim> mesh(std::move(verts), std::move(elements), Ball<Dim>{center, radius});
  for (int l = 0; l < levels; ++l) mesh = refine_uniform(mesh);
  return mesh;
}

// Kuhn subdivision: each cell is split along its main diagonal into d! simplices.
template <int Dim>
SimplicialMesh<Dim> build_box_mesh(const Point<Dim>& lo, const Point<Dim>& hi, const std::array<int, Dim>& cells) {
  for (int i = 0; i < Dim; ++i) {
    require(std::isfinite(lo[i]) && std::isfinite(hi[i]) && lo[i] < hi[i], ErrorCode::InvalidBox,
            "box corners must satisfy lo < hi componentwise");
    require(cells[i] >= 1, ErrorCode::InvalidBox, "cell counts must be positive");
  }
  std::array<Index, Dim> stride;
  Index nv = 1;
  for (int i = 0; i < Dim; ++i) {
    stride[i] = nv;
    nv *= cells[i] + 1;
  }
  std::vector<Point<Dim>> verts(static_cast<std::size_t>(nv));
  for (Index id = 0; id < nv; ++id) {
    Index rem = id;
    Point<Dim> p;
    for (int i = 0; i < Dim; ++i) {
      const Index c = rem % (cells[i] + 1);
      rem /= cells[i] + 1;
      p[i] = c == cells[i] ? hi[i] : lo[i] + (hi[i] - lo[i]) * static_cast<double>(c) / cells[i];
    }
    verts[static_cast<std::size_t>(id)] = p;
  }
  std::array<int, Dim> perm;
  std::vector<std::array<int, Dim>> perms;
  std::iota(perm.begin(), perm.end(), 0);
  do perms.push_back(perm);
  while (std::next_permutation(perm.begin(), perm.end()));

  Index ncells = 1;
  for (int i = 0; i < Dim; ++i) ncells *= cells[i];
  std::vector<std::array<Index, Dim + 1>> elements;
  elements.reserve(static_cast<std::size_t>(ncells) * perms.size());
  for (Index cid = 0; cid < ncells; ++cid) {
    Index rem = cid, base = 0;
    for (int i = 0; i < Dim; ++i) {
      base += (rem % cells[i]) * stride[i];
      rem /= cells[i];
    }
    for (const auto& p : perms) {
      std::array<Index, Dim + 1> el;
      el[0] = base;
      for (int k = 0; k < Dim; ++k) el[k + 1] = el[k] + stride[p[k]];
      elements.push_back(el);
    }
  }
  return SimplicialMesh<Dim>(std::move(verts), std::move(elements), Box<Dim>{lo, hi});
}

template <int Dim>
SimplicialMesh<Dim> build_box_mesh(const Point<Dim>& lo, const Point<Dim>& hi, int cells_per_axis) {
  std::array<int, Dim> cells;
  cells.fill(cells_per_axis);
  return build_box_mesh<Dim>(lo, hi, cells);
}

struct MeshQuality {
  double min_volume = 0.0;
  double max_volume = 0.0;
  double shape_regularity = 0.0;  // max over elements of diameter / inradius
  bool acute = false;             // all off-diagonal P1 Laplacian entries <= 0
  double max_diameter = 0.0;
};

template <int Dim>
MeshQuality mesh_quality(const SimplicialMesh<Dim>& mesh) {
  MeshQuality q;
  q.min_volume = std::numeric_limits<double>::infinity();
  q.acute = true;
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const auto v = mesh.element_vertices(e);
    const auto g = simplex_geometry<Dim>(v);
    q.min_volume = std::min(q.min_volume, g.volume);
    q.max_volume = std::max(q.max_volume, g.volume);
    double diam = 0.0;
    for (int i = 0; i <= Dim; ++i)
      for (int j = i + 1; j <= Dim; ++j) diam = std::max(diam, (v[i] - v[j]).norm());
    // facet measure_k = d |T| |grad lambda_k|, inradius = d |T| / sum of facet measures
    double facets = 0.0;
    for (int k = 0; k <= Dim; ++k) facets += Dim * g.volume * g.grad.row(k).norm();
    const double inradius = Dim * g.volume / facets;
    q.shape_regularity = std::max(q.shape_regularity, diam / inradius);
    q.max_diameter = std::max(q.max_diameter, diam);
    const Eigen::Matrix<double, Dim + 1, Dim + 1> k = g.volume * g.grad * g.grad.transpose();
    const double tol = 1e-12 * k.diagonal().maxCoeff();
    for (int i = 0; i <= Dim; ++i)
      for (int j = 0; j <= Dim; ++j)
        if (i != j && k(i, j) > tol) q.acute = false;
  }
  if (mesh.element_count() == 0) q.min_volume = 0.0;
  return q;
}

// Facet-sharing check: interior facets are shared by exactly two elements, and a facet owned by a single
// element must lie on the boundary. Hanging nodes show up as unmatched interior facets.
template <int Dim>
bool is_conforming(const SimplicialMesh<Dim>& mesh) {
  const auto counts = detail::facet_use_counts<Dim>(mesh.elements());
  for (const auto& [facet, n] : counts) {
    if (n > 2) return false;
    if (n == 1)
      for (Index v : facet)
        if (!mesh.is_boundary(v)) return false;
  }
  return true;
}

template <int Dim>
struct BoundaryFacet {
  Index element = 0;
  int opposite = 0;  // local index of the vertex not on the facet
  std::array<Index, Dim> vertices;
  Point<Dim> normal;  // outward unit normal
  double measure = 0.0;
};

template <int Dim>
std::vector<BoundaryFacet<Dim>> boundary_facets(const SimplicialMesh<Dim>& mesh) {
  const auto counts = detail::facet_use_counts<Dim>(mesh.elements());
  std::vector<BoundaryFacet<Dim>> out;
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const auto& el = mesh.element(e);
    for (int k = 0; k <= Dim; ++k) {
      if (counts.at(detail::facet_of<Dim>(el, k)) != 1) continue;
      const auto g = mesh.geometry(e);
      BoundaryFacet<Dim> f;
      f.element = e;
      f.opposite = k;
      int n = 0;
      for (int j = 0; j <= Dim; ++j)
        if (j != k) f.vertices[n++] = el[j];
      const Point<Dim> grad = g.grad.row(k).transpose();
      f.normal = -grad / grad.norm();
      f.measure = Dim * g.volume * grad.norm();
      out.push_back(f);
    }
  }
  return out;
}

}  // namespace fplab
