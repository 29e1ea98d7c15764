#pragma once

#include "fplab/mesh.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace fplab {

// Shortest decimal form that round-trips a double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Plain-text mesh format:
//   dim nv ne
//   nv lines of coordinates
//   ne lines of vertex indices
//   one line of nv boundary flags (0/1)
//   optional: "ball c_1 .. c_d radius" or "box lo_1 .. lo_d hi_1 .. hi_d"
template <int Dim>
void write_mesh(std::ostream& os, const SimplicialMesh<Dim>& mesh) {
  os << Dim << ' ' << mesh.vertex_count() << ' ' << mesh.element_count() << '\n';
  for (const auto& p : mesh.vertices()) {
    for (int i = 0; i < Dim; ++i) os << (i ? " " : "") << format_double(p[i]);
    os << '\n';
  }
  for (const auto& el : mesh.elements()) {
    for (int k = 0; k <= Dim; ++k) os << (k ? " " : "") << el[k];
    os << '\n';
  }
  for (Index i = 0; i < mesh.vertex_count(); ++i) os << (i ? " " : "") << (mesh.is_boundary(i) ? 1 : 0);
  os << '\n';
  if (const auto* b = std::get_if<Ball<Dim>>(&mesh.domain())) {
    os << "ball";
    for (int i = 0; i < Dim; ++i) os << ' ' << format_double(b->center[i]);
    os << ' ' << format_double(b->radius) << '\n';
  } else if (const auto* b = std::get_if<Box<Dim>>(&mesh.domain())) {
    os << "box";
    for (int i = 0; i < Dim; ++i) os << ' ' << format_double(b->lo[i]);
    for (int i = 0; i < Dim; ++i) os << ' ' << format_double(b->hi[i]);
    os << '\n';
  }
}

template <int Dim>
SimplicialMesh<Dim> read_mesh(std::istream& is) {
  int dim = 0;
  Index nv = 0, ne = 0;
  require(static_cast<bool>(is >> dim >> nv >> ne), ErrorCode::MeshFormat, "missing header line");
  require(dim == Dim, ErrorCode::MeshFormat, "mesh dimension " + std::to_string(dim) + " does not match");
  require(nv >= 0 && ne >= 0, ErrorCode::MeshFormat, "negative counts in header");
  std::vector<Point<Dim>> verts(static_cast<std::size_t>(nv));
  for (auto& p : verts)
    for (int i = 0; i < Dim; ++i) require(static_cast<bool>(is >> p[i]), ErrorCode::MeshFormat, "truncated vertex block");
  std::vector<std::array<Index, Dim + 1>> elements(static_cast<std::size_t>(ne));
  for (auto& el : elements)
    for (int k = 0; k <= Dim; ++k) require(static_cast<bool>(is >> el[k]), ErrorCode::MeshFormat, "truncated element block");
  std::vector<bool> flags(static_cast<std::size_t>(nv));
  for (std::size_t i = 0; i < flags.size(); ++i) {
    int f = 0;
    require(static_cast<bool>(is >> f) && (f == 0 || f == 1), ErrorCode::MeshFormat, "bad boundary flag line");
    flags[i] = f == 1;
  }
  Domain<Dim> domain = UnspecifiedDomain{};
  std::string tag;
  const auto pos = is.tellg();
  if (is >> tag && (tag == "ball" || tag == "box")) {
    if (tag == "ball") {
      Ball<Dim> b;
      for (int i = 0; i < Dim; ++i) is >> b.center[i];
      is >> b.radius;
      domain = b;
    } else if (tag == "box") {
      Box<Dim> b;
      for (int i = 0; i < Dim; ++i) is >> b.lo[i];
      for (int i = 0; i < Dim; ++i) is >> b.hi[i];
      domain = b;
    }
    require(!is.fail(), ErrorCode::MeshFormat, "truncated domain line");
  } else {
    // anything else belongs to the caller
    is.clear();
    is.seekg(pos);
  }
  return SimplicialMesh<Dim>(std::move(verts), std::move(elements), std::move(flags), std::move(domain));
}

template <int Dim>
void write_mesh_file(const std::string& path, const SimplicialMesh<Dim>& mesh) {
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorCode::InvalidArgument, "cannot open " + path);
  write_mesh(os, mesh);
}

template <int Dim>
SimplicialMesh<Dim> read_mesh_file(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::MeshFormat, "cannot open " + path);
  return read_mesh<Dim>(is);
}

// Reads only the dimension from a mesh header.
inline int peek_mesh_dimension(const std::string& path) {
  std::ifstream is(path);
  int dim = 0;
  require(static_cast<bool>(is >> dim), ErrorCode::MeshFormat, "cannot read header of " + path);
  return dim;
}

}  // namespace fplab
