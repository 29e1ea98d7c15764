#include "fplab/mesh.hpp"
#include "fplab/mesh_io.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace fplab;

namespace {

template <int Dim>
void expect_positive_orientation(const SimplicialMesh<Dim>& mesh) {
  for (Index e = 0; e < mesh.element_count(); ++e) EXPECT_GT(mesh.geometry(e).signed_det, 0.0);
}

template <int Dim>
void expect_inside_ball(const SimplicialMesh<Dim>& mesh, const Point<Dim>& c, double r) {
  for (Index i = 0; i < mesh.vertex_count(); ++i) {
    const double d = (mesh.vertex(i) - c).norm();
    EXPECT_LE(d, r * (1 + 1e-12));
    if (mesh.is_boundary(i)) {
      EXPECT_NEAR(d, r, 1e-12 * r);
    }
  }
}

}  // namespace

TEST(BoxMesh, UnitSquareFourCellsHas32Triangles) {
  const auto mesh = build_box_mesh<2>(Point<2>(0, 0), Point<2>(1, 1), 4);
  EXPECT_EQ(mesh.element_count(), 32);
  EXPECT_EQ(mesh.vertex_count(), 25);
  EXPECT_EQ(mesh.interior_count(), 9);
  EXPECT_NEAR(mesh.total_volume(), 1.0, 1e-14);
  expect_positive_orientation(mesh);
}

TEST(BoxMesh, UnitCubeCellSplitsIntoSixTetrahedra) {
  const auto mesh = build_box_mesh<3>(Point<3>(0, 0, 0), Point<3>(1, 1, 1), 1);
  EXPECT_EQ(mesh.element_count(), 6);
  EXPECT_NEAR(mesh.total_volume(), 1.0, 1e-14);
  for (Index e = 0; e < 6; ++e) EXPECT_NEAR(mesh.geometry(e).volume, 1.0 / 6.0, 1e-15);
  const auto big = build_box_mesh<3>(Point<3>(-1, 0, 0), Point<3>(1, 2, 3), 3);
  EXPECT_EQ(big.element_count(), 6 * 27);
  EXPECT_NEAR(big.total_volume(), 12.0, 1e-12);
  EXPECT_TRUE(is_conforming(big));
}

TEST(BoxMesh, KuhnMeshesAreAcute) {
  EXPECT_TRUE(mesh_quality(build_box_mesh<2>(Point<2>(0, 0), Point<2>(1, 1), 5)).acute);
  EXPECT_TRUE(mesh_quality(build_box_mesh<3>(Point<3>(0, 0, 0), Point<3>(1, 1, 1), 3)).acute);
}

TEST(BoxMesh, RejectsInvertedCorners) {
  try {
    build_box_mesh<2>(Point<2>(0, 1), Point<2>(1, 0), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidBox);
  }
}

TEST(MeshQuality, EquilateralTriangleIsAcute) {
  std::vector<Point<2>> v = {{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}, {1.5, std::sqrt(3.0) / 2}};
  std::vector<std::array<Index, 3>> el = {{0, 1, 2}, {1, 3, 2}};
  SimplicialMesh<2> mesh(v, el, std::vector<bool>(4, true));
  EXPECT_TRUE(mesh_quality(mesh).acute);
  std::vector<Point<2>> w = {{0, 0}, {1, 0}, {2, 0.2}};
  SimplicialMesh<2> obtuse(w, {{0, 1, 2}}, std::vector<bool>(3, true));
  EXPECT_FALSE(mesh_quality(obtuse).acute);
}

TEST(Mesh, OrientationIsNormalized) {
  std::vector<Point<2>> v = {{0, 0}, {0, 1}, {1, 0}};
  SimplicialMesh<2> mesh(v, {{0, 1, 2}}, std::vector<bool>(3, true));
  EXPECT_GT(mesh.geometry(0).signed_det, 0.0);
  EXPECT_NEAR(mesh.geometry(0).volume, 0.5, 1e-15);
}

TEST(Mesh, DegenerateElementIsRejected) {
  std::vector<Point<2>> v = {{0, 0}, {1, 0}, {2, 0}};
  try {
    SimplicialMesh<2> mesh(v, {{0, 1, 2}}, std::vector<bool>(3, true));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularElement);
  }
}

TEST(BallMesh, DiskLevelZeroArea) {
  const auto mesh = build_ball_mesh<2>(Point<2>(0, 0), 1.0, 0);
  EXPECT_GE(mesh.total_volume(), 2.8);
  EXPECT_LE(mesh.total_volume(), M_PI);
  EXPECT_EQ(mesh.interior_count(), 1);
}

TEST(BallMesh, ChildCountsPerLevel) {
  for (int l = 0; l < 4; ++l) {
    const auto a = build_ball_mesh<2>(Point<2>(0, 0), 1.0, l);
    const auto b = build_ball_mesh<2>(Point<2>(0, 0), 1.0, l + 1);
    EXPECT_EQ(b.element_count(), 4 * a.element_count());
  }
  for (int l = 0; l < 3; ++l) {
    const auto a = build_ball_mesh<3>(Point<3>(0, 0, 0), 1.0, l);
    const auto b = build_ball_mesh<3>(Point<3>(0, 0, 0), 1.0, l + 1);
    EXPECT_EQ(b.element_count(), 8 * a.element_count());
  }
}

TEST(BallMesh, VerticesInsideAndBoundaryOnSphere) {
  const Point<2> c2(0.3, -1.2);
  for (int l = 0; l <= 4; ++l) expect_inside_ball(build_ball_mesh<2>(c2, 2.5, l), c2, 2.5);
  const Point<3> c3(1.0, 0.0, -0.5);
  for (int l = 0; l <= 3; ++l) expect_inside_ball(build_ball_mesh<3>(c3, 0.7, l), c3, 0.7);
}

TEST(BallMesh, RefinementIsConformingAndOriented) {
  for (int l = 0; l <= 4; ++l) {
    const auto mesh = build_ball_mesh<2>(Point<2>(0, 0), 1.0, l);
    EXPECT_TRUE(is_conforming(mesh));
    expect_positive_orientation(mesh);
  }
  for (int l = 0; l <= 3; ++l) {
    const auto mesh = build_ball_mesh<3>(Point<3>(0, 0, 0), 1.0, l);
    EXPECT_TRUE(is_conforming(mesh));
    expect_positive_orientation(mesh);
  }
}

// Volume error of an inscribed mesh decays like h^2 = 4^-k.
TEST(BallMesh, VolumeConvergesQuadratically) {
  double prev = 0.0, prev_err = 0.0;
  for (int l = 0; l <= 5; ++l) {
    const double vol = build_ball_mesh<2>(Point<2>(0, 0), 1.0, l).total_volume();
    const double err = M_PI - vol;
    EXPECT_GT(err, 0.0);
    if (l > 0) {
      EXPECT_GE(vol, prev);
      EXPECT_GT(prev_err / err, 3.5);
    }
    EXPECT_LE(err, 0.4 * std::pow(4.0, -l));
    prev = vol;
    prev_err = err;
  }
  prev_err = 0.0;
  for (int l = 0; l <= 4; ++l) {
    const double vol = build_ball_mesh<3>(Point<3>(0, 0, 0), 1.0, l).total_volume();
    const double err = 4.0 * M_PI / 3.0 - vol;
    EXPECT_GT(err, 0.0);
    if (l > 0) {
      EXPECT_GE(vol, prev);
    }
    if (l > 1) {
      EXPECT_GT(prev_err / err, 3.0);
    }
    EXPECT_LE(err, 6.5 * std::pow(4.0, -l));
    prev = vol;
    prev_err = err;
  }
}

TEST(BallMesh, ShapeRegularityStaysBounded) {
  double first = 0.0;
  for (int l = 1; l <= 4; ++l) {
    const double s = mesh_quality(build_ball_mesh<3>(Point<3>(0, 0, 0), 1.0, l)).shape_regularity;
    if (l == 1) first = s;
    EXPECT_LT(s, 3.0 * first);
  }
}

TEST(BallMesh, ErrorsOnBadInput) {
  try {
    build_ball_mesh<2>(Point<2>(0, 0), -1.0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidRadius);
  }
  try {
    build_ball_mesh<3>(Point<3>(0, 0, 0), 1.0, 9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RefinementTooDeep);
  }
}

TEST(MeshIo, RoundTripIsBitExact) {
  const auto mesh = build_ball_mesh<3>(Point<3>(0.1, 0.2, 0.3), 1.7, 2);
  std::stringstream ss;
  write_mesh(ss, mesh);
  const std::string first = ss.str();
  const auto back = read_mesh<3>(ss);
  ASSERT_EQ(back.vertex_count(), mesh.vertex_count());
  ASSERT_EQ(back.element_count(), mesh.element_count());
  for (Index i = 0; i < mesh.vertex_count(); ++i) {
    for (int k = 0; k < 3; ++k) EXPECT_EQ(back.vertex(i)[k], mesh.vertex(i)[k]);
    EXPECT_EQ(back.is_boundary(i), mesh.is_boundary(i));
  }
  for (Index e = 0; e < mesh.element_count(); ++e) EXPECT_EQ(back.element(e), mesh.element(e));
  std::stringstream again;
  write_mesh(again, back);
  EXPECT_EQ(again.str(), first);
  ASSERT_TRUE(std::holds_alternative<Ball<3>>(back.domain()));
}

TEST(MeshIo, DecimalCoordinatesSurvive) {
  std::stringstream ss("2 3 1\n0.1 0.2\n1.3 0.2\n0.1 2.7\n0 1 2\n1 1 1\n");
  const auto mesh = read_mesh<2>(ss);
  EXPECT_EQ(mesh.vertex(0)[0], 0.1);
  EXPECT_EQ(mesh.vertex(2)[1], 2.7);
  std::stringstream bad("2 3 1\n0 0\n1 0\n");
  EXPECT_THROW(read_mesh<2>(bad), Error);
}

TEST(Refinement, UnspecifiedDomainKeepsBoundaryEdges) {
  std::vector<Point<2>> v = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  SimplicialMesh<2> mesh(v, {{0, 1, 2}, {1, 3, 2}}, std::vector<bool>(4, true));
  const auto fine = refine_uniform(mesh);
  EXPECT_EQ(fine.element_count(), 8);
  EXPECT_EQ(fine.interior_count(), 1);  // the midpoint of the shared diagonal
  EXPECT_TRUE(is_conforming(fine));
}
