#include "fplab/calculus.hpp"
#include "fplab/coefficients.hpp"
#include "fplab/sampled_field.hpp"
#include "fplab/vmo.hpp"
#include "fplab/weak_divergence.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace fplab;

namespace {

template <int Dim>
std::vector<Point<Dim>> sample_points(std::size_t n, std::uint64_t seed, double radius = 0.9) {
  std::mt19937_64 rng(seed);
  std::vector<Point<Dim>> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(detail::uniform_in_ball<Dim>(rng, Point<Dim>::Zero(), radius));
  return out;
}

}  // namespace

TEST(Presets, UnknownNameIsRejected) {
  try {
    preset<2>("no_such_preset");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownPreset);
  }
}

TEST(Presets, DeclaredBoundsPassTheAudit) {
  for (const auto& name : preset_names()) {
    const auto a2 = ellipticity_audit(preset<2>(name), Ball<2>{Point<2>::Zero(), 1.0}, 2000, 7);
    EXPECT_TRUE(a2.passed) << name << " min " << a2.min_ratio << " max " << a2.max_ratio;
    const auto a3 = ellipticity_audit(preset<3>(name), Ball<3>{Point<3>::Zero(), 1.0}, 2000, 7);
    EXPECT_TRUE(a3.passed) << name;
  }
}

TEST(Presets, AuditCatchesWrongBounds) {
  auto cs = preset<2>("example_i");
  cs.lambda = 3.5;  // phi ranges over roughly [2.5, 4] on most of the unit disk
  EXPECT_FALSE(ellipticity_audit(cs, Ball<2>{Point<2>::Zero(), 1.0}, 500, 3).passed);
  cs.lambda = 1.0;
  EXPECT_TRUE(ellipticity_audit(cs, Ball<2>{Point<2>::Zero(), 1.0}, 500, 3).passed);
  cs.M = 2.0;
  EXPECT_FALSE(ellipticity_audit(cs, Ball<2>{Point<2>::Zero(), 1.0}, 500, 3).passed);
}

TEST(Presets, ExampleIPhiVanishesOnlyAtOrigin) {
  EXPECT_EQ(example_i_phi<2>(Point<2>::Zero()), 0.0);
  for (const auto& x : sample_points<3>(500, 11, 2.0)) EXPECT_GE(example_i_phi<3>(x), 1.0);
  // log log(1 + 1/r) at r = e^{-1}... hand value at r = 1: 2 + 1 + cos(log(log 2))
  EXPECT_NEAR(example_i_phi<2>(Point<2>(1, 0)), 3.0 + std::cos(std::log(std::log(2.0))), 1e-15);
  const Matrix<2> a0 = preset<2>("example_i").A(Point<2>::Zero());
  EXPECT_TRUE(a0.allFinite());
  EXPECT_GE(a0(0, 0), 1.0);
}

TEST(Presets, ExampleIHasNoDivergence) {
  const auto cs = preset<2>("example_i");
  const auto u = polynomial_corpus<2>()[1];
  try {
    nondivergence_apply(cs, u, Point<2>(0.3, 0.2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingDerivative);
  }
}

TEST(Presets, ExampleIIActsThroughWeightedSecondDerivatives) {
  const auto cs = preset<3>("example_ii");
  // u = x1^2 + 2 x2^2 + 3 x3^2
  AnalyticScalar<3> u{[](const Point<3>& x) { return x[0] * x[0] + 2 * x[1] * x[1] + 3 * x[2] * x[2]; },
                      [](const Point<3>& x) { return Point<3>(2 * x[0], 4 * x[1], 6 * x[2]); },
                      [](const Point<3>&) { return Matrix<3>(Eigen::Vector3d(2, 4, 6).asDiagonal()); }};
  for (const auto& x : sample_points<3>(50, 5)) {
    const double expected = 2 * std::exp(example_ii_eta(x[1])) + 4 * std::exp(example_ii_eta(x[2])) +
                            6 * std::exp(example_ii_eta(x[0]));
    EXPECT_NEAR(nondivergence_apply(cs, u, x), expected, 1e-13);
  }
}

TEST(Presets, RotatorIsTangentAndSolenoidal) {
  const auto cs = preset<3>("rotator");
  for (const auto& x : sample_points<3>(50, 9)) EXPECT_NEAR(cs.H(x).dot(x), 0.0, 1e-15);
}

// A = diag(1 + x1^2, 2), H = (x2, 0), u = x1^2 x2:
// div(A grad u) + <H, grad u> = 2 x2 + 6 x1^2 x2 + 2 x1 x2^2
TEST(Calculus, NondivergenceMatchesDivergenceFormByHand) {
  CoefficientSet<2> cs = preset<2>("identity");
  cs.A = [](const Point<2>& x) { return Matrix<2>(Eigen::Vector2d(1 + x[0] * x[0], 2).asDiagonal()); };
  cs.div_A = [](const Point<2>& x) { return Point<2>(2 * x[0], 0); };
  cs.H = [](const Point<2>& x) { return Point<2>(x[1], 0); };
  AnalyticScalar<2> u{[](const Point<2>& x) { return x[0] * x[0] * x[1]; },
                      [](const Point<2>& x) { return Point<2>(2 * x[0] * x[1], x[0] * x[0]); },
                      [](const Point<2>& x) {
                        Matrix<2> h;
                        h << 2 * x[1], 2 * x[0], 2 * x[0], 0;
                        return h;
                      }};
  for (const auto& x : sample_points<2>(40, 3)) {
    const double expected = 2 * x[1] + 6 * x[0] * x[0] * x[1] + 2 * x[0] * x[1] * x[1];
    EXPECT_NEAR(nondivergence_apply(cs, u, x), expected, 1e-14);
  }
}

TEST(Calculus, ProductRuleForDivergence) {
  const auto pts2 = sample_points<2>(100, 21);
  for (const auto& c : product_rule_corpus<2>()) EXPECT_LT(product_rule_div_check(c.u, c.F, c.div_uF, pts2), 1e-12) << c.name;
  const auto pts3 = sample_points<3>(100, 22);
  for (const auto& c : product_rule_corpus<3>()) EXPECT_LT(product_rule_div_check(c.u, c.F, c.div_uF, pts3), 1e-12) << c.name;
}

TEST(Calculus, ProductRuleForGenerator) {
  const auto pts = sample_points<3>(60, 4);
  const auto corpus = polynomial_corpus<3>();
  for (const std::string name : {"identity", "gaussian_gradient", "example_ii", "rotator"}) {
    const auto cs = preset<3>(name);
    for (const auto& chi : corpus)
      for (const auto& u : corpus) EXPECT_LT(product_rule_residual(cs, chi, u, pts), 1e-10) << name;
  }
}

TEST(Calculus, LeibnizHessianMatchesFiniteDifferences) {
  const auto corpus = polynomial_corpus<2>();
  const auto w = product(corpus[2], corpus[3]);
  const Point<2> x(0.3, -0.4);
  const double h = 1e-4;
  for (int i = 0; i < 2; ++i) {
    Point<2> e = Point<2>::Zero();
    e[i] = h;
    const Point<2> fd = (w.gradient(x + e) - w.gradient(x - e)) / (2 * h);
    EXPECT_LT((fd - w.hessian(x).col(i)).norm(), 1e-6);
    EXPECT_NEAR((w.value(x + e) - w.value(x - e)) / (2 * h), w.gradient(x)[i], 1e-7);
  }
}

TEST(WeakDivergence, LinearCoefficientsAreRecoveredExactly) {
  const auto mesh = build_box_mesh<2>(Point<2>(-1, -1), Point<2>(1, 1), 6);
  MatrixField<2> swap = [](const Point<2>& x) { return Matrix<2>(Eigen::Vector2d(x[1], x[0]).asDiagonal()); };
  const auto e0 = weak_divergence_matrix<2>(mesh, swap);
  EXPECT_LT(e0.components[0].values.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(e0.components[1].values.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(e0.projection_residual, 1e-12);
  MatrixField<2> scaled = [](const Point<2>& x) { return Matrix<2>(x[0] * Matrix<2>::Identity()); };
  const auto e1 = weak_divergence_matrix<2>(mesh, scaled);
  EXPECT_LT((e1.components[0].values.array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_LT(e1.components[1].values.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WeakDivergence, ColumnConvention) {
  // a_12 = x1 only: e_2 = d_1 a_12 = 1, e_1 = d_2 a_21 = 0
  const auto mesh = build_ball_mesh<2>(Point<2>::Zero(), 1.0, 3);
  MatrixField<2> a = [](const Point<2>& x) {
    Matrix<2> m = Matrix<2>::Identity();
    m(0, 1) = x[0];
    return m;
  };
  const auto e = weak_divergence_matrix<2>(mesh, a);
  EXPECT_LT(e.components[0].values.cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_LT((e.components[1].values.array() - 1.0).abs().maxCoeff(), 1e-11);
}

TEST(WeakDivergence, SmoothCoefficientsConverge) {
  MatrixField<3> a = [](const Point<3>& x) {
    Matrix<3> m = (1 + std::sin(x[0]) * x[1]) * Matrix<3>::Identity();
    m(0, 2) = std::exp(x[2]);
    return m;
  };
  // e_j = sum_i d_i a_ij: e_1 = d_1 a_11, e_2 = d_2 a_22, e_3 = d_1 a_13 + d_3 a_33 = 0
  VectorField<3> exact = [](const Point<3>& x) { return Point<3>(std::cos(x[0]) * x[1], std::sin(x[0]), 0.0); };
  std::vector<double> err;
  for (int l = 1; l <= 3; ++l) {
    const auto mesh = build_ball_mesh<3>(Point<3>::Zero(), 1.0, l);
    const auto e = weak_divergence_matrix<3>(mesh, a, exact);
    EXPECT_LT(e.projection_residual, 1e-11);
    err.push_back(*e.analytic_error);
  }
  for (std::size_t i = 1; i < err.size(); ++i) EXPECT_GT(std::log2(err[i - 1] / err[i]), 0.8);
}

TEST(SampledField, ReproducesLinearDataAndRoundTrips) {
  const auto mesh = build_box_mesh<2>(Point<2>(-1, -1), Point<2>(1, 1), 5);
  Eigen::MatrixXd values(mesh.vertex_count(), 4);
  for (Index i = 0; i < mesh.vertex_count(); ++i) {
    const auto& x = mesh.vertex(i);
    values.row(i) << 2 + x[0], 0.1 * x[1], 0.1 * x[1], 3 - x[1];
  }
  std::stringstream ss;
  write_sampled_field(ss, mesh, values);
  const std::string path = ::testing::TempDir() + "/a_data.txt";
  {
    std::ofstream os(path);
    os << ss.str();
  }
  auto field = std::make_shared<const SampledField<2>>(read_sampled_field<2>(path, 4));
  const auto A = as_matrix_field<2>(field);
  for (const auto& x : sample_points<2>(100, 2, 0.99)) {
    const Matrix<2> a = A(x);
    EXPECT_NEAR(a(0, 0), 2 + x[0], 1e-13);
    EXPECT_NEAR(a(1, 1), 3 - x[1], 1e-13);
    EXPECT_NEAR(a(0, 1), 0.1 * x[1], 1e-13);
  }
  // outside the data mesh the nearest element is used with clamped weights
  EXPECT_NEAR(A(Point<2>(1.5, 0))(0, 0), 3.0, 1e-12);
  EXPECT_THROW(read_sampled_field<2>(path, 2), Error);
}
