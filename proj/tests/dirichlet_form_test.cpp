#include "fplab/dirichlet_form.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

using namespace fplab;

namespace {

template <int Dim>
struct Pipeline {
  SimplicialMesh<Dim> mesh;
  CoefficientSet<Dim> cs;
  DensityField<Dim> density;
  DriftDecomposition<Dim> dec;
  FormMatrices<Dim> form;

  Pipeline(SimplicialMesh<Dim> m, const std::string& name, DriftMode mode = DriftMode::skew)
      : mesh(std::move(m)), cs(preset<Dim>(name)), density(solve_invariant_density(mesh, cs)),
        dec(decompose_drift(cs, density, mesh)), form(assemble_form(mesh, cs, density, dec, mode)) {}
};

template <int Dim>
Pipeline<Dim> ball_setup(const std::string& name, int level, DriftMode mode = DriftMode::skew) {
  return Pipeline<Dim>(build_ball_mesh<Dim>(Point<Dim>::Zero(), 1.0, level), name, mode);
}

Vector random_interior(const InteriorMap& im, Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector r(im.size());
  for (Index i = 0; i < r.size(); ++i) r[i] = normal(rng);
  return im.extend(r, n);
}

Vector random_full(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector r(n);
  for (Index i = 0; i < n; ++i) r[i] = normal(rng);
  return r;
}

}  // namespace

TEST(DirichletForm, ZeroDriftGivesZeroDriftMatrix) {
  const auto s = ball_setup<2>("identity", 3);
  EXPECT_LE(s.form.D_raw.norm(), 1e-9 * s.form.S.norm());
  EXPECT_LE(s.form.symmetric_defect, 1e-9);
}

TEST(DirichletForm, SkewModeEnergyIdentity) {
  std::mt19937_64 rng(11);
  const auto s3 = ball_setup<3>("rotator", 2);
  const auto s2 = ball_setup<2>("gaussian_gradient", 3);
  for (int t = 0; t < 50; ++t) {
    const Vector f = random_interior(s3.form.interior, s3.form.size(), rng);
    const double e = s3.form.energy(f);
    const double h1 = h1_seminorm(s3.mesh, FeFunction<3>{s3.mesh.id(), f}, s3.cs.A, s3.density.weight());
    EXPECT_LE(std::abs(e - h1 * h1), 1e-12 * e);
    EXPECT_LE(std::abs(f.dot(s3.form.D * f)), 1e-14 * e);
    const Vector g = random_interior(s2.form.interior, s2.form.size(), rng);
    const double e2 = s2.form.energy(g);
    const double h2 = h1_seminorm(s2.mesh, FeFunction<2>{s2.mesh.id(), g}, s2.cs.A, s2.density.weight());
    EXPECT_LE(std::abs(e2 - h2 * h2), 1e-12 * e2);
  }
}

TEST(DirichletForm, InteriorStiffnessIsPositiveDefinite) {
  const auto s = ball_setup<2>("example_ii", 2);
  const Eigen::MatrixXd s_ii = Eigen::MatrixXd(s.form.interior.restrict_both(s.form.S));
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (s_ii + s_ii.transpose()));
  EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
}

TEST(DirichletForm, RawSymmetricDefectDecaysUnderRefinement) {
  std::vector<double> probe, frob;
  for (int l = 2; l <= 5; ++l) {
    const auto s = ball_setup<2>("gaussian_gradient", l, DriftMode::raw);
    probe.push_back(s.form.symmetric_defect);
    frob.push_back(s.form.symmetric_defect_norm);
  }
  for (std::size_t i = 1; i < probe.size(); ++i) {
    EXPECT_GE(std::log2(probe[i - 1] / probe[i]), 0.8) << "level " << i + 2;
    EXPECT_GE(std::log2(frob[i - 1] / frob[i]), 0.8) << "level " << i + 2;
  }
}

TEST(Resolvent, MatchesDenseSolve) {
  const auto s = ball_setup<2>("example_i", 2);
  std::mt19937_64 rng(3);
  const Vector f = random_full(s.form.size(), rng);
  for (double alpha : {0.5, 10.0}) {
    const Eigen::MatrixXd sys = alpha * Eigen::MatrixXd(s.form.M_II) + Eigen::MatrixXd(s.form.K_II);
    const Vector ref = s.form.interior.extend(sys.lu().solve(Vector(s.form.M_I * f)), s.form.size());
    const auto u = solve_resolvent(s.form, alpha, FeFunction<2>{s.mesh.id(), f});
    EXPECT_LE((u.values - ref).norm(), 1e-10 * ref.norm());
    EXPECT_EQ(s.form.interior.extend(s.form.interior.restrict(u.values), s.form.size()), u.values);
  }
  EXPECT_EQ(solve_resolvent(s.form, 2.0, FeFunction<2>{s.mesh.id(), Vector::Zero(s.form.size())}).values.norm(), 0.0);
}

TEST(Resolvent, KrylovAgreesWithDirect) {
  const auto s = ball_setup<3>("rotator", 2);
  std::mt19937_64 rng(5);
  const Vector f = random_full(s.form.size(), rng);
  SolverOptions k;
  k.backend = SolverBackend::krylov;
  SolveStats st;
  const Vector a = Resolvent<3>(s.form, 3.0).apply(f);
  const Vector b = Resolvent<3>(s.form, 3.0, k).apply(f, &st);
  EXPECT_LE((a - b).norm(), 1e-8 * a.norm());
  EXPECT_LE(st.relative_residual, 1e-9);
  EXPECT_GT(st.iterations, 0);
}

TEST(Resolvent, EigenCaseClosedForms) {
  const auto s = ball_setup<2>("identity", 3);
  const auto ep = first_dirichlet_eigenpair(s.form);
  const Eigen::MatrixXd s_ii = Eigen::MatrixXd(s.form.interior.restrict_both(s.form.S));
  const Eigen::MatrixXd m_ii = Eigen::MatrixXd(s.form.M_II);
  const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> dense(0.5 * (s_ii + s_ii.transpose()),
                                                                        0.5 * (m_ii + m_ii.transpose()));
  EXPECT_NEAR(ep.lambda, dense.eigenvalues()[0], 1e-10 * ep.lambda);
  // continuum first Dirichlet eigenvalue of the unit disk is j_{0,1}^2
  EXPECT_NEAR(ep.lambda, 5.783185962946784, 0.1);
  EXPECT_NEAR(s.form.mass_norm(ep.psi), 1.0, 1e-12);

  for (double alpha : {1.0, 10.0, 100.0, 1000.0}) {
    const Vector u = Resolvent<2>(s.form, alpha).apply(ep.psi);
    EXPECT_LE(s.form.mass_norm(Vector(u - ep.psi / (alpha + ep.lambda))), 1e-8 / (alpha + ep.lambda));
    const double ratio = s.form.mass_norm(Vector(alpha * u)) / s.form.mass_norm(ep.psi);
    EXPECT_NEAR(ratio, alpha / (alpha + ep.lambda), 1e-8);
  }
  const Vector lpsi = apply_generator(s.form, ep.psi);
  EXPECT_LE(s.form.mass_norm(Vector(lpsi + ep.lambda * ep.psi)), 1e-8 * ep.lambda);
  EXPECT_LE(check_resolvent_identity(s.form, 1.0, 10.0, ep.psi), 1e-10);
}

TEST(Resolvent, ContractionOverPresetsAndAlphas) {
  for (const auto& name : preset_names()) {
    const auto s = ball_setup<2>(name, 3);
    const auto rep = check_contraction(s.form, {1.0, 10.0, 100.0, 1000.0}, 4, 17);
    EXPECT_LE(rep.max_ratio, 1.0 + 1e-10) << name;
    EXPECT_EQ(rep.ratios.size(), 16u);
    Vector ind = Vector::Zero(s.form.size());
    for (Index i : s.form.interior.interior) ind[i] = 1.0;
    EXPECT_LE(resolvent_report(s.form, 5.0, ind).contraction_ratio, 1.0) << name;
    // smooth so that |(S + D) f| / alpha is small at alpha = 1e6
    Vector f = interpolate(s.mesh, ScalarField<2>([](const Point<2>& x) { return 1.0 - x.squaredNorm(); })).values;
    f = s.form.interior.extend(s.form.interior.restrict(f), s.form.size());
    const double big = resolvent_report(s.form, 1e6, f).contraction_ratio;
    EXPECT_LT(big, 1.0) << name;
    EXPECT_GT(big, 0.999) << name;
  }
  const auto s3 = ball_setup<3>("gaussian_gradient", 2);
  EXPECT_LE(check_contraction(s3.form, {1.0, 1000.0}, 3, 2).max_ratio, 1.0 + 1e-10);
}

TEST(Resolvent, ResolventIdentity) {
  std::mt19937_64 rng(9);
  const auto s = ball_setup<3>("example_ii", 2);
  const Vector f = random_full(s.form.size(), rng);
  EXPECT_LE(check_resolvent_identity(s.form, 1.0, 10.0, f), 1e-8);
  EXPECT_LE(check_resolvent_identity(s.form, 10.0, 100.0, f), 1e-8);
  EXPECT_LE(check_resolvent_identity(s.form, 4.0, 4.0, f), 1e-15);
}

TEST(Resolvent, GeneratorInvertsResolvent) {
  std::mt19937_64 rng(13);
  const auto s = ball_setup<2>("rotator", 3);
  const Vector f = random_interior(s.form.interior, s.form.size(), rng);
  const double alpha = 7.0;
  const Vector u = Resolvent<2>(s.form, alpha).apply(f);
  const Vector back = alpha * u - apply_generator(s.form, u);
  EXPECT_LE(s.form.mass_norm(Vector(back - f)), 1e-9 * s.form.mass_norm(f));
  const Vector v = random_interior(s.form.interior, s.form.size(), rng);
  const double lhs = s.form.bilinear(f, v);
  const double rhs = -v.dot(s.form.M * apply_generator(s.form, f));
  EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(lhs) + 1e-12);
  EXPECT_EQ(apply_generator(s.form, Vector::Zero(s.form.size())).norm(), 0.0);
}

TEST(Resolvent, StrongContinuityOnDyadicGrid) {
  std::mt19937_64 rng(21);
  const auto s = ball_setup<2>("example_i", 3);
  const Vector f = random_interior(s.form.interior, s.form.size(), rng);
  std::vector<double> grid;
  for (int k = 0; k <= 12; ++k) grid.push_back(std::ldexp(1.0, k));
  const auto rep = strong_continuity(s.form, f, grid);
  EXPECT_TRUE(rep.monotone);
  EXPECT_LE(rep.gaps.back(), rep.bound * 1.1);
  EXPECT_THROW(strong_continuity(s.form, Vector::Ones(s.form.size()), grid), Error);
}

TEST(Submarkov, AcuteBoxMeshKeepsBounds) {
  for (const std::string name : {"identity", "gaussian_gradient", "rotator", "example_i"}) {
    const Pipeline<2> s(build_box_mesh<2>(Point<2>(-1, -1), Point<2>(1, 1), 12), name);
    const auto q = mesh_quality(s.mesh);
    ASSERT_TRUE(q.acute);
    Vector interior_one = Vector::Zero(s.form.size()), half = Vector::Zero(s.form.size());
    for (Index i : s.form.interior.interior) interior_one[i] = 1.0;
    for (Index i = 0; i < s.mesh.vertex_count(); ++i) half[i] = s.mesh.vertex(i)[0] < 0.0 ? 1.0 : 0.0;
    for (double alpha : {0.1, 1.0, 100.0}) {
      for (const Vector& f : {interior_one, half, Vector(Vector::Ones(s.form.size()))}) {
        const auto rep = check_submarkov(s.form, q, alpha, f);
        EXPECT_GE(rep.min_value, -1e-8) << name;
        EXPECT_LE(rep.max_value, 1.0 + 1e-8) << name;
      }
    }
    const auto zero = check_submarkov(s.form, q, 1.0, Vector::Zero(s.form.size()));
    EXPECT_EQ(zero.min_value, 0.0);
    EXPECT_EQ(zero.max_value, 0.0);
  }
}

TEST(Submarkov, GatedOnAcutenessOrLumping) {
  const auto s = ball_setup<3>("identity", 2);
  const auto q = mesh_quality(s.mesh);
  ASSERT_FALSE(q.acute);
  const Vector one = Vector::Ones(s.form.size());
  try {
    check_submarkov(s.form, q, 1.0, one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
  const auto rep = evaluate_submarkov(s.form, q, 1.0, one, MassMode::lumped);
  EXPECT_GE(rep.min_value, -1e-8);
  EXPECT_THROW(check_submarkov(s.form, mesh_quality(s.mesh), 1.0, Vector(2.0 * one)), Error);
}

TEST(Sector, ZeroDriftIsCauchySchwarz) {
  const auto s = ball_setup<3>("identity", 1);
  const double bound = theoretical_sector_bound(s.mesh, s.cs, s.density, s.dec);
  EXPECT_NEAR(bound, 1.0, 1e-8);
  const auto rep = sector_constant(s.form, 100, 3, bound);
  EXPECT_LE(rep.empirical, 1.0 + 1e-10);
}

TEST(Sector, RotatorStaysBelowTheoreticalBound) {
  const auto s = ball_setup<3>("rotator", 2);
  const double bound = theoretical_sector_bound(s.mesh, s.cs, s.density, s.dec);
  EXPECT_GT(bound, 1.0);
  const auto rep = sector_constant(s.form, 200, 4, bound);
  EXPECT_FALSE(rep.exceeds_bound);
  EXPECT_LE(rep.empirical, bound * 1.05);
  EXPECT_EQ(rep.pairs, 200);
}

TEST(Sector, TwoDimensionalBoundIsUnsupported) {
  const auto s = ball_setup<2>("rotator", 2);
  try {
    theoretical_sector_bound(s.mesh, s.cs, s.density, s.dec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionUnsupported);
  }
  EXPECT_GT(sector_constant(s.form, 20, 1).empirical, 0.0);
}

TEST(Resolvent, RejectsBadInput) {
  const auto s = ball_setup<2>("identity", 1);
  EXPECT_THROW(Resolvent<2>(s.form, 0.0), Error);
  EXPECT_THROW(Resolvent<2>(s.form, -1.0), Error);
  const auto other = build_ball_mesh<2>(Point<2>::Zero(), 1.0, 2);
  EXPECT_THROW(solve_resolvent(s.form, 1.0, FeFunction<2>{other.id(), Vector::Zero(other.vertex_count())}), Error);
}
