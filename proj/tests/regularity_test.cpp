#include "fplab/regularity.hpp"
#include "fplab/vmo.hpp"

#include <gtest/gtest.h>

using namespace fplab;

namespace {

template <int Dim>
struct Pipeline {
  SimplicialMesh<Dim> mesh;
  CoefficientSet<Dim> cs;
  DensityField<Dim> density;
  DriftDecomposition<Dim> dec;
  FormMatrices<Dim> form;

  Pipeline(const std::string& name, int level)
      : mesh(build_ball_mesh<Dim>(Point<Dim>::Zero(), 1.0, level)), cs(preset<Dim>(name)),
        density(solve_invariant_density(mesh, cs)), dec(decompose_drift(cs, density, mesh)),
        form(assemble_form(mesh, cs, density, dec)) {}
};

// ||v||_{L^2(dx)} of u_h - exact by degree-5 quadrature
template <int Dim>
double l2_error(const SimplicialMesh<Dim>& mesh, const Vector& uh, const ScalarField<Dim>& exact) {
  const FeFunction<Dim> u{mesh.id(), uh};
  double s = 0.0;
  for_each_quadrature_point(mesh, quadrature_rule<Dim>(5), [&](Index e, const auto&, std::size_t, const auto& bary,
                                                               const Point<Dim>& x, double w) {
    const double d = evaluate_in_element(mesh, u, e, bary) - exact(x);
    s += w * d * d;
  });
  return std::sqrt(s);
}

}  // namespace

TEST(Cutoff, ValuesAndPlateaus) {
  const auto chi = build_cutoff<3>(Point<3>(0.1, 0, 0), 0.3, 0.8);
  EXPECT_EQ(chi.value(chi.center), 1.0);
  EXPECT_EQ(chi.value(Point<3>(0.9, 0, 0)), 0.0);
  EXPECT_NEAR(chi.value(Point<3>(0.1 + 0.8 - 1e-9, 0, 0)), 0.0, 1e-12);
  EXPECT_EQ(chi.gradient(Point<3>(0.2, 0.1, 0)).norm(), 0.0);
  EXPECT_EQ(chi.gradient(Point<3>(0.1, 0.85, 0)).norm(), 0.0);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 2000; ++i) {
    const Point<3> x = 1.2 * detail::uniform_in_ball<3>(rng, Point<3>::Zero(), 1.0);
    const double v = chi.value(x);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Cutoff, GradientSupremumByDenseSampling) {
  const auto chi = build_cutoff<2>(Point<2>::Zero(), 0.25, 0.7);
  double sup = 0.0;
  for (int i = 0; i <= 200000; ++i) sup = std::max(sup, chi.gradient(Point<2>(0.2 + 0.6 * i / 200000.0, 0.0)).norm());
  EXPECT_NEAR(sup, chi.gradient_sup(), 1e-6);
  EXPECT_NEAR(chi.gradient_sup(), 15.0 / 8.0 / 0.45, 1e-12);
}

TEST(Cutoff, DerivativesMatchFiniteDifferences) {
  const auto chi = build_cutoff<3>(Point<3>(0, 0.1, 0), 0.2, 0.9);
  const double h = 1e-5;
  for (const Point<3>& x : {Point<3>(0.3, 0.2, 0.1), Point<3>(-0.1, 0.6, 0.3), Point<3>(0.5, -0.2, -0.2)}) {
    for (int k = 0; k < 3; ++k) {
      const Point<3> e = Point<3>::Unit(k) * h;
      EXPECT_NEAR(chi.gradient(x)[k], (chi.value(x + e) - chi.value(x - e)) / (2 * h), 1e-8);
      const Point<3> col = (chi.gradient(x + e) - chi.gradient(x - e)) / (2 * h);
      EXPECT_LE((chi.hessian(x).col(k) - col).norm(), 1e-7);
    }
  }
}

TEST(Cutoff, RejectsBadRadii) {
  for (const auto& [s, r] : {std::pair{0.5, 0.5}, std::pair{0.6, 0.5}, std::pair{0.0, 0.5}, std::pair{-0.1, 0.5}}) {
    try {
      build_cutoff<2>(Point<2>::Zero(), s, r);
      FAIL() << s << " " << r;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidRadii);
    }
  }
}

TEST(DoubleDivergence, ConstantsSolveTheHomogeneousProblem) {
  const auto mesh = build_ball_mesh<2>(Point<2>::Zero(), 1.0, 3);
  const auto sol = solve_double_divergence(mesh, preset<2>("identity"), ScalarField<2>([](const Point<2>&) { return 1.0; }));
  EXPECT_LE((sol.h_tilde.array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_LE(sol.residual, 1e-12);
}

TEST(DoubleDivergence, GaussianDensityIsASolution) {
  const auto cs = preset<2>("gaussian_gradient");
  std::vector<double> err;
  for (int l = 2; l <= 4; ++l) {
    const auto mesh = build_ball_mesh<2>(Point<2>::Zero(), 1.0, l);
    err.push_back(l2_error(mesh, solve_double_divergence(mesh, cs, *cs.exact_density).h_tilde, *cs.exact_density));
  }
  EXPECT_LE(err.back(), 1e-3);
  for (std::size_t i = 1; i < err.size(); ++i) EXPECT_GE(std::log2(err[i - 1] / err[i]), 1.5);
}

TEST(DoubleDivergence, ManufacturedSolutionConverges) {
  // L* h = lap h - div(H h) + c h with constant H
  CoefficientSet<2> cs = preset<2>("identity");
  const Point<2> H(1.0, -0.5);
  cs.H = [H](const Point<2>&) { return H; };
  cs.c = [](const Point<2>& x) { return -1.0 - x[0] * x[0]; };
  const ScalarField<2> exact = [](const Point<2>& x) { return std::cos(x[0]) * std::exp(0.5 * x[1]); };
  cs.f_tilde = [H, cs, exact](const Point<2>& x) {
    const double u = exact(x);
    const Point<2> g(-std::sin(x[0]) * std::exp(0.5 * x[1]), 0.5 * u);
    return -u + 0.25 * u - H.dot(g) + cs.c(x) * u;
  };
  cs.F_tilde = [](const Point<2>&) { return Point<2>::Zero(); };
  std::vector<double> err;
  for (int n : {4, 8, 16, 32}) {
    const auto mesh = build_box_mesh<2>(Point<2>(-1, -1), Point<2>(1, 1), n);
    err.push_back(l2_error(mesh, solve_double_divergence(mesh, cs, exact).h_tilde, exact));
  }
  for (std::size_t i = 1; i < err.size(); ++i) EXPECT_GE(std::log2(err[i - 1] / err[i]), 1.0);
}

TEST(DoubleDivergence, DivergenceLoadIsIntegratedByParts) {
  // int (lap phi) h~ = int <grad w, grad phi> forces lap h~ = -lap w, so h~ = -w when the boundary data agree
  CoefficientSet<2> cs = preset<2>("identity");
  const ScalarField<2> w = [](const Point<2>& x) { return -(x[0] * x[0] * x[1] + std::sin(x[1])); };
  cs.F_tilde = [](const Point<2>& x) { return Point<2>(2 * x[0] * x[1], x[0] * x[0] + std::cos(x[1])); };
  std::vector<double> err;
  for (int n : {8, 16, 32}) {
    const auto mesh = build_box_mesh<2>(Point<2>(0, 0), Point<2>(1, 1), n);
    err.push_back(l2_error(mesh, solve_double_divergence(mesh, cs, w).h_tilde, w));
  }
  for (std::size_t i = 1; i < err.size(); ++i) EXPECT_GE(std::log2(err[i - 1] / err[i]), 1.0);
}

TEST(DoubleDivergence, LargePositivePotentialIsIndefinite) {
  CoefficientSet<2> cs = preset<2>("identity");
  cs.c = [](const Point<2>&) { return 50.0; };
  const auto mesh = build_ball_mesh<2>(Point<2>::Zero(), 1.0, 3);
  try {
    solve_double_divergence(mesh, cs, ScalarField<2>([](const Point<2>&) { return 1.0; }));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndefiniteSystem);
  }
}

TEST(Constants, RecompositionIdentitiesAreExact) {
  const Pipeline<3> p("gaussian_gradient", 2);
  const auto chi = build_cutoff<3>(Point<3>::Zero(), 0.5, 0.9);
  const auto r = compute_constants(p.mesh, p.cs, p.density, chi, FeFunction<3>{p.mesh.id(), p.density.rho.values});
  const auto& c = r.c;
  EXPECT_EQ(r.C1, c[1] + 2.0 * c[2] + c[4] + c[5] + c[6] + c[7] + 2.0 * c[9]);
  EXPECT_EQ(r.C2, c[3] + c[8] + 2.0 * c[10]);
  EXPECT_EQ(r.bound, r.C1 * r.C1 + 2.0 * r.C2);
  EXPECT_EQ(c[3], c[8]);
  EXPECT_EQ(c[8], c[10]);
  for (int i = 1; i <= 10; ++i) EXPECT_GE(c[i], 0.0) << i;
  EXPECT_EQ(r.gamma, 4.0);
  EXPECT_EQ(r.provenance.at("div_A"), "analytic");
}

TEST(Constants, ClosedFormsOnTheIdentityPreset) {
  const Pipeline<3> p("identity", 3);
  const auto chi = build_cutoff<3>(Point<3>::Zero(), 0.25, 0.75);
  const FeFunction<3> one{p.mesh.id(), Vector::Ones(p.mesh.vertex_count())};
  const auto r = compute_constants(p.mesh, p.cs, p.density, chi, one);
  EXPECT_NEAR(r.K, 4.0, 1e-9);  // rho = 1, lambda = 1, gamma = 4
  EXPECT_NEAR(r.h_l2 * r.h_l2, p.mesh.total_volume(), 1e-9);
  EXPECT_NEAR(r.c[2], std::sqrt(3.0) * chi.gradient_sup() * r.h_l2, 1e-12);
  // |lap chi|_{L^3} from the radial profile: lap chi = g'' + 2 g' / t
  GaussLegendre gl(64);
  const double radial = gl.integrate([&](double t) {
    const auto g = chi.profile(t);
    return 4.0 * M_PI * t * t * std::pow(std::abs(g[2] + 2.0 * g[1] / t), 3);
  }, 0.25, 0.75);
  EXPECT_NEAR(r.Lchi_ld, std::cbrt(radial), 0.05 * std::cbrt(radial));
  EXPECT_EQ(r.c[5], 0.0);
  EXPECT_EQ(r.c[6], 0.0);
  EXPECT_EQ(r.c[4], 0.0);
}

TEST(Constants, ZeroDataAndHomogeneity) {
  const Pipeline<3> p("identity", 2);
  CoefficientSet<3> cs = p.cs;
  cs.f_tilde = [](const Point<3>& x) { return 1.0 + x[0]; };
  cs.F_tilde = [](const Point<3>& x) { return Point<3>(x[1], 0.5, 0.0); };
  const FeFunction<3> zero{p.mesh.id(), Vector::Zero(p.mesh.vertex_count())};
  const auto wide = build_cutoff<3>(Point<3>::Zero(), 0.25, 0.75);
  const auto r0 = compute_constants(p.mesh, cs, p.density, wide, zero);
  EXPECT_EQ(r0.C1, r0.c[5] + r0.c[6]);
  EXPECT_GT(r0.c[5], 0.0);
  EXPECT_GT(r0.c[6], 0.0);
  EXPECT_EQ(r0.C2, 0.0);

  const FeFunction<3> one{p.mesh.id(), Vector::Ones(p.mesh.vertex_count())};
  const auto narrow = build_cutoff<3>(Point<3>::Zero(), 0.5, 0.75);
  const auto a = compute_constants(p.mesh, p.cs, p.density, wide, one);
  const auto b = compute_constants(p.mesh, p.cs, p.density, narrow, one);
  EXPECT_DOUBLE_EQ(b.grad_chi_sup, 2.0 * a.grad_chi_sup);
  EXPECT_DOUBLE_EQ(b.c[3], 4.0 * a.c[3]);
  EXPECT_DOUBLE_EQ(b.c[2], 2.0 * a.c[2]);
  EXPECT_DOUBLE_EQ(b.c[9], 2.0 * a.c[9]);
}

TEST(Constants, ErrorsForTwoDimensionsAndMissingDivergence) {
  const Pipeline<2> p2("identity", 1);
  try {
    compute_constants(p2.mesh, p2.cs, p2.density, build_cutoff<2>(Point<2>::Zero(), 0.2, 0.8), p2.density.rho);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionUnsupported);
  }
  const Pipeline<3> p3("example_i", 1);
  try {
    compute_constants(p3.mesh, p3.cs, p3.density, build_cutoff<3>(Point<3>::Zero(), 0.2, 0.8), p3.density.rho);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingDerivative);
  }
}

TEST(Experiment, GaussianGradientStaysBelowTheBound) {
  const Pipeline<3> p("gaussian_gradient", 2);
  const auto chi = build_cutoff<3>(Point<3>::Zero(), 0.5, 0.9);
  const auto rep = run_experiment(p.mesh, p.cs, p.density, p.form, chi, p.density.rho, default_alpha_grid());
  EXPECT_EQ(rep.rows.size(), 17u);
  EXPECT_GE(rep.margin, 0.0);
  EXPECT_EQ(rep.margin, rep.bound - rep.sup_energy);
  // h = 1 is not in the discrete H^1_0, so the raw gap stalls at |h - P0 h|
  EXPECT_NEAR(rep.rows.back().raw_gap,
              std::sqrt(rep.h_l2 * rep.h_l2 - rep.projection_l2 * rep.projection_l2), 1e-3);
  const auto d = convergence_diagnostics(rep);
  EXPECT_TRUE(d.gap_monotone);
  EXPECT_LE(d.gap_ratio, 1e-3);
  EXPECT_TRUE(d.d1_bounded);
  EXPECT_LE(d.cut_ratio, 1e-3);
  EXPECT_TRUE(d.passed());
  for (const auto& row : rep.rows) EXPECT_NEAR(row.h1_seminorm * row.h1_seminorm, row.energy, 1e-10 * (1 + row.energy));
}

TEST(Experiment, EigenCaseMatchesClosedForm) {
  const Pipeline<3> p("identity", 2);
  const auto ep = first_dirichlet_eigenpair(p.form);
  const auto chi = build_cutoff<3>(Point<3>::Zero(), 0.5, 0.9);
  const auto rep = run_experiment(p.mesh, p.cs, p.density, p.form, chi, FeFunction<3>{p.mesh.id(), ep.psi},
                                  default_alpha_grid());
  const Vector chin = interpolate(p.mesh, ScalarField<3>([&](const Point<3>& x) { return chi.value(x); })).values;
  const Vector chipsi = chin.cwiseProduct(ep.psi.cwiseQuotient(p.density.rho.values));
  const double base = p.form.energy(chipsi);
  for (const auto& row : rep.rows) {
    const double t = row.alpha / (row.alpha + ep.lambda);
    EXPECT_NEAR(row.energy, t * t * base, 1e-8 * base) << row.alpha;
    EXPECT_NEAR(row.gap, ep.lambda / (row.alpha + ep.lambda), 1e-8) << row.alpha;
  }
  EXPECT_GE(rep.margin, 0.0);
  EXPECT_TRUE(convergence_diagnostics(rep).passed());
  // a grid ending at 2^12 stops short: (1 + lambda) / (4096 + lambda) > 1e-3
  const auto short_rep = run_experiment(p.mesh, p.cs, p.density, p.form, chi, FeFunction<3>{p.mesh.id(), ep.psi},
                                        dyadic_grid(0, 12));
  EXPECT_GT(convergence_diagnostics(short_rep).gap_ratio, 1e-3);
}

TEST(Experiment, ZeroDataIsTrivial) {
  const Pipeline<3> p("rotator", 1);
  const auto chi = build_cutoff<3>(Point<3>::Zero(), 0.3, 0.9);
  const auto rep = run_experiment(p.mesh, p.cs, p.density, p.form, chi,
                                  FeFunction<3>{p.mesh.id(), Vector::Zero(p.mesh.vertex_count())}, dyadic_grid(0, 4));
  for (const auto& row : rep.rows) EXPECT_EQ(row.energy, 0.0);
  EXPECT_TRUE(convergence_diagnostics(rep).passed());
}

TEST(Experiment, RequiresSkewForm) {
  const Pipeline<3> p("identity", 1);
  const auto raw = assemble_form(p.mesh, p.cs, p.density, p.dec, DriftMode::raw);
  EXPECT_THROW(run_experiment(p.mesh, p.cs, p.density, raw, build_cutoff<3>(Point<3>::Zero(), 0.3, 0.9), p.density.rho,
                              dyadic_grid(0, 2)),
               Error);
}

TEST(Experiment, NodalCutoffProductIsConsistent) {
  const auto chi = build_cutoff<2>(Point<2>::Zero(), 0.3, 0.8);
  const ScalarField<2> u = [](const Point<2>& x) { return std::sin(3 * x[0]) + x[1] * x[1]; };
  std::vector<double> err;
  for (int l = 2; l <= 5; ++l) err.push_back(cutoff_product_consistency(build_ball_mesh<2>(Point<2>::Zero(), 1.0, l), chi, u));
  for (std::size_t i = 1; i < err.size(); ++i) EXPECT_GE(std::log2(err[i - 1] / err[i]), 1.0);
}
