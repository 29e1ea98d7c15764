#include "fplab/report.hpp"
#include "fplab/sampled_field.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace fplab;

namespace {

enum Exit { kOk = 0, kVerificationFailed = 1, kUsage = 2, kSolver = 3 };

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ContractionViolation:
    case ErrorCode::SubmarkovViolation:
      return kVerificationFailed;
    case ErrorCode::SolverDivergence:
    case ErrorCode::SingularMass:
    case ErrorCode::SingularElement:
    case ErrorCode::DensityNotPositive:
    case ErrorCode::NonPositiveDensity:
    case ErrorCode::KernelDimensionError:
    case ErrorCode::IndefiniteSystem:
    case ErrorCode::NonFiniteValue:
    case ErrorCode::EmptyInterior:
    case ErrorCode::MeshMismatch:
      return kSolver;
    default:
      return kUsage;
  }
}

// Six significant digits for console lines; report files keep 17.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Name of the pipeline step currently running, for error messages.
std::string g_stage = "config";

struct Run {
  ExperimentConfig cfg;
  ReportContext ctx;
  bool plot = false;

  std::filesystem::path out(const std::string& file) const { return ctx.directory / file; }
};

template <int Dim>
Point<Dim> to_point(const std::vector<double>& v) {
  Point<Dim> p;
  for (int i = 0; i < Dim; ++i) p[i] = v[i];
  return p;
}

template <int Dim>
SimplicialMesh<Dim> build_mesh(const ExperimentConfig& c) {
  g_stage = "mesh";
  if (c.domain == "ball") return build_ball_mesh<Dim>(to_point<Dim>(c.center), c.radius, c.level);
  auto mesh = build_box_mesh<Dim>(to_point<Dim>(c.lo), to_point<Dim>(c.hi), c.cells);
  for (int l = 0; l < c.level; ++l) mesh = refine_uniform(mesh);
  return mesh;
}

template <int Dim>
CoefficientSet<Dim> build_coefficients(const ExperimentConfig& c) {
  g_stage = "coefficients";
  auto cs = preset<Dim>(c.preset);
  if (!c.A_file.empty()) {
    auto a = std::make_shared<const SampledField<Dim>>(read_sampled_field<Dim>(c.A_file, Dim * Dim));
    cs.A = as_matrix_field(a);
    cs.div_A.reset();
    cs.exact_density.reset();
    cs.name += "+A_file";
  }
  if (!c.H_file.empty()) {
    auto h = std::make_shared<const SampledField<Dim>>(read_sampled_field<Dim>(c.H_file, Dim));
    cs.H = as_vector_field(h);
    cs.exact_density.reset();
    cs.name += "+H_file";
  }
  return cs;
}

template <int Dim>
PresetPipeline<Dim> build_pipeline(const ExperimentConfig& c, DriftMode mode) {
  auto mesh = build_mesh<Dim>(c);
  auto cs = build_coefficients<Dim>(c);
  g_stage = "density";
  return PresetPipeline<Dim>(std::move(mesh), std::move(cs), mode, c.solver);
}

Json domain_json(const ExperimentConfig& c) {
  Json d{{"kind", c.domain}, {"dim", c.dim}, {"level", c.level}};
  if (c.domain == "ball") {
    d["center"] = c.center;
    d["radius"] = c.radius;
  } else {
    d["lo"] = c.lo;
    d["hi"] = c.hi;
    d["cells"] = c.cells;
  }
  return d;
}

template <int Dim>
int cmd_mesh(const Run& run) {
  const auto mesh = build_mesh<Dim>(run.cfg);
  g_stage = "report";
  write_mesh_file(run.out("mesh.txt").string(), mesh);
  Json j = report_header(run.ctx);
  j["domain"] = domain_json(run.cfg);
  j["vertices"] = mesh.vertex_count();
  j["elements"] = mesh.element_count();
  j["interior_vertices"] = mesh.interior_count();
  j["volume"] = mesh.total_volume();
  j["quality"] = to_json(mesh_quality(mesh));
  write_json(run.out("mesh_quality.json"), j);
  std::cout << "mesh: " << mesh.vertex_count() << " vertices, " << mesh.element_count() << " elements -> "
            << run.out("mesh.txt").string() << "\n";
  return kOk;
}

template <int Dim>
int cmd_density(const Run& run) {
  const auto p = build_pipeline<Dim>(run.cfg, run.cfg.drift);
  g_stage = "divergence residual";
  const auto res = divergence_free_residual(p.mesh, p.cs, p.density, p.dec);
  g_stage = "report";
  {
    std::ofstream os(run.out("density.txt"));
    require(static_cast<bool>(os), ErrorCode::InvalidArgument, "cannot write " + run.out("density.txt").string());
    write_density(os, p.density, {{"config_hash", run.ctx.config_hash}, {"version", version_string()}});
  }
  Json j = report_header(run.ctx);
  j["preset"] = p.cs.name;
  j["rho_min"] = p.density.rho_min;
  j["rho_max"] = p.density.rho_max;
  j["solve_residual"] = p.density.residual;
  j["divergence_free"] = to_json(res);
  if (p.cs.exact_density) j["rel_l2_error"] = density_relative_error(p.mesh, p.density, *p.cs.exact_density);
  write_json(run.out("density.json"), j);
  write_text(run.out("divergence_residual.csv"), residual_table(res).str(run.ctx));
  std::cout << "density: rho in [" << num(p.density.rho_min) << ", " << num(p.density.rho_max)
            << "], divergence residual " << num(res.max_residual) << " (scale "
            << num(res.scale) << ")\n";
  return kOk;
}

template <int Dim>
int cmd_resolvent(const Run& run) {
  const auto p = build_pipeline<Dim>(run.cfg, run.cfg.drift);
  g_stage = "resolvent";
  double mid = 0.0;
  for (Index i = 0; i < p.mesh.vertex_count(); ++i) mid += p.mesh.vertex(i)[0] / p.mesh.vertex_count();
  Vector indicator = Vector::Zero(p.form.size());
  for (Index i = 0; i < p.mesh.vertex_count(); ++i) indicator[i] = p.mesh.vertex(i)[0] < mid ? 1.0 : 0.0;
  std::vector<ResolventReport> sweep;
  for (double a : run.cfg.resolvent_alphas) sweep.push_back(resolvent_report(p.form, a, indicator, run.cfg.solver));
  const auto random = evaluate_contraction(p.form, run.cfg.resolvent_alphas, run.cfg.trials, run.cfg.seed, run.cfg.solver);
  g_stage = "report";
  Json j = report_header(run.ctx);
  j["preset"] = p.cs.name;
  j["drift_mode"] = std::string(to_string(p.form.mode));
  j["solver"] = std::string(to_string(run.cfg.solver.backend));
  j["symmetric_defect"] = p.form.symmetric_defect;
  j["max_random_contraction"] = random.max_ratio;
  Json rows = Json::array();
  for (const auto& r : sweep) rows.push_back(to_json(r));
  j["sweep"] = rows;
  write_json(run.out("resolvent.json"), j);
  write_text(run.out("resolvent_sweep.csv"), resolvent_table(sweep, random).str(run.ctx));
  if (run.plot) {
    std::ostringstream os;
    os << "# fplab " << version_string() << " config " << run.ctx.config_hash << "\n# alpha contraction_ratio\n";
    for (const auto& r : sweep) os << format_double(r.alpha) << " " << format_double(r.contraction_ratio) << "\n";
    write_text(run.out("resolvent_plot.dat"), os.str());
  }
  for (const auto& r : sweep)
    std::cout << "resolvent: alpha " << num(r.alpha) << " contraction " << num(r.contraction_ratio)
              << " range [" << num(r.submarkov_min) << ", " << num(r.submarkov_max) << "]\n";
  return kOk;
}

template <int Dim>
int cmd_experiment(const Run& run) {
  if constexpr (Dim < 3) {
    g_stage = "experiment";
    fail(ErrorCode::DimensionUnsupported, "the energy experiment needs d >= 3 (gamma = 2(d-1)/(d-2))");
  } else {
    const auto p = build_pipeline<Dim>(run.cfg, run.cfg.drift);
    g_stage = "experiment data";
    FeFunction<Dim> h_tilde = p.density.rho;
    double lambda = 0.0;
    if (run.cfg.h_tilde == "eigen") {
      const auto ep = first_dirichlet_eigenpair(p.form, run.cfg.solver);
      h_tilde = FeFunction<Dim>{p.mesh.id(), ep.psi};
      lambda = ep.lambda;
    } else if (run.cfg.h_tilde == "one") {
      h_tilde = FeFunction<Dim>{p.mesh.id(), Vector::Ones(p.mesh.vertex_count())};
    }
    const Point<Dim> center = run.cfg.domain == "ball"
                                  ? to_point<Dim>(run.cfg.center)
                                  : Point<Dim>(0.5 * (to_point<Dim>(run.cfg.lo) + to_point<Dim>(run.cfg.hi)));
    g_stage = "cutoff";
    const auto chi = build_cutoff<Dim>(center, run.cfg.cutoff_s, run.cfg.cutoff_r);
    g_stage = "experiment";
    const auto alphas = run.cfg.alphas.empty() ? default_alpha_grid() : run.cfg.alphas;
    const auto rep = run_experiment(p.mesh, p.cs, p.density, p.form, chi, h_tilde, alphas, run.cfg.solver);
    g_stage = "report";
    Json c = report_header(run.ctx);
    c["preset"] = p.cs.name;
    c["cutoff"] = {{"s", run.cfg.cutoff_s}, {"r", run.cfg.cutoff_r}};
    c["h_tilde"] = run.cfg.h_tilde;
    c.update(to_json(rep.constants));
    write_json(run.out("constants.json"), c);
    Json e = report_header(run.ctx);
    e["preset"] = p.cs.name;
    e["h_tilde"] = run.cfg.h_tilde;
    if (run.cfg.h_tilde == "eigen") e["lambda1"] = lambda;
    e.update(to_json(rep));
    write_json(run.out("energy_bound.json"), e);
    write_text(run.out("energy.csv"), energy_table(rep).str(run.ctx));
    if (run.plot) write_text(run.out("energy_plot.dat"), energy_plot_data(rep, run.ctx));
    const auto d = convergence_diagnostics(rep);
    std::cout << "experiment: sup E = " << num(rep.sup_energy) << ", C1^2 + 2 C2 = "
              << num(rep.bound) << ", margin " << num(rep.margin) << ", gap ratio "
              << num(d.gap_ratio) << "\n";
    return kOk;
  }
}

void print_result(const CriterionResult& r) {
  std::cout << "[" << (r.passed ? "PASS" : "FAIL") << "] " << r.id << " " << r.name << " (" << std::fixed
            << std::setprecision(2) << r.seconds << " s)" << std::defaultfloat << std::setprecision(6);
  if (!r.passed) std::cout << ": " << r.detail;
  std::cout << "\n";
}

template <int Dim>
int cmd_verify(const Run& run) {
  std::vector<CriterionResult> results;
  {
    const auto p = build_pipeline<Dim>(run.cfg, DriftMode::skew);
    g_stage = "configured case";
    results.push_back(verify_configured_case(p, run.cfg.resolvent_alphas, run.cfg.trials, run.cfg.seed, run.cfg.solver));
    print_result(results.back());
  }
  g_stage = "verification suite";
  for (auto& r : run_verification(run.cfg.seed, print_result)) results.push_back(std::move(r));
  g_stage = "report";
  bool ok = true;
  Json arr = Json::array();
  for (const auto& r : results) {
    ok = ok && r.passed;
    arr.push_back(to_json(r));
  }
  Json j = report_header(run.ctx);
  j["passed"] = ok;
  j["criteria"] = arr;
  write_json(run.out("verify.json"), j);
  write_text(run.out("verify.csv"), verification_csv(results).str(run.ctx));
  std::cout << "verify: " << (ok ? "all checks passed" : "FAILED") << "\n";
  return ok ? kOk : kVerificationFailed;
}

int cmd_mollifier(const Run& run) {
  g_stage = "mollifier";
  const auto rows = mollifier_table(run.cfg.mollifier_eps, run.cfg.t0, run.cfg.t1, run.cfg.points);
  g_stage = "report";
  write_text(run.out("mollifier.csv"), mollifier_csv(rows).str(run.ctx));
  if (run.plot) write_text(run.out("mollifier_plot.dat"), mollifier_plot_data(rows, run.ctx));
  Json j = report_header(run.ctx);
  j["eps"] = run.cfg.mollifier_eps;
  j["t0"] = run.cfg.t0;
  j["t1"] = run.cfg.t1;
  j["points"] = run.cfg.points;
  j["normalization"] = detail::bump_mass();
  write_json(run.out("mollifier.json"), j);
  std::cout << "mollifier: " << rows.size() << " rows -> " << run.out("mollifier.csv").string() << "\n";
  return kOk;
}

template <int Dim>
int cmd_vmo(const Run& run) {
  g_stage = "vmo";
  const auto& c = run.cfg;
  Ball<Dim> domain{to_point<Dim>(c.center), c.radius};
  if (c.domain == "box") {
    const Point<Dim> lo = to_point<Dim>(c.lo), hi = to_point<Dim>(c.hi);
    domain = {Point<Dim>(0.5 * (lo + hi)), 0.5 * (hi - lo).minCoeff()};
  }
  ScalarField<Dim> g;
  if (c.vmo_field == "constant") {
    g = [](const Point<Dim>&) { return 1.0; };
  } else if (c.vmo_field == "half_space") {
    const double x0 = domain.center[0];
    g = [x0](const Point<Dim>& x) { return x[0] > x0 ? 1.0 : 0.0; };
  } else {
    const Point<Dim> z = domain.center;
    g = [z](const Point<Dim>& x) { return example_i_phi<Dim>(Point<Dim>(x - z)); };
  }
  VmoOptions<Dim> o;
  o.radii = c.vmo_radii;
  o.centers = sample_centers_in_ball(Ball<Dim>{domain.center, 0.5 * domain.radius}, c.vmo_centers, c.seed);
  o.pairs = static_cast<std::size_t>(c.vmo_pairs);
  o.seed = c.seed + 1;
  const auto rep = vmo_modulus<Dim>(g, domain, o);
  g_stage = "report";
  write_text(run.out("vmo.csv"), vmo_csv(rep).str(run.ctx));
  Json j = report_header(run.ctx);
  j["field"] = c.vmo_field;
  j["ball"] = {{"center", std::vector<double>(domain.center.data(), domain.center.data() + Dim)}, {"radius", domain.radius}};
  j["radii"] = rep.radii;
  j["modulus"] = rep.modulus;
  j["standard_error"] = rep.standard_error;
  j["centers"] = rep.centers;
  j["pairs"] = rep.pairs;
  write_json(run.out("vmo.json"), j);
  if (run.plot) {
    std::ostringstream os;
    os << "# fplab " << version_string() << " config " << run.ctx.config_hash << "\n# radius modulus\n";
    for (std::size_t k = 0; k < rep.radii.size(); ++k)
      os << format_double(rep.radii[k]) << " " << format_double(rep.modulus[k]) << "\n";
    write_text(run.out("vmo_plot.dat"), os.str());
  }
  for (std::size_t k = 0; k < rep.radii.size(); ++k)
    std::cout << "vmo: R " << num(rep.radii[k]) << " modulus " << num(rep.modulus[k]) << " +- "
              << num(rep.standard_error[k]) << "\n";
  return kOk;
}

template <int Dim>
int dispatch(const std::string& command, const Run& run) {
  if (command == "mesh") return cmd_mesh<Dim>(run);
  if (command == "density") return cmd_density<Dim>(run);
  if (command == "resolvent") return cmd_resolvent<Dim>(run);
  if (command == "experiment") return cmd_experiment<Dim>(run);
  if (command == "verify") return cmd_verify<Dim>(run);
  if (command == "mollifier") return cmd_mollifier(run);
  return cmd_vmo<Dim>(run);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite element lab for stationary Fokker-Planck equations and their Dirichlet forms"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1, 1);
  std::string config_path;
  bool plot = false;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"mesh", "build the configured mesh and report its quality"},
      {"density", "solve for the invariant density and check the divergence-free identity"},
      {"resolvent", "sweep the resolvent over the configured alphas"},
      {"experiment", "compute the constants ledger and the energy bound experiment"},
      {"verify", "run the invariant suite on the configured case and acceptance criteria 1-10"},
      {"mollifier", "tabulate the mollifier family"},
      {"vmo", "estimate the VMO modulus of the configured field"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("config", config_path, "configuration file")->required();
    sub->add_flag("--emit-plot-data", plot, "also write two-column gnuplot data files");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    Run run;
    run.cfg = parse_config_file(config_path);
    run.ctx = {command, config_hash(run.cfg), run.cfg.seed, run.cfg.output};
    run.plot = plot;
    g_stage = "output";
    std::filesystem::create_directories(run.ctx.directory);
    return run.cfg.dim == 2 ? dispatch<2>(command, run) : dispatch<3>(command, run);
  } catch (const Error& e) {
    std::cerr << "fplab " << command << ": " << g_stage << " failed: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "fplab " << command << ": " << g_stage << " failed: " << e.what() << "\n";
    return kVerificationFailed;
  }
}
