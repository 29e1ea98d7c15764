#pragma once

#include "fplab/config.hpp"
#include "fplab/verification.hpp"

#include <json.hpp>

#include <filesystem>

#ifndef FPLAB_VERSION_STRING
#define FPLAB_VERSION_STRING "unknown"
#endif

namespace fplab {

using Json = nlohmann::ordered_json;

inline std::string version_string() { return FPLAB_VERSION_STRING; }

struct ReportContext {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::filesystem::path directory;
};

inline Json report_header(const ReportContext& ctx) {
  return Json{{"command", ctx.command}, {"version", version_string()}, {"config_hash", ctx.config_hash},
              {"seed", ctx.seed}};
}

// Fixed-precision CSV: a commented provenance header, one header row, then rows.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add(const std::vector<std::string>& cells) {
    require(cells.size() == columns_.size(), ErrorCode::InvalidArgument, "csv row width does not match the header");
    rows_.push_back(cells);
  }

  void add(const std::vector<double>& values) {
    std::vector<std::string> cells;
    for (double v : values) cells.push_back(format_double(v));
    add(cells);
  }

  std::string str(const ReportContext& ctx) const {
    std::ostringstream os;
    os << "# fplab " << version_string() << " " << ctx.command << " config " << ctx.config_hash << "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
    os << "\n";
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << "\n";
    }
    return os.str();
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::InvalidArgument, "cannot write " + path.string());
  os << text;
  require(static_cast<bool>(os), ErrorCode::InvalidArgument, "failed writing " + path.string());
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

inline Json to_json(const MeshQuality& q) {
  return Json{{"min_volume", q.min_volume}, {"max_volume", q.max_volume}, {"shape_regularity", q.shape_regularity},
              {"max_diameter", q.max_diameter}, {"acute", q.acute}};
}

inline Json to_json(const DivergenceResidualReport& r) {
  return Json{{"max_residual", r.max_residual}, {"scale", r.scale}, {"relative", r.max_residual / r.scale},
              {"quadratic_defect", r.quadratic_defect}};
}

inline CsvTable residual_table(const DivergenceResidualReport& r) {
  CsvTable t({"vertex", "residual"});
  for (const auto& [j, v] : r.table) t.add(std::vector<std::string>{std::to_string(j), format_double(v)});
  return t;
}

inline Json to_json(const ResolventReport& r) {
  return Json{{"alpha", r.alpha},
              {"iterations", r.iterations},
              {"residual", r.residual},
              {"contraction_ratio", r.contraction_ratio},
              {"submarkov_min", r.submarkov_min},
              {"submarkov_max", r.submarkov_max}};
}

inline CsvTable resolvent_table(const std::vector<ResolventReport>& sweep, const ContractionReport& random) {
  CsvTable t({"alpha", "contraction_ratio", "residual", "iterations", "submarkov_min", "submarkov_max",
              "max_random_contraction"});
  for (const auto& r : sweep) {
    double worst = 0.0;
    for (const auto& [a, ratio] : random.ratios)
      if (a == r.alpha) worst = std::max(worst, ratio);
    t.add(std::vector<double>{r.alpha, r.contraction_ratio, r.residual, static_cast<double>(r.iterations),
                              r.submarkov_min, r.submarkov_max, worst});
  }
  return t;
}

inline Json to_json(const ConstantsReport& r) {
  Json c = Json::object();
  for (int i = 1; i <= 10; ++i) c["c" + std::to_string(i)] = r.c[i];
  Json prov = Json::object();
  for (const auto& [k, v] : r.provenance) prov[k] = v;
  return Json{{"dim", r.dim},
              {"K", r.K},
              {"gamma", r.gamma},
              {"c", c},
              {"C1", r.C1},
              {"C2", r.C2},
              {"bound", r.bound},
              {"inputs",
               {{"h_l2_mu", r.h_l2},
                {"Lchi_Ld", r.Lchi_ld},
                {"grad_chi_sup", r.grad_chi_sup},
                {"c_Ld", r.c_ld},
                {"f_l2star", r.f_l2star},
                {"F_l2", r.F_l2},
                {"lambda", r.lambda},
                {"M", r.M},
                {"rho_min", r.rho_min},
                {"rho_max", r.rho_max}}},
              {"provenance", prov}};
}

inline Json to_json(const EnergyBoundReport& r) {
  const auto d = convergence_diagnostics(r);
  Json rows = Json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"alpha", row.alpha},
                    {"E_alpha", row.energy},
                    {"l2_gap", row.gap},
                    {"raw_gap", row.raw_gap},
                    {"cut_gap", row.cut_gap},
                    {"h1_seminorm", row.h1_seminorm}});
  return Json{{"sup_energy", r.sup_energy},
              {"bound", r.bound},
              {"margin", r.margin},
              {"h_l2_mu", r.h_l2},
              {"projection_l2_mu", r.projection_l2},
              {"diagnostics",
               {{"gap_monotone", d.gap_monotone},
                {"gap_ratio", d.gap_ratio},
                {"gap_decays", d.gap_decays},
                {"d1_sup", d.d1_sup},
                {"d1_bound", d.d1_bound},
                {"d1_bounded", d.d1_bounded},
                {"cut_ratio", d.cut_ratio},
                {"cut_decays", d.cut_decays},
                {"margin_ok", d.margin_ok},
                {"passed", d.passed()}}},
              {"rows", rows}};
}

inline CsvTable energy_table(const EnergyBoundReport& r) {
  CsvTable t({"alpha", "E_alpha", "l2_gap", "h1_seminorm", "raw_gap", "cut_gap"});
  for (const auto& row : r.rows) t.add(std::vector<double>{row.alpha, row.energy, row.gap, row.h1_seminorm, row.raw_gap, row.cut_gap});
  return t;
}

// gnuplot-ready: comment header, then "alpha E_alpha" per line.
inline std::string energy_plot_data(const EnergyBoundReport& r, const ReportContext& ctx) {
  std::ostringstream os;
  os << "# fplab " << version_string() << " config " << ctx.config_hash << "\n";
  os << "# bound " << format_double(r.bound) << "\n";
  os << "# alpha E_alpha\n";
  for (const auto& row : r.rows) os << format_double(row.alpha) << " " << format_double(row.energy) << "\n";
  return os.str();
}

inline CsvTable mollifier_csv(const std::vector<MollifierRow>& rows) {
  CsvTable t({"t", "phi", "phi_prime", "Phi", "Phi_prime"});
  for (const auto& r : rows) t.add(std::vector<double>{r.t, r.phi, r.phi_prime, r.capital_phi, r.capital_phi_prime});
  return t;
}

inline std::string mollifier_plot_data(const std::vector<MollifierRow>& rows, const ReportContext& ctx) {
  std::ostringstream os;
  os << "# fplab " << version_string() << " config " << ctx.config_hash << "\n# t phi_eps\n";
  for (const auto& r : rows) os << format_double(r.t) << " " << format_double(r.phi) << "\n";
  return os.str();
}

inline CsvTable vmo_csv(const VmoReport& r) {
  CsvTable t({"radius", "modulus", "standard_error", "radius_mean"});
  for (std::size_t k = 0; k < r.radii.size(); ++k)
    t.add(std::vector<double>{r.radii[k], r.modulus[k], r.standard_error[k], r.radius_mean[k]});
  return t;
}

inline Json to_json(const CriterionResult& r) {
  Json m = Json::object();
  for (const auto& [k, v] : r.metrics) m[k] = v;
  return Json{{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}, {"metrics", m}};
}

// One row per metric so the table stays rectangular.
inline CsvTable verification_csv(const std::vector<CriterionResult>& results) {
  CsvTable t({"id", "name", "passed", "metric", "value"});
  for (const auto& r : results) {
    const std::vector<std::string> head{std::to_string(r.id), r.name, r.passed ? "1" : "0"};
    if (r.metrics.empty()) t.add(std::vector<std::string>{head[0], head[1], head[2], "", ""});
    for (const auto& [k, v] : r.metrics) t.add(std::vector<std::string>{head[0], head[1], head[2], k, format_double(v)});
  }
  return t;
}

}  // namespace fplab
