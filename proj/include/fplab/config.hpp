#pragma once

#include "fplab/dirichlet_form.hpp"
#include "fplab/mesh_io.hpp"

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fplab {

// Grammar, one statement per line:
//   line    := blank | comment | section | entry
//   comment := ('#' | ';') any
//   section := '[' name ']'
//   entry   := key '=' value            (whitespace around key and value is trimmed)
// Keys are unique within a section; entries before the first section belong to section "".
// Lists are comma separated.
struct ConfigEntry {
  std::string value;
  int line = 0;
};

class RawConfig {
 public:
  static RawConfig parse(std::istream& is, const std::string& source = "<config>") {
    RawConfig c;
    c.source_ = source;
    std::string line, section;
    int n = 0;
    while (std::getline(is, line)) {
      ++n;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#' || t[0] == ';') continue;
      if (t.front() == '[') {
        if (t.back() != ']' || t.size() < 3) c.error(n, "malformed section header '" + t + "'");
        section = trim(t.substr(1, t.size() - 2));
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) c.error(n, "expected 'key = value', got '" + t + "'");
      const std::string key = trim(t.substr(0, eq));
      if (key.empty()) c.error(n, "empty key");
      const std::string full = section.empty() ? key : section + "." + key;
      if (c.entries_.count(full)) c.error(n, "duplicate key '" + full + "'");
      c.entries_[full] = {trim(t.substr(eq + 1)), n};
    }
    return c;
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  const ConfigEntry* find(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }

  [[noreturn]] void error(int line, const std::string& what) const {
    fail(ErrorCode::ConfigError, source_ + ":" + std::to_string(line) + ": " + what);
  }

  void reject_unused() const {
    for (const auto& [k, e] : entries_)
      if (!used_.count(k)) error(e.line, "unknown key '" + k + "'");
  }

  const std::string& source() const { return source_; }

  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

 private:
  std::string source_;
  std::map<std::string, ConfigEntry> entries_;
  mutable std::set<std::string> used_;
};

struct ExperimentConfig {
  // [domain]
  int dim = 3;
  std::string domain = "ball";  // ball | box
  std::vector<double> center{0.0, 0.0, 0.0};
  double radius = 1.0;
  std::vector<double> lo{-1.0, -1.0, -1.0};
  std::vector<double> hi{1.0, 1.0, 1.0};
  int cells = 4;
  int level = 2;
  // [coefficients]
  std::string preset = "gaussian_gradient";
  std::string A_file;  // sampled coefficient files replace the preset's A or H
  std::string H_file;
  double p = 0.0;  // 0 selects 2d
  double q = 2.0;
  // [cutoff]
  double cutoff_s = 0.5;
  double cutoff_r = 0.9;
  // [experiment]
  std::vector<double> alphas;  // empty selects 2^0 .. 2^16
  std::string h_tilde = "rho";  // rho | eigen | one
  // [form]
  DriftMode drift = DriftMode::skew;
  // [solver]
  SolverOptions solver;
  // [resolvent]
  std::vector<double> resolvent_alphas{1.0, 10.0, 100.0, 1000.0};
  int trials = 5;
  // [mollifier]
  double mollifier_eps = 0.1;
  double t0 = -0.5, t1 = 1.5;
  int points = 201;
  // [vmo]
  std::string vmo_field = "example_i";  // example_i | half_space | constant
  std::vector<double> vmo_radii{0.2, 0.1, 0.05, 0.025};
  int vmo_centers = 8;
  int vmo_pairs = 2000;
  // [output]
  std::string output = "out";
  std::uint64_t seed = 1;

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline double parse_double(const RawConfig& raw, const std::string& key, const ConfigEntry& e) {
  try {
    std::size_t used = 0;
    const double v = std::stod(e.value, &used);
    if (used != e.value.size() || !std::isfinite(v)) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    raw.error(e.line, "key '" + key + "' expects a number, got '" + e.value + "'");
  }
}

inline long long parse_int(const RawConfig& raw, const std::string& key, const ConfigEntry& e) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(e.value, &used);
    if (used != e.value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    raw.error(e.line, "key '" + key + "' expects an integer, got '" + e.value + "'");
  }
}

inline std::vector<double> parse_list(const RawConfig& raw, const std::string& key, const ConfigEntry& e) {
  std::vector<double> out;
  std::stringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(raw, key, {RawConfig::trim(item), e.line}));
  if (out.empty()) raw.error(e.line, "key '" + key + "' expects a comma-separated list");
  return out;
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s;
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& is, const std::string& source = "<config>") {
  const RawConfig raw = RawConfig::parse(is, source);
  ExperimentConfig c;
  auto num = [&](const std::string& k, double& dst) {
    if (const auto* e = raw.find(k)) dst = detail::parse_double(raw, k, *e);
  };
  auto integer = [&](const std::string& k, auto& dst, long long lo, long long hi) {
    if (const auto* e = raw.find(k)) {
      const long long v = detail::parse_int(raw, k, *e);
      if (v < lo || v > hi)
        raw.error(e->line, "key '" + k + "' must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      dst = static_cast<std::remove_reference_t<decltype(dst)>>(v);
    }
  };
  auto text = [&](const std::string& k, std::string& dst) {
    if (const auto* e = raw.find(k)) dst = e->value;
  };
  auto list = [&](const std::string& k, std::vector<double>& dst) {
    if (const auto* e = raw.find(k)) dst = detail::parse_list(raw, k, *e);
  };
  auto choice = [&](const std::string& k, std::string& dst, std::initializer_list<const char*> allowed) {
    if (const auto* e = raw.find(k)) {
      for (const char* a : allowed)
        if (e->value == a) {
          dst = e->value;
          return;
        }
      raw.error(e->line, "key '" + k + "' has unsupported value '" + e->value + "'");
    }
  };
  auto required = [&](const std::string& k) {
    if (!raw.has(k)) fail(ErrorCode::ConfigError, source + ": missing required key '" + k + "'");
  };

  required("domain.kind");
  integer("domain.dim", c.dim, 2, 3);
  choice("domain.kind", c.domain, {"ball", "box"});
  c.center.assign(c.dim, 0.0);
  c.lo.assign(c.dim, -1.0);
  c.hi.assign(c.dim, 1.0);
  if (c.domain == "ball") {
    required("domain.radius");
    num("domain.radius", c.radius);
    list("domain.center", c.center);
  } else {
    required("domain.lo");
    required("domain.hi");
    list("domain.lo", c.lo);
    list("domain.hi", c.hi);
    integer("domain.cells", c.cells, 1, 256);
  }
  integer("domain.level", c.level, 0, kMaxRefinementLevel);
  for (const auto* v : {&c.center, &c.lo, &c.hi})
    if (static_cast<int>(v->size()) != c.dim)
      fail(ErrorCode::ConfigError, source + ": domain coordinates must have " + std::to_string(c.dim) + " entries");

  text("coefficients.preset", c.preset);
  text("coefficients.A_file", c.A_file);
  text("coefficients.H_file", c.H_file);
  num("coefficients.p", c.p);
  num("coefficients.q", c.q);

  num("cutoff.s", c.cutoff_s);
  num("cutoff.r", c.cutoff_r);

  list("experiment.alphas", c.alphas);
  choice("experiment.h_tilde", c.h_tilde, {"rho", "eigen", "one"});

  std::string drift = to_string(c.drift);
  choice("form.drift_mode", drift, {"raw", "skew"});
  c.drift = parse_drift_mode(drift);

  std::string backend = to_string(c.solver.backend);
  choice("solver.backend", backend, {"direct", "krylov"});
  c.solver.backend = parse_solver_backend(backend);
  num("solver.tolerance", c.solver.tolerance);
  integer("solver.max_iterations", c.solver.max_iterations, 1, 100000000);

  list("resolvent.alphas", c.resolvent_alphas);
  integer("resolvent.trials", c.trials, 1, 100000);

  num("mollifier.eps", c.mollifier_eps);
  num("mollifier.t0", c.t0);
  num("mollifier.t1", c.t1);
  integer("mollifier.points", c.points, 2, 10000000);

  choice("vmo.field", c.vmo_field, {"example_i", "half_space", "constant"});
  list("vmo.radii", c.vmo_radii);
  integer("vmo.centers", c.vmo_centers, 1, 100000);
  integer("vmo.pairs", c.vmo_pairs, 1, 100000000);

  text("output.directory", c.output);
  integer("output.seed", c.seed, 0, std::numeric_limits<long long>::max());

  raw.reject_unused();

  auto invalid = [&](const std::string& key, const std::string& why) {
    fail(ErrorCode::ConfigError, source + ": key '" + key + "' " + why);
  };
  if (c.domain == "ball" && !(c.radius > 0.0)) invalid("domain.radius", "must be positive");
  if (c.domain == "box")
    for (int i = 0; i < c.dim; ++i)
      if (!(c.lo[i] < c.hi[i])) invalid("domain.hi", "must exceed domain.lo in every coordinate");
  if (!(c.cutoff_s > 0.0 && c.cutoff_s < c.cutoff_r)) invalid("cutoff.s", "must satisfy 0 < s < r");
  if (c.domain == "ball" && c.cutoff_r > c.radius) invalid("cutoff.r", "must not exceed the ball radius");
  for (double a : c.alphas)
    if (!(a > 0.0)) invalid("experiment.alphas", "must be positive");
  for (double a : c.resolvent_alphas)
    if (!(a > 0.0)) invalid("resolvent.alphas", "must be positive");
  if (!(c.solver.tolerance > 0.0)) invalid("solver.tolerance", "must be positive");
  if (!(c.mollifier_eps > 0.0)) invalid("mollifier.eps", "must be positive");
  if (!(c.t0 < c.t1)) invalid("mollifier.t1", "must exceed mollifier.t0");
  if (c.p != 0.0 && c.p < 2.0 * c.dim) invalid("coefficients.p", "must be at least 2d");
  if (c.q < 2.0) invalid("coefficients.q", "must be at least 2");
  if (std::find(preset_names().begin(), preset_names().end(), c.preset) == preset_names().end()) {
    invalid("coefficients.preset", "names an unknown preset '" + c.preset + "'");
  }
  return c;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, "cannot open config file '" + path + "'");
  return parse_config(in, path);
}

// Canonical form: every key in a fixed order, doubles at 17 significant digits.
inline std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "[domain]\n"
     << "kind = " << c.domain << "\n"
     << "dim = " << c.dim << "\n";
  if (c.domain == "ball") {
    os << "center = " << detail::join(c.center) << "\n"
       << "radius = " << format_double(c.radius) << "\n";
  } else {
    os << "lo = " << detail::join(c.lo) << "\n"
       << "hi = " << detail::join(c.hi) << "\n"
       << "cells = " << c.cells << "\n";
  }
  os << "level = " << c.level << "\n\n[coefficients]\n"
     << "preset = " << c.preset << "\n";
  if (!c.A_file.empty()) os << "A_file = " << c.A_file << "\n";
  if (!c.H_file.empty()) os << "H_file = " << c.H_file << "\n";
  os << "p = " << format_double(c.p) << "\n"
     << "q = " << format_double(c.q) << "\n\n[cutoff]\n"
     << "s = " << format_double(c.cutoff_s) << "\n"
     << "r = " << format_double(c.cutoff_r) << "\n\n[experiment]\n";
  if (!c.alphas.empty()) os << "alphas = " << detail::join(c.alphas) << "\n";
  os << "h_tilde = " << c.h_tilde << "\n\n[form]\n"
     << "drift_mode = " << to_string(c.drift) << "\n\n[solver]\n"
     << "backend = " << to_string(c.solver.backend) << "\n"
     << "tolerance = " << format_double(c.solver.tolerance) << "\n"
     << "max_iterations = " << c.solver.max_iterations << "\n\n[resolvent]\n"
     << "alphas = " << detail::join(c.resolvent_alphas) << "\n"
     << "trials = " << c.trials << "\n\n[mollifier]\n"
     << "eps = " << format_double(c.mollifier_eps) << "\n"
     << "t0 = " << format_double(c.t0) << "\n"
     << "t1 = " << format_double(c.t1) << "\n"
     << "points = " << c.points << "\n\n[vmo]\n"
     << "field = " << c.vmo_field << "\n"
     << "radii = " << detail::join(c.vmo_radii) << "\n"
     << "centers = " << c.vmo_centers << "\n"
     << "pairs = " << c.vmo_pairs << "\n\n[output]\n"
     << "directory = " << c.output << "\n"
     << "seed = " << c.seed << "\n";
  return os.str();
}

// 64-bit FNV-1a of the canonical serialization, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : serialize_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace fplab
