#pragma once

/** @file config.hh
    @brief Experiment configuration: a `key = value` text file with `#` comments
    and comma-separated lists. Unknown keys are rejected.
*/

#include "anisomg/fem.hh"
#include "anisomg/field.hh"
#include "anisomg/msbasis.hh"
#include "anisomg/solver.hh"
#include "anisomg/types.hh"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace anisomg {

/// Every recognised key with its default value.
inline const std::map<std::string, std::string>& config_defaults()
{
  static const std::map<std::string, std::string> d = {
      {"mesh.nx", "10"},
      {"mesh.ny", "10"},
      {"mesh.r", "4"},
      {"sim.degree", "2"},
      {"sim.tau", "5e-7"},
      {"sim.steps", "10"},
      {"sim.t0_center", "0.35,0.4"},
      {"sim.t0_sigma", "0.15"},
      {"sim.source_scale", "1"},
      {"field.kind", "single_island"},
      {"field.params", ""},
      {"field.k_perp", "1"},
      {"field.ratio", "1e6"},
      {"field.ratios", "1e6"},
      {"field.null_tolerance", "1e-12"},
      {"ms.J", "4"},
      {"ms.J_list", "1,4,16"},
      {"solve.mode", "multiscale"},
      {"solve.linear", "direct"},
      {"solver.precond", "twogrid"},
      {"solver.smoother", "sgs"},
      {"solver.smoothers", "sgs,jacobi"},
      {"solver.nu", "5"},
      {"solver.omega", "0.6666666666666666"},
      {"solver.rtol", "1e-5"},
      {"solver.maxiter", "100"},
      {"solver.identity_baseline", "true"},
      {"eig.max_dense", "4000"},
      {"eig.eps_factor", "1e-8"},
      {"analysis.seed", "12345"},
      {"analysis.samples", "100"},
      {"analysis.subdomains", "0"},
      {"analysis.max_dense", "2500"},
      {"analysis.corrupt_column", "-1"},
      {"output.dir", "out"},
  };
  return d;
}

namespace detail {

inline std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s)
{
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::string cell;
  std::istringstream is(s);
  while (std::getline(is, cell, ',')) out.push_back(trim(cell));
  return out;
}

inline double to_double(const std::string& key, const std::string& v)
{
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

inline long long to_int(const std::string& key, const std::string& v)
{
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  }
}

} // namespace detail

enum class SolveMode { Reference, Multiscale };

struct ExperimentConfig {
  std::map<std::string, std::string> raw; ///< resolved key/value pairs, defaults included

  int nx = 10, ny = 10, r = 4, degree = 2;
  double tau = 5e-7;
  int steps = 10;
  GaussianBump bump;
  double source_scale = 1.0;
  FieldSpec field;
  AnisotropySweep sweep;
  int J = 4;
  std::vector<int> J_list;
  SolveMode mode = SolveMode::Multiscale;
  LinearSolverKind linear = LinearSolverKind::Direct;
  bool two_grid = true;
  Smoother smoother;
  std::vector<SmootherKind> smoothers;
  double rtol = 1e-5;
  int maxiter = 100;
  bool identity_baseline = true;
  EigOptions eig;
  std::uint64_t seed = 12345;
  int samples = 100;
  int analysis_subdomains = 0; ///< 0 means all subdomains
  int analysis_max_dense = 2500;
  int corrupt_column = -1;
  std::string output_dir = "out";

  /// Canonical sorted serialization of every resolved key except the output directory.
  std::string canonical() const
  {
    std::string s;
    for (const auto& [k, v] : raw)
      if (k != "output.dir") s += k + "=" + v + "\n";
    return s;
  }

  /// FNV-1a 64-bit hash of the canonical text, as 16 hex digits.
  std::string hash() const
  {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical()) {
      h ^= c;
      h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  FineSolveOptions fine_options() const
  {
    FineSolveOptions o;
    o.linear = linear;
    o.two_grid = two_grid;
    o.smoother = smoother;
    o.rtol = rtol;
    o.maxiter = maxiter;
    return o;
  }
};

/// Applies `overrides` on top of the defaults, then parses and validates every value.
inline ExperimentConfig make_config(const std::map<std::string, std::string>& overrides)
{
  ExperimentConfig c;
  c.raw = config_defaults();
  for (const auto& [k, v] : overrides) {
    if (!c.raw.count(k)) throw ConfigError("config: unknown key '" + k + "'");
    c.raw[k] = v;
  }
  const auto& R = c.raw;
  const auto num = [&](const char* k) { return detail::to_double(k, R.at(k)); };
  const auto integer = [&](const char* k) { return detail::to_int(k, R.at(k)); };
  const auto numbers = [&](const char* k) {
    std::vector<double> out;
    for (const auto& s : detail::split_list(R.at(k))) out.push_back(detail::to_double(k, s));
    return out;
  };
  const auto boolean = [&](const char* k) {
    const std::string& v = R.at(k);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(std::string("config: '") + k + "' expects true or false");
  };

  c.nx = int(integer("mesh.nx"));
  c.ny = int(integer("mesh.ny"));
  c.r = int(integer("mesh.r"));
  c.degree = int(integer("sim.degree"));
  if (c.nx < 1 || c.ny < 1 || c.r < 1) throw ConfigError("config: mesh counts must be >= 1");
  if (c.degree != 1 && c.degree != 2) throw ConfigError("config: sim.degree must be 1 or 2");

  c.tau = num("sim.tau");
  c.steps = int(integer("sim.steps"));
  if (!(c.tau > 0.0)) throw ConfigError("config: sim.tau must be > 0");
  if (c.steps < 1) throw ConfigError("config: sim.steps must be >= 1");
  const auto center = numbers("sim.t0_center");
  if (center.size() != 2) throw ConfigError("config: sim.t0_center expects two numbers");
  c.bump.center = {center[0], center[1]};
  c.bump.sigma = num("sim.t0_sigma");
  c.bump.validate();
  c.source_scale = num("sim.source_scale");

  c.field.kind = field_kind_from_string(R.at("field.kind"));
  c.field.params = numbers("field.params");
  if (c.field.kind == FieldKind::Mixed && c.field.params.empty()) c.field.params = builtin_tests()[2].params;
  c.field.k_perp = num("field.k_perp");
  c.field.null_tolerance = num("field.null_tolerance");
  const double ratio = num("field.ratio");
  if (!(ratio >= 1.0)) throw ConfigError("config: field.ratio must be >= 1");
  c.field.k_par = ratio * c.field.k_perp;
  c.field.validate();
  c.sweep.ratios = numbers("field.ratios");
  c.sweep.validate();
  for (double x : c.sweep.ratios)
    if (x < 1.0) throw ConfigError("config: field.ratios entries must be >= 1");

  c.J = int(integer("ms.J"));
  if (c.J < 1) throw ConfigError("config: ms.J must be >= 1");
  for (const auto& s : detail::split_list(R.at("ms.J_list"))) {
    const long long j = detail::to_int("ms.J_list", s);
    if (j < 1) throw ConfigError("config: ms.J_list entries must be >= 1");
    c.J_list.push_back(int(j));
  }
  if (c.J_list.empty()) throw ConfigError("config: ms.J_list must not be empty");

  const std::string& mode = R.at("solve.mode");
  if (mode == "reference") c.mode = SolveMode::Reference;
  else if (mode == "multiscale") c.mode = SolveMode::Multiscale;
  else throw ConfigError("config: solve.mode must be reference or multiscale");
  const std::string& lin = R.at("solve.linear");
  if (lin == "direct") c.linear = LinearSolverKind::Direct;
  else if (lin == "pcg") c.linear = LinearSolverKind::Pcg;
  else throw ConfigError("config: solve.linear must be direct or pcg");
  const std::string& pc = R.at("solver.precond");
  if (pc == "twogrid") c.two_grid = true;
  else if (pc == "identity") c.two_grid = false;
  else throw ConfigError("config: solver.precond must be twogrid or identity");

  c.smoother.kind = smoother_kind_from_string(R.at("solver.smoother"));
  c.smoother.nu = int(integer("solver.nu"));
  c.smoother.omega = num("solver.omega");
  c.smoother.validate();
  for (const auto& s : detail::split_list(R.at("solver.smoothers"))) c.smoothers.push_back(smoother_kind_from_string(s));
  if (c.smoothers.empty()) throw ConfigError("config: solver.smoothers must not be empty");
  c.rtol = num("solver.rtol");
  c.maxiter = int(integer("solver.maxiter"));
  if (!(c.rtol > 0.0)) throw ConfigError("config: solver.rtol must be > 0");
  if (c.maxiter < 1) throw ConfigError("config: solver.maxiter must be >= 1");
  c.identity_baseline = boolean("solver.identity_baseline");

  c.eig.max_dense = int(integer("eig.max_dense"));
  c.eig.eps_factor = num("eig.eps_factor");
  c.eig.validate();

  const long long seed = integer("analysis.seed");
  if (seed < 0) throw ConfigError("config: analysis.seed must be >= 0");
  c.seed = std::uint64_t(seed);
  c.samples = int(integer("analysis.samples"));
  c.analysis_subdomains = int(integer("analysis.subdomains"));
  c.analysis_max_dense = int(integer("analysis.max_dense"));
  c.corrupt_column = int(integer("analysis.corrupt_column"));
  if (c.samples < 1) throw ConfigError("config: analysis.samples must be >= 1");
  if (c.analysis_subdomains < 0) throw ConfigError("config: analysis.subdomains must be >= 0");
  if (c.analysis_max_dense < 1) throw ConfigError("config: analysis.max_dense must be >= 1");

  c.output_dir = R.at("output.dir");
  if (c.output_dir.empty()) throw ConfigError("config: output.dir must not be empty");
  return c;
}

/// Parses `key = value` lines; `#` starts a comment. Duplicate keys are an error.
inline std::map<std::string, std::string> parse_config_text(std::istream& is)
{
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, val).second) throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return kv;
}

inline std::map<std::string, std::string> read_config_file(const std::string& path)
{
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file '" + path + "'");
  return parse_config_text(is);
}

} // namespace anisomg
