// Line-oriented run configuration: `key = value` entries under [section]
// headers (problem, grid, solver, domain, output). Unknown keys are hard
// errors; referenced keys are validated against the chosen problem's schema
// before any computation.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "phibranch/catalog.hpp"

namespace phibranch {

struct RunConfig {
  std::string problem_id;
  ExampleParams params;
  int grid_n = 128;
  SolverConfig solver;
  std::optional<double> lambda_min, lambda_max;  // defaults derived from the problem
  double c1_ceiling = 50.0;
  std::optional<std::vector<double>> start_box;  // lo1,hi1[,lo2,hi2]
  double boundary_margin = 0.02;
  std::uint64_t seed = 42;
  std::string output_dir = ".";
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double to_double(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(errc::parse_error, "line " + std::to_string(line) + ": bad number '" + v + "'");
  }
}

inline long to_int(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(errc::parse_error, "line " + std::to_string(line) + ": bad integer '" + v + "'");
  }
}

inline bool to_bool(const std::string& v, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(errc::parse_error, "line " + std::to_string(line) + ": bad boolean '" + v + "'");
}

// Keys of [problem] each catalog entry accepts, beyond the mandatory id.
inline const std::set<std::string>& problem_keys(const std::string& id) {
  static const std::map<std::string, std::set<std::string>> tbl = {
      {"ex51", {"T", "e1", "e2", "a1", "a2", "R", "gradient_term"}},
      {"ex52", {"T", "e1", "e2", "a2"}},
      {"ex53", {"T", "e1", "e2", "delta", "C0", "sigma", "R0"}},
      {"linval", {"T"}},
  };
  const auto it = tbl.find(id);
  if (it == tbl.end()) fail(errc::invalid_params, "unknown problem id '" + id + "'");
  return it->second;
}

}  // namespace config_detail

inline RunConfig parse_config(const std::string& text) {
  namespace cd = config_detail;
  struct Entry {
    std::string value;
    int line;
  };
  std::map<std::string, Entry> entries;  // "section.key" -> value
  std::string section;
  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = cd::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail(errc::parse_error, "line " + std::to_string(lineno) + ": unterminated section");
      section = cd::trim(line.substr(1, line.size() - 2));
      if (section != "problem" && section != "grid" && section != "solver" &&
          section != "domain" && section != "output")
        fail(errc::unknown_key, "line " + std::to_string(lineno) + ": unknown section [" +
                                    section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(errc::parse_error, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = cd::trim(line.substr(0, eq));
    const std::string value = cd::trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      fail(errc::parse_error, "line " + std::to_string(lineno) + ": empty key or value");
    if (section.empty())
      fail(errc::parse_error,
           "line " + std::to_string(lineno) + ": key outside any [section]");
    const std::string full = section + "." + key;
    if (entries.count(full))
      fail(errc::parse_error, "line " + std::to_string(lineno) + ": duplicate key " + full);
    entries[full] = Entry{value, lineno};
  }

  const auto id_it = entries.find("problem.id");
  if (id_it == entries.end())
    fail(errc::missing_required, "problem.id is required");

  RunConfig cfg;
  cfg.problem_id = id_it->second.value;
  const std::set<std::string>& allowed = cd::problem_keys(cfg.problem_id);
  entries.erase(id_it);

  for (const auto& [full, entry] : entries) {
    const auto dot = full.find('.');
    const std::string section_name = full.substr(0, dot);
    const std::string key = full.substr(dot + 1);
    const std::string& v = entry.value;
    const int line = entry.line;
    if (section_name == "problem") {
      if (!allowed.count(key))
        fail(errc::unknown_key, "line " + std::to_string(line) + ": key '" + key +
                                    "' not accepted by problem " + cfg.problem_id);
      if (key == "T") {
        cfg.params.T = cd::to_double(v, line);
        if (!(cfg.params.T > 0.0))
          fail(errc::parse_error, "line " + std::to_string(line) + ": T must be positive");
      } else if (key == "e1") {
        cfg.params.e1 = TimeFunc::parse(v);
      } else if (key == "e2") {
        cfg.params.e2 = TimeFunc::parse(v);
      } else if (key == "a1") {
        cfg.params.a1 = cd::to_double(v, line);
      } else if (key == "a2") {
        cfg.params.a2 = cd::to_double(v, line);
      } else if (key == "R") {
        cfg.params.R = cd::to_double(v, line);
      } else if (key == "gradient_term") {
        cfg.params.gradient_term = cd::to_bool(v, line);
      } else if (key == "delta") {
        cfg.params.delta = cd::to_double(v, line);
      } else if (key == "C0") {
        cfg.params.C0 = cd::to_double(v, line);
      } else if (key == "sigma") {
        cfg.params.sigma = cd::to_double(v, line);
      } else if (key == "R0") {
        cfg.params.R0 = cd::to_double(v, line);
      }
    } else if (section_name == "grid") {
      if (key == "n") {
        const long n = cd::to_int(v, line);
        if (n < 8)
          fail(errc::parse_error, "line " + std::to_string(line) + ": grid n must be >= 8");
        cfg.grid_n = static_cast<int>(n);
      } else {
        fail(errc::unknown_key, "line " + std::to_string(line) + ": unknown key grid." + key);
      }
    } else if (section_name == "solver") {
      if (key == "residual_tol") {
        cfg.solver.residual_tol = cd::to_double(v, line);
        if (!(cfg.solver.residual_tol > 0.0))
          fail(errc::parse_error, "line " + std::to_string(line) + ": residual_tol must be > 0");
      } else if (key == "max_newton_iters") {
        const long n = cd::to_int(v, line);
        if (n < 1)
          fail(errc::parse_error,
               "line " + std::to_string(line) + ": max_newton_iters must be >= 1");
        cfg.solver.max_newton_iters = static_cast<int>(n);
      } else if (key == "fd_step") {
        cfg.solver.fd_step = cd::to_double(v, line);
      } else if (key == "damping") {
        if (v == "none")
          cfg.solver.damping = SolverConfig::Damping::None;
        else if (v == "linesearch")
          cfg.solver.damping = SolverConfig::Damping::LineSearch;
        else
          fail(errc::parse_error, "line " + std::to_string(line) + ": damping is none|linesearch");
      } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(cd::to_int(v, line));
      } else {
        fail(errc::unknown_key, "line " + std::to_string(line) + ": unknown key solver." + key);
      }
    } else if (section_name == "domain") {
      if (key == "lambda_min") {
        cfg.lambda_min = cd::to_double(v, line);
      } else if (key == "lambda_max") {
        cfg.lambda_max = cd::to_double(v, line);
      } else if (key == "c1_ceiling") {
        cfg.c1_ceiling = cd::to_double(v, line);
        if (!(cfg.c1_ceiling > 0.0))
          fail(errc::parse_error, "line " + std::to_string(line) + ": c1_ceiling must be > 0");
      } else if (key == "start_box") {
        cfg.start_box = catalog_detail::parse_csv_numbers(v, "start_box");
      } else if (key == "boundary_margin") {
        cfg.boundary_margin = cd::to_double(v, line);
      } else {
        fail(errc::unknown_key, "line " + std::to_string(line) + ": unknown key domain." + key);
      }
    } else if (section_name == "output") {
      if (key == "dir") {
        cfg.output_dir = v;
      } else {
        fail(errc::unknown_key, "line " + std::to_string(line) + ": unknown key output." + key);
      }
    }
  }
  return cfg;
}

// Assembled run pieces derived from a parsed configuration.
struct RunSetup {
  ExampleBundle bundle;
  PeriodicGrid grid;
  DomainSpec domain;
  StepConfig step;
};

inline RunSetup instantiate(const RunConfig& cfg) {
  RunSetup setup;
  setup.bundle = make_example(cfg.problem_id, cfg.params);
  setup.grid = PeriodicGrid(cfg.grid_n, setup.bundle.problem.period);

  Box start = Box::square(-1.0, 1.0);
  if (setup.bundle.problem.dim == 1) start = Box::interval(-1.0, 1.0);
  if (cfg.start_box) {
    const auto& b = *cfg.start_box;
    if (static_cast<int>(b.size()) != 2 * setup.bundle.problem.dim)
      fail(errc::parse_error, "start_box needs lo,hi per dimension");
    Vec lo(setup.bundle.problem.dim), hi(setup.bundle.problem.dim);
    for (int i = 0; i < setup.bundle.problem.dim; ++i) {
      lo[i] = b[2 * i];
      hi[i] = b[2 * i + 1];
    }
    start = Box(lo, hi);
  }
  setup.domain = DomainSpec::for_problem(setup.bundle.problem, start);
  if (cfg.lambda_min) setup.domain.lambda_min = *cfg.lambda_min;
  if (cfg.lambda_max) setup.domain.lambda_max = *cfg.lambda_max;
  setup.domain.c1_ceiling = cfg.c1_ceiling;
  setup.domain.boundary_margin = cfg.boundary_margin;
  setup.domain.validate(setup.bundle.problem);

  setup.step.solver = cfg.solver;
  return setup;
}

}  // namespace phibranch
