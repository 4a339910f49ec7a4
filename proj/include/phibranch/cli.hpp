// Command dispatch: solve (one Newton solve), trace (start points ->
// branches -> CSV + SVG), degree (Brouwer degree of f0(.,0) or a named map),
// diagram (re-render from CSV logs). Diagnostics go to stderr, data to
// files; exit 0 on success, 1 on domain errors, 2 on usage errors.
#pragma once

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "phibranch/config.hpp"
#include "phibranch/svg.hpp"

namespace phibranch {

namespace cli_detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void apply_env_seed(RunConfig& cfg) {
  if (const char* s = std::getenv("PHIBRANCH_SEED")) {
    try {
      cfg.seed = std::stoull(s);
    } catch (const std::exception&) {
      fail(errc::parse_error, "PHIBRANCH_SEED is not an integer");
    }
  }
}

inline StatePair random_start(const PeriodicGrid& g, int dim, double scale, Rng& rng) {
  StatePair s = StatePair::zero(g, dim);
  for (int i = 0; i < dim; ++i) {
    const double a0 = rng.uniform(-1, 1), a1 = rng.uniform(-1, 1), b1 = rng.uniform(-1, 1);
    for (int j = 0; j < g.n_nodes; ++j) {
      const double th = 2.0 * M_PI * g.node(j) / g.period;
      s.x1.values(i, j) = scale * (a0 + a1 * std::sin(th) + b1 * std::cos(th)) / 3.0;
      s.x2.values(i, j) = scale * 0.2 * (a1 * std::cos(th) - b1 * std::sin(th));
    }
  }
  return s;
}

inline void write_solution_csv(const SolutionPair& sol, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(errc::io_error, "cannot open '" + path + "' for writing");
  const int n = sol.state.dim();
  out << "t";
  for (int i = 0; i < n; ++i) out << ",x1_" << i;
  for (int i = 0; i < n; ++i) out << ",x2_" << i;
  out << "\n";
  for (int j = 0; j < sol.state.grid().n_nodes; ++j) {
    out << branch_io_detail::fmt17(sol.state.grid().node(j));
    for (int i = 0; i < n; ++i)
      out << ',' << branch_io_detail::fmt17(sol.state.x1.values(i, j));
    for (int i = 0; i < n; ++i)
      out << ',' << branch_io_detail::fmt17(sol.state.x2.values(i, j));
    out << "\n";
  }
}

inline MapFn named_map(const std::string& name) {
  if (name == "identity") return [](const Vec& p) -> Vec { return p; };
  if (name == "minus_identity") return [](const Vec& p) -> Vec { return -p; };
  if (name == "swap")
    return [](const Vec& p) -> Vec {
      Vec out(2);
      out << p[1], p[0];
      return out;
    };
  if (name == "complex_square")
    return [](const Vec& p) -> Vec {
      Vec out(2);
      out << p[0] * p[0] - p[1] * p[1], 2.0 * p[0] * p[1];
      return out;
    };
  if (name == "cubic_h0")
    return [](const Vec& p) -> Vec {
      Vec out(2);
      out << p[0] * p[0] * p[0] + p[0] * p[1] * p[1],
          p[1] * p[1] * p[1] + p[0] * p[0] * p[1];
      return out;
    };
  fail(errc::invalid_params,
       "unknown map '" + name +
           "' (known: identity, minus_identity, swap, complex_square, cubic_h0)");
}

inline Box parse_box(const std::vector<double>& b) {
  if (b.size() == 2) return Box::interval(b[0], b[1]);
  if (b.size() == 4) {
    Vec lo(2), hi(2);
    lo << b[0], b[2];
    hi << b[1], b[3];
    return Box(lo, hi);
  }
  fail(errc::usage_error, "--box needs lo,hi or lo1,hi1,lo2,hi2");
}

struct TraceArtifacts {
  std::vector<Branch> branches;
  TrivialStartReport report;
  std::vector<std::string> csv_paths;
  std::string svg_path;
};

inline TraceArtifacts run_trace(const RunConfig& cfg, std::ostream& log) {
  const RunSetup setup = instantiate(cfg);
  TraceArtifacts art;
  art.report = trivial_start_points(setup.bundle.problem, setup.domain, cfg.seed);
  log << "trivial start points in the box: " << art.report.zeros.size()
      << ", total degree " << art.report.total_degree << "\n";
  if (art.report.degree_warning)
    log << "warning: total degree is 0, no branch is guaranteed\n";
  if (art.report.zeros.empty())
    fail(errc::invalid_params, "no trivial start points found in the start box");

  std::filesystem::create_directories(cfg.output_dir);
  for (std::size_t k = 0; k < art.report.zeros.size(); ++k) {
    const auto& z = art.report.zeros[k];
    log << "start " << k << ": xbar = [" << z.zero.transpose() << "], local degree "
        << z.local_degree
        << (art.report.isolated[k] ? ", isolated (heuristic)" : ", not isolated") << "\n";
    const SolutionPair start =
        trivial_pair(setup.bundle.problem, setup.bundle.phi, z.zero, setup.grid,
                     setup.step.solver);
    Branch br = trace_branch(setup.bundle.problem, setup.bundle.phi, start, setup.domain,
                             setup.bundle.monitors, setup.step, cfg.seed);
    const TerminationReport rep = classify_termination(br, setup.domain);
    log << "branch " << k << ": " << br.points.size() << " points, " << br.termination_detail
        << "\n";
    log << "branch " << k << ": scenario " << scenario_name(rep.scenario) << ", max |lambda| "
        << rep.max_abs_lambda << ", max C1 " << rep.max_c1 << ", flagged points "
        << rep.flagged_points << "\n";
    const std::string name = k == 0 ? "branch.csv" : "branch_" + std::to_string(k) + ".csv";
    const std::string path = (std::filesystem::path(cfg.output_dir) / name).string();
    write_branch_csv(br, path);
    art.csv_paths.push_back(path);
    art.branches.push_back(std::move(br));
  }
  art.svg_path = (std::filesystem::path(cfg.output_dir) / "diagram.svg").string();
  const DiagramSpec dspec =
      DiagramSpec::from_run(setup.domain, setup.bundle.problem, setup.bundle.monitors);
  render_diagram_svg(art.branches, dspec, art.svg_path);
  log << "wrote " << art.svg_path << "\n";
  return art;
}

}  // namespace cli_detail

inline int run_command(int argc, const char* const* argv) {
  namespace cd = cli_detail;
  CLI::App app{"periodic phi-Laplacian branch toolkit"};
  app.require_subcommand(1);

  // solve
  auto* solve = app.add_subcommand("solve", "one Newton solve at a given lambda");
  std::string solve_problem, solve_config_path, solve_out = ".";
  double solve_lambda = 0.0;
  int solve_n = 0, solve_starts = 1;
  double solve_tol = 0.0;
  std::uint64_t solve_seed = 0;
  bool solve_seed_set = false;
  solve->add_option("--problem", solve_problem, "problem id (ex51|ex52|ex53|linval)");
  solve->add_option("--config", solve_config_path, "configuration file");
  solve->add_option("--lambda", solve_lambda, "parameter value")->required();
  solve->add_option("--n", solve_n, "grid nodes");
  solve->add_option("--tol", solve_tol, "residual tolerance");
  solve->add_option("--starts", solve_starts, "number of starting states to try");
  solve->add_option("--seed", solve_seed, "random seed")->each([&](const std::string&) {
    solve_seed_set = true;
  });
  solve->add_option("--out", solve_out, "output directory");

  // trace
  auto* trace = app.add_subcommand("trace", "trace branches from trivial pairs");
  std::string trace_config_path;
  trace->add_option("--config", trace_config_path, "configuration file")->required();

  // degree
  auto* degree = app.add_subcommand("degree", "Brouwer degree on a box");
  std::string degree_problem, degree_map;
  std::vector<double> degree_box;
  degree->add_option("--problem", degree_problem, "use the problem's f0(.,0)");
  degree->add_option("--map", degree_map, "named test map");
  degree->add_option("--box", degree_box, "box bounds lo,hi per dimension")
      ->required()
      ->delimiter(',');

  // diagram
  auto* diagram = app.add_subcommand("diagram", "re-render an SVG from branch CSV logs");
  std::vector<std::string> diagram_csvs;
  std::string diagram_out = "diagram.svg", diagram_config_path;
  diagram->add_option("--csv", diagram_csvs, "branch CSV files")->required();
  diagram->add_option("--out", diagram_out, "output SVG path");
  diagram->add_option("--config", diagram_config_path, "configuration file for the guides");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (solve->parsed()) {
      RunConfig cfg;
      if (!solve_config_path.empty()) cfg = parse_config(cd::read_file(solve_config_path));
      if (!solve_problem.empty()) cfg.problem_id = solve_problem;
      if (cfg.problem_id.empty())
        fail(errc::usage_error, "solve needs --problem or --config");
      if (solve_n > 0) cfg.grid_n = solve_n;
      if (solve_tol > 0.0) cfg.solver.residual_tol = solve_tol;
      if (solve_seed_set) cfg.seed = solve_seed;
      cd::apply_env_seed(cfg);

      const RunSetup setup = instantiate(cfg);
      Rng rng(cfg.seed);
      std::string last_error = "no attempts made";
      for (int attempt = 0; attempt < std::max(1, solve_starts); ++attempt) {
        StatePair start =
            attempt == 0
                ? StatePair::zero(setup.grid, setup.bundle.problem.dim)
                : cd::random_start(setup.grid, setup.bundle.problem.dim, 0.3, rng);
        try {
          const SolutionPair sol = newton_solve(setup.bundle.problem, setup.bundle.phi,
                                                solve_lambda, start, cfg.solver);
          std::filesystem::create_directories(solve_out);
          const std::string path =
              (std::filesystem::path(solve_out) / "solution.csv").string();
          cd::write_solution_csv(sol, path);
          std::cerr << "converged: lambda = " << sol.lambda << ", C1 norm = " << sol.c1_norm
                    << ", residual = " << sol.residual_sup << "\n";
          std::cerr << "wrote " << path << "\n";
          return 0;
        } catch (const NoConvergenceError& e) {
          last_error = e.what();
        } catch (const Error& e) {
          if (e.code() == errc::lambda_out_of_domain) throw;
          last_error = e.what();
        }
      }
      std::cerr << "failed after " << std::max(1, solve_starts) << " start(s): " << last_error
                << "\n";
      return 1;
    }

    if (trace->parsed()) {
      RunConfig cfg = parse_config(cd::read_file(trace_config_path));
      cd::apply_env_seed(cfg);
      cd::run_trace(cfg, std::cerr);
      return 0;
    }

    if (degree->parsed()) {
      const Box box = cd::parse_box(degree_box);
      MapFn f;
      if (!degree_problem.empty()) {
        RunConfig cfg;
        cfg.problem_id = degree_problem;
        const RunSetup setup = instantiate(cfg);
        if (setup.bundle.problem.dim != box.dim())
          fail(errc::usage_error, "box dimension does not match the problem");
        const ProblemField problem = setup.bundle.problem;
        f = [problem](const Vec& x) -> Vec { return problem.f0(x, Vec::Zero(x.size())); };
      } else if (!degree_map.empty()) {
        f = cd::named_map(degree_map);
      } else {
        fail(errc::usage_error, "degree needs --problem or --map");
      }
      const DegreeResult r = degree_on_box(f, box);
      std::cout << "degree = " << r.degree << "\n";
      std::cerr << "boundary min |f| = " << r.boundary_min_norm << ", evaluations = "
                << r.evaluations << "\n";
      return 0;
    }

    if (diagram->parsed()) {
      std::vector<DiagramPolyline> lines;
      double lo = 0.0, hi = 0.0, cmax = 0.0;
      bool first = true;
      for (const auto& p : diagram_csvs) {
        const auto rows = read_branch_csv(p);
        for (const auto& r : rows) {
          lo = first ? r.lambda : std::min(lo, r.lambda);
          hi = first ? r.lambda : std::max(hi, r.lambda);
          cmax = std::max(cmax, r.c1_norm);
          first = false;
        }
        lines.push_back(svg_detail::polyline_from_points(rows));
      }
      DiagramSpec spec;
      if (!diagram_config_path.empty()) {
        const RunConfig cfg = parse_config(cd::read_file(diagram_config_path));
        const RunSetup setup = instantiate(cfg);
        spec = DiagramSpec::from_run(setup.domain, setup.bundle.problem,
                                     setup.bundle.monitors);
      } else {
        spec.lambda_min = lo;
        spec.lambda_max = hi;
        spec.c1_ceiling = cmax > 0.0 ? cmax : 1.0;
      }
      render_diagram_svg_lines(lines, spec, diagram_out);
      std::cerr << "wrote " << diagram_out << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == errc::usage_error ? 2 : 1;
  }
  return 2;
}

}  // namespace phibranch
