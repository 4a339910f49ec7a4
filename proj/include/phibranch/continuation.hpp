// Branch tracing. From a certified trivial pair (0, xbar) the tracer runs a
// pseudo-arclength predictor-corrector in both parameter directions, checks
// every accepted point against the a-priori bound monitors, and classifies
// how the branch leaves the computable domain. The traced polyline is the
// numerical shadow of the connected set the existence theorem provides.
#pragma once

#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "phibranch/degree.hpp"
#include "phibranch/solver.hpp"

namespace phibranch {

// ---------------------------------------------------------------------------
// Domain, monitors, branch data.

struct DomainSpec {
  double lambda_min = -20.0;
  double lambda_max = 20.0;
  double c1_ceiling = 50.0;
  Box start_box;
  // Tracing stops this close to a finite endpoint of the admissible interval.
  double boundary_margin = 0.02;

  void validate(const ProblemField& problem) const {
    if (!(lambda_min < 0.0 && lambda_max > 0.0))
      fail(errc::invalid_params, "lambda_range must contain 0");
    if (!(lambda_min > problem.lambda_interval.lo && lambda_max < problem.lambda_interval.hi))
      fail(errc::invalid_params, "lambda_range must be contained in the admissible interval");
    if (start_box.dim() != problem.dim)
      fail(errc::invalid_params, "start_box dimension mismatch");
    if (!(c1_ceiling > start_box.diameter()))
      fail(errc::invalid_params, "c1_ceiling must exceed the start box diameter");
  }

  // Default range clipped into a bounded admissible interval.
  static DomainSpec for_problem(const ProblemField& problem, Box start) {
    DomainSpec spec;
    spec.start_box = std::move(start);
    const LambdaInterval& I = problem.lambda_interval;
    if (std::isfinite(I.lo)) spec.lambda_min = std::max(spec.lambda_min, I.lo + 1e-9);
    if (std::isfinite(I.hi)) spec.lambda_max = std::min(spec.lambda_max, I.hi - 1e-9);
    return spec;
  }
};

enum class Quantity { SupX, SupXPrime, C1, L1XPrime, AbsLambda };

// An a-priori bound lambda -> M(lambda) checked pointwise along branches.
struct BoundMonitor {
  std::string name;
  std::function<double(double)> bound_fn;
  Quantity quantity = Quantity::C1;

  double observed(double lambda, const StateNorms& n) const {
    switch (quantity) {
      case Quantity::SupX: return n.sup_x;
      case Quantity::SupXPrime: return n.sup_xprime;
      case Quantity::C1: return n.c1;
      case Quantity::L1XPrime: return n.l1_xprime;
      case Quantity::AbsLambda: return std::abs(lambda);
    }
    return 0.0;
  }
  bool violated(double lambda, const StateNorms& n) const {
    return observed(lambda, n) > bound_fn(lambda);
  }
};

enum class Termination {
  LambdaRangeExit,
  NormCeiling,
  LambdaDomainBoundaryLower,
  LambdaDomainBoundaryUpper,
  ReturnedToLambdaZero,
  StepFailure,
};

inline const char* termination_name(Termination t) {
  switch (t) {
    case Termination::LambdaRangeExit: return "LambdaRangeExit";
    case Termination::NormCeiling: return "NormCeiling";
    case Termination::LambdaDomainBoundaryLower: return "LambdaDomainBoundary(lower)";
    case Termination::LambdaDomainBoundaryUpper: return "LambdaDomainBoundary(upper)";
    case Termination::ReturnedToLambdaZero: return "ReturnedToLambdaZero";
    case Termination::StepFailure: return "StepFailure";
  }
  return "?";
}

struct BranchPoint {
  SolutionPair pair;
  StateNorms point_norms;
  // Signed cumulative arclength: positive along the forward direction,
  // negative along the backward one; 0 at the start point.
  double arclength = 0.0;
  std::vector<std::string> flags;
};

// Points are ordered [start, forward direction..., backward direction...];
// the sign of `arclength` separates the two polylines sharing the start.
struct Branch {
  std::vector<BranchPoint> points;
  SolutionPair start;
  double arclength = 0.0;  // total over both directions
  Termination termination = Termination::StepFailure;           // forward direction
  Termination termination_backward = Termination::StepFailure;  // backward direction
  std::string termination_detail;

  double max_abs_lambda() const {
    double m = 0.0;
    for (const auto& p : points) m = std::max(m, std::abs(p.pair.lambda));
    return m;
  }
  double max_c1() const {
    double m = 0.0;
    for (const auto& p : points) m = std::max(m, p.point_norms.c1);
    return m;
  }
  int flagged_count() const {
    int c = 0;
    for (const auto& p : points) c += p.flags.empty() ? 0 : 1;
    return c;
  }
};

struct StepConfig {
  double initial_step = 1e-2;
  double min_step = 1e-4;
  double max_step = 0.5;
  double growth = 1.3;
  int grow_after_successes = 3;
  int max_consecutive_halvings = 12;
  double first_tangent_h0 = 1e-3;
  int max_points_per_direction = 20000;
  SolverConfig solver;
};

// ---------------------------------------------------------------------------
// Trivial pair certification.

struct TrivialStartReport {
  std::vector<LocatedZero> zeros;
  // Heuristic only: no other located zero within radius 1e-3. Isolated
  // constant solutions make the branch contain pairs with lambda != 0.
  std::vector<bool> isolated;
  int total_degree = 0;
  bool degree_warning = false;  // total degree 0: no branch is guaranteed
};

// Constants xbar with f0(xbar, 0) = 0 located in the start box, each with its
// local degree, plus the total degree over the box.
inline TrivialStartReport trivial_start_points(const ProblemField& problem,
                                               const DomainSpec& spec,
                                               std::uint64_t seed = 42) {
  const MapFn slice = [&problem](const Vec& x) -> Vec {
    return problem.f0(x, Vec::Zero(problem.dim));
  };
  TrivialStartReport report;
  report.total_degree = degree_on_box(slice, spec.start_box).degree;
  report.zeros = locate_zeros_f0(slice, spec.start_box, seed);
  report.degree_warning = report.total_degree == 0;
  for (std::size_t i = 0; i < report.zeros.size(); ++i) {
    bool isolated = true;
    for (std::size_t k = 0; k < report.zeros.size(); ++k)
      if (k != i && (report.zeros[i].zero - report.zeros[k].zero).norm() < 1e-3)
        isolated = false;
    report.isolated.push_back(isolated);
  }
  return report;
}

// Builds the constant state for xbar and verifies it is a converged trivial
// pair at lambda = 0.
inline SolutionPair trivial_pair(const ProblemField& problem, const PhiOperator& phi,
                                 const Vec& xbar, const PeriodicGrid& grid,
                                 const SolverConfig& cfg) {
  StatePair s(constant_grid_function(grid, xbar),
              GridFunction(grid, problem.dim));
  const Residual r = residual(problem, phi, 0.0, s);
  if (r.sup_norm > cfg.residual_tol)
    fail(errc::invalid_params, "trivial_pair: xbar is not a converged constant solution");
  return SolutionPair{0.0, std::move(s), r.sup_norm, norms(s, phi).c1};
}

// ---------------------------------------------------------------------------
// Pseudo-arclength machinery.

namespace continuation_detail {

using detail::flat_sup_norm;
using detail::flatten;
using detail::unflatten;

// Weighted inner product on (z, lambda): discrete L2 mean over nodes plus the
// parameter component, so constant-state shifts carry their natural scale.
inline double wdot(const Vec& a, const Vec& b, int N) {
  const int M = static_cast<int>(a.size()) - 1;
  return a.head(M).dot(b.head(M)) / N + a[M] * b[M];
}
inline double wnorm(const Vec& a, int N) { return std::sqrt(wdot(a, a, N)); }

// |dlambda| + sup|dx1| + sup|dx2|: the product metric used for step control,
// arclength and the consecutive-point invariant.
inline double product_metric(const Vec& a, const Vec& b, int n, int N) {
  double m1 = 0.0, m2 = 0.0;
  for (int j = 0; j < N; ++j) {
    m1 = std::max(m1, (a.segment(j * n, n) - b.segment(j * n, n)).norm());
    m2 = std::max(m2, (a.segment(n * N + j * n, n) - b.segment(n * N + j * n, n)).norm());
  }
  const int M = 2 * n * N;
  return std::abs(a[M] - b[M]) + m1 + m2;
}

struct CorrectorResult {
  Vec y;  // [z; lambda]
  double residual_sup = 0.0;
};

// Newton on the augmented system [residual(lambda, z); <y - y_base, tan>_w - h].
inline CorrectorResult correct(const ProblemField& problem, const PhiOperator& phi,
                               const PeriodicGrid& grid, int n, const Vec& y_pred,
                               const Vec& y_base, const Vec& tangent, double h,
                               const SolverConfig& cfg) {
  const int N = grid.n_nodes;
  const int M = 2 * n * N;

  const auto eval = [&](const Vec& y) -> Vec {
    if (!problem.lambda_interval.contains(y[M]))
      fail(errc::lambda_out_of_domain, "corrector left the admissible interval");
    const StatePair s = unflatten(y.head(M), grid, n);
    const StatePair img = phi_map(problem, phi, y[M], s);
    Vec out(M + 1);
    out.head(M) = y.head(M) - flatten(img);
    out[M] = wdot(y - y_base, tangent, N) - h;
    return out;
  };

  Vec y = y_pred;
  Vec r = eval(y);
  double rn = flat_sup_norm(r.head(M), n, N);

  for (int iter = 0; iter < cfg.max_newton_iters; ++iter) {
    if (rn <= cfg.residual_tol && std::abs(r[M]) <= 1e-9) return CorrectorResult{y, rn};

    Mat J(M + 1, M + 1);
    for (int i = 0; i <= M; ++i) {
      double hfd = cfg.fd_step * (1.0 + std::abs(y[i]));
      Vec yp = y;
      if (i == M && !problem.lambda_interval.contains(y[M] + hfd)) hfd = -hfd;
      yp[i] += hfd;
      J.col(i) = (eval(yp) - r) / hfd;
    }
    // The constraint row is linear; assemble it exactly.
    for (int i = 0; i < M; ++i) J(M, i) = tangent[i] / N;
    J(M, M) = tangent[M];

    Eigen::PartialPivLU<Mat> lu(J);
    detail::check_lu_pivots(lu);
    const Vec delta = lu.solve(-r);

    double t = 1.0;
    bool accepted = false;
    const double total_prev = rn + std::abs(r[M]);
    for (int k = 0; k <= cfg.max_halvings; ++k, t *= 0.5) {
      Vec cand = y + t * delta;
      if (!problem.lambda_interval.contains(cand[M])) continue;
      Vec rc;
      try {
        rc = eval(cand);
      } catch (const Error&) {
        continue;
      }
      double rcn = flat_sup_norm(rc.head(M), n, N);
      if (detail::radial_nonsmooth(phi)) {
        const Vec zflux = detail::snap_flux(cand.head(M), n, N);
        const Vec zstate = detail::snap_state(cand.head(M), n, N);
        for (const Vec* zz : {&zflux, &zstate}) {
          Vec snapped = cand;
          snapped.head(M) = *zz;
          if (snapped == cand) continue;
          try {
            const Vec rs = eval(snapped);
            const double rsn = flat_sup_norm(rs.head(M), n, N);
            if (rsn + std::abs(rs[M]) < rcn + std::abs(rc[M])) {
              cand = snapped;
              rc = rs;
              rcn = rsn;
            }
          } catch (const Error&) {
          }
        }
      }
      if (rcn + std::abs(rc[M]) < total_prev) {
        y = cand;
        r = rc;
        rn = rcn;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw NoConvergenceError(iter, rn, "corrector line search stalled");
  }
  if (rn <= cfg.residual_tol && std::abs(r[M]) <= 1e-9) return CorrectorResult{y, rn};
  throw NoConvergenceError(SolverConfig().max_newton_iters, rn, "corrector did not converge");
}

// Solve at a fixed nearby lambda, retrying from constant perturbations of the
// start when the Jacobian at xbar is singular (e.g. cubic fields at 0).
inline SolutionPair solve_with_restarts(const ProblemField& problem, const PhiOperator& phi,
                                        double lambda, const StatePair& base,
                                        const SolverConfig& cfg, Rng& rng) {
  SolverConfig damped = cfg;
  damped.damping = SolverConfig::Damping::LineSearch;
  try {
    return newton_solve(problem, phi, lambda, base, damped);
  } catch (const Error&) {
  }
  for (const double delta : {1e-2, 5e-2, 0.2}) {
    for (int attempt = 0; attempt < 3; ++attempt) {
      StatePair s = base;
      Vec shift(problem.dim);
      for (int i = 0; i < problem.dim; ++i) shift[i] = rng.uniform(-delta, delta);
      s.x1.values.colwise() += shift;
      try {
        return newton_solve(problem, phi, lambda, s, damped);
      } catch (const Error&) {
      }
    }
  }
  throw NoConvergenceError(0, -1.0, "no converged corrector near the start point");
}

}  // namespace continuation_detail

// ---------------------------------------------------------------------------
// trace_branch

inline Branch trace_branch(const ProblemField& problem, const PhiOperator& phi,
                           const SolutionPair& start, const DomainSpec& spec,
                           const std::vector<BoundMonitor>& monitors, const StepConfig& step,
                           std::uint64_t seed = 42) {
  namespace cd = continuation_detail;
  spec.validate(problem);
  const PeriodicGrid grid = start.state.grid();
  const int n = problem.dim, N = grid.n_nodes;
  const int M = 2 * n * N;
  const LambdaInterval& I = problem.lambda_interval;

  if (start.residual_sup > step.solver.residual_tol || std::abs(start.lambda) > 0.0)
    fail(errc::invalid_params, "trace_branch needs a converged trivial pair at lambda = 0");

  Vec y0(M + 1);
  y0.head(M) = cd::flatten(start.state);
  y0[M] = 0.0;

  Rng rng(seed);

  // First tangents by secant: solve at lambda = +-h0 and difference.
  const auto initial_tangent = [&](double dir) -> std::optional<Vec> {
    const double lam = dir * step.first_tangent_h0;
    try {
      const SolutionPair sol =
          cd::solve_with_restarts(problem, phi, lam, start.state, step.solver, rng);
      Vec t(M + 1);
      t.head(M) = cd::flatten(sol.state) - y0.head(M);
      t[M] = lam;
      const double nn = cd::wnorm(t, N);
      if (!(nn > 0.0)) return std::nullopt;
      return Vec(t / nn);
    } catch (const Error&) {
      return std::nullopt;
    }
  };

  const std::optional<Vec> tan_fwd = initial_tangent(+1.0);
  const std::optional<Vec> tan_bwd = initial_tangent(-1.0);
  if (!tan_fwd && !tan_bwd)
    fail(errc::initial_tangent_failure,
         "neither lambda = +h0 nor lambda = -h0 admits a converged corrector");

  const auto monitor_flags = [&](double lambda, const StateNorms& nm) {
    std::vector<std::string> flags;
    for (const auto& m : monitors)
      if (m.violated(lambda, nm)) flags.push_back(m.name);
    return flags;
  };

  struct DirectionTrace {
    std::vector<BranchPoint> points;
    Termination termination = Termination::StepFailure;
    std::string detail;
    double arclength = 0.0;
  };

  const auto near_boundary = [&](double lambda) -> std::optional<Termination> {
    if (std::isfinite(I.lo) && lambda - I.lo <= spec.boundary_margin)
      return Termination::LambdaDomainBoundaryLower;
    if (std::isfinite(I.hi) && I.hi - lambda <= spec.boundary_margin)
      return Termination::LambdaDomainBoundaryUpper;
    return std::nullopt;
  };

  const auto trace_direction = [&](const Vec& tangent0, double sign) -> DirectionTrace {
    DirectionTrace out;
    Vec y = y0;
    Vec tan = tangent0;
    double h = step.initial_step;
    int halvings = 0, successes = 0;

    while (static_cast<int>(out.points.size()) < step.max_points_per_direction) {
      const Vec y_pred = y + h * tan;
      bool ok = true;
      cd::CorrectorResult cor;
      try {
        cor = cd::correct(problem, phi, grid, n, y_pred, y, tan, h, step.solver);
      } catch (const Error&) {
        ok = false;
      }
      double d = 0.0;
      if (ok) {
        d = cd::product_metric(cor.y, y, n, N);
        if (d > 4.0 * h + 1e-12 || d <= 0.0) ok = false;  // corrector wandered or stalled
      }

      if (!ok) {
        h *= 0.5;
        successes = 0;
        if (++halvings > step.max_consecutive_halvings || h < step.min_step) {
          if (const auto side = near_boundary(y[M]);
              side && std::abs(y[M]) > 10.0 * step.min_step) {
            out.termination = *side;
          } else {
            out.termination = Termination::StepFailure;
            std::ostringstream os;
            os << "step failure after " << halvings << " halvings at lambda = " << y[M]
               << ", h = " << h;
            out.detail = os.str();
          }
          return out;
        }
        continue;
      }

      halvings = 0;
      const Vec prev = y;
      Vec tan_new = cor.y - y;
      const double tn = cd::wnorm(tan_new, N);
      tan = tan_new / tn;
      y = cor.y;
      out.arclength += d;

      const StatePair s = cd::unflatten(y.head(M), grid, n);
      const double lambda = y[M];
      SolutionPair pair{lambda, s, cor.residual_sup, 0.0};
      StateNorms nm = norms(s, phi);
      pair.c1_norm = nm.c1;

      BranchPoint bp;
      bp.pair = std::move(pair);
      bp.point_norms = nm;
      bp.arclength = sign * out.arclength;
      bp.flags = monitor_flags(lambda, nm);
      if (std::abs(lambda) <= 1e-8 && out.arclength > 0.0) {
        GridFunction dev = s.x1;
        dev.values.colwise() -= mean(s.x1);
        if (sup_norm(dev) > 1e-6) bp.flags.push_back("nonconstant_at_lambda0");
      }
      out.points.push_back(std::move(bp));

      // Termination checks on the accepted point.
      if (lambda > spec.lambda_max || lambda < spec.lambda_min) {
        // Pin the exit point to the range edge when a fixed-lambda solve lands.
        const double edge = lambda > spec.lambda_max ? spec.lambda_max : spec.lambda_min;
        try {
          const SolutionPair pinned = newton_solve(problem, phi, edge, s, step.solver);
          BranchPoint& last = out.points.back();
          const StateNorms pm = norms(pinned.state, phi);
          Vec ypin(M + 1);
          ypin.head(M) = cd::flatten(pinned.state);
          ypin[M] = edge;
          out.arclength += cd::product_metric(ypin, prev, n, N) - d;
          last.arclength = sign * out.arclength;
          last.point_norms = pm;
          last.flags = monitor_flags(edge, pm);
          last.pair = pinned;
        } catch (const Error&) {
        }
        out.termination = Termination::LambdaRangeExit;
        return out;
      }
      if (nm.c1 > spec.c1_ceiling) {
        out.termination = Termination::NormCeiling;
        return out;
      }
      if (const auto side = near_boundary(lambda)) {
        out.termination = *side;
        return out;
      }
      if (std::abs(lambda) < 1e-4 && out.arclength > 0.1) {
        const double dist = cd::product_metric(y, y0, n, N);
        if (dist > 1e-2) {
          out.termination = Termination::ReturnedToLambdaZero;
          std::ostringstream os;
          os << "returned to lambda = 0 at distance " << dist << " from the start";
          out.detail = os.str();
          return out;
        }
      }

      if (++successes >= step.grow_after_successes) {
        h = std::min(h * step.growth, step.max_step);
        successes = 0;
      }
    }
    out.termination = Termination::StepFailure;
    out.detail = "maximum number of points reached";
    return out;
  };

  Branch branch;
  branch.start = start;
  StateNorms start_norms = norms(start.state, phi);
  BranchPoint start_point;
  start_point.pair = start;
  start_point.point_norms = start_norms;
  start_point.arclength = 0.0;
  start_point.flags = monitor_flags(0.0, start_norms);
  branch.points.push_back(std::move(start_point));

  DirectionTrace fwd, bwd;
  if (tan_fwd) fwd = trace_direction(*tan_fwd, +1.0);
  if (tan_bwd) bwd = trace_direction(*tan_bwd, -1.0);

  for (auto& p : fwd.points) branch.points.push_back(std::move(p));
  for (auto& p : bwd.points) branch.points.push_back(std::move(p));
  branch.arclength = fwd.arclength + bwd.arclength;
  branch.termination = tan_fwd ? fwd.termination : Termination::StepFailure;
  branch.termination_backward = tan_bwd ? bwd.termination : Termination::StepFailure;

  std::ostringstream os;
  os << "forward: " << termination_name(branch.termination);
  if (!fwd.detail.empty()) os << " (" << fwd.detail << ")";
  os << "; backward: " << termination_name(branch.termination_backward);
  if (!bwd.detail.empty()) os << " (" << bwd.detail << ")";
  branch.termination_detail = os.str();
  return branch;
}

// ---------------------------------------------------------------------------
// Termination classification against the paper's scenarios.

enum class Scenario {
  UnboundedInLambda,
  UnboundedInX_BoundedLambda,
  ApproachesLambdaDomainBoundary,
  ClosedLoopReturn,
  Indeterminate,
};

inline const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::UnboundedInLambda: return "UnboundedInLambda";
    case Scenario::UnboundedInX_BoundedLambda: return "UnboundedInX_BoundedLambda";
    case Scenario::ApproachesLambdaDomainBoundary: return "ApproachesLambdaDomainBoundary";
    case Scenario::ClosedLoopReturn: return "ClosedLoopReturn";
    case Scenario::Indeterminate: return "Indeterminate";
  }
  return "?";
}

struct TerminationReport {
  Scenario scenario = Scenario::Indeterminate;
  double max_abs_lambda = 0.0;
  double max_c1 = 0.0;
  int flagged_points = 0;
};

inline TerminationReport classify_termination(const Branch& branch, const DomainSpec&) {
  if (branch.points.empty()) fail(errc::invalid_params, "classify_termination: empty branch");
  const auto map_one = [](Termination t) -> Scenario {
    switch (t) {
      case Termination::LambdaRangeExit: return Scenario::UnboundedInLambda;
      case Termination::NormCeiling: return Scenario::UnboundedInX_BoundedLambda;
      case Termination::LambdaDomainBoundaryLower:
      case Termination::LambdaDomainBoundaryUpper:
        return Scenario::ApproachesLambdaDomainBoundary;
      case Termination::ReturnedToLambdaZero: return Scenario::ClosedLoopReturn;
      case Termination::StepFailure: return Scenario::Indeterminate;
    }
    return Scenario::Indeterminate;
  };
  TerminationReport report;
  report.scenario = map_one(branch.termination);
  if (report.scenario == Scenario::Indeterminate)
    report.scenario = map_one(branch.termination_backward);
  report.max_abs_lambda = branch.max_abs_lambda();
  report.max_c1 = branch.max_c1();
  report.flagged_points = branch.flagged_count();
  return report;
}

}  // namespace phibranch
