// Discrete coincidence equation. The fixed-point operator
//   Phi(u) = P u + J Q N(u) + K_P (Id - Q) N(u)
// is realized on the periodic grid with P,Q the mean projections, J the
// identity identification of constants, and K_P the zero-mean trapezoid
// antiderivative. A state solves the discrete problem iff u = Phi(u); the
// Newton solver works on the residual u - Phi(u) with a forward-difference
// Jacobian and dense LU.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "phibranch/problem.hpp"

namespace phibranch {

struct SolverConfig {
  double residual_tol = 1e-10;
  int max_newton_iters = 50;
  double fd_step = 1e-7;
  enum class Damping { None, LineSearch };
  Damping damping = Damping::LineSearch;
  int max_halvings = 30;

  void validate() const {
    if (!(residual_tol > 0.0)) fail(errc::invalid_params, "residual_tol must be > 0");
    if (max_newton_iters < 1) fail(errc::invalid_params, "max_newton_iters must be >= 1");
    if (max_halvings < 0 || max_halvings > 30)
      fail(errc::invalid_params, "line-search halvings must be in [0,30]");
  }
};

struct NewtonStats {
  int iterations = 0;
  double final_residual = 0.0;
  bool damped_mode = false;   // auto-engaged when some ||x2_j|| < 1e-8 (radial phi, q>0)
  bool snapped_zero = false;  // a zero-snapped candidate won the line search
};

namespace detail {

// Threshold below which phi^{-1} is effectively non-differentiable for
// PowerRadial operators; triggers damped Newton and snap candidates.
constexpr double kTinyFluxNorm = 1e-8;

inline bool radial_nonsmooth(const PhiOperator& phi) {
  return phi.kind() == PhiOperator::Kind::PowerRadial && phi.exponent() > 0.0;
}

inline bool has_tiny_flux_node(const StatePair& s) {
  for (int j = 0; j < s.grid().n_nodes; ++j)
    if (s.x2.values.col(j).norm() < kTinyFluxNorm) return true;
  return false;
}

}  // namespace detail

// Componentwise Nemitskii evaluation: first slot phi^{-1}(x2), second slot
// F(lambda, t, x1, phi^{-1}(x2)).
inline StatePair nemitskii(const ProblemField& problem, const PhiOperator& phi, double lambda,
                           const StatePair& s) {
  if (!problem.lambda_interval.contains(lambda)) {
    std::ostringstream os;
    os << "lambda = " << lambda << " outside the admissible interval";
    fail(errc::lambda_out_of_domain, os.str());
  }
  const int N = s.grid().n_nodes;
  StatePair w = StatePair::zero(s.grid(), s.dim());
  for (int j = 0; j < N; ++j) {
    const Vec v = phi.inverse(s.x2.values.col(j));
    w.x1.values.col(j) = v;
    w.x2.values.col(j) = problem.rhs(lambda, s.grid().node(j), s.x1.values.col(j), v);
  }
  return w;
}

// The discrete Phi operator.
inline StatePair phi_map(const ProblemField& problem, const PhiOperator& phi, double lambda,
                         const StatePair& s) {
  const StatePair w = nemitskii(problem, phi, lambda, s);
  const Vec p1 = mean(s.x1), p2 = mean(s.x2);    // P u
  const Vec q1 = mean(w.x1), q2 = mean(w.x2);    // J Q N(u)

  GridFunction w1_tilde = w.x1;
  w1_tilde.values.colwise() -= q1;
  GridFunction w2_tilde = w.x2;
  w2_tilde.values.colwise() -= q2;
  GridFunction k1 = cumulative_integral_zero_mean(w1_tilde);
  GridFunction k2 = cumulative_integral_zero_mean(w2_tilde);

  k1.values.colwise() += p1 + q1;
  k2.values.colwise() += p2 + q2;
  return StatePair(std::move(k1), std::move(k2));
}

struct Residual {
  StatePair r;
  double sup_norm = 0.0;
};

// r = s - Phi(lambda, s); sup over nodes and both slots of the vector norm.
inline Residual residual(const ProblemField& problem, const PhiOperator& phi, double lambda,
                         const StatePair& s) {
  const StatePair img = phi_map(problem, phi, lambda, s);
  Residual out;
  out.r = StatePair(GridFunction(s.grid(), s.x1.values - img.x1.values),
                    GridFunction(s.grid(), s.x2.values - img.x2.values));
  out.sup_norm = std::max(sup_norm(out.r.x1), sup_norm(out.r.x2));
  return out;
}

// Independent verification of the discrete ODE, not routed through Phi:
// centered differences of both slots against the Nemitskii fields.
inline double ode_residual_check(const SolutionPair& pair, const ProblemField& problem,
                                 const PhiOperator& phi) {
  const StatePair& s = pair.state;
  const GridFunction d1 = discrete_derivative(s.x1);
  const GridFunction d2 = discrete_derivative(s.x2);
  double e1 = 0.0, e2 = 0.0;
  for (int j = 0; j < s.grid().n_nodes; ++j) {
    const Vec v = phi.inverse(s.x2.values.col(j));
    e1 = std::max(e1, (d1.values.col(j) - v).norm());
    const Vec f = problem.rhs(pair.lambda, s.grid().node(j), s.x1.values.col(j), v);
    e2 = std::max(e2, (d2.values.col(j) - f).norm());
  }
  return e1 + e2;
}

namespace detail {

// Flat layout: x1 nodes first (column-major by node), then x2 nodes.
inline Vec flatten(const StatePair& s) {
  const int n = s.dim(), N = s.grid().n_nodes;
  Vec z(2 * n * N);
  for (int j = 0; j < N; ++j) z.segment(j * n, n) = s.x1.values.col(j);
  for (int j = 0; j < N; ++j) z.segment(n * N + j * n, n) = s.x2.values.col(j);
  return z;
}

inline StatePair unflatten(const Vec& z, const PeriodicGrid& g, int n) {
  StatePair s = StatePair::zero(g, n);
  const int N = g.n_nodes;
  for (int j = 0; j < N; ++j) s.x1.values.col(j) = z.segment(j * n, n);
  for (int j = 0; j < N; ++j) s.x2.values.col(j) = z.segment(n * N + j * n, n);
  return s;
}

// Sup norm in the residual's node metric (max vector norm over nodes/slots).
inline double flat_sup_norm(const Vec& r, int n, int N) {
  double m = 0.0;
  for (int j = 0; j < 2 * N; ++j) m = std::max(m, r.segment(j * n, n).norm());
  return m;
}

// Nodes below this norm are offered zeroed candidates during the line
// search. Exact branches of radial operators carry x2 == 0, where phi^{-1}
// has infinite slope and Newton updates leave poisonous dust; degenerate
// autonomous zeros (cubic fields) stall Newton around residual_tol^{1/3}.
// Landing exactly on zero resolves both. Snapped candidates only ever win a
// strict residual comparison, so a large threshold cannot degrade a solve.
constexpr double kSnapNodeNorm = 0.25;

// Zero near-zero flux nodes only; the workhorse along x2 == 0 branches.
inline Vec snap_flux(const Vec& z, int n, int N) {
  Vec out = z;
  for (int j = 0; j < N; ++j) {
    auto seg = out.segment(n * N + j * n, n);
    if (seg.norm() < kSnapNodeNorm) seg.setZero();
  }
  return out;
}

// Zero near-zero position nodes as well; the endgame near a trivial pair.
inline Vec snap_state(const Vec& z, int n, int N) {
  Vec out = snap_flux(z, n, N);
  for (int j = 0; j < N; ++j) {
    auto pos = out.segment(j * n, n);
    if (pos.norm() < kSnapNodeNorm) pos.setZero();
  }
  return out;
}

inline void check_lu_pivots(const Eigen::PartialPivLU<Mat>& lu) {
  const Vec diag = lu.matrixLU().diagonal().cwiseAbs();
  const double scale = diag.maxCoeff();
  if (diag.minCoeff() < 1e-14 * scale)
    fail(errc::singular_jacobian, "LU pivot below 1e-14 * scale in Newton solve");
}

}  // namespace detail

// Newton iteration on the residual of Phi. Forward-difference Jacobian with
// step fd_step*(1+|entry|), dense LU with partial pivoting, optional
// line-search damping. Throws NoConvergenceError or Error(singular_jacobian).
inline SolutionPair newton_solve(const ProblemField& problem, const PhiOperator& phi,
                                 double lambda, const StatePair& initial,
                                 const SolverConfig& cfg, NewtonStats* stats = nullptr) {
  cfg.validate();
  const PeriodicGrid g = initial.grid();
  const int n = initial.dim(), N = g.n_nodes;
  const int M = 2 * n * N;

  const auto eval = [&](const Vec& z) -> Vec {
    const StatePair s = detail::unflatten(z, g, n);
    const StatePair img = phi_map(problem, phi, lambda, s);
    return z - detail::flatten(img);
  };
  // Exploded iterates (overflow, K_P precondition loss) count as rejected
  // candidates rather than hard errors.
  const auto try_eval = [&](const Vec& z, Vec& out) -> double {
    try {
      out = eval(z);
    } catch (const Error& e) {
      if (e.code() == errc::lambda_out_of_domain) throw;
      return std::numeric_limits<double>::infinity();
    }
    const double rn = detail::flat_sup_norm(out, n, N);
    return std::isfinite(rn) ? rn : std::numeric_limits<double>::infinity();
  };

  NewtonStats local;
  Vec z = detail::flatten(initial);
  Vec r = eval(z);
  double rn = detail::flat_sup_norm(r, n, N);

  for (int iter = 0; iter < cfg.max_newton_iters; ++iter) {
    if (rn <= cfg.residual_tol) {
      const StatePair s = detail::unflatten(z, g, n);
      local.iterations = iter;
      local.final_residual = rn;
      if (stats) *stats = local;
      return SolutionPair{lambda, s, rn, norms(s, phi).c1};
    }

    Mat J(M, M);
    for (int i = 0; i < M; ++i) {
      const double h = cfg.fd_step * (1.0 + std::abs(z[i]));
      Vec zp = z;
      zp[i] += h;
      J.col(i) = (eval(zp) - r) / h;
    }
    Eigen::PartialPivLU<Mat> lu(J);
    detail::check_lu_pivots(lu);
    const Vec delta = lu.solve(-r);

    const bool nonsmooth_region =
        detail::radial_nonsmooth(phi) && detail::has_tiny_flux_node(detail::unflatten(z, g, n));
    bool damped = cfg.damping == SolverConfig::Damping::LineSearch || nonsmooth_region;
    local.damped_mode = local.damped_mode || nonsmooth_region;

    if (!damped) {
      Vec rp;
      const double rpn = try_eval(z + delta, rp);
      if (std::isfinite(rpn)) {
        z += delta;
        r = rp;
        rn = rpn;
        continue;
      }
      damped = true;  // plain step exploded; retreat to the line search
    }

    // Damped step: halve until the residual decreases; each candidate is also
    // tried with near-zero nodes snapped to exact zeros.
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k <= cfg.max_halvings; ++k, t *= 0.5) {
      Vec cand = z + t * delta;
      Vec rc;
      double rcn = try_eval(cand, rc);
      if (detail::radial_nonsmooth(phi)) {
        for (const Vec& snapped :
             {detail::snap_flux(cand, n, N), detail::snap_state(cand, n, N)}) {
          if (snapped == cand) continue;
          Vec rs;
          const double rsn = try_eval(snapped, rs);
          if (rsn < rcn) {
            cand = snapped;
            rc = rs;
            rcn = rsn;
            local.snapped_zero = true;
          }
        }
      }
      if (rcn < rn) {
        z = cand;
        r = rc;
        rn = rcn;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      std::ostringstream os;
      os << "line search stalled at iteration " << iter << ", residual " << rn;
      throw NoConvergenceError(iter, rn, os.str());
    }
  }

  if (rn <= cfg.residual_tol) {
    const StatePair s = detail::unflatten(z, g, n);
    local.iterations = cfg.max_newton_iters;
    local.final_residual = rn;
    if (stats) *stats = local;
    return SolutionPair{lambda, s, rn, norms(s, phi).c1};
  }
  std::ostringstream os;
  os << "no convergence after " << cfg.max_newton_iters << " iterations, residual " << rn;
  throw NoConvergenceError(cfg.max_newton_iters, rn, os.str());
}

}  // namespace phibranch
