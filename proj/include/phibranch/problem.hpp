// Problem data for (phi(x'))' = F(lambda,t,x,x') with T-periodic boundary
// conditions, and the grid-sampled state of its first-order form
// x1' = phi^{-1}(x2), x2' = F(lambda,t,x1,phi^{-1}(x2)).
#pragma once

#include <functional>
#include <limits>
#include <string>

#include "phibranch/grid.hpp"
#include "phibranch/phi.hpp"

namespace phibranch {

// Open interval of admissible parameters; endpoints may be infinite.
struct LambdaInterval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  static LambdaInterval all() { return {}; }
  static LambdaInterval open(double lo, double hi) { return {lo, hi}; }

  bool contains(double lambda) const { return lambda > lo && lambda < hi; }
  bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
};

using RhsFn = std::function<Vec(double lambda, double t, const Vec& x, const Vec& y)>;
using AutonomousFn = std::function<Vec(const Vec& x, const Vec& y)>;

// Right-hand side F, period, dimension, admissible lambda-interval and the
// autonomous slice f0 = F(0,.,.,.). Callbacks must be pure and reentrant;
// values are immutable after construction and safe to share across threads.
struct ProblemField {
  int dim = 0;
  double period = 0.0;
  LambdaInterval lambda_interval;
  RhsFn rhs;
  AutonomousFn autonomous_slice;
  std::string name;

  Vec f0(const Vec& x, const Vec& y) const { return autonomous_slice(x, y); }
};

// First-order state: x1 is the position, x2 = phi(x') the flux variable.
struct StatePair {
  GridFunction x1;
  GridFunction x2;

  StatePair() = default;
  StatePair(GridFunction a, GridFunction b) : x1(std::move(a)), x2(std::move(b)) {
    if (!(x1.grid == x2.grid) || x1.dim() != x2.dim())
      fail(errc::invalid_params, "StatePair slots must share grid and dimension");
  }

  const PeriodicGrid& grid() const { return x1.grid; }
  int dim() const { return x1.dim(); }

  static StatePair zero(const PeriodicGrid& g, int dim) {
    return StatePair(GridFunction(g, dim), GridFunction(g, dim));
  }
};

struct StateNorms {
  double sup_x = 0.0;
  double sup_xprime = 0.0;  // x' recovered as phi^{-1}(x2)
  double c1 = 0.0;          // sup_x + sup_xprime
  double l1_xprime = 0.0;   // dt * sum_j ||phi^{-1}(x2_j)||
};

inline StateNorms norms(const StatePair& s, const PhiOperator& phi) {
  StateNorms out;
  const int N = s.grid().n_nodes;
  const double dt = s.grid().dt();
  for (int j = 0; j < N; ++j) {
    out.sup_x = std::max(out.sup_x, s.x1.values.col(j).norm());
    const double v = phi.inverse(s.x2.values.col(j)).norm();
    out.sup_xprime = std::max(out.sup_xprime, v);
    out.l1_xprime += dt * v;
  }
  out.c1 = out.sup_x + out.sup_xprime;
  return out;
}

// A converged point (lambda, x) with its diagnostics.
struct SolutionPair {
  double lambda = 0.0;
  StatePair state;
  double residual_sup = 0.0;
  double c1_norm = 0.0;
};

}  // namespace phibranch
