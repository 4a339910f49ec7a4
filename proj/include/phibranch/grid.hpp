// Periodic grid calculus: uniform grids on [0,T) with wrap-around indexing,
// rectangle-rule means, trapezoid cumulative integrals (the discrete K_P) and
// centered differences. All second-order accurate on smooth inputs and exact
// on low-order trigonometric polynomials.
#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "phibranch/errors.hpp"

namespace phibranch {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Uniform partition of [0,T) into N nodes t_j = j*T/N. Node t_N is identified
// with t_0, so periodicity is structural rather than enforced.
struct PeriodicGrid {
  int n_nodes = 0;
  double period = 0.0;

  PeriodicGrid() = default;
  PeriodicGrid(int N, double T) : n_nodes(N), period(T) {
    if (N < 8) fail(errc::invalid_params, "PeriodicGrid requires N >= 8");
    if (!(T > 0.0)) fail(errc::invalid_params, "PeriodicGrid requires T > 0");
  }

  double dt() const { return period / n_nodes; }
  double node(int j) const { return period * j / n_nodes; }

  bool operator==(const PeriodicGrid& o) const {
    return n_nodes == o.n_nodes && period == o.period;
  }
};

// Samples of a T-periodic map [0,T) -> R^n; column j holds the value at t_j.
struct GridFunction {
  PeriodicGrid grid;
  Mat values;  // dim x N

  GridFunction() = default;
  GridFunction(const PeriodicGrid& g, int dim) : grid(g), values(Mat::Zero(dim, g.n_nodes)) {}
  GridFunction(const PeriodicGrid& g, Mat vals) : grid(g), values(std::move(vals)) {
    if (values.cols() != grid.n_nodes)
      fail(errc::invalid_params, "GridFunction value count does not match grid");
  }

  int dim() const { return static_cast<int>(values.rows()); }
  int n_nodes() const { return grid.n_nodes; }
  Vec at(int j) const { return values.col(((j % n_nodes()) + n_nodes()) % n_nodes()); }
};

// Build a grid function by sampling a callback at the nodes.
template <typename F>
GridFunction sample(const PeriodicGrid& g, int dim, F&& f) {
  GridFunction u(g, dim);
  for (int j = 0; j < g.n_nodes; ++j) u.values.col(j) = f(g.node(j));
  return u;
}

inline GridFunction constant_grid_function(const PeriodicGrid& g, const Vec& c) {
  GridFunction u(g, static_cast<int>(c.size()));
  u.values.colwise() = c;
  return u;
}

// max_j ||u_j||_2
inline double sup_norm(const GridFunction& u) {
  double m = 0.0;
  for (int j = 0; j < u.n_nodes(); ++j) m = std::max(m, u.values.col(j).norm());
  return m;
}

// Rectangle-rule mean (1/N) sum_j u_j; exact for trigonometric polynomials of
// degree < N on the uniform periodic grid.
inline Vec mean(const GridFunction& u) { return u.values.rowwise().mean(); }

// Centered periodic difference (u_{j+1} - u_{j-1}) / (2 dt).
inline GridFunction discrete_derivative(const GridFunction& u) {
  const int N = u.n_nodes();
  GridFunction d(u.grid, u.dim());
  const double two_dt = 2.0 * u.grid.dt();
  for (int j = 0; j < N; ++j) {
    const int jp = (j + 1) % N;
    const int jm = (j + N - 1) % N;
    d.values.col(j) = (u.values.col(jp) - u.values.col(jm)) / two_dt;
  }
  return d;
}

// Discrete K_P: periodic trapezoid antiderivative of a zero-mean input,
// shifted so the output has zero mean. Precondition mirrors Im L = ker Q:
// the input mean must vanish up to discretization noise.
inline GridFunction cumulative_integral_zero_mean(const GridFunction& u) {
  const Vec mu = mean(u);
  if (mu.norm() > 1e-10 * (1.0 + sup_norm(u)))
    fail(errc::non_zero_mean_input,
         "cumulative_integral_zero_mean requires a zero-mean input (K_P outside Im L)");

  const int N = u.n_nodes();
  const double dt = u.grid.dt();
  GridFunction v(u.grid, u.dim());
  Vec acc = Vec::Zero(u.dim());
  v.values.col(0) = acc;
  for (int j = 1; j < N; ++j) {
    acc += 0.5 * dt * (u.values.col(j - 1) + u.values.col(j));
    v.values.col(j) = acc;
  }
  const Vec shift = mean(v);
  v.values.colwise() -= shift;
  return v;
}

}  // namespace phibranch
