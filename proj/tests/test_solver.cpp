#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "phibranch/catalog.hpp"
#include "phibranch/solver.hpp"

using namespace phibranch;

namespace {

// Random smooth periodic state built from a couple of Fourier modes.
StatePair random_state(const PeriodicGrid& g, int dim, double scale, Rng& rng) {
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

}  // namespace

TEST_CASE("nemitskii maps zero through a vanishing field") {
  const ExampleBundle b = make_example_53(ExampleParams{});
  PeriodicGrid g(32, b.problem.period);
  const StatePair s = StatePair::zero(g, 2);
  const StatePair w = nemitskii(b.problem, b.phi, 0.0, s);
  CHECK(sup_norm(w.x1) == 0.0);
  CHECK(sup_norm(w.x2) == 0.0);
}

TEST_CASE("nemitskii second slot equals the autonomous slice at lambda 0") {
  const ExampleBundle b = make_example_52(ExampleParams{});
  PeriodicGrid g(16, b.problem.period);
  Rng rng(31);
  const StatePair s = random_state(g, 2, 1.0, rng);
  const StatePair w = nemitskii(b.problem, b.phi, 0.0, s);
  for (int j = 0; j < g.n_nodes; ++j) {
    const Vec v = b.phi.inverse(s.x2.values.col(j));
    const Vec expect = b.problem.f0(s.x1.values.col(j), v);
    CHECK((w.x2.values.col(j) - expect).norm() == 0.0);
  }
}

TEST_CASE("nemitskii rejects lambda outside the admissible interval") {
  const ExampleBundle b = make_example_53(ExampleParams{});
  PeriodicGrid g(16, b.problem.period);
  const StatePair s = StatePair::zero(g, 2);
  try {
    nemitskii(b.problem, b.phi, 1.5, s);
    FAIL("expected LambdaOutOfDomain");
  } catch (const Error& e) {
    CHECK(e.code() == errc::lambda_out_of_domain);
  }
}

TEST_CASE("phi_map of a constant state keeps only the mean terms") {
  const ExampleBundle b = make_example_52(ExampleParams{});
  PeriodicGrid g(32, b.problem.period);
  Vec c1(2), c2(2);
  c1 << 0.3, -0.2;
  c2 << 0.1, 0.4;
  const StatePair s(constant_grid_function(g, c1), constant_grid_function(g, c2));
  const StatePair img = phi_map(b.problem, b.phi, 0.0, s);
  // N is constant over nodes, so the K_P term vanishes and the image is the
  // constant (c1, c2) plus the mean of N.
  const Vec w1 = b.phi.inverse(c2);
  const Vec w2 = b.problem.f0(c1, w1);
  for (int j = 0; j < g.n_nodes; ++j) {
    CHECK((img.x1.values.col(j) - (c1 + w1)).norm() <= 1e-14);
    CHECK((img.x2.values.col(j) - (c2 + w2)).norm() <= 1e-14);
  }
}

TEST_CASE("K_P part of phi_map has zero mean in both slots") {
  const ExampleBundle b = make_example_52(ExampleParams{});
  PeriodicGrid g(64, b.problem.period);
  Rng rng(5);
  const StatePair s = random_state(g, 2, 0.7, rng);
  const StatePair w = nemitskii(b.problem, b.phi, 0.1, s);
  const StatePair img = phi_map(b.problem, b.phi, 0.1, s);
  // Subtract P u + J Q N(u); what remains is the K_P term.
  const Vec p1 = mean(s.x1) + mean(w.x1), p2 = mean(s.x2) + mean(w.x2);
  GridFunction k1 = img.x1, k2 = img.x2;
  k1.values.colwise() -= p1;
  k2.values.colwise() -= p2;
  const double scale = 1.0 + std::max(sup_norm(w.x1), sup_norm(w.x2));
  CHECK(mean(k1).norm() <= 1e-12 * scale);
  CHECK(mean(k2).norm() <= 1e-12 * scale);
}

TEST_CASE("mean projection is idempotent") {
  PeriodicGrid g(32, 1.0);
  Rng rng(9);
  GridFunction u(g, 2);
  for (int j = 0; j < g.n_nodes; ++j)
    for (int i = 0; i < 2; ++i) u.values(i, j) = rng.uniform(-1, 1);
  const GridFunction pu = constant_grid_function(g, mean(u));
  CHECK((mean(pu) - mean(u)).norm() <= 1e-15);
}

TEST_CASE("residual at the zero state sees the mean-free part of e") {
  ExampleParams p;
  p.e1 = TimeFunc::sine(1.0, 1.0, 0.0);  // sin(t), zero mean over [0, 2 pi]
  p.e2 = TimeFunc::sine(1.0, 1.0, 0.0);
  ExampleBundle bs = make_example_52(ExampleParams{});
  bs.problem.rhs = [p](double lambda, double t, const Vec& x, const Vec&) -> Vec {
    Vec out(2);
    out[0] = x[0] / (std::abs(x[0]) + 1.0) + lambda * p.e1(t);
    out[1] = x[1] + lambda * p.e2(t);
    return out;
  };
  PeriodicGrid g(64, 2.0 * M_PI);
  const StatePair zero = StatePair::zero(g, 2);
  const double lambda = 0.4;
  const Residual r = residual(bs.problem, bs.phi, lambda, zero);

  // Oracle: at the zero state the second slot of Phi is
  // lambda (mean(e) + K_P(e - mean e)); here e is mean-free.
  GridFunction e(g, 2);
  for (int j = 0; j < g.n_nodes; ++j) {
    e.values(0, j) = p.e1(g.node(j));
    e.values(1, j) = p.e2(g.node(j));
  }
  GridFunction e0 = e;
  e0.values.colwise() -= mean(e);
  const double contribution = std::abs(lambda) * sup_norm(cumulative_integral_zero_mean(e0));
  CHECK(contribution > 0.0);
  CHECK(r.sup_norm >= contribution * (1.0 - 1e-12));
}

TEST_CASE("exact discrete fixed points have tiny residual") {
  const ExampleBundle b = make_example_53(ExampleParams{});
  PeriodicGrid g(32, b.problem.period);
  const StatePair s = StatePair::zero(g, 2);
  CHECK(residual(b.problem, b.phi, 0.0, s).sup_norm <= 1e-14);
}

TEST_CASE("residual scales linearly in smooth perturbation directions") {
  const ExampleBundle b = make_example_53(ExampleParams{});
  PeriodicGrid g(64, b.problem.period);
  // Nontrivial constant solution at lambda = 0.3: h0(c) = -g(lambda) e.
  const double lam = 0.3;
  const double s_amp = -std::cbrt(ex53_g(lam) / 2.0);
  Vec c(2);
  c << s_amp, s_amp;
  StatePair base(constant_grid_function(g, c), GridFunction(g, 2));
  REQUIRE(residual(b.problem, b.phi, lam, base).sup_norm <= 1e-12);

  Rng rng(77);
  StatePair dir = StatePair::zero(g, 2);
  for (int j = 0; j < g.n_nodes; ++j) {
    const double th = 2.0 * M_PI * g.node(j) / g.period;
    dir.x1.values(0, j) = std::sin(th);
    dir.x1.values(1, j) = std::cos(th) * rng.uniform(0.5, 1.0);
  }
  for (const double eps : {1e-4, 1e-6}) {
    StatePair pert = base;
    pert.x1.values += eps * dir.x1.values;
    const double rn = residual(b.problem, b.phi, lam, pert).sup_norm;
    CHECK(rn / eps >= 0.1);
    CHECK(rn / eps <= 10.0);
  }
}

TEST_CASE("newton solves the linear validation problem to the closed form") {
  const double T = 1.0;
  const ExampleBundle b = make_linear_validation(T);
  SolverConfig cfg;
  PeriodicGrid g(128, T);
  const SolutionPair sol = newton_solve(b.problem, b.phi, 0.0, StatePair::zero(g, 1), cfg);
  CHECK(sol.residual_sup <= cfg.residual_tol);
  double err = 0.0;
  for (int j = 0; j < g.n_nodes; ++j)
    err = std::max(err, std::abs(sol.state.x1.values(0, j) - linval_closed_form(T, g.node(j))));
  CHECK(err <= 1e-4);
  // Amplitude of the closed form at T = 1: 1/(1 + 4 pi^2).
  CHECK(1.0 / (1.0 + 4.0 * M_PI * M_PI) == Catch::Approx(0.0247045).margin(1e-6));
}

TEST_CASE("solver error drops by ~4x when N doubles") {
  const double T = 1.0;
  const ExampleBundle b = make_linear_validation(T);
  SolverConfig cfg;
  double errs[2];
  int k = 0;
  for (const int N : {128, 256}) {
    PeriodicGrid g(N, T);
    const SolutionPair sol = newton_solve(b.problem, b.phi, 0.0, StatePair::zero(g, 1), cfg);
    double err = 0.0;
    for (int j = 0; j < N; ++j)
      err = std::max(err, std::abs(sol.state.x1.values(0, j) - linval_closed_form(T, g.node(j))));
    errs[k++] = err;
  }
  const double ratio = errs[0] / errs[1];
  CHECK(ratio >= 3.0);
  CHECK(ratio <= 5.0);
}

TEST_CASE("lambda is inert in the linear validation problem") {
  const ExampleBundle b = make_linear_validation(1.0);
  PeriodicGrid g(64, 1.0);
  SolverConfig cfg;
  const SolutionPair s0 = newton_solve(b.problem, b.phi, 0.0, StatePair::zero(g, 1), cfg);
  const SolutionPair s1 = newton_solve(b.problem, b.phi, 0.5, StatePair::zero(g, 1), cfg);
  CHECK((s0.state.x1.values - s1.state.x1.values).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("newton pulls small ex53 starts to the zero solution at lambda 0") {
  const ExampleBundle b = make_example_53(ExampleParams{});
  PeriodicGrid g(64, b.problem.period);
  Rng rng(123);
  const StatePair start = random_state(g, 2, 0.1, rng);
  SolverConfig cfg;
  const SolutionPair sol = newton_solve(b.problem, b.phi, 0.0, start, cfg);
  CHECK(sol.c1_norm <= 1e-6);
}

TEST_CASE("newton rejects lambda outside the domain") {
  const ExampleBundle b = make_example_53(ExampleParams{});
  PeriodicGrid g(16, b.problem.period);
  SolverConfig cfg;
  try {
    newton_solve(b.problem, b.phi, 2.0, StatePair::zero(g, 2), cfg);
    FAIL("expected LambdaOutOfDomain");
  } catch (const Error& e) {
    CHECK(e.code() == errc::lambda_out_of_domain);
  }
}

TEST_CASE("autonomous consistency: constant zeros of f0 are returned unchanged") {
  const ExampleBundle b = make_example_52(ExampleParams{});
  PeriodicGrid g(32, b.problem.period);
  const StatePair s = StatePair::zero(g, 2);
  SolverConfig cfg;
  NewtonStats stats;
  const SolutionPair sol = newton_solve(b.problem, b.phi, 0.0, s, cfg, &stats);
  CHECK(stats.iterations == 0);
  CHECK(sol.c1_norm == 0.0);
}

TEST_CASE("ode_residual_check vanishes on the zero solution") {
  const ExampleBundle b = make_example_53(ExampleParams{});
  PeriodicGrid g(32, b.problem.period);
  const SolutionPair pair{0.0, StatePair::zero(g, 2), 0.0, 0.0};
  CHECK(ode_residual_check(pair, b.problem, b.phi) == 0.0);
}

TEST_CASE("ode_residual_check is small and second order on the linear problem") {
  const double T = 1.0;
  const ExampleBundle b = make_linear_validation(T);
  SolverConfig cfg;
  double checks[2];
  int k = 0;
  for (const int N : {128, 256}) {
    PeriodicGrid g(N, T);
    const SolutionPair sol = newton_solve(b.problem, b.phi, 0.0, StatePair::zero(g, 1), cfg);
    checks[k++] = ode_residual_check(sol, b.problem, b.phi);
  }
  CHECK(checks[0] <= 5e-3);
  const double ratio = checks[0] / checks[1];
  CHECK(ratio >= 3.0);
  CHECK(ratio <= 5.0);
}

TEST_CASE("fixed points satisfy the discrete ODE (reduction prerequisite)") {
  const ExampleBundle b = make_example_53(ExampleParams{});
  PeriodicGrid g(128, b.problem.period);
  const double lam = 0.4;
  const double s_amp = -std::cbrt(ex53_g(lam) / 2.0);
  Vec c(2);
  c << s_amp, s_amp;
  StatePair guess(constant_grid_function(g, c), GridFunction(g, 2));
  SolverConfig cfg;
  const SolutionPair sol = newton_solve(b.problem, b.phi, lam, guess, cfg);
  const double scale = 10.0;  // modest bound on second derivatives here
  CHECK(ode_residual_check(sol, b.problem, b.phi) <=
        100.0 * (cfg.residual_tol + g.dt() * g.dt() * scale));
}

TEST_CASE("norms of the sine state match closed forms") {
  PeriodicGrid g(128, 1.0);
  const PhiOperator phi = PhiOperator::identity();
  StatePair s = StatePair::zero(g, 2);
  for (int j = 0; j < g.n_nodes; ++j) {
    const double t = g.node(j);
    s.x1.values(0, j) = std::sin(2.0 * M_PI * t);
    s.x2.values(0, j) = 2.0 * M_PI * std::cos(2.0 * M_PI * t);  // phi = id: x2 = x'
  }
  const StateNorms n = norms(s, phi);
  CHECK(n.sup_x == Catch::Approx(1.0).margin(1e-3));
  CHECK(n.sup_xprime == Catch::Approx(2.0 * M_PI).margin(1e-3));
  CHECK(n.c1 == Catch::Approx(n.sup_x + n.sup_xprime).margin(1e-15));

  // Scaling the state by 2 doubles all four norms exactly (phi = id).
  StatePair s2 = s;
  s2.x1.values *= 2.0;
  s2.x2.values *= 2.0;
  const StateNorms n2 = norms(s2, phi);
  CHECK(n2.sup_x == Catch::Approx(2.0 * n.sup_x).epsilon(1e-14));
  CHECK(n2.sup_xprime == Catch::Approx(2.0 * n.sup_xprime).epsilon(1e-14));
  CHECK(n2.c1 == Catch::Approx(2.0 * n.c1).epsilon(1e-14));
  CHECK(n2.l1_xprime == Catch::Approx(2.0 * n.l1_xprime).epsilon(1e-14));

  const StateNorms z = norms(StatePair::zero(g, 2), phi);
  CHECK(z.sup_x == 0.0);
  CHECK(z.sup_xprime == 0.0);
  CHECK(z.c1 == 0.0);
  CHECK(z.l1_xprime == 0.0);
}
