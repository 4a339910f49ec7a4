#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "phibranch/catalog.hpp"
#include "phibranch/continuation.hpp"

using namespace phibranch;

namespace {

constexpr int kGridN = 48;

DomainSpec spec_for(const ExampleBundle& b) {
  return DomainSpec::for_problem(b.problem, Box::square(-1.0, 1.0));
}

Branch trace_example(const ExampleBundle& b, const DomainSpec& spec) {
  PeriodicGrid g(kGridN, b.problem.period);
  StepConfig step;
  const SolutionPair start =
      trivial_pair(b.problem, b.phi, Vec::Zero(2), g, step.solver);
  return trace_branch(b.problem, b.phi, start, spec, b.monitors, step);
}

// Split the signed-arclength point list into per-direction polylines.
std::vector<std::vector<const BranchPoint*>> directions(const Branch& br) {
  std::vector<const BranchPoint*> fwd, bwd;
  for (const auto& p : br.points) {
    if (p.arclength >= 0.0) fwd.push_back(&p);
    if (p.arclength <= 0.0) bwd.push_back(&p);
  }
  return {fwd, bwd};
}

}  // namespace

TEST_CASE("trivial start certification on the three applications") {
  for (const std::string id : {"ex51", "ex52", "ex53"}) {
    const ExampleBundle b = make_example(id, ExampleParams{});
    const TrivialStartReport r = trivial_start_points(b.problem, spec_for(b));
    INFO(id);
    REQUIRE(r.zeros.size() == 1);
    CHECK(r.zeros[0].zero.norm() <= 1e-6);
    CHECK(r.zeros[0].local_degree == 1);
    CHECK(r.total_degree == 1);
    CHECK_FALSE(r.degree_warning);
  }
}

TEST_CASE("zero-free field reports an empty start list with a warning") {
  ExampleBundle b = make_example_51(ExampleParams{});
  b.problem.autonomous_slice = [](const Vec&, const Vec&) -> Vec {
    Vec out(2);
    out << 1.0, 0.0;
    return out;
  };
  const TrivialStartReport r = trivial_start_points(b.problem, spec_for(b));
  CHECK(r.zeros.empty());
  CHECK(r.total_degree == 0);
  CHECK(r.degree_warning);
}

TEST_CASE("trivial_pair rejects non-solutions") {
  const ExampleBundle b = make_example_52(ExampleParams{});
  PeriodicGrid g(kGridN, b.problem.period);
  Vec c(2);
  c << 0.5, 0.5;  // f0(c,0) != 0
  CHECK_THROWS_AS(trivial_pair(b.problem, b.phi, c, g, SolverConfig{}), Error);
}

TEST_CASE("ex51 branch walks the lambda range out to both edges") {
  const ExampleBundle b = make_example_51(ExampleParams{});
  const DomainSpec spec = spec_for(b);
  const Branch br = trace_example(b, spec);

  CHECK(br.termination == Termination::LambdaRangeExit);
  CHECK(br.termination_backward == Termination::LambdaRangeExit);
  REQUIRE(br.points.size() >= 3);
  // First point is the trivial pair.
  CHECK(br.points[0].pair.lambda == 0.0);
  CHECK(br.points[0].point_norms.c1 == 0.0);
  // The exit point is pinned to the range edge.
  CHECK(br.max_abs_lambda() == Catch::Approx(spec.lambda_max).margin(1e-9));

  // Along the zero branch every point respects the Step-2 bound.
  const double gamma = coercivity_gamma(b.phi);
  for (const auto& p : br.points) {
    CHECK(p.point_norms.sup_x <= 1.0 + b.problem.period * gamma + 0.05);
    CHECK(p.flags.empty());
  }
  const TerminationReport rep = classify_termination(br, spec);
  CHECK(rep.scenario == Scenario::UnboundedInLambda);
}

TEST_CASE("ex52 branch hits the norm ceiling inside |lambda| <= lambda_hat") {
  const ExampleBundle b = make_example_52(ExampleParams{});
  DomainSpec spec = spec_for(b);
  spec.c1_ceiling = 25.0;  // keep the test quick
  const Branch br = trace_example(b, spec);

  CHECK(br.termination == Termination::NormCeiling);
  CHECK(br.termination_backward == Termination::NormCeiling);
  CHECK(br.max_c1() > spec.c1_ceiling);
  CHECK(br.max_abs_lambda() <= 1.0 + 0.05);

  // Exact constant family: x1 = -lambda/(1-|lambda|) * e_i direction, x2 = 0.
  for (const auto& p : br.points) {
    const double lam = p.pair.lambda;
    const double expect = std::abs(lam) / (1.0 - std::abs(lam));
    const double got = std::abs(p.pair.state.x1.values(0, 0));
    CHECK(got == Catch::Approx(expect).margin(1e-6 * (1.0 + expect)));
    CHECK(sup_norm(p.pair.state.x2) == 0.0);
  }
  const TerminationReport rep = classify_termination(br, spec);
  CHECK(rep.scenario == Scenario::UnboundedInX_BoundedLambda);
  CHECK(rep.max_abs_lambda < 1.0);
}

TEST_CASE("ex52 integral necessary condition holds along the branch") {
  const ExampleBundle b = make_example_52(ExampleParams{});
  DomainSpec spec = spec_for(b);
  spec.c1_ceiling = 25.0;
  const Branch br = trace_example(b, spec);
  const double mean_e1 = b.params.e1.integral(b.problem.period) / b.problem.period;
  for (const auto& p : br.points) {
    // |lambda * mean(e_1)| <= sup|h_1| * (1 + 1e-3), discrete form of the
    // integrated first component.
    CHECK(std::abs(p.pair.lambda * mean_e1) <= 1.0 * (1.0 + 1e-3));
  }
}

TEST_CASE("ex53 branch reaches the domain boundary inside I") {
  const ExampleBundle b = make_example_53(ExampleParams{});
  const DomainSpec spec = spec_for(b);
  const Branch br = trace_example(b, spec);

  const bool fwd_boundary = br.termination == Termination::LambdaDomainBoundaryLower ||
                            br.termination == Termination::LambdaDomainBoundaryUpper;
  CHECK(fwd_boundary);
  const bool bwd_boundary =
      br.termination_backward == Termination::LambdaDomainBoundaryLower ||
      br.termination_backward == Termination::LambdaDomainBoundaryUpper;
  CHECK(bwd_boundary);

  for (const auto& p : br.points) CHECK(std::abs(p.pair.lambda) < 1.0);

  // Each direction's last point is close to an endpoint of I = (-1, 1).
  const auto dirs = directions(br);
  for (const auto& dir : dirs) {
    REQUIRE(!dir.empty());
    CHECK(std::abs(dir.back()->pair.lambda) >= 0.95);
  }
  const TerminationReport rep = classify_termination(br, spec);
  CHECK(rep.scenario == Scenario::ApproachesLambdaDomainBoundary);

  // Monitors from the a-priori bounds stay green on the whole branch.
  for (const auto& p : br.points) CHECK(p.flags.empty());
}

TEST_CASE("branch points are genuine discrete solutions") {
  const ExampleBundle b = make_example_53(ExampleParams{});
  const DomainSpec spec = spec_for(b);
  const Branch br = trace_example(b, spec);
  PeriodicGrid g(kGridN, b.problem.period);
  const double tol = StepConfig{}.solver.residual_tol;
  const double scale = 30.0;
  int checked = 0;
  for (std::size_t k = 0; k < br.points.size(); k += 7) {
    const auto& p = br.points[k];
    CHECK(p.pair.residual_sup <= tol);
    CHECK(ode_residual_check(p.pair, b.problem, b.phi) <=
          100.0 * (tol + g.dt() * g.dt() * scale));
    ++checked;
  }
  CHECK(checked >= 3);
}

TEST_CASE("consecutive points stay within the step bound per direction") {
  const ExampleBundle b = make_example_52(ExampleParams{});
  DomainSpec spec = spec_for(b);
  spec.c1_ceiling = 10.0;
  const Branch br = trace_example(b, spec);
  const StepConfig step;
  const auto dirs = directions(br);
  for (const auto& dir : dirs) {
    for (std::size_t k = 1; k < dir.size(); ++k) {
      const auto& a = *dir[k - 1];
      const auto& c = *dir[k];
      const double dl = std::abs(a.pair.lambda - c.pair.lambda);
      double d1 = 0.0, d2 = 0.0;
      for (int j = 0; j < kGridN; ++j) {
        d1 = std::max(d1, (a.pair.state.x1.values.col(j) - c.pair.state.x1.values.col(j)).norm());
        d2 = std::max(d2, (a.pair.state.x2.values.col(j) - c.pair.state.x2.values.col(j)).norm());
      }
      CHECK(dl + d1 + d2 <= 4.0 * step.max_step + 1e-9);
    }
  }
}

TEST_CASE("tracing is deterministic bit for bit") {
  const ExampleBundle b = make_example_53(ExampleParams{});
  const DomainSpec spec = spec_for(b);
  const Branch b1 = trace_example(b, spec);
  const Branch b2 = trace_example(b, spec);
  REQUIRE(b1.points.size() == b2.points.size());
  for (std::size_t k = 0; k < b1.points.size(); ++k) {
    CHECK(b1.points[k].pair.lambda == b2.points[k].pair.lambda);
    CHECK(b1.points[k].arclength == b2.points[k].arclength);
    CHECK((b1.points[k].pair.state.x1.values == b2.points[k].pair.state.x1.values));
    CHECK((b1.points[k].pair.state.x2.values == b2.points[k].pair.state.x2.values));
  }
}

TEST_CASE("classification table matches the termination reasons") {
  const ExampleBundle b = make_example_51(ExampleParams{});
  const DomainSpec spec = spec_for(b);
  Branch br;
  br.points.push_back(BranchPoint{});
  br.termination = Termination::LambdaRangeExit;
  br.termination_backward = Termination::LambdaRangeExit;
  CHECK(classify_termination(br, spec).scenario == Scenario::UnboundedInLambda);
  br.termination = Termination::NormCeiling;
  CHECK(classify_termination(br, spec).scenario == Scenario::UnboundedInX_BoundedLambda);
  br.termination = Termination::LambdaDomainBoundaryUpper;
  CHECK(classify_termination(br, spec).scenario == Scenario::ApproachesLambdaDomainBoundary);
  br.termination = Termination::ReturnedToLambdaZero;
  CHECK(classify_termination(br, spec).scenario == Scenario::ClosedLoopReturn);
  br.termination = Termination::StepFailure;
  br.termination_backward = Termination::StepFailure;
  CHECK(classify_termination(br, spec).scenario == Scenario::Indeterminate);
}

TEST_CASE("domain spec validation") {
  const ExampleBundle b = make_example_53(ExampleParams{});
  DomainSpec spec = spec_for(b);
  spec.lambda_min = 0.5;  // must contain 0
  CHECK_THROWS_AS(spec.validate(b.problem), Error);
  spec = spec_for(b);
  spec.lambda_max = 2.0;  // outside I = (-1,1)
  CHECK_THROWS_AS(spec.validate(b.problem), Error);
  spec = spec_for(b);
  spec.c1_ceiling = 1.0;  // below start box diameter
  CHECK_THROWS_AS(spec.validate(b.problem), Error);
}
