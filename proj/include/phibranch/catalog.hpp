// Ready-made problem bundles: the three Lienard-type applications (branch
// unbounded in lambda, unbounded in x, bounded) plus a linear validation
// problem with a closed-form periodic solution. Each bundle carries the
// phi-operator and the a-priori bound monitors assembled from the respective
// existence proofs.
#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "phibranch/continuation.hpp"

namespace phibranch {

// ---------------------------------------------------------------------------
// Encodable scalar functions of time: const:c | sin:a,omega,phase[,offset] |
// poly:c0,c1,...

struct TimeFunc {
  enum class Kind { Const, Sin, Poly };
  Kind kind = Kind::Const;
  double c = 0.0;                       // Const
  double a = 0.0, omega = 0.0, phase = 0.0, offset = 0.0;  // Sin
  std::vector<double> coeffs;           // Poly

  static TimeFunc constant(double value) {
    TimeFunc f;
    f.kind = Kind::Const;
    f.c = value;
    return f;
  }
  static TimeFunc sine(double a, double omega, double phase, double offset = 0.0) {
    TimeFunc f;
    f.kind = Kind::Sin;
    f.a = a;
    f.omega = omega;
    f.phase = phase;
    f.offset = offset;
    return f;
  }
  static TimeFunc poly(std::vector<double> coeffs) {
    TimeFunc f;
    f.kind = Kind::Poly;
    f.coeffs = std::move(coeffs);
    return f;
  }

  double operator()(double t) const {
    switch (kind) {
      case Kind::Const: return c;
      case Kind::Sin: return offset + a * std::sin(omega * t + phase);
      case Kind::Poly: {
        double acc = 0.0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * t + *it;
        return acc;
      }
    }
    return 0.0;
  }

  // Exact integral over [0, T].
  double integral(double T) const {
    switch (kind) {
      case Kind::Const: return c * T;
      case Kind::Sin:
        if (omega == 0.0) return (offset + a * std::sin(phase)) * T;
        return offset * T + a * (std::cos(phase) - std::cos(omega * T + phase)) / omega;
      case Kind::Poly: {
        double acc = 0.0, pw = T;
        for (std::size_t k = 0; k < coeffs.size(); ++k) {
          acc += coeffs[k] * pw / static_cast<double>(k + 1);
          pw *= T;
        }
        return acc;
      }
    }
    return 0.0;
  }

  static TimeFunc parse(const std::string& text);
  std::string encode() const;
};

namespace catalog_detail {

inline std::vector<double> parse_csv_numbers(const std::string& body, const std::string& ctx) {
  std::vector<double> out;
  std::istringstream is(body);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      fail(errc::parse_error, "bad number '" + tok + "' in " + ctx);
    }
  }
  return out;
}

}  // namespace catalog_detail

inline TimeFunc TimeFunc::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string body = colon == std::string::npos ? "" : text.substr(colon + 1);
  const auto nums = catalog_detail::parse_csv_numbers(body, "function '" + text + "'");
  if (head == "const" && nums.size() == 1) return constant(nums[0]);
  if (head == "sin" && (nums.size() == 3 || nums.size() == 4))
    return sine(nums[0], nums[1], nums[2], nums.size() == 4 ? nums[3] : 0.0);
  if (head == "poly" && !nums.empty()) return poly(nums);
  fail(errc::parse_error, "unrecognized function encoding '" + text + "'");
}

inline std::string TimeFunc::encode() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::Const: os << "const:" << c; break;
    case Kind::Sin: os << "sin:" << a << "," << omega << "," << phase << "," << offset; break;
    case Kind::Poly:
      os << "poly:";
      for (std::size_t k = 0; k < coeffs.size(); ++k) os << (k ? "," : "") << coeffs[k];
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------

// Positive continuous coefficient a(x); state-dependent variants are only
// reachable programmatically (the config format encodes functions of t).
using SpaceFunc = std::function<double(const Vec&)>;

struct ExampleParams {
  double T = 2.0 * M_PI;
  TimeFunc e1 = TimeFunc::constant(1.0);
  TimeFunc e2 = TimeFunc::constant(1.0);
  double a1 = 1.0;              // ex51 coefficient (constant variant)
  double a2 = 1.0;              // ex51/ex52 second-component coefficient
  SpaceFunc a1_fn, a2_fn;       // ex51: override the constants when set
  double R = 1.0;               // ex51 sign-condition radius
  bool gradient_term = false;   // ex51: adds the |lambda| * Hess G(x) x' term, G = ||x||^2/2
  double delta = 1.0;           // ex53 symmetric-box half-width
  double C0 = 1.0, sigma = 2.0, R0 = 1.0;  // ex53 coercivity of h0
};

struct ExampleBundle {
  std::string id;
  ProblemField problem;
  PhiOperator phi = PhiOperator::identity();
  std::vector<BoundMonitor> monitors;
  ExampleParams params;
};

// lambda_hat_i = T sup|h_i| / |integral of e_i|; the parameter threshold
// beyond which no solution pair exists.
inline double lambda_hat(double T, double sup_h_i, double integral_e_i) {
  if (std::abs(integral_e_i) < 1e-14)
    fail(errc::zero_integral, "lambda_hat: integral of e_i vanishes");
  return T * sup_h_i / std::abs(integral_e_i);
}

namespace catalog_detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) fail(errc::invalid_params, msg);
}

inline double sample_max(const TimeFunc& f, double T, int samples = 2048) {
  double m = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < samples; ++j) m = std::max(m, f(T * j / samples));
  return m;
}

inline double sample_min(const TimeFunc& f, double T, int samples = 2048) {
  double m = std::numeric_limits<double>::infinity();
  for (int j = 0; j < samples; ++j) m = std::min(m, f(T * j / samples));
  return m;
}

// sup_t of the euclidean norm ||(e1(t), e2(t))||.
inline double sup_vector_norm(const TimeFunc& e1, const TimeFunc& e2, double T,
                              int samples = 2048) {
  double m = 0.0;
  for (int j = 0; j < samples; ++j) {
    const double t = T * j / samples;
    m = std::max(m, std::hypot(e1(t), e2(t)));
  }
  return m;
}

}  // namespace catalog_detail

// ---------------------------------------------------------------------------
// Application 1: ((||x'||^2) x_i')' = a_i x_i + |lambda| e_i(t) x_i, with an
// optional |lambda| Hess G(x) x' term. The branch is unbounded in lambda.

inline ExampleBundle make_example_51(const ExampleParams& params) {
  namespace cd = catalog_detail;
  cd::require(params.T > 0.0, "ex51: T must be positive");
  const SpaceFunc a1 =
      params.a1_fn ? params.a1_fn : [c = params.a1](const Vec&) { return c; };
  const SpaceFunc a2 =
      params.a2_fn ? params.a2_fn : [c = params.a2](const Vec&) { return c; };
  {
    // a1, a2 > 0 and e1, e2 >= 0, pointwise on samples.
    Rng rng(6);
    for (int k = 0; k < 512; ++k) {
      Vec x(2);
      x << rng.uniform(-5, 5), rng.uniform(-5, 5);
      cd::require(a1(x) > 0.0 && a2(x) > 0.0, "ex51: a1, a2 must be positive");
    }
    cd::require(cd::sample_min(params.e1, params.T) >= 0.0 &&
                    cd::sample_min(params.e2, params.T) >= 0.0,
                "ex51: e1, e2 must be nonnegative");
  }

  ExampleBundle b;
  b.id = "ex51";
  b.params = params;
  b.phi = PhiOperator::power_radial(2.0);

  const TimeFunc e1 = params.e1, e2 = params.e2;
  const bool grad = params.gradient_term;
  b.problem.dim = 2;
  b.problem.period = params.T;
  b.problem.lambda_interval = LambdaInterval::all();
  b.problem.name = "ex51";
  b.problem.rhs = [a1, a2, e1, e2, grad](double lambda, double t, const Vec& x,
                                         const Vec& y) -> Vec {
    Vec out(2);
    const double al = std::abs(lambda);
    out[0] = a1(x) * x[0] + al * e1(t) * x[0];
    out[1] = a2(x) * x[1] + al * e2(t) * x[1];
    if (grad) out += al * y;  // ell(lambda) Hess G(x) x' with G = ||x||^2 / 2
    return out;
  };
  b.problem.autonomous_slice = [a1, a2](const Vec& x, const Vec&) -> Vec {
    Vec out(2);
    out[0] = a1(x) * x[0];
    out[1] = a2(x) * x[1];
    return out;
  };

  // Monitors from the unbounded-in-lambda proof: <h(lambda,t,x),x> >= 0 here,
  // so K0 == 0 identically and the step bounds collapse to constants in K0.
  const double T = params.T, R = params.R;
  const double gamma = coercivity_gamma(b.phi);
  b.monitors.push_back(BoundMonitor{
      "sup_x_bound", [R, T, gamma](double) { return R + T * 0.0 + T * gamma; },
      Quantity::SupX});
  b.monitors.push_back(BoundMonitor{
      "l1_xprime_bound", [T, gamma](double) { return T * 0.0 + T * gamma; },
      Quantity::L1XPrime});

  // ||phi(x')||_inf <= P_lambda(lambda') = |ell| Hhat (TK + Tgamma) + ||g_lambda||_L1,
  // assembled numerically with ell(lambda) = |lambda| and Hhat the Hessian
  // bound (1 for the quadratic G variant, 0 otherwise).
  const double hess_bound = grad ? 1.0 : 0.0;
  double sup_a = 0.0;
  {
    // sup of the coefficients over the ball the solutions live in.
    const double rho = R + T * gamma;
    for (int k = 0; k < 256; ++k) {
      const double ang = 2.0 * M_PI * k / 256;
      for (const double r : {0.25 * rho, 0.5 * rho, 0.75 * rho, rho}) {
        Vec x(2);
        x << r * std::cos(ang), r * std::sin(ang);
        sup_a = std::max({sup_a, a1(x), a2(x)});
      }
    }
  }
  const PhiOperator phi = b.phi;
  b.monitors.push_back(BoundMonitor{
      "sup_xprime_bound",
      [T, R, gamma, hess_bound, sup_a, e1, e2, phi](double lambda) {
        const double al = std::abs(lambda);
        const double rho = R + T * gamma;  // K(lambda) == 0
        const int samples = 1024;
        double g_l1 = 0.0;
        for (int j = 0; j < samples; ++j) {
          const double t = T * j / samples;
          const double coef = sup_a + al * std::max(e1(t), e2(t));
          g_l1 += (T / samples) * coef * rho;
        }
        const double p = al * hess_bound * (T * 0.0 + T * gamma) + g_l1;
        return phi.inverse_radius(p);
      },
      Quantity::SupXPrime});
  return b;
}

// ---------------------------------------------------------------------------
// Application 2: ((||x'||^2) x_1')' = x_1/(|x_1|+1) + lambda e_1(t), second
// component a2 x_2 + lambda e_2(t). The bounded component gives the threshold
// lambda_hat_1 beyond which no solution exists; the branch is unbounded in x.

inline ExampleBundle make_example_52(const ExampleParams& params) {
  namespace cd = catalog_detail;
  cd::require(params.T > 0.0, "ex52: T must be positive");
  cd::require(params.a2 > 0.0, "ex52: a2 must be positive");
  const double int_e1 = params.e1.integral(params.T);
  cd::require(std::abs(int_e1) > 1e-14, "ex52: integral of e1 must be nonzero");

  ExampleBundle b;
  b.id = "ex52";
  b.params = params;
  b.phi = PhiOperator::power_radial(2.0);

  const double a2 = params.a2;
  const TimeFunc e1 = params.e1, e2 = params.e2;
  b.problem.dim = 2;
  b.problem.period = params.T;
  b.problem.lambda_interval = LambdaInterval::all();
  b.problem.name = "ex52";
  b.problem.rhs = [a2, e1, e2](double lambda, double t, const Vec& x, const Vec&) -> Vec {
    Vec out(2);
    out[0] = x[0] / (std::abs(x[0]) + 1.0) + lambda * e1(t);
    out[1] = a2 * x[1] + lambda * e2(t);
    return out;
  };
  b.problem.autonomous_slice = [a2](const Vec& x, const Vec&) -> Vec {
    Vec out(2);
    out[0] = x[0] / (std::abs(x[0]) + 1.0);
    out[1] = a2 * x[1];
    return out;
  };

  // sup over R^2 of |h_1| = |x_1|/(|x_1|+1) is exactly 1.
  const double hat = lambda_hat(params.T, 1.0, int_e1);
  b.monitors.push_back(
      BoundMonitor{"lambda_hat_1", [hat](double) { return hat; }, Quantity::AbsLambda});
  return b;
}

// ---------------------------------------------------------------------------
// Application 3: ((||x'||^2) x_i')' = h_i(x) + sin(lambda/sqrt(1-lambda^2)) e_i(t)
// with the cubic field h0 = ||x||^2 x, admissible interval I = (-1,1). The
// branch is bounded; it approaches the lambda-domain boundary.

inline double ex53_g(double lambda) {
  if (!(std::abs(lambda) < 1.0))
    fail(errc::lambda_out_of_domain, "ex53: g(lambda) defined for |lambda| < 1");
  return std::sin(lambda / std::sqrt(1.0 - lambda * lambda));
}

inline ExampleBundle make_example_53(const ExampleParams& params) {
  namespace cd = catalog_detail;
  cd::require(params.T > 0.0, "ex53: T must be positive");
  cd::require(params.delta > 0.0, "ex53: delta must be positive");
  cd::require(params.C0 > 0.0 && params.sigma > 1.0 && params.R0 > 0.0,
              "ex53: coercivity parameters require C0 > 0, sigma > 1, R0 > 0");

  const auto h0 = [](const Vec& x) -> Vec {
    Vec out(2);
    out[0] = x[0] * x[0] * x[0] + x[0] * x[1] * x[1];
    out[1] = x[1] * x[1] * x[1] + x[0] * x[0] * x[1];
    return out;
  };
  // (A7) sampled: <h0(xi), xi> = ||xi||^4 >= C0 ||xi||^sigma for ||xi|| >= R0.
  {
    Rng rng(2);
    for (int k = 0; k < 512; ++k) {
      Vec xi(2);
      xi << rng.uniform(-1, 1), rng.uniform(-1, 1);
      if (xi.norm() < 1e-6) continue;
      xi *= (params.R0 + rng.uniform(0.0, 4.0)) / xi.norm();
      cd::require(h0(xi).dot(xi) >= params.C0 * std::pow(xi.norm(), params.sigma) - 1e-9,
                  "ex53: coercivity condition fails at the given C0, sigma, R0");
    }
  }

  ExampleBundle b;
  b.id = "ex53";
  b.params = params;
  b.phi = PhiOperator::power_radial(2.0);

  const TimeFunc e1 = params.e1, e2 = params.e2;
  b.problem.dim = 2;
  b.problem.period = params.T;
  b.problem.lambda_interval = LambdaInterval::open(-1.0, 1.0);
  b.problem.name = "ex53";
  b.problem.rhs = [h0, e1, e2](double lambda, double t, const Vec& x, const Vec&) -> Vec {
    const double g = ex53_g(lambda);
    Vec out = h0(x);
    out[0] += g * e1(t);
    out[1] += g * e2(t);
    return out;
  };
  b.problem.autonomous_slice = [h0](const Vec& x, const Vec&) -> Vec { return h0(x); };

  // Step-1/Step-2 bounds: the inner argument of g sweeps all of R, so
  // ghat = sup |g| = 1; ||e||_inf is the euclidean sup of (e1, e2).
  const double ghat = 1.0;
  const double e_inf = cd::sup_vector_norm(e1, e2, params.T);
  const double T = params.T, C0 = params.C0, sigma = params.sigma;
  const double R_hat =
      std::max({params.R0, params.delta, std::pow(ghat * e_inf / C0, 1.0 / (sigma - 1.0))});
  b.monitors.push_back(
      BoundMonitor{"sup_x_bound", [R_hat](double) { return R_hat; }, Quantity::SupX});

  // K = max ||h0|| on B[0, R_hat] + ghat ||e||_inf; h0 is radial with
  // ||h0(xi)|| = ||xi||^3, so the max sits on the sphere.
  double max_h0 = 0.0;
  for (int k = 0; k < 256; ++k) {
    const double ang = 2.0 * M_PI * k / 256;
    Vec xi(2);
    xi << R_hat * std::cos(ang), R_hat * std::sin(ang);
    max_h0 = std::max(max_h0, h0(xi).norm());
  }
  const double K = max_h0 + ghat * e_inf;
  const PhiOperator phi = b.phi;
  const double L_R = std::pow(K * R_hat, 1.0 / (phi.exponent() + 2.0));
  const double M_R = phi.inverse_radius(phi.forward_radius(L_R) + T * K);
  b.monitors.push_back(
      BoundMonitor{"sup_xprime_bound", [M_R](double) { return M_R; }, Quantity::SupXPrime});
  return b;
}

// ---------------------------------------------------------------------------
// Solver oracle: x'' = x - sin(2 pi t / T), scalar, phi = Identity, with the
// closed-form T-periodic solution sin(w t) / (1 + w^2). Deliberately outside
// the autonomous-slice setting: F stays t-dependent at lambda = 0, and f0 is
// the x-part only. Validation use only.

inline double linval_closed_form(double T, double t) {
  const double w = 2.0 * M_PI / T;
  return std::sin(w * t) / (1.0 + w * w);
}

inline ExampleBundle make_linear_validation(double T) {
  if (!(T > 0.0)) fail(errc::invalid_params, "linval: T must be positive");
  ExampleBundle b;
  b.id = "linval";
  b.params.T = T;
  b.phi = PhiOperator::identity();
  b.problem.dim = 1;
  b.problem.period = T;
  b.problem.lambda_interval = LambdaInterval::all();
  b.problem.name = "linval";
  const double w = 2.0 * M_PI / T;
  b.problem.rhs = [w](double, double t, const Vec& x, const Vec&) -> Vec {
    return Vec::Constant(1, x[0] - std::sin(w * t));
  };
  b.problem.autonomous_slice = [](const Vec& x, const Vec&) -> Vec { return x; };
  return b;
}

// ---------------------------------------------------------------------------

inline ExampleBundle make_example(const std::string& id, const ExampleParams& params) {
  if (id == "ex51") return make_example_51(params);
  if (id == "ex52") return make_example_52(params);
  if (id == "ex53") return make_example_53(params);
  if (id == "linval") return make_linear_validation(params.T);
  fail(errc::invalid_params, "unknown problem id '" + id + "'");
}

}  // namespace phibranch
