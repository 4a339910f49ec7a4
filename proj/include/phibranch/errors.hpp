// Error taxonomy shared by all modules. Every failure mode that callers can
// react to carries a distinct code; messages are for humans.
#pragma once

#include <stdexcept>
#include <string>

namespace phibranch {

enum class errc {
  non_zero_mean_input,      // K_P applied outside the zero-mean range
  lambda_out_of_domain,     // lambda outside the admissible interval I
  no_convergence,
  singular_jacobian,
  boundary_zero,            // map vanishes (numerically) on the region boundary
  no_angle_convergence,     // winding refinement exhausted or residual too large
  suspect_degenerate,       // near-singular preimage at the chosen regular value
  zero_on_cut_line,
  unsupported_operator,
  invalid_params,
  zero_integral,
  initial_tangent_failure,
  step_failure,
  parse_error,
  unknown_key,
  missing_required,
  io_error,
  usage_error,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::non_zero_mean_input: return "NonZeroMeanInput";
    case errc::lambda_out_of_domain: return "LambdaOutOfDomain";
    case errc::no_convergence: return "NoConvergence";
    case errc::singular_jacobian: return "SingularJacobian";
    case errc::boundary_zero: return "BoundaryZero";
    case errc::no_angle_convergence: return "NoAngleConvergence";
    case errc::suspect_degenerate: return "SuspectDegenerate";
    case errc::zero_on_cut_line: return "ZeroOnCutLine";
    case errc::unsupported_operator: return "UnsupportedOperator";
    case errc::invalid_params: return "InvalidParams";
    case errc::zero_integral: return "ZeroIntegral";
    case errc::initial_tangent_failure: return "InitialTangentFailure";
    case errc::step_failure: return "StepFailure";
    case errc::parse_error: return "ParseError";
    case errc::unknown_key: return "UnknownKey";
    case errc::missing_required: return "MissingRequired";
    case errc::io_error: return "IoError";
    case errc::usage_error: return "UsageError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

  errc code() const { return code_; }

 private:
  errc code_;
};

// Newton failure with enough context to decide on restarts.
class NoConvergenceError : public Error {
 public:
  NoConvergenceError(int iterations, double final_residual, const std::string& msg)
      : Error(errc::no_convergence, msg),
        iterations_(iterations),
        final_residual_(final_residual) {}

  int iterations() const { return iterations_; }
  double final_residual() const { return final_residual_; }

 private:
  int iterations_;
  double final_residual_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace phibranch
