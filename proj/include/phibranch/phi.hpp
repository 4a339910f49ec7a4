// Concrete phi-Laplacian homeomorphisms of R^n. The built-in family is
// radial: phi(xi) = ||xi||^q xi (the vector (q+1)-Laplacian) plus the
// identity. Radial operators preserve directions, are odd, and admit a
// closed-form inverse, which is everything the solver and the a-priori
// bounds rely on.
#pragma once

#include <cmath>
#include <string>

#include "phibranch/grid.hpp"

namespace phibranch {

class PhiOperator {
 public:
  enum class Kind { PowerRadial, Identity };

  static PhiOperator power_radial(double exponent) {
    if (!(exponent >= 0.0))
      fail(errc::invalid_params, "PowerRadial exponent must be >= 0");
    return PhiOperator(Kind::PowerRadial, exponent);
  }
  static PhiOperator identity() { return PhiOperator(Kind::Identity, 0.0); }

  Kind kind() const { return kind_; }
  double exponent() const { return exponent_; }

  // phi(xi); phi(0) = 0 for every kind.
  Vec forward(const Vec& xi) const {
    if (kind_ == Kind::Identity) return xi;
    const double r = xi.norm();
    if (r == 0.0) return Vec::Zero(xi.size());
    return std::pow(r, exponent_) * xi;
  }

  // phi^{-1}(eta): radial inversion r^{q+1} = ||eta||. Hard cutoff below
  // 1e-300 avoids overflow in the negative power.
  Vec inverse(const Vec& eta) const {
    if (kind_ == Kind::Identity) return eta;
    const double r = eta.norm();
    if (r < 1e-300) return Vec::Zero(eta.size());
    return std::pow(r, -exponent_ / (exponent_ + 1.0)) * eta;
  }

  // Radial profile ||phi(xi)|| as a function of ||xi||, and its inverse.
  double forward_radius(double r) const {
    if (kind_ == Kind::Identity) return r;
    return std::pow(r, exponent_ + 1.0);
  }
  double inverse_radius(double rho) const {
    if (kind_ == Kind::Identity) return rho;
    if (rho <= 0.0) return 0.0;
    return std::pow(rho, 1.0 / (exponent_ + 1.0));
  }

  double gamma() const;  // coercivity constant, see coercivity_gamma below

  std::string describe() const {
    if (kind_ == Kind::Identity) return "Identity";
    return "PowerRadial(" + std::to_string(exponent_) + ")";
  }

 private:
  PhiOperator(Kind k, double q) : kind_(k), exponent_(q) {}

  Kind kind_;
  double exponent_;
};

// Smallest gamma >= 0 with <phi(xi),xi> >= ||xi|| - gamma, i.e. the maximum
// of r - r^{q+2} over r >= 0 (attained in [0,1]). Golden-section search to
// 1e-12; the identity has the closed-form value 1/4.
inline double coercivity_gamma(const PhiOperator& op) {
  double q;
  switch (op.kind()) {
    case PhiOperator::Kind::Identity:
      q = 0.0;  // <xi,xi> = ||xi||^2, same profile as PowerRadial(0)
      break;
    case PhiOperator::Kind::PowerRadial:
      q = op.exponent();
      break;
    default:
      fail(errc::unsupported_operator, "coercivity gamma needs a radial profile");
  }
  const auto profile = [q](double r) { return r - std::pow(r, q + 2.0); };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = 1.0;
  double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
  double f1 = profile(x1), f2 = profile(x2);
  while (b - a > 1e-12) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = profile(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = profile(x1);
    }
  }
  return std::max(0.0, profile(0.5 * (a + b)));
}

inline double PhiOperator::gamma() const { return coercivity_gamma(*this); }

}  // namespace phibranch
