#pragma once

#include "ilab/core.hpp"

namespace ilab {

struct RadialProfile {
  enum class Kind { Power, Exponential, Gaussian, Bump, RationalDecay };
  Kind kind = Kind::Power;
  double a = 1.0;      // Power: exponent; Exponential: rate; Gaussian: k; Bump: epsilon
  double shift = 0.0;  // Exponential / Gaussian: radius where the profile vanishes (0 = no shift)

  static RadialProfile power(double alpha) { return {Kind::Power, alpha, 0.0}; }
  static RadialProfile exponential(double rate, double r0 = 0.0) { return {Kind::Exponential, rate, r0}; }
  static RadialProfile gaussian(double k, double R = 0.0) { return {Kind::Gaussian, k, R}; }
  static RadialProfile bump(double eps) { return {Kind::Bump, eps, 0.0}; }
  static RadialProfile rational_decay() { return {Kind::RationalDecay, 1.0, 0.0}; }

  std::string name() const {
    switch (kind) {
      case Kind::Power: return "power";
      case Kind::Exponential: return "exponential";
      case Kind::Gaussian: return "gaussian";
      case Kind::Bump: return "bump";
      case Kind::RationalDecay: return "rational_decay";
    }
    return "?";
  }

  void validate() const {
    bool ok = std::isfinite(a) && std::isfinite(shift);
    if (kind == Kind::Power) ok = ok && a != 0.0;
    if (kind == Kind::Exponential || kind == Kind::Gaussian || kind == Kind::Bump) ok = ok && a > 0.0;
    if (!ok) throw Error(Errc::invalid_argument, "profile parameter out of range for " + name());
  }

  // Upper end of the smooth radial range.
  double r_max() const { return kind == Kind::Bump ? 1.0 / a : INFINITY; }

  double value(double r) const {
    switch (kind) {
      case Kind::Power: return std::pow(r, a);
      case Kind::Exponential: return std::exp(-a * r) - (shift > 0 ? std::exp(-a * shift) : 0.0);
      case Kind::Gaussian: return std::exp(-a * r * r) - (shift > 0 ? std::exp(-a * shift * shift) : 0.0);
      case Kind::Bump: {
        const double w = 1.0 - a * a * r * r;
        return w > 0 ? std::exp(-1.0 / w) : 0.0;
      }
      case Kind::RationalDecay: return 1.0 / (1.0 + r * r);
    }
    return 0.0;
  }

  double d1(double r) const {
    switch (kind) {
      case Kind::Power: return a * std::pow(r, a - 1.0);
      case Kind::Exponential: return -a * std::exp(-a * r);
      case Kind::Gaussian: return -2.0 * a * r * std::exp(-a * r * r);
      case Kind::Bump: {
        const double w = 1.0 - a * a * r * r;
        return -2.0 * a * a * r * std::exp(-1.0 / w) / (w * w);
      }
      case Kind::RationalDecay: {
        const double p = 1.0 + r * r;
        return -2.0 * r / (p * p);
      }
    }
    return 0.0;
  }

  double d2(double r) const {
    switch (kind) {
      case Kind::Power: return a * (a - 1.0) * std::pow(r, a - 2.0);
      case Kind::Exponential: return a * a * std::exp(-a * r);
      case Kind::Gaussian: return (4.0 * a * a * r * r - 2.0 * a) * std::exp(-a * r * r);
      case Kind::Bump: {
        const double e2 = a * a, w = 1.0 - e2 * r * r, psi = std::exp(-1.0 / w);
        return psi * (-2.0 * e2 / (w * w) + 4.0 * e2 * e2 * r * r / (w * w * w * w) - 8.0 * e2 * e2 * r * r / (w * w * w));
      }
      case Kind::RationalDecay: {
        const double p = 1.0 + r * r;
        return (6.0 * r * r - 2.0) / (p * p * p);
      }
    }
    return 0.0;
  }
};

// |u'|^{2-gamma} u'' + q_radial u' |u'|^{2-gamma} for the radial profile at radius r.
inline double radial_L_value(const RadialProfile& p, double gamma, double r, double q_radial = 0.0) {
  p.validate();
  if (!(gamma >= 0.0 && gamma <= 2.0)) throw Error(Errc::invalid_argument, "gamma must lie in [0,2]");
  if (!(r > 0.0) || !(r < p.r_max()))
    throw Error(Errc::domain_error, "radius " + std::to_string(r) + " outside the smooth range of " + p.name());
  const double u1 = p.d1(r), u2 = p.d2(r);
  if (u1 == 0.0) throw Error(Errc::domain_error, "critical point of " + p.name() + " at r=" + std::to_string(r));
  const double g = gamma == 2.0 ? 1.0 : std::pow(std::abs(u1), 2.0 - gamma);
  return g * u2 + q_radial * u1 * g;
}

enum class Sign { Positive, NonNegative, Negative, NonPositive };

struct Predicate {
  Sign sign = Sign::Positive;
  double margin = 0.0;

  bool holds(double v) const {
    switch (sign) {
      case Sign::Positive: return v > margin;
      case Sign::NonNegative: return v >= margin;
      case Sign::Negative: return v < -margin;
      case Sign::NonPositive: return v <= -margin;
    }
    return false;
  }
  // Signed slack: positive when the predicate holds with room to spare.
  double slack(double v) const {
    return (sign == Sign::Positive || sign == Sign::NonNegative) ? v - margin : -v - margin;
  }
};

// Zero-order data seen by a certificate: q_radial is the radial drift component
// and c multiplies |u|^{3-gamma}.
struct CertificateTerms {
  double q_radial = 0.0;
  double c = 0.0;
};

struct CertificateResult {
  bool pass = true;
  double worst_r = 0.0;
  double worst_value = 0.0;
  double min_slack = INFINITY;
  std::size_t samples = 0;
};

inline CertificateResult certificate(const RadialProfile& p, double gamma, const CertificateTerms& terms,
                                     double r_lo, double r_hi, const Predicate& pred, std::size_t samples = 2001) {
  if (!(r_lo > 0.0 && r_hi >= r_lo)) throw Error(Errc::invalid_argument, "certificate annulus must satisfy 0 < r_lo <= r_hi");
  CertificateResult out;
  out.samples = samples;
  for (std::size_t i = 0; i < samples; ++i) {
    const double r = samples == 1 ? r_lo : r_lo + (r_hi - r_lo) * static_cast<double>(i) / static_cast<double>(samples - 1);
    const double u = p.value(r);
    const double v = radial_L_value(p, gamma, r, terms.q_radial) + terms.c * std::pow(std::abs(u), 3.0 - gamma);
    const double sl = pred.slack(v);
    if (sl < out.min_slack) {
      out.min_slack = sl;
      out.worst_r = r;
      out.worst_value = v;
    }
    if (!pred.holds(v)) out.pass = false;
  }
  return out;
}

}  // namespace ilab
