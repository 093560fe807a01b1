#pragma once

// Linear covariate measurement-error model, X* = A + B X + eps, averaged over
// m measurements per item, and the CV of the observed quantity it induces.

#include <cmath>
#include <string>

#include "cvrr/cvdist.hpp"
#include "cvrr/error.hpp"

namespace cvrr {

struct MeasurementErrorModel {
  double theta = 0.0;  ///< accuracy error A / mu0
  double eta = 0.0;    ///< precision ratio sigma_M / sigma0
  double slope = 1.0;  ///< B
  int reps = 1;        ///< m, measurements averaged per item

  static MeasurementErrorModel identity() { return {}; }

  bool is_identity() const { return theta == 0.0 && eta == 0.0 && slope == 1.0 && reps == 1; }

  void validate() const {
    if (!(theta >= 0.0) || !std::isfinite(theta)) throw DomainError("theta must be finite and >= 0");
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw DomainError("eta must be finite and >= 0");
    if (!(slope > 0.0) || !std::isfinite(slope)) throw DomainError("slope B must be positive");
    if (reps < 1) throw DomainError("reps m must be at least 1");
  }
};

/// tau = b / (1 + a gamma0).
inline double shift_from_ab(double a, double b, double gamma0) {
  if (!(b > 0.0)) throw DomainError("shift: b must be positive");
  const double denom = 1.0 + a * gamma0;
  if (!(denom > 0.0)) throw DomainError("shift: 1 + a*gamma0 must be positive");
  return b / denom;
}

/// A multiplicative CV shift together with the standardized mean and standard
/// deviation shifts that produce it. Build through the factories so the three
/// stay consistent for the governing gamma0.
struct ShiftSpec {
  double tau = 1.0;
  double a = 0.0;
  double b = 1.0;

  static ShiftSpec none() { return {}; }

  /// Shift of size tau realised with standard-deviation factor b.
  static ShiftSpec from_tau(double tau, double gamma0, double b = 1.0) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("shift: tau must be positive");
    if (!(b > 0.0)) throw DomainError("shift: b must be positive");
    if (!(gamma0 > 0.0)) throw DomainError("shift: gamma0 must be positive");
    return {tau, (b / tau - 1.0) / gamma0, b};
  }

  static ShiftSpec from_ab(double a, double b, double gamma0) {
    return {shift_from_ab(a, b, gamma0), a, b};
  }

  bool in_control() const { return tau == 1.0; }
};

/// gamma0* = gamma0 sqrt(B^2 + eta^2/m) / (theta + B).
inline double observed_cv_incontrol(double gamma0, const MeasurementErrorModel& me) {
  me.validate();
  const double denom = me.theta + me.slope;
  if (!(denom > 0.0)) throw DomainError("observed CV: theta + B must be positive");
  return gamma0 * std::sqrt(me.slope * me.slope + me.eta * me.eta / me.reps) / denom;
}

/// gamma1* = gamma0 sqrt(B^2 b^2 + eta^2/m) / (theta + B b / tau).
inline double observed_cv_shifted(double gamma0, const ShiftSpec& shift,
                                  const MeasurementErrorModel& me) {
  me.validate();
  if (!(shift.tau > 0.0) || !(shift.b > 0.0)) throw DomainError("observed CV: invalid shift");
  const double bb = me.slope * shift.b;
  const double denom = me.theta + bb / shift.tau;
  if (!(denom > 0.0)) throw DomainError("observed CV: theta + B b / tau must be positive");
  return gamma0 * std::sqrt(bb * bb + me.eta * me.eta / me.reps) / denom;
}

/// CDF of the observed squared sample CV; the error-free law with gamma*.
inline double observed_cv2_cdf(double x, int n, double gamma_star,
                               Validity validity = Validity::strict) {
  return cv2_cdf(x, n, gamma_star, validity);
}

}  // namespace cvrr
