#pragma once

// Sampling law of the sample coefficient of variation of a normal subgroup,
// and moment approximations for its square.

#include <cmath>
#include <string>

#include "cvrr/error.hpp"
#include "cvrr/specfun.hpp"

namespace cvrr {

/// Upper end of the CV range over which the noncentral approximations hold.
inline constexpr double kCvValidityLimit = 0.5;

/// Whether a CV at or above kCvValidityLimit is rejected or evaluated anyway.
enum class Validity { strict, force };

/// In-control CV and subgroup size of the monitored process.
struct ProcessModel {
  double gamma0;
  int n;

  void validate(Validity validity = Validity::strict) const;
};

/// Approximate in-control mean and standard deviation of the squared sample CV.
struct Cv2Moments {
  double mean;
  double std;
};

namespace detail {

inline void check_subgroup_size(int n) {
  if (n < 2) throw DomainError("subgroup size n must be at least 2, got " + std::to_string(n));
}

inline void check_cv(double gamma, Validity validity) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw DomainError("CV must be positive and finite, got " + std::to_string(gamma));
  if (validity == Validity::strict && gamma >= kCvValidityLimit)
    throw ValidityRangeError("CV " + std::to_string(gamma) +
                             " is outside the approximation range (0, 0.5); use force to override");
}

}  // namespace detail

inline void ProcessModel::validate(Validity validity) const {
  detail::check_subgroup_size(n);
  detail::check_cv(gamma0, validity);
}

/// P(gamma_hat <= x) = 1 - F_t(sqrt(n)/x | n-1, sqrt(n)/gamma).
inline double cv_cdf(double x, int n, double gamma, Validity validity = Validity::strict) {
  detail::check_subgroup_size(n);
  detail::check_cv(gamma, validity);
  if (std::isnan(x)) throw DomainError("cv_cdf: x is NaN");
  if (x <= 0.0) return 0.0;
  const double rn = std::sqrt(static_cast<double>(n));
  return 1.0 - specfun::noncentral_t_cdf(rn / x, n - 1.0, rn / gamma);
}

/// P(gamma_hat^2 <= x) = 1 - F_F(n/x | 1, n-1, n/gamma^2).
inline double cv2_cdf(double x, int n, double gamma, Validity validity = Validity::strict) {
  detail::check_subgroup_size(n);
  detail::check_cv(gamma, validity);
  if (std::isnan(x)) throw DomainError("cv2_cdf: x is NaN");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double nn = static_cast<double>(n);
  return 1.0 - specfun::noncentral_f_cdf(nn / x, {1.0, nn - 1.0, nn / (gamma * gamma)});
}

/// Density of gamma_hat^2: (n/x^2) f_F(n/x | 1, n-1, n/gamma^2).
inline double cv2_pdf(double x, int n, double gamma, Validity validity = Validity::strict) {
  detail::check_subgroup_size(n);
  detail::check_cv(gamma, validity);
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("cv2_pdf: x must be positive");
  const double nn = static_cast<double>(n);
  const double u = nn / x;
  if (!std::isfinite(u)) return 0.0;
  const double f = specfun::noncentral_f_pdf(u, {1.0, nn - 1.0, nn / (gamma * gamma)});
  return f == 0.0 ? 0.0 : u / x * f;
}

/// First-order approximations for the in-control mean and standard deviation
/// of gamma_hat^2.
inline Cv2Moments cv2_moments(const ProcessModel& pm, Validity validity = Validity::strict) {
  pm.validate(validity);
  const double g2 = pm.gamma0 * pm.gamma0;
  const double n = pm.n;
  const double mean = g2 * (1.0 - 3.0 * g2 / n);
  const double bias = mean - g2;
  const double radicand =
      g2 * g2 * (2.0 / (n - 1.0) + g2 * (4.0 / n + 20.0 / (n * (n - 1.0)) + 75.0 * g2 / (n * n))) -
      bias * bias;
  if (!(radicand > 0.0) || !(mean > 0.0))
    throw DomainError("cv2_moments: approximation breaks down for gamma0=" +
                      std::to_string(pm.gamma0) + ", n=" + std::to_string(pm.n));
  return {mean, std::sqrt(radicand)};
}

}  // namespace cvrr
