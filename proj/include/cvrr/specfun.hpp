#pragma once

// Scalar special functions behind the CV sampling laws: the regularized
// incomplete beta function and the noncentral t and F distributions.
//
// The noncentral laws are Poisson mixtures of incomplete beta terms. With the
// noncentralities met here (n / gamma^2 reaches several thousand) the Poisson
// weight e^{-mu} underflows long before the mode, so every mixture is summed
// outward from the Poisson mode, with the beta terms advanced by their
// three-term recurrences rather than re-evaluated.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "cvrr/error.hpp"

namespace cvrr::specfun {

/// Degrees of freedom and noncentrality of a noncentral t or F law.
struct NoncentralParams {
  double df1;           ///< numerator degrees of freedom (unused for t)
  double df2;           ///< denominator degrees of freedom, or nu for t
  double noncentrality; ///< lambda for F, delta for t

  void validate() const {
    if (!(df1 > 0.0) || !std::isfinite(df1)) throw DomainError("noncentral: df1 must be positive");
    if (!(df2 > 0.0) || !std::isfinite(df2)) throw DomainError("noncentral: df2 must be positive");
    if (!(noncentrality >= 0.0) || !std::isfinite(noncentrality))
      throw DomainError("noncentral F: noncentrality must be finite and non-negative");
  }
};

/// Series controls shared by the mixture kernels.
inline constexpr double kSeriesTolerance = 1e-16;
inline constexpr std::size_t kSeriesTermCap = 1'000'000;

namespace detail {

inline constexpr double kHalfLog2Pi = 0.918938533204672741780329736406;

/// lgamma(z) minus its Stirling approximation (z - 1/2) ln z - z + ln(2 pi)/2.
inline double stirling_correction(double z) {
  if (z >= 15.0) {
    const double r = 1.0 / z;
    const double r2 = r * r;
    return r * (1.0 / 12 - r2 * (1.0 / 360 - r2 * (1.0 / 1260 - r2 * (1.0 / 1680 - r2 / 1188))));
  }
  return std::lgamma(z) - ((z - 0.5) * std::log(z) - z + kHalfLog2Pi);
}

/// log(1 + u) - u without cancellation near u = 0.
inline double log1pmx(double u) {
  if (std::fabs(u) > 0.25) return std::log1p(u) - u;
  const double v = u / (2.0 + u);
  const double v2 = v * v;
  double power = v * v2;
  double series = 0.0;
  for (int k = 3; k < 60; k += 2) {
    const double term = power / k;
    series += term;
    if (std::fabs(term) <= 1e-18 * std::fabs(series)) break;
    power *= v2;
  }
  return -u * u / (2.0 + u) + 2.0 * series;
}

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// x^a y^b / B(a, b) with y = 1 - x supplied separately.
///
/// Uses the Stirling split of the beta function so that large a or b (the
/// shifted shape parameters of a mixture near its mode) keep full precision.
inline double beta_power_terms(double x, double y, double a, double b) {
  if (x <= 0.0 || y <= 0.0) return 0.0;
  const double c = a + b;
  const double u = (b * x - a * y) / a;  // c x / a - 1
  const double v = (a * y - b * x) / b;  // c y / b - 1
  const double log_value = a * log1pmx(u) + b * log1pmx(v) +
                           0.5 * std::log(a * b / (2.0 * M_PI * c)) + stirling_correction(c) -
                           stirling_correction(a) - stirling_correction(b);
  return std::exp(log_value);
}

/// Continued fraction for I_x(a, b) (modified Lentz).
inline double beta_continued_fraction(double x, double a, double b) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 100000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) return h;
  }
  throw EvaluationError("incomplete beta: continued fraction did not converge");
}

/// I_x(a, b) with y = 1 - x supplied separately.
inline double ibeta(double x, double y, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return beta_power_terms(x, y, a, b) * beta_continued_fraction(x, a, b) / a;
  }
  return 1.0 - beta_power_terms(x, y, a, b) * beta_continued_fraction(y, b, a) / b;
}

/// Poisson probability e^{-mu} mu^k / Gamma(k + 1) for real k >= 0.
inline double poisson_weight(double k, double mu) {
  if (mu == 0.0) return k == 0.0 ? 1.0 : 0.0;
  if (k == 0.0) return std::exp(-mu);
  const double u = (k - mu) / mu;
  // mu * ((1+u) ln(1+u) - u), the saddle-point deviance
  const double deviance = mu * (log1pmx(u) + u * std::log1p(u));
  return std::exp(-deviance - stirling_correction(k)) / std::sqrt(2.0 * M_PI * k);
}

/// Sum over j >= 0 of poisson_weight(j + offset, mu) * I_x(a0 + j, b).
///
/// Starts at the Poisson mode and walks both ways; each direction stops once
/// a geometric bound on the neglected tail drops below tol * sum.
inline double poisson_beta_mixture(double mu, double offset, double x, double y, double a0, double b,
                                   double tol = kSeriesTolerance,
                                   std::size_t cap = kSeriesTermCap) {
  if (x <= 0.0) return 0.0;
  const double start = std::floor(mu - offset);
  const std::size_t k = start > 0.0 ? static_cast<std::size_t>(start) : 0;
  const double ak = a0 + static_cast<double>(k);

  const double w_mode = poisson_weight(static_cast<double>(k) + offset, mu);
  const double i_mode = ibeta(x, y, ak, b);
  const double t_mode = y > 0.0 ? beta_power_terms(x, y, ak, b) / ak : 0.0;

  double sum = w_mode * i_mode;
  std::size_t terms = 1;

  // Upward: I_{j+1} = I_j - t_j, t_{j+1} = t_j x (a0+j+b)/(a0+j+1).
  {
    double w = w_mode;
    double ib = i_mode;
    double t = t_mode;
    for (std::size_t j = k;; ++j) {
      const double aj = a0 + static_cast<double>(j);
      ib -= t;
      if (ib < 0.0) ib = 0.0;
      t *= x * (aj + b) / (aj + 1.0);
      w *= mu / (static_cast<double>(j) + 1.0 + offset);
      const double term = w * ib;
      sum += term;
      if (++terms > cap) throw EvaluationError("noncentral series: term cap reached");
      const double ratio = mu / (static_cast<double>(j) + 2.0 + offset);
      if (ib == 0.0 || w == 0.0) break;
      if (ratio < 1.0) {
        const double bound = term * ratio / (1.0 - ratio);
        if (bound <= tol * sum || bound < 1e-300) break;
      }
    }
  }

  // Downward: I_{j-1} = I_j + t_{j-1}, t_{j-1} = t_j (a0+j)/(x (a0+j-1+b)).
  {
    double w = w_mode;
    double ib = i_mode;
    double t = t_mode;
    for (std::size_t j = k; j > 0; --j) {
      const double aj = a0 + static_cast<double>(j);
      t *= aj / (x * (aj - 1.0 + b));
      ib += t;
      if (ib > 1.0) ib = 1.0;
      w *= (static_cast<double>(j) + offset) / mu;
      const double term = w * ib;
      sum += term;
      if (++terms > cap) throw EvaluationError("noncentral series: term cap reached");
      const double ratio = (static_cast<double>(j) - 1.0 + offset) / mu;
      if (w == 0.0) break;
      if (ratio < 1.0) {
        const double bound = w * ratio / (1.0 - ratio);
        if (bound <= tol * sum || bound < 1e-300) break;
      }
    }
  }
  return sum;
}

inline double clamp_probability(double p) { return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p); }

/// Noncentral t CDF for t >= 0 (any sign of delta).
inline double noncentral_t_cdf_nonneg(double t, double nu, double delta) {
  const double t2 = t * t;
  const double y = t2 / (nu + t2);
  const double x1 = nu / (nu + t2);
  const double mu = 0.5 * delta * delta;
  const double base = normal_cdf(-delta);
  if (y == 0.0) return base;
  const double p_series = poisson_beta_mixture(mu, 0.0, y, x1, 0.5, 0.5 * nu, 1e-14);
  const double q_series = poisson_beta_mixture(mu, 0.5, y, x1, 1.0, 0.5 * nu, 1e-14);
  const double sign = delta < 0.0 ? -1.0 : 1.0;
  return base + 0.5 * (p_series + sign * q_series);
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b).
inline double reg_inc_beta(double x, double a, double b) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("reg_inc_beta: x must lie in [0, 1]");
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw DomainError("reg_inc_beta: shape parameters must be positive");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  return detail::clamp_probability(detail::ibeta(x, 1.0 - x, a, b));
}

/// Poisson probability mass at k (k may be non-integer) with mean mu.
inline double poisson_pmf(double k, double mu) {
  if (!(k >= 0.0) || !(mu >= 0.0)) throw DomainError("poisson_pmf: arguments must be non-negative");
  return detail::poisson_weight(k, mu);
}

/// CDF of the noncentral t distribution with nu degrees of freedom and
/// noncentrality delta.
inline double noncentral_t_cdf(double x, double nu, double delta) {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("noncentral_t_cdf: nu must be positive");
  if (std::isnan(x) || !std::isfinite(delta))
    throw DomainError("noncentral_t_cdf: arguments must be finite");
  if (x == std::numeric_limits<double>::infinity()) return 1.0;
  if (x == -std::numeric_limits<double>::infinity()) return 0.0;
  if (x >= 0.0) return detail::clamp_probability(detail::noncentral_t_cdf_nonneg(x, nu, delta));
  return detail::clamp_probability(1.0 - detail::noncentral_t_cdf_nonneg(-x, nu, -delta));
}

/// CDF of the noncentral F distribution: the Poisson(lambda/2) mixture of
/// I_{z}(df1/2 + j, df2/2) with z = df1 x / (df2 + df1 x).
inline double noncentral_f_cdf(double x, const NoncentralParams& p) {
  p.validate();
  if (std::isnan(x)) throw DomainError("noncentral_f_cdf: x is NaN");
  if (x <= 0.0) return 0.0;
  if (x == std::numeric_limits<double>::infinity()) return 1.0;
  const double denom = p.df2 + p.df1 * x;
  const double z = p.df1 * x / denom;
  const double y = p.df2 / denom;
  return detail::clamp_probability(
      detail::poisson_beta_mixture(0.5 * p.noncentrality, 0.0, z, y, 0.5 * p.df1, 0.5 * p.df2));
}

/// Density of the noncentral F distribution.
inline double noncentral_f_pdf(double x, const NoncentralParams& p) {
  p.validate();
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("noncentral_f_pdf: x must be positive");
  const double denom = p.df2 + p.df1 * x;
  const double z = p.df1 * x / denom;
  const double y = p.df2 / denom;
  const double dz_dx = p.df1 * p.df2 / (denom * denom);
  const double a0 = 0.5 * p.df1;
  const double b = 0.5 * p.df2;
  const double mu = 0.5 * p.noncentrality;

  const std::size_t k = mu >= 1.0 ? static_cast<std::size_t>(std::floor(mu)) : 0;
  const double ak = a0 + static_cast<double>(k);
  const double d_mode = detail::beta_power_terms(z, y, ak, b) / (z * y);
  const double w_mode = detail::poisson_weight(static_cast<double>(k), mu);
  double sum = w_mode * d_mode;
  std::size_t terms = 1;

  {
    double term = sum;
    for (std::size_t j = k;; ++j) {
      const double aj = a0 + static_cast<double>(j);
      const double ratio = mu / (static_cast<double>(j) + 1.0) * z * (aj + b) / aj;
      term *= ratio;
      sum += term;
      if (++terms > kSeriesTermCap) throw EvaluationError("noncentral_f_pdf: term cap reached");
      if (term == 0.0) break;
      if (ratio < 1.0) {
        const double bound = term * ratio / (1.0 - ratio);
        if (bound <= kSeriesTolerance * sum) break;
      }
    }
  }
  {
    double term = w_mode * d_mode;
    for (std::size_t j = k; j > 0; --j) {
      const double aj = a0 + static_cast<double>(j);
      const double ratio = static_cast<double>(j) / mu * (aj - 1.0) / (z * (aj - 1.0 + b));
      term *= ratio;
      sum += term;
      if (++terms > kSeriesTermCap) throw EvaluationError("noncentral_f_pdf: term cap reached");
      if (term == 0.0) break;
      if (ratio < 1.0) {
        const double bound = term * ratio / (1.0 - ratio);
        if (bound <= kSeriesTolerance * sum) break;
      }
    }
  }
  return dz_dx * sum;
}

}  // namespace cvrr::specfun
