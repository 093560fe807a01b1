#pragma once

// Fixed-order Gauss-Legendre rules.

#include <cmath>
#include <numbers>
#include <vector>

#include "cvrr/error.hpp"

namespace cvrr {

struct QuadratureRule {
  std::vector<double> nodes;    ///< on [-1, 1], ascending
  std::vector<double> weights;  ///< sum to 2
};

namespace detail {

/// P_n(x) and P_n'(x) by the three-term recurrence.
inline void legendre_with_derivative(int n, double x, double& value, double& derivative) {
  double p0 = 1.0;
  double p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  value = p1;
  derivative = n * (x * p1 - p0) / (x * x - 1.0);
}

}  // namespace detail

/// n-point Gauss-Legendre rule, nodes by Newton iteration on P_n.
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: order must be at least 1");
  QuadratureRule rule{std::vector<double>(n), std::vector<double>(n)};
  for (int i = 0; i < n / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double value = 0.0;
    double derivative = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      detail::legendre_with_derivative(n, x, value, derivative);
      const double dx = value / derivative;
      x -= dx;
      if (std::fabs(dx) <= 1e-16) break;
    }
    detail::legendre_with_derivative(n, x, value, derivative);
    const double w = 2.0 / ((1.0 - x * x) * derivative * derivative);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) {
    // Middle node of an odd rule: P_n'(0) = n P_{n-1}(0).
    double p0 = 1.0;
    double p1 = 0.0;
    for (int k = 2; k <= n - 1; ++k) {
      const double p2 = -(k - 1.0) * p0 / k;
      p0 = p1;
      p1 = p2;
    }
    const double derivative = n == 1 ? 1.0 : n * p1;
    rule.nodes[n / 2] = 0.0;
    rule.weights[n / 2] = 2.0 / (derivative * derivative);
  }
  return rule;
}

/// Integral of f over [lo, hi] with the given rule.
template <class F>
double integrate(F&& f, double lo, double hi, const QuadratureRule& rule) {
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * sum;
}

}  // namespace cvrr
