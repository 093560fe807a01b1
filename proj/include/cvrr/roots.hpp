#pragma once

// Bracketed scalar root finding: Illinois-modified regula falsi with a
// bisection fallback. A +inf function value is accepted at the upper end of
// the bracket and forces bisection until it is displaced.

#include <cmath>
#include <functional>
#include <limits>

#include "cvrr/error.hpp"

namespace cvrr {

struct RootOptions {
  double f_tolerance = 0.0;  ///< stop once |f(x)| <= f_tolerance
  double x_tolerance = 1e-9; ///< stop once the bracket is this narrow
  int max_iterations = 400;
};

struct RootResult {
  double x = 0.0;
  double fx = 0.0;
  double lo = 0.0;  ///< final bracket
  double hi = 0.0;
  int iterations = 0;
  bool converged_on_f = false;
};

/// Requires f(lo) <= 0 <= f(hi) with a single sign change inside.
template <class F>
RootResult find_root(F&& f, double lo, double hi, double flo, double fhi,
                     const RootOptions& opt = {}) {
  if (!(lo < hi)) throw SolverError("find_root: empty bracket");
  if (!(flo <= 0.0 && fhi >= 0.0)) throw SolverError("find_root: bracket does not straddle a root");
  if (std::fabs(flo) <= opt.f_tolerance) return {lo, flo, lo, hi, 0, true};
  if (std::fabs(fhi) <= opt.f_tolerance) return {hi, fhi, lo, hi, 0, true};

  // Interpolation weights; halved Illinois-style when one end is retained twice.
  double wlo = flo;
  double whi = fhi;
  int side = 0;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    const double width = hi - lo;
    double x = 0.5 * (lo + hi);
    if (std::isfinite(whi) && whi != wlo) {
      const double xs = (lo * whi - hi * wlo) / (whi - wlo);
      if (xs > lo + 1e-3 * width && xs < hi - 1e-3 * width) x = xs;
    }
    const double fx = f(x);
    if (std::isnan(fx)) throw SolverError("find_root: function returned NaN");
    if (std::fabs(fx) <= opt.f_tolerance) return {x, fx, lo, hi, it, true};
    if (fx < 0.0) {
      lo = x;
      flo = wlo = fx;
      if (side == -1) whi *= 0.5;
      side = -1;
    } else {
      hi = x;
      fhi = whi = fx;
      if (side == 1) wlo *= 0.5;
      side = 1;
    }
    if (hi - lo <= opt.x_tolerance) {
      const bool use_hi = std::isfinite(fhi) && std::fabs(fhi) < std::fabs(flo);
      return {use_hi ? hi : lo, use_hi ? fhi : flo, lo, hi, it, false};
    }
  }
  throw SolverError("find_root: no convergence within the iteration cap");
}

}  // namespace cvrr
