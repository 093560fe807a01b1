#pragma once

// Chart design (solving k for a target in-control ARL), ARL at a CV shift,
// expected ARL over a shift range, and Cartesian parameter sweeps.

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "cvrr/cvdist.hpp"
#include "cvrr/error.hpp"
#include "cvrr/merror.hpp"
#include "cvrr/quadrature.hpp"
#include "cvrr/roots.hpp"
#include "cvrr/runrules.hpp"

namespace cvrr {

inline constexpr double kDefaultArl0 = 370.4;

struct DesignOptions {
  double k_max = 20.0;           ///< upper end of the k bracket
  double scan_step = 0.25;       ///< grid used to locate the sign change
  double f_tolerance = 1e-6;     ///< relative to the ARL0 target
  double k_tolerance = 1e-9;
  double p_saturation = 1e-12;   ///< 1 - p below this counts as an infinite ARL
  Validity validity = Validity::strict;
};

/// LCL = mean - k std (lower) or UCL = mean + k std (upper).
inline double control_limit(Direction direction, const Cv2Moments& m, double k) {
  return direction == Direction::lower ? m.mean - k * m.std : m.mean + k * m.std;
}

struct ChartDesign {
  RunRule rule;
  Direction direction = Direction::upper;
  ProcessModel process{0.1, 5};
  MeasurementErrorModel me;
  double k = 0.0;
  double limit = 0.0;
  double arl0_target = kDefaultArl0;
  double achieved_arl0 = 0.0;
  Cv2Moments moments{0.0, 0.0};
  double gamma_design = 0.0;  ///< in-control CV of the observed quantity
  Validity validity = Validity::strict;

  /// A design from a precomputed limit; k is recovered from the moments.
  static ChartDesign with_limit(RunRule rule, Direction direction, const ProcessModel& pm,
                                const MeasurementErrorModel& me, double limit,
                                double arl0_target = kDefaultArl0,
                                Validity validity = Validity::strict);
};

/// Exact run-length metrics of a chart with the given limit when the plotted
/// statistic has CV gamma.
inline RunLengthMetrics arl_for_limit(RunRule rule, Direction direction, double limit, int n,
                                      double gamma, Validity validity = Validity::strict) {
  const double p = in_control_prob(direction, limit, n, gamma, validity);
  return run_length_metrics(build_chain(rule, p));
}

inline ChartDesign ChartDesign::with_limit(RunRule rule, Direction direction,
                                           const ProcessModel& pm,
                                           const MeasurementErrorModel& me, double limit,
                                           double arl0_target, Validity validity) {
  rule.validate();
  pm.validate(validity);
  if (!std::isfinite(limit)) throw DomainError("control limit must be finite");
  if (direction == Direction::lower && !(limit > 0.0))
    throw DomainError("a lower control limit must be positive");
  ChartDesign d;
  d.rule = rule;
  d.direction = direction;
  d.process = pm;
  d.me = me;
  d.gamma_design = observed_cv_incontrol(pm.gamma0, me);
  d.moments = cv2_moments({d.gamma_design, pm.n}, validity);
  d.limit = limit;
  d.k = direction == Direction::lower ? (d.moments.mean - limit) / d.moments.std
                                      : (limit - d.moments.mean) / d.moments.std;
  d.arl0_target = arl0_target;
  d.validity = validity;
  d.achieved_arl0 =
      arl_for_limit(rule, direction, limit, pm.n, d.gamma_design, validity).arl;
  return d;
}

/// Solves ARL(k; tau = 1) = arl0 for k. The in-control ARL increases with k in
/// both directions; the sign change is located on a coarse grid and then
/// refined by bracketed root finding.
inline ChartDesign solve_design(RunRule rule, Direction direction, const ProcessModel& pm,
                                const MeasurementErrorModel& me, double arl0,
                                const DesignOptions& opt = {}) {
  rule.validate();
  pm.validate(opt.validity);
  me.validate();
  if (!(arl0 > 1.0) || !std::isfinite(arl0)) throw DomainError("ARL0 target must exceed 1");

  ChartDesign d;
  d.rule = rule;
  d.direction = direction;
  d.process = pm;
  d.me = me;
  d.arl0_target = arl0;
  d.validity = opt.validity;
  d.gamma_design = observed_cv_incontrol(pm.gamma0, me);
  d.moments = cv2_moments({d.gamma_design, pm.n}, opt.validity);

  constexpr double inf = std::numeric_limits<double>::infinity();
  double best_arl = 0.0;
  auto g = [&](double k) {
    const double limit = control_limit(direction, d.moments, k);
    const double p = in_control_prob(direction, limit, pm.n, d.gamma_design, opt.validity);
    if (p >= 1.0 - opt.p_saturation) return inf;
    try {
      const double arl = run_length_metrics(build_chain(rule, p)).arl;
      if (arl > best_arl) best_arl = arl;
      return arl - arl0;
    } catch (const SingularChainError&) {
      return inf;
    } catch (const EvaluationError&) {
      return inf;
    }
  };

  // A lower limit reaches zero at k = mean / std, beyond which p = 1.
  const double k_hi = direction == Direction::lower
                          ? std::min(opt.k_max, d.moments.mean / d.moments.std)
                          : opt.k_max;
  double lo = 0.0;
  double flo = g(lo);
  if (flo > 0.0)
    throw UnattainableDesignError("in-control ARL already exceeds the target at k = 0", best_arl);
  double hi = lo;
  double fhi = flo;
  while (fhi < 0.0 && hi < k_hi) {
    lo = hi;
    flo = fhi;
    hi = std::min(hi + opt.scan_step, k_hi);
    fhi = g(hi);
  }
  if (fhi < 0.0) {
    throw UnattainableDesignError(
        "target ARL0 " + std::to_string(arl0) + " is unattainable; the largest in-control ARL "
            "reachable is " + std::to_string(best_arl),
        best_arl);
  }

  RootOptions ro;
  ro.f_tolerance = opt.f_tolerance * arl0;
  ro.x_tolerance = opt.k_tolerance;
  const RootResult root = find_root(g, lo, hi, flo, fhi, ro);
  // A bracket that collapsed without meeting the tolerance sits on the edge
  // where p saturates: the target lies beyond what the chart can deliver.
  if (!root.converged_on_f && !(std::fabs(root.fx) <= 1e-3 * arl0))
    throw UnattainableDesignError(
        "target ARL0 " + std::to_string(arl0) +
            " is unattainable before the limit saturates; the largest in-control ARL reachable "
            "is " + std::to_string(best_arl),
        best_arl);
  d.k = root.x;
  d.limit = control_limit(direction, d.moments, d.k);
  if (direction == Direction::lower && !(d.limit > 0.0))
    throw UnattainableDesignError("lower control limit would be non-positive", best_arl);
  d.achieved_arl0 = arl0 + root.fx;
  return d;
}

/// ARL and SDRL of a design after the CV shifts by `shift`.
inline RunLengthMetrics arl_at_shift(const ChartDesign& d, const ShiftSpec& shift) {
  const double gamma1 = observed_cv_shifted(d.process.gamma0, shift, d.me);
  return arl_for_limit(d.rule, d.direction, d.limit, d.process.n, gamma1, d.validity);
}

inline RunLengthMetrics arl_at_shift(const ChartDesign& d, double tau, double b = 1.0) {
  return arl_at_shift(d, ShiftSpec::from_tau(tau, d.process.gamma0, b));
}

/// Shift range with a uniform density on [lo, hi].
struct ShiftRange {
  double lo = 1.0;
  double hi = 2.0;

  static ShiftRange decreasing() { return {0.5, 1.0}; }
  static ShiftRange increasing() { return {1.0, 2.0}; }

  void validate() const {
    if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi))
      throw DomainError("shift range requires 0 < lo < hi");
  }
};

inline constexpr int kDefaultEarlNodes = 64;

/// Expectation of f(tau) for tau uniform on the range.
template <class F>
double expected_over_range(F&& f, const ShiftRange& range, int nodes = kDefaultEarlNodes) {
  range.validate();
  if (nodes < 8) throw DomainError("EARL quadrature needs at least 8 nodes");
  return integrate(f, range.lo, range.hi, gauss_legendre(nodes)) / (range.hi - range.lo);
}

/// EARL = integral over the range of ARL(tau) f(tau) d tau, f uniform.
inline double earl(const ChartDesign& d, const ShiftRange& range, int nodes = kDefaultEarlNodes,
                   double b = 1.0) {
  return expected_over_range([&](double tau) { return arl_at_shift(d, tau, b).arl; }, range,
                             nodes);
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepMetric { arl, earl };

/// Cartesian grid. An empty `directions` list picks the direction from the
/// shift: lower for tau < 1 (or a range below 1), upper otherwise.
struct SweepGrid {
  SweepMetric metric = SweepMetric::arl;
  std::vector<RunRule> rules{{2, 3}};
  std::vector<Direction> directions;
  std::vector<int> n{5};
  std::vector<double> gamma0{0.05};
  std::vector<double> theta{0.0};
  std::vector<double> eta{0.0};
  std::vector<double> slope{1.0};
  std::vector<int> reps{1};
  std::vector<double> arl0{kDefaultArl0};
  std::vector<double> tau{1.0};         ///< used when metric == arl
  std::vector<ShiftRange> ranges;       ///< used when metric == earl
  double b = 1.0;
  int nodes = kDefaultEarlNodes;
  DesignOptions design;
};

struct SweepRow {
  RunRule rule;
  Direction direction = Direction::upper;
  int n = 0;
  double gamma0 = 0.0;
  double theta = 0.0;
  double eta = 0.0;
  double slope = 1.0;
  int reps = 1;
  double arl0 = kDefaultArl0;
  double tau = 1.0;       ///< arl rows
  double range_lo = 0.0;  ///< earl rows
  double range_hi = 0.0;
  double k = std::numeric_limits<double>::quiet_NaN();
  double limit = std::numeric_limits<double>::quiet_NaN();
  double arl = std::numeric_limits<double>::quiet_NaN();
  double sdrl = std::numeric_limits<double>::quiet_NaN();
  double earl = std::numeric_limits<double>::quiet_NaN();
  std::string error;  ///< empty when the cell evaluated cleanly
  std::string error_kind;
};

inline Direction direction_for_shift(double tau) {
  return tau < 1.0 ? Direction::lower : Direction::upper;
}

inline Direction direction_for_range(const ShiftRange& r) {
  return r.hi <= 1.0 ? Direction::lower : Direction::upper;
}

/// Evaluates every grid cell. Rows are ordered rule, n, gamma0, theta, eta,
/// slope, reps, arl0, shift, direction (outermost first). A failing cell
/// records its error and the sweep continues.
inline std::vector<SweepRow> sweep(const SweepGrid& grid) {
  std::vector<SweepRow> rows;
  using Key = std::tuple<int, int, int, double, double, double, double, int, double, int>;
  std::map<Key, ChartDesign> designs;
  std::map<Key, std::pair<std::string, std::string>> failures;

  const bool by_range = grid.metric == SweepMetric::earl;
  const std::size_t shifts = by_range ? grid.ranges.size() : grid.tau.size();

  for (const RunRule& rule : grid.rules)
    for (int n : grid.n)
      for (double g0 : grid.gamma0)
        for (double theta : grid.theta)
          for (double eta : grid.eta)
            for (double slope : grid.slope)
              for (int reps : grid.reps)
                for (double arl0 : grid.arl0)
                  for (std::size_t si = 0; si < shifts; ++si) {
                    std::vector<Direction> dirs = grid.directions;
                    if (dirs.empty())
                      dirs.push_back(by_range ? direction_for_range(grid.ranges[si])
                                              : direction_for_shift(grid.tau[si]));
                    for (Direction dir : dirs) {
                      SweepRow row;
                      row.rule = rule;
                      row.direction = dir;
                      row.n = n;
                      row.gamma0 = g0;
                      row.theta = theta;
                      row.eta = eta;
                      row.slope = slope;
                      row.reps = reps;
                      row.arl0 = arl0;
                      if (by_range) {
                        row.range_lo = grid.ranges[si].lo;
                        row.range_hi = grid.ranges[si].hi;
                      } else {
                        row.tau = grid.tau[si];
                      }
                      const Key key{rule.r, rule.s, static_cast<int>(dir), g0, theta, eta,
                                    slope, reps, arl0, n};
                      try {
                        auto failed = failures.find(key);
                        if (failed != failures.end()) {
                          row.error = failed->second.first;
                          row.error_kind = failed->second.second;
                          rows.push_back(row);
                          continue;
                        }
                        auto it = designs.find(key);
                        if (it == designs.end()) {
                          const MeasurementErrorModel me{theta, eta, slope, reps};
                          try {
                            it = designs
                                     .emplace(key, solve_design(rule, dir, {g0, n}, me, arl0,
                                                                grid.design))
                                     .first;
                          } catch (const Error& e) {
                            failures.emplace(key, std::pair{std::string(e.what()),
                                                            std::string(to_string(e.kind()))});
                            throw;
                          }
                        }
                        const ChartDesign& d = it->second;
                        row.k = d.k;
                        row.limit = d.limit;
                        if (by_range) {
                          row.earl = earl(d, grid.ranges[si], grid.nodes, grid.b);
                        } else {
                          const RunLengthMetrics m = arl_at_shift(d, row.tau, grid.b);
                          row.arl = m.arl;
                          row.sdrl = m.sdrl;
                        }
                      } catch (const Error& e) {
                        row.error = e.what();
                        row.error_kind = std::string(to_string(e.kind()));
                      }
                      rows.push_back(row);
                    }
                  }
  return rows;
}

}  // namespace cvrr
