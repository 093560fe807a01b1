#pragma once

// Monte Carlo run-length estimation through the full measurement pipeline:
// true normal items, m noisy linear measurements per item, the squared sample
// CV of the n averaged items, and a run-rule tracker.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include "cvrr/design.hpp"
#include "cvrr/error.hpp"
#include "cvrr/merror.hpp"
#include "cvrr/runrules.hpp"

namespace cvrr {

/// Counter-based generator: output i of stream s is mix(seed, s, i). Streams
/// are independent of the order in which they are consumed.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  std::uint64_t counter() const { return counter_; }

  /// splitmix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

inline constexpr std::uint64_t kDefaultMaxRunLength = 10'000'000;

struct SimConfig {
  std::uint64_t replications = 100'000;
  std::uint64_t seed = 20240607;
  std::uint64_t max_run_length = kDefaultMaxRunLength;

  void validate() const {
    if (replications < 1) throw DomainError("replications must be at least 1");
    if (max_run_length < 1) throw DomainError("max_run_length must be at least 1");
  }
};

/// Draws subgroups and returns their observed squared sample CV. Units are
/// normalised to mu0 = 1 and sigma0 = gamma0, so A = theta and sigma_M = eta
/// gamma0. A subgroup whose observed mean is exactly zero is redrawn and
/// counted.
class SubgroupSampler {
 public:
  SubgroupSampler(int n, double gamma0, const ShiftSpec& shift, const MeasurementErrorModel& me)
      : n_(n),
        me_(me),
        noisy_(me.eta > 0.0),
        item_(1.0 + shift.a * gamma0, shift.b * gamma0),
        noise_(0.0, me.eta > 0.0 ? me.eta * gamma0 : 1.0) {
    if (n < 2) throw DomainError("subgroup size n must be at least 2");
    if (!(gamma0 > 0.0) || !(shift.b > 0.0)) throw DomainError("sampler needs gamma0 > 0 and b > 0");
    me.validate();
  }

  /// Drops cached variates so the next draw depends only on the generator.
  void reset() {
    item_.reset();
    noise_.reset();
  }

  template <class Rng>
  double operator()(Rng& rng) {
    for (;;) {
      double first = 0.0;
      double sum = 0.0;
      double sumsq = 0.0;
      for (int j = 0; j < n_; ++j) {
        const double x = item_(rng);
        double acc = 0.0;
        for (int k = 0; k < me_.reps; ++k)
          acc += me_.theta + me_.slope * x + (noisy_ ? noise_(rng) : 0.0);
        const double obs = acc / me_.reps;
        if (j == 0) first = obs;
        const double d = obs - first;
        sum += d;
        sumsq += d * d;
      }
      const double mean = first + sum / n_;
      if (mean == 0.0) {
        ++redraws_;
        continue;
      }
      const double var = (sumsq - sum * sum / n_) / (n_ - 1);
      return (var > 0.0 ? var : 0.0) / (mean * mean);
    }
  }

  std::uint64_t redraws() const { return redraws_; }

 private:
  int n_;
  MeasurementErrorModel me_;
  bool noisy_;
  std::normal_distribution<double> item_;
  std::normal_distribution<double> noise_;
  std::uint64_t redraws_ = 0;
};

/// One observed squared sample CV.
template <class Rng>
double simulate_subgroup(int n, double gamma0, const ShiftSpec& shift,
                         const MeasurementErrorModel& me, Rng& rng) {
  SubgroupSampler sampler(n, gamma0, shift, me);
  return sampler(rng);
}

struct SimResult {
  RunLengthMetrics metrics;
  std::uint64_t replications = 0;
  std::uint64_t truncated = 0;  ///< runs stopped at max_run_length
  std::uint64_t redraws = 0;
  std::uint64_t seed = 0;
};

/// Empirical ARL/SDRL of a design under a shift. Replication i uses stream i
/// of the master seed, so results depend only on (seed, replications).
inline SimResult estimate_run_length(const ChartDesign& d, const ShiftSpec& shift,
                                     const SimConfig& cfg) {
  cfg.validate();
  d.rule.validate();
  d.me.validate();
  std::uint64_t sum = 0;
  unsigned __int128 sumsq = 0;
  SimResult out;
  out.replications = cfg.replications;
  out.seed = cfg.seed;
  RuleTracker tracker(d.rule);
  SubgroupSampler sampler(d.process.n, d.process.gamma0, shift, d.me);
  for (std::uint64_t rep = 0; rep < cfg.replications; ++rep) {
    CounterRng rng(cfg.seed, rep);
    tracker.reset();
    sampler.reset();
    std::uint64_t length = 0;
    for (;;) {
      const double g2 = sampler(rng);
      const bool outside = d.direction == Direction::lower ? g2 < d.limit : g2 > d.limit;
      ++length;
      if (tracker.push(outside)) break;
      if (length >= cfg.max_run_length) {
        ++out.truncated;
        break;
      }
    }
    sum += length;
    sumsq += static_cast<unsigned __int128>(length) * length;
  }
  out.redraws = sampler.redraws();
  const double r = static_cast<double>(cfg.replications);
  const double mean = static_cast<double>(sum) / r;
  double var = 0.0;
  if (cfg.replications > 1) {
    const long double s = static_cast<long double>(sum);
    const long double ss = static_cast<long double>(sumsq);
    var = static_cast<double>((ss - s * s / r) / (r - 1.0));
    if (var < 0.0) var = 0.0;
  }
  const double sd = std::sqrt(var);
  out.metrics = {mean, sd, MetricMethod::monte_carlo, sd / std::sqrt(r)};
  return out;
}

inline SimResult estimate_run_length(const ChartDesign& d, double tau, const SimConfig& cfg,
                                     double b = 1.0) {
  return estimate_run_length(d, ShiftSpec::from_tau(tau, d.process.gamma0, b), cfg);
}

}  // namespace cvrr
