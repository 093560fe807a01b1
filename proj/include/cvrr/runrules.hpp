#pragma once

// r-out-of-s run rules as absorbing Markov chains.
//
// A transient state is the history of the last s-1 plotted points, one bit
// per point (1 = inside the control region), oldest point in the most
// significant bit. Histories holding r or more outside points are unreachable
// before the signal and are dropped. States are ordered by their bit pattern,
// so the all-inside history, which is the initial state, comes last.

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cvrr/cvdist.hpp"
#include "cvrr/error.hpp"

namespace cvrr {

enum class Direction { lower, upper };

inline std::string_view to_string(Direction d) { return d == Direction::lower ? "lower" : "upper"; }

inline Direction parse_direction(std::string_view text) {
  if (text == "lower" || text == "LOWER" || text == "down") return Direction::lower;
  if (text == "upper" || text == "UPPER" || text == "up") return Direction::upper;
  throw DomainError("unknown chart direction '" + std::string(text) + "'");
}

/// Signal when r of the last s plotted points fall outside the control region.
struct RunRule {
  int r = 2;
  int s = 3;

  static constexpr int kMaxWindow = 16;

  static RunRule shewhart() { return {1, 1}; }

  void validate() const {
    if (r < 1 || s < r)
      throw DomainError("run rule requires 1 <= r <= s, got (" + std::to_string(r) + "," +
                        std::to_string(s) + ")");
    if (s > kMaxWindow) throw DomainError("run rule window s is limited to 16");
  }

  std::string label() const { return std::to_string(r) + "-of-" + std::to_string(s); }

  friend bool operator==(const RunRule&, const RunRule&) = default;
};

/// Parses "r,s", "r/s" or "r-of-s".
inline RunRule parse_rule(std::string_view text) {
  const std::string t(text);
  std::size_t pos = t.find_first_of(",/");
  std::size_t skip = 1;
  if (pos == std::string::npos) {
    pos = t.find("-of-");
    skip = 4;
  }
  if (pos == std::string::npos) throw DomainError("cannot parse run rule '" + t + "'");
  try {
    RunRule rule{std::stoi(t.substr(0, pos)), std::stoi(t.substr(pos + skip))};
    rule.validate();
    return rule;
  } catch (const std::logic_error&) {
    throw DomainError("cannot parse run rule '" + t + "'");
  }
}

/// The transient histories of a rule and their ordering.
class ChainLayout {
 public:
  explicit ChainLayout(RunRule rule) : rule_(rule) {
    rule.validate();
    const int bits = rule.s - 1;
    const std::uint32_t count = std::uint32_t{1} << bits;
    index_.assign(count, -1);
    for (std::uint32_t h = 0; h < count; ++h) {
      if (outside_count(h) <= rule.r - 1) {
        index_[h] = static_cast<int>(states_.size());
        states_.push_back(h);
      }
    }
  }

  const RunRule& rule() const { return rule_; }
  std::size_t size() const { return states_.size(); }
  const std::vector<std::uint32_t>& states() const { return states_; }
  std::uint32_t all_inside() const { return mask(); }
  std::size_t initial_index() const { return static_cast<std::size_t>(index_[all_inside()]); }

  /// Index of a history, or nullopt if it already holds r outside points.
  std::optional<std::size_t> index_of(std::uint32_t history) const {
    const int i = index_[history & mask()];
    if (i < 0) return std::nullopt;
    return static_cast<std::size_t>(i);
  }

  int outside_count(std::uint32_t history) const {
    return (rule_.s - 1) - std::popcount(history & mask());
  }

  /// History after plotting one more point.
  std::uint32_t advance(std::uint32_t history, bool inside) const {
    return ((history << 1) | (inside ? 1u : 0u)) & mask();
  }

  /// True when an outside point plotted after this history completes the rule.
  bool signals_on_outside(std::uint32_t history) const {
    return outside_count(history) + 1 >= rule_.r;
  }

  /// Oldest-first rendering, 'o' for an outside point and '.' for inside.
  std::string render(std::uint32_t history) const {
    std::string out;
    for (int bit = rule_.s - 2; bit >= 0; --bit) out += ((history >> bit) & 1u) ? '.' : 'o';
    return out;
  }

 private:
  std::uint32_t mask() const { return (std::uint32_t{1} << (rule_.s - 1)) - 1u; }

  RunRule rule_;
  std::vector<std::uint32_t> states_;
  std::vector<int> index_;
};

/// Transient part of the chain for a given in-control-region probability p.
struct RuleChain {
  RunRule rule;
  double p = 0.0;
  std::vector<std::uint32_t> states;
  std::vector<double> transition;  ///< row-major size() x size()
  std::vector<double> absorption;  ///< per-state probability of signalling next
  std::size_t initial_index = 0;

  std::size_t size() const { return states.size(); }
  double at(std::size_t i, std::size_t j) const { return transition[i * size() + j]; }
};

inline RuleChain build_chain(RunRule rule, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("build_chain: p must lie in [0, 1]");
  const ChainLayout layout(rule);
  const std::size_t n = layout.size();
  RuleChain chain{rule, p, layout.states(), std::vector<double>(n * n, 0.0),
                  std::vector<double>(n, 0.0), layout.initial_index()};
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t h = chain.states[i];
    chain.transition[i * n + *layout.index_of(layout.advance(h, true))] += p;
    if (layout.signals_on_outside(h)) {
      chain.absorption[i] += 1.0 - p;
    } else {
      chain.transition[i * n + *layout.index_of(layout.advance(h, false))] += 1.0 - p;
    }
  }
  return chain;
}

enum class MetricMethod { exact_markov, monte_carlo };

struct RunLengthMetrics {
  double arl = 0.0;
  double sdrl = 0.0;
  MetricMethod method = MetricMethod::exact_markov;
  std::optional<double> standard_error;  ///< present for Monte Carlo estimates only
};

namespace detail {

/// Dense LU with partial pivoting for the small systems (I - Q) x = b.
class DenseLu {
 public:
  DenseLu(std::vector<double> a, std::size_t n) : a_(std::move(a)), n_(n), piv_(n) {
    for (std::size_t k = 0; k < n_; ++k) {
      std::size_t best = k;
      for (std::size_t i = k + 1; i < n_; ++i)
        if (std::fabs(at(i, k)) > std::fabs(at(best, k))) best = i;
      piv_[k] = best;
      if (at(best, k) == 0.0) throw SingularChainError("run-length system is singular");
      if (best != k)
        for (std::size_t j = 0; j < n_; ++j) std::swap(at(k, j), at(best, j));
      for (std::size_t i = k + 1; i < n_; ++i) {
        const double f = at(i, k) / at(k, k);
        at(i, k) = f;
        if (f == 0.0) continue;
        for (std::size_t j = k + 1; j < n_; ++j) at(i, j) -= f * at(k, j);
      }
    }
  }

  std::vector<double> solve(std::vector<double> b) const {
    for (std::size_t k = 0; k < n_; ++k) std::swap(b[k], b[piv_[k]]);
    for (std::size_t k = 0; k < n_; ++k)
      for (std::size_t i = k + 1; i < n_; ++i) b[i] -= at(i, k) * b[k];
    for (std::size_t k = n_; k-- > 0;) {
      for (std::size_t j = k + 1; j < n_; ++j) b[k] -= at(k, j) * b[j];
      b[k] /= at(k, k);
    }
    return b;
  }

 private:
  double& at(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double at(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

  std::vector<double> a_;
  std::size_t n_;
  std::vector<std::size_t> piv_;
};

}  // namespace detail

/// Zero-state ARL and SDRL of a chain:
///   ARL  = q' (I - Q)^{-1} 1
///   SDRL = sqrt(2 q' (I - Q)^{-2} Q 1 - ARL^2 + ARL)
inline RunLengthMetrics run_length_metrics(const RuleChain& chain) {
  if (chain.p >= 1.0)
    throw SingularChainError("p = 1: no point ever falls outside, the run length is infinite");
  const std::size_t n = chain.size();
  std::vector<double> system(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      system[i * n + j] = (i == j ? 1.0 : 0.0) - chain.transition[i * n + j];
  const detail::DenseLu lu(std::move(system), n);

  const std::vector<double> expected = lu.solve(std::vector<double>(n, 1.0));
  std::vector<double> q_times(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) q_times[i] += chain.transition[i * n + j] * expected[j];
  const std::vector<double> second = lu.solve(std::move(q_times));

  const double arl = expected[chain.initial_index];
  const double variance = 2.0 * second[chain.initial_index] - arl * arl + arl;
  if (!std::isfinite(arl) || !std::isfinite(variance) || arl < 1.0 - 1e-9)
    throw EvaluationError("run-length solve lost precision (p = " + std::to_string(chain.p) + ")");
  return {arl, std::sqrt(variance > 0.0 ? variance : 0.0), MetricMethod::exact_markov, std::nullopt};
}

/// Probability that one plotted gamma_hat^2 lies inside the control region.
inline double in_control_prob(Direction direction, double limit, int n, double gamma,
                              Validity validity = Validity::strict) {
  if (std::isnan(limit)) throw DomainError("in_control_prob: limit is NaN");
  if (direction == Direction::lower) {
    if (limit <= 0.0) return 1.0;
    return 1.0 - cv2_cdf(limit, n, gamma, validity);
  }
  if (limit <= 0.0) return 0.0;
  return cv2_cdf(limit, n, gamma, validity);
}

/// Streaming evaluation of a rule over plotted points.
class RuleTracker {
 public:
  explicit RuleTracker(RunRule rule) : layout_(rule), history_(layout_.all_inside()) {}

  /// Plots one point; returns true if the rule signals at this point.
  bool push(bool outside) {
    const bool signal = outside && layout_.signals_on_outside(history_);
    history_ = layout_.advance(history_, !outside);
    ++count_;
    return signal;
  }

  void reset() {
    history_ = layout_.all_inside();
    count_ = 0;
  }

  std::uint32_t history() const { return history_; }
  std::size_t plotted() const { return count_; }
  const ChainLayout& layout() const { return layout_; }

 private:
  ChainLayout layout_;
  std::uint32_t history_;
  std::size_t count_ = 0;
};

}  // namespace cvrr
