#pragma once

// Phase II monitoring: reading (index, mean, std) records and running one or
// more run-rule charts over their squared sample CVs.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <deque>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cvrr/error.hpp"
#include "cvrr/runrules.hpp"

namespace cvrr {

struct PhaseIIRecord {
  long index = 0;
  double mean = 0.0;
  double std = 0.0;

  double cv() const { return std / mean; }
  double cv2() const { return cv() * cv(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view field, std::string_view name, std::size_t line) {
  T value{};
  const char* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc{} || ptr != end)
    throw ParseError("line " + std::to_string(line) + ": cannot parse " + std::string(name) +
                         " '" + std::string(field) + "'",
                     line);
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value))
      throw ParseError("line " + std::to_string(line) + ": " + std::string(name) + " is not finite",
                       line);
  }
  return value;
}

}  // namespace detail

/// Reads a CSV with header `index,mean,std`. Blank lines are skipped.
inline std::vector<PhaseIIRecord> read_phase2_csv(std::istream& in) {
  std::vector<PhaseIIRecord> records;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = detail::trim(line);
    if (view.empty()) continue;
    const auto fields = detail::split_commas(view);
    if (!header_seen) {
      if (fields.size() != 3 || fields[0] != "index" || fields[1] != "mean" || fields[2] != "std")
        throw ParseError("line " + std::to_string(line_no) + ": expected header 'index,mean,std'",
                         line_no);
      header_seen = true;
      continue;
    }
    if (fields.size() != 3)
      throw ParseError("line " + std::to_string(line_no) + ": expected 3 fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    PhaseIIRecord r;
    r.index = detail::parse_number<long>(fields[0], "index", line_no);
    r.mean = detail::parse_number<double>(fields[1], "mean", line_no);
    r.std = detail::parse_number<double>(fields[2], "std", line_no);
    if (r.mean == 0.0)
      throw ParseError("line " + std::to_string(line_no) + ": sample mean is zero, CV undefined",
                       line_no);
    if (r.std < 0.0)
      throw ParseError("line " + std::to_string(line_no) + ": sample std is negative", line_no);
    records.push_back(r);
  }
  if (!header_seen) throw ParseError("empty input: missing header 'index,mean,std'", line_no);
  return records;
}

struct ChartSpec {
  std::string name;
  RunRule rule;
  Direction direction = Direction::upper;
  double limit = 0.0;
};

struct SampleTrace {
  long index = 0;
  double cv2 = 0.0;
  bool outside = false;
  std::string window;              ///< last s points, oldest first, 'o' = outside
  std::optional<std::size_t> state;  ///< chain state after the point, if transient
  bool signal = false;
};

struct ChartReport {
  ChartSpec chart;
  std::vector<SampleTrace> samples;
  std::optional<long> first_signal;
  std::optional<long> window_start;  ///< first violation in the window of the first signal
  std::vector<long> signals;         ///< every sample at which the rule fires
};

/// Runs the chart over the records without resetting after a signal.
inline ChartReport monitor_chart(const std::vector<PhaseIIRecord>& records, const ChartSpec& chart) {
  chart.rule.validate();
  ChartReport report{chart, {}, std::nullopt, std::nullopt, {}};
  RuleTracker tracker(chart.rule);
  std::deque<std::pair<long, bool>> window;
  for (const PhaseIIRecord& rec : records) {
    SampleTrace t;
    t.index = rec.index;
    t.cv2 = rec.cv2();
    t.outside = chart.direction == Direction::lower ? t.cv2 < chart.limit : t.cv2 > chart.limit;
    t.signal = tracker.push(t.outside);
    t.state = tracker.layout().index_of(tracker.history());
    window.emplace_back(rec.index, t.outside);
    if (window.size() > static_cast<std::size_t>(chart.rule.s)) window.pop_front();
    for (const auto& [idx, out] : window) t.window += out ? 'o' : '.';
    if (t.signal) {
      report.signals.push_back(rec.index);
      if (!report.first_signal) {
        report.first_signal = rec.index;
        for (const auto& [idx, out] : window)
          if (out) {
            report.window_start = idx;
            break;
          }
      }
    }
    report.samples.push_back(std::move(t));
  }
  return report;
}

inline std::vector<ChartReport> monitor(const std::vector<PhaseIIRecord>& records,
                                        const std::vector<ChartSpec>& charts) {
  std::vector<ChartReport> out;
  out.reserve(charts.size());
  for (const ChartSpec& c : charts) out.push_back(monitor_chart(records, c));
  return out;
}

}  // namespace cvrr
