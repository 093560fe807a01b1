#pragma once

// JSON chart configuration. Every object is closed: unknown keys are errors.
//
//   {
//     "process": {"gamma0": 0.417, "n": 5},
//     "measurement_error": {"theta": 0.05, "eta": 0.28, "slope": 1, "reps": 1},
//     "arl0": 370.4,
//     "force": false,
//     "charts": [{"rule": "2,3", "direction": "upper", "limit": 0.5567}]
//   }
//
// Only "process" is required. "limit" is optional per chart; without it the
// chart is designed for arl0.

#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvrr/cvdist.hpp"
#include "cvrr/design.hpp"
#include "cvrr/error.hpp"
#include "cvrr/merror.hpp"
#include "cvrr/runrules.hpp"

namespace cvrr {

struct ChartEntry {
  RunRule rule;
  Direction direction = Direction::upper;
  std::optional<double> limit;
};

struct ChartConfig {
  ProcessModel process{0.05, 5};
  MeasurementErrorModel me;
  double arl0 = kDefaultArl0;
  bool force = false;
  std::vector<ChartEntry> charts;

  Validity validity() const { return force ? Validity::force : Validity::strict; }
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& where,
                           std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw DomainError("config: " + where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw DomainError("config: unknown key '" + key + "' in " + where);
  }
}

inline double number_field(const json& obj, const char* key, const std::string& where) {
  const json& v = obj.at(key);
  if (!v.is_number()) throw DomainError("config: " + where + "." + key + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw DomainError("config: " + where + "." + key + " must be finite");
  return x;
}

inline int integer_field(const json& obj, const char* key, const std::string& where) {
  const json& v = obj.at(key);
  if (!v.is_number_integer())
    throw DomainError("config: " + where + "." + key + " must be an integer");
  return v.get<int>();
}

inline RunRule rule_field(const json& v, const std::string& where) {
  if (v.is_string()) return parse_rule(v.get<std::string>());
  if (v.is_array() && v.size() == 2 && v[0].is_number_integer() && v[1].is_number_integer()) {
    RunRule rule{v[0].get<int>(), v[1].get<int>()};
    rule.validate();
    return rule;
  }
  throw DomainError("config: " + where + ".rule must be \"r,s\" or [r, s]");
}

}  // namespace detail

inline ChartConfig parse_config(const nlohmann::json& root) {
  using detail::number_field;
  detail::reject_unknown(root, "config", {"process", "measurement_error", "arl0", "force", "charts"});
  ChartConfig cfg;
  if (!root.contains("process")) throw DomainError("config: missing 'process'");
  const auto& proc = root.at("process");
  detail::reject_unknown(proc, "process", {"gamma0", "n"});
  if (!proc.contains("gamma0") || !proc.contains("n"))
    throw DomainError("config: process needs gamma0 and n");
  cfg.process = {number_field(proc, "gamma0", "process"),
                 detail::integer_field(proc, "n", "process")};

  if (root.contains("measurement_error")) {
    const auto& me = root.at("measurement_error");
    detail::reject_unknown(me, "measurement_error", {"theta", "eta", "slope", "reps"});
    if (me.contains("theta")) cfg.me.theta = number_field(me, "theta", "measurement_error");
    if (me.contains("eta")) cfg.me.eta = number_field(me, "eta", "measurement_error");
    if (me.contains("slope")) cfg.me.slope = number_field(me, "slope", "measurement_error");
    if (me.contains("reps")) cfg.me.reps = detail::integer_field(me, "reps", "measurement_error");
  }
  if (root.contains("arl0")) cfg.arl0 = number_field(root, "arl0", "config");
  if (root.contains("force")) {
    if (!root.at("force").is_boolean()) throw DomainError("config: force must be a boolean");
    cfg.force = root.at("force").get<bool>();
  }
  if (root.contains("charts")) {
    const auto& charts = root.at("charts");
    if (!charts.is_array()) throw DomainError("config: charts must be an array");
    for (std::size_t i = 0; i < charts.size(); ++i) {
      const std::string where = "charts[" + std::to_string(i) + "]";
      const auto& c = charts[i];
      detail::reject_unknown(c, where, {"rule", "direction", "limit"});
      if (!c.contains("rule")) throw DomainError("config: " + where + " needs a rule");
      ChartEntry entry;
      entry.rule = detail::rule_field(c.at("rule"), where);
      if (c.contains("direction")) {
        if (!c.at("direction").is_string())
          throw DomainError("config: " + where + ".direction must be a string");
        entry.direction = parse_direction(c.at("direction").get<std::string>());
      }
      if (c.contains("limit")) entry.limit = number_field(c, "limit", where);
      cfg.charts.push_back(entry);
    }
  }
  cfg.process.validate(cfg.validity());
  cfg.me.validate();
  if (!(cfg.arl0 > 1.0)) throw DomainError("config: arl0 must exceed 1");
  return cfg;
}

inline ChartConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open config file '" + path + "'");
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("config '" + path + "': " + e.what(), 0);
  }
  return parse_config(root);
}

}  // namespace cvrr
