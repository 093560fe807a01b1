#pragma once

// Row/column result tables written as CSV or JSON.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace cvrr::cli {

using Cell = std::variant<std::monostate, long long, double, std::string, bool>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

struct FormatOptions {
  std::optional<int> round;  ///< fixed decimals for floating cells
};

inline std::string format_double(double x, const FormatOptions& fmt) {
  if (std::isnan(x)) return "";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (fmt.round) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", *fmt.round, x);
    return buf;
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string format_cell(const Cell& c, const FormatOptions& fmt) {
  struct Visitor {
    const FormatOptions& fmt;
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(long long v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_double(v, fmt); }
    std::string operator()(const std::string& v) const { return csv_escape(v); }
    std::string operator()(bool v) const { return v ? "1" : "0"; }
  };
  return std::visit(Visitor{fmt}, c);
}

inline void write_csv(std::ostream& out, const Table& t, const FormatOptions& fmt) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_cell(row[i], fmt);
    out << '\n';
  }
}

inline nlohmann::ordered_json to_json(const Table& t, const FormatOptions& fmt) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size() && i < t.columns.size(); ++i) {
      const Cell& c = row[i];
      nlohmann::ordered_json v;
      if (std::holds_alternative<long long>(c)) {
        v = std::get<long long>(c);
      } else if (std::holds_alternative<double>(c)) {
        const double x = std::get<double>(c);
        if (std::isfinite(x))
          v = fmt.round ? std::stod(format_double(x, fmt)) : x;
        else if (std::isinf(x))
          v = x > 0 ? "inf" : "-inf";
      } else if (std::holds_alternative<std::string>(c)) {
        v = std::get<std::string>(c);
      } else if (std::holds_alternative<bool>(c)) {
        v = std::get<bool>(c);
      }
      obj[t.columns[i]] = v;
    }
    rows.push_back(std::move(obj));
  }
  return rows;
}

/// CSV: tables separated by a blank line. JSON: one object keyed by table name.
inline void write_tables(std::ostream& out, const std::vector<Table>& tables, bool json,
                         const FormatOptions& fmt) {
  if (json) {
    if (tables.size() == 1) {
      out << to_json(tables.front(), fmt).dump(2) << '\n';
      return;
    }
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    for (const Table& t : tables) doc[t.name] = to_json(t, fmt);
    out << doc.dump(2) << '\n';
    return;
  }
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (i) out << '\n';
    write_csv(out, tables[i], fmt);
  }
}

}  // namespace cvrr::cli
