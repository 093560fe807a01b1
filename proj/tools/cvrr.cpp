// cvrr: design, evaluate and apply run-rules charts for the squared CV.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cvrr/config.hpp"
#include "cvrr/cvrr.hpp"
#include "table.hpp"

namespace {

using namespace cvrr;
using cli::Cell;
using cli::Table;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitInfeasible = 4;

struct Globals {
  std::string config_path;
  std::string output_path;
  std::string format = "csv";
  std::uint64_t seed = 20240607;
  int round = -1;
};

// Model options shared by most subcommands. CLI values override the config.
struct ModelArgs {
  double gamma0 = 0.05;
  int n = 5;
  double theta = 0.0;
  double eta = 0.0;
  double slope = 1.0;
  int reps = 1;
  double arl0 = kDefaultArl0;
  bool force = false;
  std::vector<std::string> rules;
  std::string direction;

  CLI::Option* o_gamma0 = nullptr;
  CLI::Option* o_n = nullptr;
  CLI::Option* o_theta = nullptr;
  CLI::Option* o_eta = nullptr;
  CLI::Option* o_slope = nullptr;
  CLI::Option* o_reps = nullptr;
  CLI::Option* o_arl0 = nullptr;
  CLI::Option* o_force = nullptr;
};

void add_model_options(CLI::App* sub, ModelArgs& m, bool with_rules = true) {
  m.o_gamma0 = sub->add_option("--gamma0", m.gamma0, "in-control CV (default 0.05)");
  m.o_n = sub->add_option("-n,--n", m.n, "subgroup size (default 5)");
  m.o_theta = sub->add_option("--theta", m.theta, "accuracy error A/mu0 (default 0)");
  m.o_eta = sub->add_option("--eta", m.eta, "precision ratio sigma_M/sigma0 (default 0)");
  m.o_slope = sub->add_option("--slope,-B", m.slope, "measurement slope B (default 1)");
  m.o_reps = sub->add_option("--reps,-m", m.reps, "measurements per item (default 1)");
  m.o_arl0 = sub->add_option("--arl0", m.arl0, "target in-control ARL (default 370.4)");
  m.o_force = sub->add_flag("--force", m.force, "evaluate CVs at or above 0.5");
  if (with_rules) {
    sub->add_option("--rule,-r", m.rules, "run rule r,s (repeatable)");
    sub->add_option("--direction,-d", m.direction, "lower, upper, both or auto")
        ->check(CLI::IsMember({"lower", "upper", "both", "auto"}));
  }
}

struct Model {
  ChartConfig cfg;
  std::vector<RunRule> rules;
};

Model resolve_model(const Globals& g, const ModelArgs& m) {
  Model out;
  if (!g.config_path.empty()) out.cfg = load_config(g.config_path);
  auto& c = out.cfg;
  const bool have_config = !g.config_path.empty();
  auto pick = [&](CLI::Option* opt, auto value, auto& target) {
    if (!have_config || (opt && opt->count() > 0)) target = value;
  };
  pick(m.o_gamma0, m.gamma0, c.process.gamma0);
  pick(m.o_n, m.n, c.process.n);
  pick(m.o_theta, m.theta, c.me.theta);
  pick(m.o_eta, m.eta, c.me.eta);
  pick(m.o_slope, m.slope, c.me.slope);
  pick(m.o_reps, m.reps, c.me.reps);
  pick(m.o_arl0, m.arl0, c.arl0);
  if (m.force) c.force = true;
  c.process.validate(c.validity());
  c.me.validate();
  if (!(c.arl0 > 1.0)) throw DomainError("--arl0 must exceed 1");
  for (const auto& text : m.rules) out.rules.push_back(parse_rule(text));
  if (out.rules.empty())
    for (const auto& entry : c.charts) out.rules.push_back(entry.rule);
  if (out.rules.empty()) out.rules = {{2, 3}, {3, 4}, {4, 5}};
  return out;
}

std::vector<Direction> directions_from(const std::string& text, bool allow_auto) {
  if (text == "lower") return {Direction::lower};
  if (text == "upper") return {Direction::upper};
  if (text == "both") return {Direction::lower, Direction::upper};
  if (text.empty() || text == "auto") {
    if (allow_auto) return {};
    return {Direction::lower, Direction::upper};
  }
  throw DomainError("unknown direction '" + text + "'");
}

DesignOptions design_options(const ChartConfig& c) {
  DesignOptions o;
  o.validity = c.validity();
  return o;
}

Cell num(double x) { return x; }
Cell integer(long long x) { return x; }
Cell text(std::string s) { return s; }
Cell text(std::string_view s) { return std::string(s); }
Cell text(const char* s) { return std::string(s); }

/// A list option passed with no values selects an empty list.
bool given_without_values(const CLI::Option* o) {
  if (o->count() == 0) return false;
  for (const auto& r : o->results())
    if (!r.empty()) return false;
  return true;
}

// ---------------------------------------------------------------------------
// design

Table run_design(const Model& model, const std::string& direction) {
  Table t{"designs",
          {"rule", "direction", "n", "gamma0", "theta", "eta", "slope", "reps", "arl0",
           "gamma0_star", "mean", "std", "k", "limit", "achieved_arl0"},
          {}};
  const auto& c = model.cfg;
  for (const RunRule& rule : model.rules)
    for (Direction dir : directions_from(direction, false)) {
      const ChartDesign d = solve_design(rule, dir, c.process, c.me, c.arl0, design_options(c));
      t.add({text(rule.label()), text(to_string(dir)), integer(c.process.n), num(c.process.gamma0),
             num(c.me.theta), num(c.me.eta), num(c.me.slope), integer(c.me.reps), num(c.arl0),
             num(d.gamma_design), num(d.moments.mean), num(d.moments.std), num(d.k),
             num(d.limit), num(d.achieved_arl0)});
    }
  return t;
}

// ---------------------------------------------------------------------------
// sweep and its single-model wrappers

const std::vector<std::string> kArlColumns = {"rule",  "direction", "n",     "gamma0", "theta",
                                              "eta",   "slope",     "reps",  "arl0",   "tau",
                                              "k",     "limit",     "arl",   "sdrl",   "error"};
const std::vector<std::string> kEarlColumns = {
    "rule", "direction", "n",    "gamma0", "theta", "eta",  "slope", "reps",
    "arl0", "range_lo",  "range_hi", "k",  "limit", "earl", "error"};

Table rows_to_table(const std::vector<SweepRow>& rows, SweepMetric metric) {
  Table t{"sweep", metric == SweepMetric::arl ? kArlColumns : kEarlColumns, {}};
  for (const SweepRow& r : rows) {
    std::vector<Cell> row{text(r.rule.label()), text(to_string(r.direction)), integer(r.n),
                          num(r.gamma0),        num(r.theta),                 num(r.eta),
                          num(r.slope),         integer(r.reps),              num(r.arl0)};
    if (metric == SweepMetric::arl) {
      row.push_back(num(r.tau));
    } else {
      row.push_back(num(r.range_lo));
      row.push_back(num(r.range_hi));
    }
    row.push_back(num(r.k));
    row.push_back(num(r.limit));
    if (metric == SweepMetric::arl) {
      row.push_back(num(r.arl));
      row.push_back(num(r.sdrl));
    } else {
      row.push_back(num(r.earl));
    }
    row.push_back(r.error.empty() ? Cell{} : text(r.error_kind + ": " + r.error));
    t.add(std::move(row));
  }
  return t;
}

SweepGrid single_model_grid(const Model& model, const std::string& direction, bool allow_auto) {
  const auto& c = model.cfg;
  SweepGrid g;
  g.rules = model.rules;
  g.directions = directions_from(direction, allow_auto);
  g.n = {c.process.n};
  g.gamma0 = {c.process.gamma0};
  g.theta = {c.me.theta};
  g.eta = {c.me.eta};
  g.slope = {c.me.slope};
  g.reps = {c.me.reps};
  g.arl0 = {c.arl0};
  g.design = design_options(c);
  return g;
}

ShiftRange parse_range(const std::string& s) {
  if (s == "decreasing" || s == "D") return ShiftRange::decreasing();
  if (s == "increasing" || s == "I") return ShiftRange::increasing();
  const auto pos = s.find(':');
  if (pos == std::string::npos) throw DomainError("range must be lo:hi, decreasing or increasing");
  try {
    ShiftRange r{std::stod(s.substr(0, pos)), std::stod(s.substr(pos + 1))};
    r.validate();
    return r;
  } catch (const std::logic_error&) {
    throw DomainError("cannot parse range '" + s + "'");
  }
}

const std::vector<RunRule> kAllRules = {{2, 3}, {3, 4}, {4, 5}};
const std::vector<double> kGammaGrid = {0.05, 0.1, 0.2};

/// Named grids.
SweepGrid preset_grid(const std::string& name) {
  SweepGrid g;
  g.rules = kAllRules;
  g.gamma0 = kGammaGrid;
  g.n = {5, 15};
  const std::vector<double> me_shifts = {0.5, 0.65, 0.8, 1.25, 1.5, 2.0};
  if (name == "constants") {
    g.directions = {Direction::lower, Direction::upper};
    g.tau = {1.0};
  } else if (name == "limits-me") {
    g.directions = {Direction::lower, Direction::upper};
    g.gamma0 = {0.05, 0.1, 0.15, 0.2};
    g.theta = {0.01, 0.05};
    g.eta = {0.1, 0.28};
    g.tau = {1.0};
  } else if (name == "shift-arl") {
    g.tau = {0.5, 0.65, 0.8, 0.9, 1.1, 1.25, 1.5, 2.0};
  } else if (name == "eta-grid") {
    g.theta = {0.05};
    g.eta = {0.0, 0.1, 0.2, 0.3, 0.5, 1.0};
    g.tau = me_shifts;
    g.design.validity = Validity::force;
  } else if (name == "theta-grid") {
    g.theta = {0.0, 0.01, 0.02, 0.03, 0.04, 0.05};
    g.eta = {0.28};
    g.tau = me_shifts;
    g.design.validity = Validity::force;
  } else if (name == "slope-grid") {
    g.theta = {0.05};
    g.eta = {0.28};
    g.slope = {0.8, 0.9, 1.0, 1.1, 1.2};
    g.tau = me_shifts;
    g.design.validity = Validity::force;
  } else if (name == "reps-grid") {
    g.theta = {0.05};
    g.eta = {0.28};
    g.reps = {1, 3, 5, 7, 10};
    g.tau = me_shifts;
    g.design.validity = Validity::force;
  } else if (name == "earl-eta-theta" || name == "earl-eta-theta-0.2") {
    g.metric = SweepMetric::earl;
    g.n = {5};
    g.gamma0 = {name == "earl-eta-theta" ? 0.05 : 0.2};
    g.theta = {0.0, 0.01, 0.02, 0.03, 0.04, 0.05};
    g.eta = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    g.ranges = {ShiftRange::decreasing(), ShiftRange::increasing()};
    g.design.validity = Validity::force;
  } else if (name == "earl-slope" || name == "earl-slope-0.2") {
    g.metric = SweepMetric::earl;
    g.gamma0 = {name == "earl-slope" ? 0.05 : 0.2};
    g.theta = {0.05};
    g.eta = {0.28};
    g.slope = {0.8, 0.85, 0.9, 0.95, 1.0, 1.05, 1.1, 1.15, 1.2};
    g.ranges = {ShiftRange::decreasing(), ShiftRange::increasing()};
    g.design.validity = Validity::force;
  } else if (name == "earl-reps" || name == "earl-reps-0.2") {
    g.metric = SweepMetric::earl;
    g.gamma0 = {name == "earl-reps" ? 0.05 : 0.2};
    g.theta = {0.05};
    g.eta = {0.28};
    g.reps = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    g.ranges = {ShiftRange::decreasing(), ShiftRange::increasing()};
    g.design.validity = Validity::force;
  } else {
    throw DomainError("unknown preset '" + name + "'");
  }
  return g;
}

const std::vector<std::string> kPresets = {
    "constants",      "limits-me",          "shift-arl",  "eta-grid",       "theta-grid",
    "slope-grid",     "reps-grid",          "earl-eta-theta", "earl-eta-theta-0.2",
    "earl-slope",     "earl-slope-0.2",     "earl-reps",  "earl-reps-0.2"};

// ---------------------------------------------------------------------------
// monitor

Table monitor_trace_table(const std::vector<ChartReport>& reports) {
  Table t{"trace", {"chart", "index", "cv2", "outside", "window", "state", "signal"}, {}};
  for (const ChartReport& r : reports)
    for (const SampleTrace& s : r.samples)
      t.add({text(r.chart.name), integer(s.index), num(s.cv2), Cell{s.outside}, text(s.window),
             s.state ? integer(static_cast<long long>(*s.state)) : text("absorbed"),
             Cell{s.signal}});
  return t;
}

Table monitor_summary_table(const std::vector<ChartReport>& reports) {
  Table t{"summary",
          {"chart", "rule", "direction", "limit", "first_signal", "window_start", "signals"},
          {}};
  for (const ChartReport& r : reports) {
    std::string all;
    for (std::size_t i = 0; i < r.signals.size(); ++i)
      all += (i ? " " : "") + std::to_string(r.signals[i]);
    t.add({text(r.chart.name), text(r.chart.rule.label()), text(to_string(r.chart.direction)),
           num(r.chart.limit), r.first_signal ? integer(*r.first_signal) : Cell{},
           r.window_start ? integer(*r.window_start) : Cell{}, text(all)});
  }
  return t;
}

// ---------------------------------------------------------------------------

int error_exit(const Error& e) {
  std::cerr << "error[" << to_string(e.kind()) << "]: " << e.what() << '\n';
  switch (e.kind()) {
    case ErrorKind::domain:
    case ErrorKind::parse:
      return kExitUsage;
    case ErrorKind::unattainable:
      return kExitInfeasible;
    default:
      return kExitNumeric;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Run-rules control charts for the squared coefficient of variation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON chart configuration")->check(CLI::ExistingFile);
  app.add_option("--output,-o", g.output_path, "write results here instead of stdout");
  app.add_option("--format", g.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--seed", g.seed, "Monte Carlo master seed");
  app.add_option("--round", g.round, "print floating values with this many decimals")
      ->check(CLI::Range(0, 17));

  // design
  ModelArgs design_args;
  auto* design = app.add_subcommand("design", "solve chart constants for a target in-control ARL");
  add_model_options(design, design_args);

  // evaluate
  ModelArgs eval_args;
  std::vector<double> eval_tau{1.0};
  double eval_b = 1.0;
  std::optional<double> eval_limit;
  auto* evaluate = app.add_subcommand("evaluate", "ARL and SDRL after CV shifts");
  add_model_options(evaluate, eval_args);
  evaluate->add_option("--tau,-t", eval_tau, "shift sizes")->expected(0, -1);
  evaluate->add_option("--b", eval_b, "standard-deviation shift factor (default 1)");
  evaluate->add_option("--limit", eval_limit, "use this control limit instead of solving k");

  // earl
  ModelArgs earl_args;
  std::vector<std::string> earl_ranges{"decreasing", "increasing"};
  int earl_nodes = kDefaultEarlNodes;
  auto* earl_cmd = app.add_subcommand("earl", "expected ARL over a uniform shift range");
  add_model_options(earl_cmd, earl_args);
  earl_cmd->add_option("--range", earl_ranges, "lo:hi, decreasing or increasing")->expected(0, -1);
  earl_cmd->add_option("--nodes", earl_nodes, "Gauss-Legendre nodes (default 64)");

  // sweep
  std::string preset;
  std::vector<std::string> sw_rules{"2,3", "3,4", "4,5"};
  std::string sw_direction = "auto";
  std::vector<int> sw_n{5};
  std::vector<double> sw_gamma0{0.05}, sw_theta{0.0}, sw_eta{0.0}, sw_slope{1.0}, sw_arl0{kDefaultArl0};
  std::vector<int> sw_reps{1};
  std::vector<double> sw_tau{1.0};
  std::vector<std::string> sw_ranges;
  std::string sw_metric = "arl";
  bool sw_force = false;
  auto* sweep_cmd = app.add_subcommand("sweep", "evaluate a Cartesian parameter grid");
  sweep_cmd->add_option("--preset", preset, "named grid")->check(CLI::IsMember(kPresets));
  sweep_cmd->add_option("--rule,-r", sw_rules, "run rules")->expected(0, -1);
  sweep_cmd->add_option("--direction,-d", sw_direction, "lower, upper, both or auto")
      ->check(CLI::IsMember({"lower", "upper", "both", "auto"}));
  sweep_cmd->add_option("--n", sw_n, "subgroup sizes")->expected(0, -1);
  sweep_cmd->add_option("--gamma0", sw_gamma0, "in-control CVs")->expected(0, -1);
  sweep_cmd->add_option("--theta", sw_theta, "accuracy errors")->expected(0, -1);
  sweep_cmd->add_option("--eta", sw_eta, "precision ratios")->expected(0, -1);
  sweep_cmd->add_option("--slope,-B", sw_slope, "slopes")->expected(0, -1);
  sweep_cmd->add_option("--reps,-m", sw_reps, "measurements per item")->expected(0, -1);
  sweep_cmd->add_option("--arl0", sw_arl0, "in-control ARL targets")->expected(0, -1);
  sweep_cmd->add_option("--tau,-t", sw_tau, "shift sizes (metric arl)")->expected(0, -1);
  sweep_cmd->add_option("--range", sw_ranges, "shift ranges lo:hi (metric earl)")->expected(0, -1);
  sweep_cmd->add_option("--metric", sw_metric, "arl or earl")->check(CLI::IsMember({"arl", "earl"}));
  sweep_cmd->add_flag("--force", sw_force, "evaluate CVs at or above 0.5");

  // simulate
  ModelArgs sim_args;
  double sim_tau = 1.0;
  double sim_b = 1.0;
  long long sim_replications = 100000;
  std::uint64_t sim_max_run = kDefaultMaxRunLength;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo run-length estimate");
  add_model_options(simulate, sim_args);
  simulate->add_option("--tau,-t", sim_tau, "shift size (default 1)");
  simulate->add_option("--b", sim_b, "standard-deviation shift factor (default 1)");
  simulate->add_option("--replications", sim_replications, "number of simulated runs");
  simulate->add_option("--max-run-length", sim_max_run, "truncate runs at this length");

  // monitor
  ModelArgs mon_args;
  std::string mon_data;
  std::optional<double> mon_limit;
  bool mon_shewhart = false;
  std::optional<double> mon_shewhart_limit;
  auto* monitor_cmd = app.add_subcommand("monitor", "apply charts to phase II data");
  add_model_options(monitor_cmd, mon_args);
  monitor_cmd->add_option("--data", mon_data, "CSV with header index,mean,std")
      ->required()
      ->check(CLI::ExistingFile);
  monitor_cmd->add_option("--limit", mon_limit, "control limit for every --rule chart");
  monitor_cmd->add_flag("--shewhart", mon_shewhart, "add a 1-of-1 reference chart");
  monitor_cmd->add_option("--shewhart-limit", mon_shewhart_limit,
                          "limit of the reference chart (default: designed for arl0)");

  // density
  int den_n = 5;
  std::vector<double> den_gamma{0.05, 0.1, 0.2};
  double den_from = 0.0005;
  double den_to = 0.1;
  int den_points = 200;
  bool den_force = false;
  auto* density = app.add_subcommand("density", "pdf and cdf of the squared sample CV on a grid");
  density->add_option("--n", den_n, "subgroup size (default 5)");
  density->add_option("--gamma0", den_gamma, "CVs")->expected(0, -1);
  density->add_option("--from", den_from, "first grid point (default 0.0005)");
  density->add_option("--to", den_to, "last grid point (default 0.1)");
  density->add_option("--points", den_points, "number of grid points (default 200)");
  density->add_flag("--force", den_force, "evaluate CVs at or above 0.5");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  cli::FormatOptions fmt;
  if (g.round >= 0) fmt.round = g.round;

  try {
    std::vector<Table> tables;

    if (*design) {
      const Model model = resolve_model(g, design_args);
      tables.push_back(run_design(model, design_args.direction));
    } else if (*evaluate) {
      const Model model = resolve_model(g, eval_args);
      if (given_without_values(evaluate->get_option("--tau"))) eval_tau.clear();
      if (eval_limit) {
        if (model.rules.size() != 1)
          throw DomainError("--limit needs exactly one --rule");
        const auto dirs = directions_from(eval_args.direction, false);
        if (dirs.size() != 1) throw DomainError("--limit needs --direction lower or upper");
        const auto& c = model.cfg;
        const ChartDesign d = ChartDesign::with_limit(model.rules[0], dirs[0], c.process, c.me,
                                                      *eval_limit, c.arl0, c.validity());
        std::vector<SweepRow> rows;
        for (double tau : eval_tau) {
          SweepRow r;
          r.rule = d.rule;
          r.direction = d.direction;
          r.n = c.process.n;
          r.gamma0 = c.process.gamma0;
          r.theta = c.me.theta;
          r.eta = c.me.eta;
          r.slope = c.me.slope;
          r.reps = c.me.reps;
          r.arl0 = c.arl0;
          r.tau = tau;
          r.k = d.k;
          r.limit = d.limit;
          try {
            const RunLengthMetrics m = arl_at_shift(d, tau, eval_b);
            r.arl = m.arl;
            r.sdrl = m.sdrl;
          } catch (const Error& e) {
            r.error = e.what();
            r.error_kind = std::string(to_string(e.kind()));
          }
          rows.push_back(r);
        }
        tables.push_back(rows_to_table(rows, SweepMetric::arl));
      } else {
        SweepGrid grid = single_model_grid(model, eval_args.direction, true);
        grid.tau = eval_tau;
        grid.b = eval_b;
        tables.push_back(rows_to_table(sweep(grid), SweepMetric::arl));
      }
    } else if (*earl_cmd) {
      const Model model = resolve_model(g, earl_args);
      SweepGrid grid = single_model_grid(model, earl_args.direction, true);
      grid.metric = SweepMetric::earl;
      grid.nodes = earl_nodes;
      if (!given_without_values(earl_cmd->get_option("--range")))
        for (const auto& r : earl_ranges) grid.ranges.push_back(parse_range(r));
      if (earl_nodes < 8) throw DomainError("--nodes must be at least 8");
      tables.push_back(rows_to_table(sweep(grid), SweepMetric::earl));
    } else if (*sweep_cmd) {
      SweepGrid grid;
      if (!preset.empty()) {
        grid = preset_grid(preset);
      } else {
        grid.metric = sw_metric == "earl" ? SweepMetric::earl : SweepMetric::arl;
        grid.rules.clear();
        if (!given_without_values(sweep_cmd->get_option("--rule")))
          for (const auto& r : sw_rules) grid.rules.push_back(parse_rule(r));
        grid.directions = directions_from(sw_direction, true);
        grid.n = sw_n;
        grid.gamma0 = sw_gamma0;
        grid.theta = sw_theta;
        grid.eta = sw_eta;
        grid.slope = sw_slope;
        grid.reps = sw_reps;
        grid.arl0 = sw_arl0;
        grid.tau = sw_tau;
        if (!given_without_values(sweep_cmd->get_option("--range")))
          for (const auto& r : sw_ranges) grid.ranges.push_back(parse_range(r));
        if (grid.metric == SweepMetric::earl && sw_ranges.empty() &&
            sweep_cmd->get_option("--range")->count() == 0)
          grid.ranges = {ShiftRange::decreasing(), ShiftRange::increasing()};
        if (sw_force) grid.design.validity = Validity::force;
        auto emptied = [&](const char* name) {
          return given_without_values(sweep_cmd->get_option(name));
        };
        if (emptied("--n")) grid.n.clear();
        if (emptied("--gamma0")) grid.gamma0.clear();
        if (emptied("--theta")) grid.theta.clear();
        if (emptied("--eta")) grid.eta.clear();
        if (emptied("--slope")) grid.slope.clear();
        if (emptied("--reps")) grid.reps.clear();
        if (emptied("--arl0")) grid.arl0.clear();
        if (emptied("--tau")) grid.tau.clear();
        if (emptied("--range")) grid.ranges.clear();
      }
      tables.push_back(rows_to_table(sweep(grid), grid.metric));
    } else if (*simulate) {
      if (sim_replications < 1) throw DomainError("--replications must be at least 1");
      const Model model = resolve_model(g, sim_args);
      if (model.rules.size() != 1) throw DomainError("simulate takes exactly one --rule");
      std::vector<Direction> dirs = directions_from(sim_args.direction, true);
      if (dirs.empty()) dirs = {direction_for_shift(sim_tau)};
      const auto& c = model.cfg;
      SimConfig sc;
      sc.replications = static_cast<std::uint64_t>(sim_replications);
      sc.seed = g.seed;
      sc.max_run_length = sim_max_run;
      Table t{"simulation",
              {"rule", "direction", "n", "gamma0", "theta", "eta", "slope", "reps", "arl0", "tau",
               "k", "limit", "replications", "seed", "arl_mc", "sdrl_mc", "stderr", "truncated",
               "redraws", "arl_exact", "sdrl_exact"},
              {}};
      for (Direction dir : dirs) {
        const ChartDesign d =
            solve_design(model.rules[0], dir, c.process, c.me, c.arl0, design_options(c));
        const ShiftSpec shift = ShiftSpec::from_tau(sim_tau, c.process.gamma0, sim_b);
        const SimResult res = estimate_run_length(d, shift, sc);
        const RunLengthMetrics exact = arl_at_shift(d, shift);
        t.add({text(d.rule.label()), text(to_string(dir)), integer(c.process.n),
               num(c.process.gamma0), num(c.me.theta), num(c.me.eta), num(c.me.slope),
               integer(c.me.reps), num(c.arl0), num(sim_tau), num(d.k), num(d.limit),
               integer(static_cast<long long>(res.replications)),
               text(std::to_string(res.seed)), num(res.metrics.arl), num(res.metrics.sdrl),
               num(*res.metrics.standard_error), integer(static_cast<long long>(res.truncated)),
               integer(static_cast<long long>(res.redraws)), num(exact.arl), num(exact.sdrl)});
      }
      tables.push_back(std::move(t));
    } else if (*monitor_cmd) {
      const Model model = resolve_model(g, mon_args);
      const auto& c = model.cfg;
      std::ifstream in(mon_data);
      if (!in) throw DomainError("cannot open data file '" + mon_data + "'");
      const auto records = read_phase2_csv(in);

      std::vector<ChartSpec> charts;
      const bool rules_from_cli = !mon_args.rules.empty();
      const auto cli_dirs = directions_from(mon_args.direction.empty() ? "upper" : mon_args.direction,
                                            false);
      auto add_chart = [&](RunRule rule, Direction dir, std::optional<double> limit) {
        double lim;
        if (limit) {
          lim = *limit;
        } else {
          lim = solve_design(rule, dir, c.process, c.me, c.arl0, design_options(c)).limit;
        }
        charts.push_back({rule.label() + "-" + std::string(to_string(dir)), rule, dir, lim});
      };
      if (!rules_from_cli && !c.charts.empty()) {
        for (const auto& entry : c.charts)
          add_chart(entry.rule, entry.direction, mon_limit ? mon_limit : entry.limit);
      } else {
        for (const RunRule& rule : model.rules)
          for (Direction dir : cli_dirs) add_chart(rule, dir, mon_limit);
      }
      if (mon_shewhart || mon_shewhart_limit) {
        const RunRule one = RunRule::shewhart();
        double lim = mon_shewhart_limit
                         ? *mon_shewhart_limit
                         : solve_design(one, Direction::upper, c.process, c.me, c.arl0,
                                        design_options(c))
                               .limit;
        charts.push_back({"shewhart-upper", one, Direction::upper, lim});
      }
      const auto reports = monitor(records, charts);
      tables.push_back(monitor_trace_table(reports));
      tables.push_back(monitor_summary_table(reports));
    } else if (*density) {
      if (den_points < 2 || !(den_from > 0.0) || !(den_to > den_from))
        throw DomainError("density grid needs 0 < from < to and at least 2 points");
      const Validity v = den_force ? Validity::force : Validity::strict;
      if (given_without_values(density->get_option("--gamma0"))) den_gamma.clear();
      Table t{"density", {"n", "gamma0", "x", "pdf", "cdf"}, {}};
      for (double gamma : den_gamma)
        for (int i = 0; i < den_points; ++i) {
          const double x = den_from + (den_to - den_from) * i / (den_points - 1);
          t.add({integer(den_n), num(gamma), num(x), num(cv2_pdf(x, den_n, gamma, v)),
                 num(cv2_cdf(x, den_n, gamma, v))});
        }
      tables.push_back(std::move(t));
    }

    const bool json = g.format == "json";
    if (g.output_path.empty()) {
      cli::write_tables(std::cout, tables, json, fmt);
    } else {
      std::ofstream out(g.output_path);
      if (!out) throw DomainError("cannot write '" + g.output_path + "'");
      cli::write_tables(out, tables, json, fmt);
    }
    return kExitOk;
  } catch (const Error& e) {
    return error_exit(e);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error[domain]: config: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << '\n';
    return kExitNumeric;
  }
}
