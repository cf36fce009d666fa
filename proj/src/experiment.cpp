#include "tiebreak/experiment.hpp"

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace tiebreak {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

void reject_unknown_keys(const json& obj, const std::string& path,
                         std::initializer_list<const char*> known) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) config_error(path.empty() ? key : path + "." + key, "unknown key");
  }
}

const json* member(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

double read_number(const json& v, const std::string& path) {
  if (!v.is_number()) config_error(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) config_error(path, "must be finite");
  return d;
}

double read_duration(const json& v, const std::string& path) {
  const double d = read_number(v, path);
  if (d < 0.0) config_error(path, "negative duration");
  return d;
}

std::uint64_t read_count(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<std::int64_t>() <= 0)
    config_error(path, "expected a positive integer");
  return v.get<std::uint64_t>();
}

std::vector<double> read_list(const json& v, const std::string& path,
                              bool durations) {
  if (!v.is_array() || v.empty()) config_error(path, "expected a non-empty list");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto p = path + "[" + std::to_string(i) + "]";
    out.push_back(durations ? read_duration(v[i], p) : read_number(v[i], p));
  }
  return out;
}

RuleKind read_rule(const std::string& name, const std::string& path) {
  try {
    return parse_rule(name);
  } catch (const std::invalid_argument& e) {
    config_error(path, e.what());
  }
}

StampKind read_stamp(const std::string& name, const std::string& path) {
  if (name == "honest_clock") return StampKind::honest_clock;
  if (name == "fixed_offset") return StampKind::fixed_offset;
  if (name == "theorem_optimal") return StampKind::theorem_optimal;
  config_error(path, "unknown timestamp strategy '" + name +
                         "' (valid: honest_clock, fixed_offset, theorem_optimal)");
}

void read_simulation(const json& sim, ExperimentPlan& plan) {
  if (!sim.is_object()) config_error("simulation", "expected an object");
  reject_unknown_keys(sim, "simulation",
                      {"n_honest", "T_seconds", "adversary_fraction",
                       "propagation_delay", "delta_B_i", "w", "ts_strategy",
                       "ts_shift", "ties", "blocks"});
  auto& base = plan.base;
  if (auto* v = member(sim, "n_honest"))
    base.n_honest = static_cast<std::uint32_t>(read_count(*v, "simulation.n_honest"));
  if (auto* v = member(sim, "T_seconds")) {
    base.mean_block_interval = read_duration(*v, "simulation.T_seconds");
    if (base.mean_block_interval == 0.0)
      config_error("simulation.T_seconds", "must be positive");
  }
  if (auto* v = member(sim, "adversary_fraction")) {
    base.adversary_fraction = read_number(*v, "simulation.adversary_fraction");
    if (base.adversary_fraction < 0.0 || base.adversary_fraction >= 1.0)
      config_error("simulation.adversary_fraction", "must be in [0, 1)");
  }
  if (auto* v = member(sim, "propagation_delay"))
    base.propagation_delay = read_duration(*v, "simulation.propagation_delay");
  if (auto* v = member(sim, "delta_B_i"))
    base.local_params.delta_B = read_duration(*v, "simulation.delta_B_i");
  if (auto* v = member(sim, "w")) plan.window = read_duration(*v, "simulation.w");
  if (auto* v = member(sim, "ts_strategy")) {
    if (!v->is_string()) config_error("simulation.ts_strategy", "expected a string");
    plan.stamp = read_stamp(v->get<std::string>(), "simulation.ts_strategy");
  }
  if (auto* v = member(sim, "ts_shift"))
    plan.stamp_shift = read_number(*v, "simulation.ts_shift");
  if (member(sim, "ties") && member(sim, "blocks"))
    config_error("simulation", "set either ties or blocks, not both");
  if (auto* v = member(sim, "ties"))
    base.stop = {StopCondition::Kind::ties, read_count(*v, "simulation.ties")};
  if (auto* v = member(sim, "blocks"))
    base.stop = {StopCondition::Kind::blocks, read_count(*v, "simulation.blocks")};
}

void read_sweep(const json& sweep, ExperimentPlan& plan) {
  if (!sweep.is_object()) config_error("sweep", "expected an object");
  reject_unknown_keys(sweep, "sweep",
                      {"offset_std", "rule", "delta_O_i", "a_t", "replications"});
  if (auto* v = member(sweep, "offset_std"))
    plan.offset_stds = read_list(*v, "sweep.offset_std", true);
  if (auto* v = member(sweep, "delta_O_i"))
    plan.delta_Os = read_list(*v, "sweep.delta_O_i", true);
  if (auto* v = member(sweep, "a_t")) plan.a_ts = read_list(*v, "sweep.a_t", false);
  if (auto* v = member(sweep, "replications"))
    plan.replications =
        static_cast<std::uint32_t>(read_count(*v, "sweep.replications"));
  if (auto* v = member(sweep, "rule")) {
    if (!v->is_array() || v->empty())
      config_error("sweep.rule", "expected a non-empty list");
    plan.rules.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto p = "sweep.rule[" + std::to_string(i) + "]";
      if (!(*v)[i].is_string()) config_error(p, "expected a string");
      plan.rules.push_back(read_rule((*v)[i].get<std::string>(), p));
    }
  }
}

void apply_overrides(ExperimentPlan& plan, const Overrides& o) {
  auto check_durations = [](const std::vector<double>& xs, const char* flag) {
    for (double x : xs)
      if (!std::isfinite(x) || x < 0.0) config_error(flag, "negative duration");
    if (xs.empty()) config_error(flag, "expected a non-empty list");
  };
  if (o.out) plan.out_dir = *o.out;
  if (o.seed) plan.base_seed = *o.seed;
  if (!o.rules.empty()) {
    plan.rules.clear();
    for (const auto& r : o.rules) plan.rules.push_back(read_rule(r, "--rule"));
  }
  if (o.offset_stds) {
    check_durations(*o.offset_stds, "--offset-std");
    plan.offset_stds = *o.offset_stds;
  }
  if (o.delta_Os) {
    check_durations(*o.delta_Os, "--delta-o");
    plan.delta_Os = *o.delta_Os;
  }
  if (o.delta_B) {
    check_durations({*o.delta_B}, "--delta-b");
    plan.base.local_params.delta_B = *o.delta_B;
  }
  if (o.a_ts) {
    if (o.a_ts->empty()) config_error("--a-t", "expected a non-empty list");
    plan.a_ts = *o.a_ts;
  }
  if (o.ties) {
    if (*o.ties == 0) config_error("--ties", "expected a positive integer");
    plan.base.stop = {StopCondition::Kind::ties, *o.ties};
  }
  if (o.jobs) {
    if (*o.jobs <= 0) config_error("--jobs", "expected a positive integer");
    plan.jobs = *o.jobs;
  }
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

TimestampStrategy make_strategy(const ExperimentPlan& plan,
                                const LocalParams& params) {
  switch (plan.stamp) {
    case StampKind::honest_clock: return HonestClock{};
    case StampKind::fixed_offset: return FixedOffset{plan.stamp_shift};
    case StampKind::theorem_optimal:
      return TheoremOptimal{params.delta_O, params.delta_B};
  }
  return HonestClock{};
}

std::string stamp_label(const ExperimentPlan& plan) {
  switch (plan.stamp) {
    case StampKind::honest_clock: return "honest_clock";
    case StampKind::fixed_offset: return "fixed_offset(" + fmt(plan.stamp_shift) + ")";
    case StampKind::theorem_optimal: return "theorem_optimal";
  }
  return "?";
}

std::string echo(const Cell& cell) {
  const auto& c = cell.config;
  std::ostringstream os;
  os << "cell " << cell.index << " {rule=" << to_string(c.rule)
     << ", n_honest=" << c.n_honest << ", T=" << fmt(c.mean_block_interval)
     << ", delta_B_i=" << fmt(c.local_params.delta_B)
     << ", delta_O_i=" << fmt(c.local_params.delta_O)
     << ", w=" << fmt(c.local_params.window)
     << ", offset_std=" << fmt(c.offset_std) << ", ts=" << cell.stamp_label
     << ", a_t=" << fmt(c.adversary_clock_offset) << ", seed=" << c.seed << "}";
  return os.str();
}

SimReport run_cell(const Cell& cell) {
  try {
    return run(cell.config);
  } catch (const std::exception& e) {
    throw CellError(echo(cell) + ": " + e.what());
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

ExperimentPlan parse_config_text(const std::string& text,
                                 const Overrides& overrides) {
  ExperimentPlan plan;
  json root;
  if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
    try {
      root = json::parse(text);
    } catch (const json::parse_error& e) {
      config_error("<config>", std::string("malformed JSON: ") + e.what());
    }
    if (!root.is_object()) config_error("<config>", "top level must be an object");
    reject_unknown_keys(root, "", {"seed", "out", "jobs", "simulation", "sweep"});
    if (auto* v = member(root, "seed")) {
      if (!v->is_number_unsigned()) config_error("seed", "expected a non-negative integer");
      plan.base_seed = v->get<std::uint64_t>();
    }
    if (auto* v = member(root, "out")) {
      if (!v->is_string()) config_error("out", "expected a string");
      plan.out_dir = v->get<std::string>();
    }
    if (auto* v = member(root, "jobs"))
      plan.jobs = static_cast<int>(read_count(*v, "jobs"));
    if (auto* v = member(root, "simulation")) read_simulation(*v, plan);
    if (auto* v = member(root, "sweep")) read_sweep(*v, plan);
  }
  apply_overrides(plan, overrides);
  if (plan.window) plan.base.local_params.window = *plan.window;
  else plan.base.local_params.window = plan.base.local_params.delta_B;
  return plan;
}

ExperimentPlan parse_config(const std::optional<std::filesystem::path>& path,
                            const Overrides& overrides) {
  if (!path) return parse_config_text("", overrides);
  std::ifstream in(*path, std::ios::binary);
  if (!in) config_error(path->string(), "cannot read config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), overrides);
}

std::vector<Cell> expand(const ExperimentPlan& plan) {
  std::vector<Cell> cells;
  for (double dO : plan.delta_Os)
    for (RuleKind rule : plan.rules)
      for (double sd : plan.offset_stds)
        for (double a_t : plan.a_ts)
          for (std::uint32_t rep = 0; rep < plan.replications; ++rep) {
            Cell cell;
            cell.index = cells.size();
            SimConfig& c = cell.config;
            c = plan.base;
            c.rule = rule;
            c.offset_std = sd;
            c.adversary_clock_offset = a_t;
            c.local_params = LocalParams::make(plan.base.local_params.delta_B, dO,
                                               plan.window);
            c.timestamp_strategy = make_strategy(plan, c.local_params);
            c.seed = plan.base_seed + cell.index;
            cell.stamp_label = stamp_label(plan);
            cells.push_back(std::move(cell));
          }
  return cells;
}

std::vector<SimReport> run_cells_serial(std::span<const Cell> cells) {
  std::vector<SimReport> reports;
  reports.reserve(cells.size());
  for (const auto& cell : cells) reports.push_back(run_cell(cell));
  return reports;
}

std::vector<SimReport> run_cells_parallel(std::span<const Cell> cells, int jobs) {
  const auto n = static_cast<std::ptrdiff_t>(cells.size());
  std::vector<SimReport> reports(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());

#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs > 0 ? jobs : 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      reports[i] = run_cell(cells[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }

  // Lowest failing cell wins so the error is the same as the serial path's.
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return reports;
}

std::string csv_header() {
  return "rule,n_honest,T_seconds,delta_B_i,delta_O_i,w,offset_std,ts_strategy,"
         "a_t,seed,n_ties,gamma_mean,gamma_stderr,theorem2_bound,"
         "expected_gamma_ideal,n_blocks_honest,n_blocks_adversary";
}

std::string csv_row(const Cell& cell, const SimReport& r) {
  const auto& c = cell.config;
  std::ostringstream os;
  os << to_string(c.rule) << ',' << c.n_honest << ',' << fmt(c.mean_block_interval)
     << ',' << fmt(c.local_params.delta_B) << ',' << fmt(c.local_params.delta_O)
     << ',' << fmt(c.local_params.window) << ',' << fmt(c.offset_std) << ','
     << cell.stamp_label << ',' << fmt(c.adversary_clock_offset) << ',' << c.seed
     << ',' << r.tie_events.size() << ',';
  if (r.gamma) os << fmt(r.gamma->mean);
  os << ',';
  if (r.gamma && r.gamma->standard_error) os << fmt(*r.gamma->standard_error);
  os << ',' << fmt(r.theorem2_bound) << ',' << fmt(r.expected_gamma_ideal) << ','
     << r.n_blocks_honest << ',' << r.n_blocks_adversary;
  return os.str();
}

std::string results_csv(std::span<const Cell> cells,
                        std::span<const SimReport> reports) {
  std::string out = csv_header() + "\n";
  for (std::size_t i = 0; i < cells.size(); ++i)
    out += csv_row(cells[i], reports[i]) + "\n";
  return out;
}

std::string bounds_csv(std::span<const Cell> cells) {
  std::set<std::tuple<double, double, double>> seen;
  std::string out = "delta_O_i,delta_B_i,T_seconds,theorem2_bound\n";
  for (const auto& cell : cells) {
    const auto& c = cell.config;
    const auto key = std::make_tuple(c.local_params.delta_O, c.local_params.delta_B,
                                     c.mean_block_interval);
    if (!seen.insert(key).second) continue;
    out += fmt(c.local_params.delta_O) + "," + fmt(c.local_params.delta_B) + "," +
           fmt(c.mean_block_interval) + "," +
           fmt(theorem2_bound(c.local_params.delta_O, c.local_params.delta_B,
                              c.mean_block_interval)) +
           "\n";
  }
  return out;
}

std::string summary_table(std::span<const Cell> cells,
                          std::span<const SimReport> reports) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %9s %10s %8s %10s %10s %10s\n", "rule",
                "delta_O", "offset_std", "a_t", "gamma", "stderr", "bound");
  out += line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i].config;
    const auto& r = reports[i];
    const double g = r.gamma ? r.gamma->mean : NAN;
    const double se = r.gamma && r.gamma->standard_error ? *r.gamma->standard_error : NAN;
    std::snprintf(line, sizeof line, "%-10s %9g %10g %8g %10.4f %10.4f %10.4f\n",
                  std::string(to_string(c.rule)).c_str(), c.local_params.delta_O,
                  c.offset_std, c.adversary_clock_offset, g, se, r.theorem2_bound);
    out += line;
  }
  return out;
}

ExperimentOutput execute(const ExperimentPlan& plan) {
  ExperimentOutput result;
  result.cells = expand(plan);

  std::error_code ec;
  std::filesystem::create_directories(plan.out_dir, ec);
  if (ec || !std::filesystem::is_directory(plan.out_dir))
    throw IoError("cannot create output directory " + plan.out_dir.string());
  result.results_path = plan.out_dir / "gamma.csv";
  result.bounds_path = plan.out_dir / "bounds.csv";
  // Probe before spending minutes on the sweep.
  write_file(result.results_path, csv_header() + "\n");

  result.reports = plan.jobs > 1 ? run_cells_parallel(result.cells, plan.jobs)
                                 : run_cells_serial(result.cells);

  write_file(result.results_path, results_csv(result.cells, result.reports));
  write_file(result.bounds_path, bounds_csv(result.cells));

  json manifest = {
      {"csv_schema_version", kCsvSchemaVersion},
      {"columns", csv_header()},
      {"base_seed", plan.base_seed},
      {"cells", result.cells.size()},
  };
  write_file(plan.out_dir / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

}  // namespace tiebreak
