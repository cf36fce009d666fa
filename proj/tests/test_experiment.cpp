#include <stdexcept>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "tiebreak/experiment.hpp"

using namespace tiebreak;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("tiebreak_test_" + name);
  fs::remove_all(p);
  return p;
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "tiebreak-sim");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

// Small, quick plan.
ExperimentPlan quick_plan(const fs::path& out) {
  auto plan = parse_config_text(R"({
    "seed": 7,
    "simulation": {"n_honest": 50, "ties": 300},
    "sweep": {"offset_std": [0, 20], "rule": ["proposed", "random"]}
  })");
  plan.out_dir = out;
  return plan;
}

}  // namespace

TEST_CASE("empty config gives the default plan") {
  const auto plan = parse_config_text("");
  CHECK(plan.base.n_honest == 1000);
  CHECK(plan.base.mean_block_interval == 600.0);
  CHECK(plan.base.local_params.delta_B == 20.0);
  CHECK(plan.base.local_params.window == 20.0);
  CHECK(plan.delta_Os == std::vector<double>{20.0});
  CHECK(plan.base.propagation_delay == 0.0);
  CHECK(plan.base.adversary_fraction == 0.5);
  CHECK(plan.base.stop.count == 10000);
  CHECK(plan.offset_stds == std::vector<double>{0, 10, 20, 50, 100, 200});
  CHECK(parse_config(std::nullopt).base.n_honest == 1000);
  CHECK(parse_config_text("{}").base_seed == 1);
}

TEST_CASE("config validation names the key") {
  CHECK_THROWS_WITH_AS(parse_config_text(R"({"sweep": {"rule": ["proposed", "gohst"]}})"),
                       "sweep.rule[1]: unknown rule 'gohst' (valid: proposed, random, first_seen)",
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text(R"({"simulation": {"delta_B_i": -1}})"),
                       "simulation.delta_B_i: negative duration", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text(R"({"sweep": {"offset_std": [0, -5]}})"),
                       "sweep.offset_std[1]: negative duration", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text(R"({"simulation": {"T_secs": 600}})"),
                       "simulation.T_secs: unknown key", ConfigError);
  CHECK_THROWS_AS(parse_config_text("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(parse_config(fs::path("/nonexistent/config.json")), ConfigError);

  Overrides o;
  o.rules = {"gohst"};
  CHECK_THROWS_AS(parse_config_text("", o), ConfigError);
}

TEST_CASE("overrides beat the file") {
  Overrides o;
  o.seed = 99;
  o.rules = {"first_seen"};
  o.delta_Os = std::vector<double>{200};
  o.delta_B = 10.0;
  o.ties = 5;
  const auto plan = parse_config_text(R"({"seed": 3, "simulation": {"delta_B_i": 30}})", o);
  CHECK(plan.base_seed == 99);
  CHECK(plan.rules == std::vector<RuleKind>{RuleKind::first_seen});
  CHECK(plan.base.local_params.delta_B == 10.0);
  CHECK(plan.base.local_params.window == 10.0);
  CHECK(plan.base.stop.count == 5);
}

TEST_CASE("sweep expansion") {
  auto plan = parse_config_text(R"({"sweep": {"offset_std": [0, 50, 100], "rule": ["proposed", "random"]}})");
  const auto cells = expand(plan);
  CHECK(cells.size() == 6);

  plan = parse_config_text(R"({"sweep": {"delta_O_i": [20, 200], "a_t": [0, 5], "replications": 2}})");
  const auto big = expand(plan);
  CHECK(big.size() == 2 * 2 * 6 * 2 * 2);
  std::set<std::uint64_t> seeds;
  for (const auto& c : big) {
    seeds.insert(c.config.seed);
    CHECK(c.config.seed == plan.base_seed + c.index);
  }
  CHECK(seeds.size() == big.size());
  // Stable across expansions.
  const auto again = expand(plan);
  for (std::size_t i = 0; i < big.size(); ++i) CHECK(again[i].config.seed == big[i].config.seed);
  // Theorem-optimal stamps follow each cell's own bounds.
  for (const auto& c : big) {
    const auto& s = std::get<TheoremOptimal>(c.config.timestamp_strategy);
    CHECK(s.delta_O == c.config.local_params.delta_O);
  }
}

TEST_CASE("parallel cells match the serial reference") {
  const auto cells = expand(quick_plan(scratch("unused")));
  const auto serial = run_cells_serial(cells);
  const auto parallel = run_cells_parallel(cells, 4);
  CHECK(results_csv(cells, serial) == results_csv(cells, parallel));
}

TEST_CASE("a failing cell reports its configuration") {
  auto cells = expand(quick_plan(scratch("unused")));
  cells[2].config.mean_block_interval = -1.0;
  CHECK_THROWS_WITH_AS(run_cells_serial(cells),
                       doctest::Contains("cell 2 {rule=random"), CellError);
  CHECK_THROWS_WITH_AS(run_cells_parallel(cells, 3),
                       doctest::Contains("cell 2 {rule=random"), CellError);
}

TEST_CASE("execute writes a self-consistent CSV") {
  const auto out = scratch("execute");
  const auto result = execute(quick_plan(out));
  const auto text = slurp(result.results_path);
  std::istringstream lines(text);
  std::string header;
  std::getline(lines, header);
  CHECK(header == csv_header());
  const auto columns = split(header);
  REQUIRE(columns.size() == 17);

  int rows = 0;
  std::string line;
  while (std::getline(lines, line)) {
    auto f = split(line);
    REQUIRE(f.size() == columns.size());
    auto col = [&](const char* name) {
      return f[std::find(columns.begin(), columns.end(), name) - columns.begin()];
    };
    const double bound = theorem2_bound(std::stod(col("delta_O_i")),
                                        std::stod(col("delta_B_i")),
                                        std::stod(col("T_seconds")));
    CHECK(std::stod(col("theorem2_bound")) == doctest::Approx(bound).epsilon(1e-9));
    CHECK(std::stoul(col("n_ties")) == 300);
    if (col("rule") == "random") CHECK(std::abs(std::stod(col("gamma_mean")) - 0.5) < 0.02);
    ++rows;
  }
  CHECK(rows == static_cast<int>(result.cells.size()));
  CHECK(fs::exists(result.bounds_path));
  CHECK(fs::exists(out / "manifest.json"));
}

TEST_CASE("same base seed, same bytes") {
  const auto a = execute(quick_plan(scratch("det_a")));
  const auto b = execute(quick_plan(scratch("det_b")));
  CHECK(slurp(a.results_path) == slurp(b.results_path));
}

TEST_CASE("unwritable output directory is an I/O error") {
  auto plan = quick_plan("/proc/tiebreak_cannot_write_here");
  CHECK_THROWS_AS(execute(plan), IoError);
}

TEST_CASE("cli exit codes") {
  const auto out = scratch("cli");
  CHECK(cli({"--out", out.string(), "--rule", "random", "--offset-std", "0",
             "--ties", "50", "--seed", "3"}) == 0);
  CHECK(fs::exists(out / "gamma.csv"));

  CHECK(cli({"--rule", "gohst", "--out", out.string()}) == 2);
  CHECK(cli({"--offset-std", "1,x", "--out", out.string()}) == 2);
  CHECK(cli({"--delta-b", "-3", "--out", out.string()}) == 2);
  CHECK(cli({"--config", "/nonexistent.json"}) == 2);
  CHECK(cli({"--no-such-flag"}) == 2);

  const auto bad = scratch("cli_bad_config");
  fs::create_directories(bad);
  { std::ofstream(bad / "c.json") << "{\"simulation\": {\"n_honest\": \"many\"}}"; }
  CHECK(cli({"--config", (bad / "c.json").string()}) == 2);

  CHECK(cli({"--out", "/proc/tiebreak_nope", "--offset-std", "0", "--ties", "5",
             "--rule", "random"}) == 3);
}
