#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "tiebreak/experiment.hpp"

namespace tiebreak {

namespace {

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(std::string(flag) + ": not a number: '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(std::string(flag) + ": expected a list");
  return out;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Simulate forced chain ties and measure gamma per tie-breaking rule"};
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::vector<std::string> rules;
  std::string offset_std, delta_o, a_t;
  double delta_b = 0.0;
  std::uint64_t ties = 0;
  int jobs = 0;

  app.add_option("--config", config_path, "JSON experiment config");
  auto* out_opt = app.add_option("--out", out_dir, "Output directory");
  auto* seed_opt = app.add_option("--seed", seed, "Base seed");
  app.add_option("--rule", rules, "proposed | random | first_seen (repeatable)");
  auto* std_opt = app.add_option("--offset-std", offset_std, "Comma list of clock offset std (s)");
  auto* do_opt = app.add_option("--delta-o", delta_o, "Comma list of delta_O_i (s)");
  auto* db_opt = app.add_option("--delta-b", delta_b, "delta_B_i (s)");
  auto* at_opt = app.add_option("--a-t", a_t, "Comma list of adversary clock offsets (s)");
  auto* ties_opt = app.add_option("--ties", ties, "Tie episodes per cell");
  auto* jobs_opt = app.add_option("--jobs", jobs, "Cells run concurrently");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    Overrides o;
    if (*out_opt) o.out = out_dir;
    if (*seed_opt) o.seed = seed;
    o.rules = rules;
    if (*std_opt) o.offset_stds = parse_list(offset_std, "--offset-std");
    if (*do_opt) o.delta_Os = parse_list(delta_o, "--delta-o");
    if (*db_opt) o.delta_B = delta_b;
    if (*at_opt) o.a_ts = parse_list(a_t, "--a-t");
    if (*ties_opt) o.ties = ties;
    if (*jobs_opt) o.jobs = jobs;

    const auto plan = parse_config(
        config_path.empty() ? std::nullopt
                            : std::optional<std::filesystem::path>(config_path),
        o);
    const auto result = execute(plan);
    std::cout << summary_table(result.cells, result.reports);
    std::cout << "wrote " << result.results_path.string() << " and "
              << result.bounds_path.string() << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace tiebreak
