#pragma once

// Experiment plans: a base SimConfig crossed with sweep axes, executed cell
// by cell and written out as CSV.
//
// Config file (JSON, every key optional):
//
//   {
//     "seed": 1, "out": "results", "jobs": 1,
//     "simulation": {
//       "n_honest": 1000, "T_seconds": 600, "adversary_fraction": 0.5,
//       "propagation_delay": 0, "delta_B_i": 20, "w": null,
//       "ts_strategy": "theorem_optimal", "ts_shift": 0,
//       "ties": 10000, "blocks": null
//     },
//     "sweep": {
//       "offset_std": [0, 10, 20, 50, 100, 200],
//       "rule": ["proposed", "random"],
//       "delta_O_i": [20], "a_t": [0], "replications": 1
//     }
//   }

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tiebreak/engine.hpp"

namespace tiebreak {

inline constexpr int kCsvSchemaVersion = 1;

/// Bad config or flag; the message starts with the offending key path.
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Output could not be written.
class IoError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A cell's engine failed; the message echoes the cell's parameters.
class CellError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class StampKind { honest_clock, fixed_offset, theorem_optimal };

struct ExperimentPlan {
  SimConfig base;  // offset_std, rule, delta_O, a_t and seed are set per cell
  std::optional<double> window;
  StampKind stamp = StampKind::theorem_optimal;
  double stamp_shift = 0.0;
  std::vector<double> offset_stds{0, 10, 20, 50, 100, 200};
  std::vector<RuleKind> rules{RuleKind::proposed, RuleKind::random};
  std::vector<double> delta_Os{20};
  std::vector<double> a_ts{0};
  std::uint32_t replications = 1;
  std::filesystem::path out_dir = "results";
  std::uint64_t base_seed = 1;
  int jobs = 1;
};

/// Command-line values that take precedence over the file.
struct Overrides {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> rules;
  std::optional<std::vector<double>> offset_stds;
  std::optional<std::vector<double>> delta_Os;
  std::optional<double> delta_B;
  std::optional<std::vector<double>> a_ts;
  std::optional<std::uint64_t> ties;
  std::optional<int> jobs;
};

/// Reads the JSON config (if any) and applies overrides. Throws ConfigError.
ExperimentPlan parse_config(const std::optional<std::filesystem::path>& path,
                            const Overrides& overrides = {});
/// Same, from config text already in memory.
ExperimentPlan parse_config_text(const std::string& text,
                                 const Overrides& overrides = {});

struct Cell {
  std::size_t index = 0;
  SimConfig config;
  std::string stamp_label;
};

/// Cross product in fixed order: delta_O, rule, offset_std, a_t,
/// replication. Cell i gets seed base_seed + i.
std::vector<Cell> expand(const ExperimentPlan& plan);

/// Reference implementation: cells one after another.
std::vector<SimReport> run_cells_serial(std::span<const Cell> cells);
/// OpenMP over cells; results are identical to run_cells_serial.
std::vector<SimReport> run_cells_parallel(std::span<const Cell> cells, int jobs);

std::string csv_header();
std::string csv_row(const Cell& cell, const SimReport& report);
std::string results_csv(std::span<const Cell> cells,
                        std::span<const SimReport> reports);
/// One theorem2_bound row per distinct (delta_O, delta_B, T).
std::string bounds_csv(std::span<const Cell> cells);

struct ExperimentOutput {
  std::vector<Cell> cells;
  std::vector<SimReport> reports;
  std::filesystem::path results_path;
  std::filesystem::path bounds_path;
};

/// Runs every cell and writes gamma.csv, bounds.csv and manifest.json into
/// plan.out_dir. Throws IoError or CellError.
ExperimentOutput execute(const ExperimentPlan& plan);

/// Human-readable summary table of the results.
std::string summary_table(std::span<const Cell> cells,
                          std::span<const SimReport> reports);

/// Entry point of the tiebreak-sim tool. Returns the process exit code:
/// 0 success, 2 config error, 3 I/O error, 1 anything else.
int run_cli(int argc, const char* const* argv);

}  // namespace tiebreak
