#pragma once

// Gamma: the hashrate-weighted share of honest miners that mine on the
// adversary's tip during a forced tie. Plus the closed forms the simulator
// is checked against.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tiebreak/core_types.hpp"

namespace tiebreak {

struct HonestChoice {
  MinerId miner;
  bool chose_adversary = false;
  double weight = 0.0;
};

/// Weighted share choosing the adversary. Throws on an empty list or a zero
/// total weight.
double gamma_event(std::span<const HonestChoice> choices);

/// Upper bound 1/2 - 1/2 exp(-(2 dO + 3 dB) / T). Throws for T <= 0.
double theorem2_bound(double delta_O, double delta_B, double T);

/// Expected gamma with zero skew and stamps delta_O + 2 delta_B ahead, tie
/// gaps exponential with mean `T_honest`: ties inside 2 dB are caught as
/// future-dated, ties after 2 dO + 3 dB as stale, the rest are coin flips.
double expected_gamma_ideal(double delta_O, double delta_B, double T_honest);

struct TieEvent {
  std::uint64_t tie_id = 0;
  SimTime true_time = 0.0;
  /// Release time minus the adversary block's generation time.
  double adversary_withholding_duration = 0.0;
  double gamma = 0.0;
  double adversary_weight = 0.0;
  double honest_weight = 0.0;
  std::uint32_t miners_following_adversary = 0;
  /// Per-miner breakdown; filled only when the engine is asked to keep it.
  std::vector<HonestChoice> choices;
};

struct GammaSummary {
  std::uint64_t n = 0;
  double mean = 0.0;
  /// Absent for a single event.
  std::optional<double> standard_error;
};

/// Welford accumulator; partial results from parallel runs merge exactly
/// enough for reporting.
class GammaAccumulator {
 public:
  void add(double gamma);
  void merge(const GammaAccumulator& other);
  std::optional<GammaSummary> summary() const;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Per-episode mean and standard error; nothing when there are no ties.
std::optional<GammaSummary> aggregate(std::span<const double> gammas);
std::optional<GammaSummary> aggregate(std::span<const TieEvent> events);

}  // namespace tiebreak
