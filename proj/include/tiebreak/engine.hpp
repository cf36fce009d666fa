#pragma once

// Discrete-event simulation of n honest miners and one withholding
// adversary. Honest miners follow the longest chain and run the configured
// tie-breaking rule on equal-height tips; every forced tie is recorded as a
// TieEvent with the hashrate share that followed the adversary.
//
// One Engine is single-threaded and fully determined by its SimConfig
// (seed included). Run independent engines in parallel for sweeps.

#include <cstdint>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "tiebreak/adversary.hpp"
#include "tiebreak/core_types.hpp"
#include "tiebreak/forkchoice.hpp"
#include "tiebreak/metrics.hpp"

namespace tiebreak {

struct StopCondition {
  enum class Kind { ties, blocks };
  Kind kind = Kind::ties;
  std::uint64_t count = 10'000;
};

/// Replaces random block generation with a fixed schedule. Used to drive
/// hand-traced scenarios.
struct ScriptedGeneration {
  SimTime at = 0.0;
  MinerId miner;
};

struct SimConfig {
  std::uint32_t n_honest = 1000;
  /// Adversary share of total hashrate; honest miners split the rest evenly.
  double adversary_fraction = 0.5;
  /// Whole-network mean block interval.
  double mean_block_interval = 600.0;
  /// Honest-to-honest delay. Adversary releases always arrive instantly.
  double propagation_delay = 0.0;
  /// Std of the normal honest clock offsets; 0 puts every clock on true time.
  double offset_std = 0.0;
  /// The adversary's own clock offset.
  double adversary_clock_offset = 0.0;
  RuleKind rule = RuleKind::proposed;
  LocalParams local_params = LocalParams::make(20.0, 20.0);
  /// Optional per-miner override of local_params, one entry per honest miner.
  std::vector<LocalParams> per_miner_params;
  TimestampStrategy timestamp_strategy = TheoremOptimal{20.0, 20.0};
  StopCondition stop;
  std::uint64_t seed = 1;
  bool record_choices = false;
  std::vector<ScriptedGeneration> script;

  /// Honest-only mean interval, T / (1 - adversary_fraction).
  double honest_interval() const;
  /// Throws std::invalid_argument describing the first bad field.
  void validate() const;
};

struct SimReport {
  SimConfig config;
  std::vector<TieEvent> tie_events;
  std::optional<GammaSummary> gamma;
  std::uint64_t n_blocks_honest = 0;
  std::uint64_t n_blocks_adversary = 0;
  SimTime end_time = 0.0;
  double network_interval = 0.0;
  double honest_interval = 0.0;
  double theorem2_bound = 0.0;
  double expected_gamma_ideal = 0.0;
  /// max |O_i - O_j| over honest miners, and whether it stays within the
  /// configured delta_O (true in theoretical mode only).
  double honest_max_skew = 0.0;
  bool skew_within_bound = true;
  bool lineage_ok = true;
};

/// Exponential waiting time with mean 1/rate. Throws for rate <= 0.
double next_generation_delay(Rng& rng, double miner_rate);

struct ScheduledArrival {
  BlockId block;
  std::uint32_t receiver = 0;
  SimTime arrival_true = 0.0;
  SimTime arrival_local = 0.0;
};

/// Arrival of `block` at each receiver, `delay` after `send_time`.
/// `offsets` is indexed by receiver. Throws for a negative delay.
std::vector<ScheduledArrival> deliver(BlockId block,
                                      std::span<const std::uint32_t> receivers,
                                      std::span<const ClockOffset> offsets,
                                      SimTime send_time, double delay);

enum class EventKind : std::uint8_t { generation = 0, arrival = 1, tie_resolution = 2 };

/// Who an arrival event is addressed to.
struct Receivers {
  enum class Kind : std::uint8_t { one, all_honest, all_honest_but };
  Kind kind = Kind::all_honest;
  std::uint32_t miner = 0;
};

struct Event {
  SimTime at = 0.0;
  EventKind kind = EventKind::generation;
  std::uint64_t seq = 0;
  std::uint32_t miner = 0;  // generation
  BlockId block;            // arrival
  Receivers receivers;      // arrival
};

/// Min-queue ordered by (time, kind, insertion order).
class EventQueue {
 public:
  void push(Event e);
  Event pop();
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const;
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t next_seq_ = 0;
};

class Engine {
 public:
  /// Validates the config; throws std::invalid_argument before any event.
  explicit Engine(SimConfig config);

  SimReport run();

  const BlockStore& blocks() const { return store_; }
  std::span<const ClockOffset> honest_offsets() const { return offsets_; }

 private:
  struct MinerView {
    BlockId tip = kGenesis;
    std::uint32_t height = 0;
    std::vector<TieCandidate> tied;
    bool pending = false;
    std::uint64_t recorded_episode = 0;
  };

  struct OpenEpisode {
    std::uint64_t id = 0;
    BlockId adversary_tip;
    std::uint32_t height = 0;
    SimTime released_at = 0.0;
    double withholding = 0.0;
    double following_weight = 0.0;
    double recorded_weight = 0.0;
    std::uint32_t n_recorded = 0;
    std::uint32_t n_following = 0;
    std::vector<HonestChoice> choices;
  };

  void schedule_generation(std::uint32_t miner, SimTime now);
  void on_generation(const Event& e);
  void on_arrival(const Event& e);
  void on_tie_resolution(SimTime now);
  void receive(std::uint32_t miner, BlockId block, SimTime now);
  void broadcast(BlockId block, Receivers to, SimTime now, double delay);
  void apply(const AdversaryAction& action, SimTime now);
  void record_choice(std::uint32_t miner, BlockId chosen);
  void close_episode_if_superseded(std::uint32_t height);
  void finalize_episode();
  bool done() const;
  const LocalParams& params_of(std::uint32_t miner) const;

  SimConfig config_;
  Rng rng_;
  BlockStore store_;
  EventQueue queue_;
  std::vector<ClockOffset> offsets_;
  std::vector<MinerView> views_;
  std::vector<std::uint32_t> pending_;
  Adversary adversary_;
  std::optional<OpenEpisode> episode_;
  std::uint64_t next_episode_id_ = 1;
  double honest_weight_ = 0.0;
  double honest_rate_ = 0.0;
  double adversary_rate_ = 0.0;
  SimReport report_;
};

/// Convenience wrapper: Engine(config).run().
SimReport run(const SimConfig& config);

}  // namespace tiebreak
