#pragma once

// Shared vocabulary: simulated time, clocks, miners and blocks.

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace tiebreak {

/// Continuous simulated time in seconds. True time starts at 0; a miner's
/// local clock reading may be negative near the epoch.
using SimTime = double;

/// Every stochastic decision in the library draws from an explicitly passed
/// stream of this type.
using Rng = std::mt19937_64;

enum class Role : std::uint8_t { honest, adversary };

struct MinerId {
  std::uint32_t index = std::numeric_limits<std::uint32_t>::max();
  Role role = Role::honest;

  static constexpr MinerId none() { return {}; }
  constexpr bool valid() const {
    return index != std::numeric_limits<std::uint32_t>::max();
  }
  friend constexpr bool operator==(MinerId, MinerId) = default;
};

struct BlockId {
  std::uint32_t value = 0;
  friend constexpr auto operator<=>(BlockId, BlockId) = default;
};

inline constexpr BlockId kGenesis{0};

/// A miner's clock minus true time. Drawn once per run.
struct ClockOffset {
  double seconds = 0.0;
};

SimTime to_local(SimTime t_true, ClockOffset offset);

/// Largest |o_i - o_j| over all pairs. Throws std::invalid_argument("no
/// miners") on an empty list.
double max_pairwise_skew(std::span<const ClockOffset> offsets);

namespace audit {
/// Number of Block::created_at() reads on this thread. Lets tests prove that
/// a decision path never looks at the hidden generation time.
std::uint64_t created_at_reads();
}  // namespace audit

class Block {
 public:
  Block(BlockId id, std::optional<BlockId> parent, std::uint32_t height,
        MinerId creator, SimTime timestamp, SimTime created_at)
      : id_(id), parent_(parent), height_(height), creator_(creator),
        timestamp_(timestamp), created_at_(created_at) {}

  BlockId id() const { return id_; }
  std::optional<BlockId> parent() const { return parent_; }
  std::uint32_t height() const { return height_; }
  MinerId creator() const { return creator_; }
  /// Creator-chosen claimed time. Untrusted.
  SimTime timestamp() const { return timestamp_; }
  /// True generation time. Metrics only; instrumented.
  SimTime created_at() const;

 private:
  BlockId id_;
  std::optional<BlockId> parent_;
  std::uint32_t height_;
  MinerId creator_;
  SimTime timestamp_;
  SimTime created_at_;
};

/// A block as observed by one miner.
struct ReceivedBlock {
  BlockId block;
  SimTime timestamp = 0.0;
  SimTime arrival_local = 0.0;
  SimTime arrival_true = 0.0;
};

/// Per-miner configuration of the last-generated rule.
struct LocalParams {
  double delta_B = 20.0;  ///< assumed propagation bound
  double delta_O = 20.0;  ///< assumed pairwise clock skew bound
  double window = 20.0;   ///< acceptance window, normally delta_B

  /// Validating factory; window defaults to delta_B.
  static LocalParams make(double delta_B, double delta_O,
                          std::optional<double> window = std::nullopt);
};

/// Append-only block store indexed by BlockId. Slot 0 is genesis.
class BlockStore {
 public:
  BlockStore();

  /// Derives the height from the parent. Throws std::out_of_range on an
  /// unknown parent.
  BlockId add(BlockId parent, MinerId creator, SimTime timestamp,
              SimTime created_at);

  /// Stores a block as given, without checks. Used to build fixtures.
  void insert_unchecked(Block block) { blocks_.push_back(std::move(block)); }

  const Block& operator[](BlockId id) const { return blocks_.at(id.value); }
  std::size_t size() const { return blocks_.size(); }
  std::span<const Block> blocks() const { return blocks_; }

 private:
  std::vector<Block> blocks_;
};

struct LineageViolation {
  BlockId block;
  std::string reason;
};

/// Checks genesis shape, parent links and heights. Returns the first
/// violation, or nothing when the store is consistent.
std::optional<LineageViolation> validate_lineage(std::span<const Block> blocks);

}  // namespace tiebreak
