#include "tiebreak/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tiebreak {

namespace {
thread_local std::uint64_t g_created_at_reads = 0;
}

std::uint64_t audit::created_at_reads() { return g_created_at_reads; }

SimTime Block::created_at() const {
  ++g_created_at_reads;
  return created_at_;
}

SimTime to_local(SimTime t_true, ClockOffset offset) {
  return t_true + offset.seconds;
}

double max_pairwise_skew(std::span<const ClockOffset> offsets) {
  if (offsets.empty()) throw std::invalid_argument("no miners");
  auto [lo, hi] = std::minmax_element(
      offsets.begin(), offsets.end(),
      [](ClockOffset a, ClockOffset b) { return a.seconds < b.seconds; });
  return hi->seconds - lo->seconds;
}

LocalParams LocalParams::make(double delta_B, double delta_O,
                              std::optional<double> window) {
  const double w = window.value_or(delta_B);
  for (double v : {delta_B, delta_O, w}) {
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument(
          "local params must be finite and non-negative");
  }
  return LocalParams{delta_B, delta_O, w};
}

BlockStore::BlockStore() {
  blocks_.emplace_back(kGenesis, std::nullopt, 0, MinerId::none(), 0.0, 0.0);
}

BlockId BlockStore::add(BlockId parent, MinerId creator, SimTime timestamp,
                        SimTime created_at) {
  if (parent.value >= blocks_.size())
    throw std::out_of_range("unknown parent block");
  const BlockId id{static_cast<std::uint32_t>(blocks_.size())};
  const auto height = blocks_[parent.value].height() + 1;
  blocks_.emplace_back(id, parent, height, creator, timestamp, created_at);
  return id;
}

std::optional<LineageViolation> validate_lineage(
    std::span<const Block> blocks) {
  if (blocks.empty()) return LineageViolation{kGenesis, "missing genesis"};
  const Block& genesis = blocks.front();
  if (genesis.parent() || genesis.height() != 0)
    return LineageViolation{genesis.id(), "malformed genesis"};

  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Block& b = blocks[i];
    if (b.id().value != i) return LineageViolation{b.id(), "id mismatch"};
    if (i == 0) continue;
    if (!b.parent()) return LineageViolation{b.id(), "second genesis"};
    const auto parent = b.parent()->value;
    // Parents are stored before their children.
    if (parent >= i) return LineageViolation{b.id(), "dangling parent"};
    if (b.height() != blocks[parent].height() + 1)
      return LineageViolation{b.id(), "height mismatch"};
  }
  return std::nullopt;
}

}  // namespace tiebreak
