#pragma once

// Block-withholding attacker. Keeps a single mined block private, releases
// it the moment an honest block of the same height appears (forcing a tie),
// and publishes its whole private chain once it is two blocks ahead.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "tiebreak/core_types.hpp"

namespace tiebreak {

struct HonestClock {};
struct FixedOffset {
  double shift = 0.0;
};
/// Stamps delta_O + 2 * delta_B ahead, the latest stamp that still escapes
/// the stale-tip branch of the evidence test for the longest time.
struct TheoremOptimal {
  double delta_O = 20.0;
  double delta_B = 20.0;
};

using TimestampStrategy = std::variant<HonestClock, FixedOffset, TheoremOptimal>;

SimTime choose_timestamp(SimTime adversary_clock_now,
                         const TimestampStrategy& strategy);

std::string describe(const TimestampStrategy& strategy);

struct AdversaryAction {
  enum class Kind { withhold, publish, release, adopt, ignore };
  Kind kind = Kind::ignore;
  /// Blocks that become public, oldest first. Empty unless publish/release.
  std::vector<BlockId> blocks;
};

class Adversary {
 public:
  explicit Adversary(BlockId tip = kGenesis, std::uint32_t height = 0)
      : private_tip_(tip), private_height_(height), public_height_(height) {}

  /// `block` must extend the private tip; anything else is an engine bug and
  /// throws std::logic_error.
  AdversaryAction on_own_block(const Block& block);

  AdversaryAction on_honest_block(const Block& block);

  BlockId private_tip() const { return private_tip_; }
  std::uint32_t private_height() const { return private_height_; }
  std::uint32_t public_height() const { return public_height_; }
  /// Private height minus the best public height; never above 2.
  std::uint32_t lead() const { return private_height_ - public_height_; }
  const std::vector<BlockId>& withheld() const { return withheld_; }

 private:
  BlockId private_tip_;
  std::uint32_t private_height_;
  std::uint32_t public_height_;
  std::vector<BlockId> withheld_;
};

}  // namespace tiebreak
