#pragma once

// Tie-breaking among equal-height chains.
//
// The last-generated rule works on purely local data: when a tip arrived on
// the deciding miner's own clock, the timestamp the creator claimed, and the
// miner's own LocalParams. A tip whose arrival-minus-timestamp gap falls
// outside [-delta_O, delta_O + delta_B] cannot have come from an honest
// miner under the bounded-skew, bounded-delay model, so it is dropped before
// the random draw.

#include <span>
#include <string_view>
#include <vector>

#include "tiebreak/core_types.hpp"

namespace tiebreak {

/// One tied chain as seen by the deciding miner. Deliberately carries no
/// generation time and no foreign clock data.
struct TieCandidate {
  BlockId tip;
  SimTime arrival_local = 0.0;
  SimTime timestamp = 0.0;

  static TieCandidate from(const ReceivedBlock& rb) {
    return {rb.block, rb.arrival_local, rb.timestamp};
  }
};

enum class RuleKind { proposed, random, first_seen };

std::string_view to_string(RuleKind rule);
/// Throws std::invalid_argument naming the valid set.
RuleKind parse_rule(std::string_view name);

/// True when the tip provably comes from an adversary. Boundaries are
/// honest-compatible.
bool is_adversarial_evidence(SimTime arrival_local, SimTime timestamp,
                             const LocalParams& params);

/// Candidates whose arrival is within `window` of the earliest one.
std::vector<TieCandidate> filter_window(std::span<const TieCandidate> candidates,
                                        double window);

/// The last-generated rule for one miner.
TieCandidate get_main_chain(std::span<const TieCandidate> candidates,
                            const LocalParams& params, Rng& rng);

TieCandidate random_rule(std::span<const TieCandidate> candidates, Rng& rng);

/// Earliest local arrival wins; exact ties are split uniformly.
TieCandidate first_seen_rule(std::span<const TieCandidate> candidates,
                             Rng& rng);

/// Dispatches to the selected rule. `params` is only read by `proposed`.
TieCandidate choose_tip(RuleKind rule, std::span<const TieCandidate> candidates,
                        const LocalParams& params, Rng& rng);

}  // namespace tiebreak
