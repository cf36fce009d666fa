#include "tiebreak/forkchoice.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace tiebreak {

namespace {

void require_candidates(std::span<const TieCandidate> candidates) {
  if (candidates.empty()) throw std::invalid_argument("no candidates");
}

std::size_t uniform_index(std::size_t n, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

SimTime earliest_arrival(std::span<const TieCandidate> candidates) {
  SimTime earliest = candidates.front().arrival_local;
  for (const auto& c : candidates)
    earliest = std::min(earliest, c.arrival_local);
  return earliest;
}

// Returns the k-th element (in input order) satisfying pred.
template <class Pred>
const TieCandidate& nth_matching(std::span<const TieCandidate> candidates,
                                 std::size_t k, Pred pred) {
  for (const auto& c : candidates) {
    if (pred(c) && k-- == 0) return c;
  }
  throw std::logic_error("nth_matching out of range");
}

}  // namespace

std::string_view to_string(RuleKind rule) {
  switch (rule) {
    case RuleKind::proposed: return "proposed";
    case RuleKind::random: return "random";
    case RuleKind::first_seen: return "first_seen";
  }
  return "?";
}

RuleKind parse_rule(std::string_view name) {
  for (auto r : {RuleKind::proposed, RuleKind::random, RuleKind::first_seen}) {
    if (to_string(r) == name) return r;
  }
  throw std::invalid_argument("unknown rule '" + std::string(name) +
                              "' (valid: proposed, random, first_seen)");
}

bool is_adversarial_evidence(SimTime arrival_local, SimTime timestamp,
                             const LocalParams& params) {
  const double gap = arrival_local - timestamp;
  return gap < -params.delta_O || gap > params.delta_O + params.delta_B;
}

std::vector<TieCandidate> filter_window(std::span<const TieCandidate> candidates,
                                        double window) {
  require_candidates(candidates);
  const SimTime earliest = earliest_arrival(candidates);
  std::vector<TieCandidate> kept;
  for (const auto& c : candidates) {
    if (c.arrival_local - earliest <= window) kept.push_back(c);
  }
  return kept;
}

TieCandidate get_main_chain(std::span<const TieCandidate> candidates,
                            const LocalParams& params, Rng& rng) {
  require_candidates(candidates);
  if (candidates.size() == 1) return candidates.front();

  // Same result as filter_window followed by the evidence filter, without
  // allocating: this runs once per miner per tie.
  const SimTime earliest = earliest_arrival(candidates);
  auto in_window = [&](const TieCandidate& c) {
    return c.arrival_local - earliest <= params.window;
  };
  auto prospect = [&](const TieCandidate& c) {
    return in_window(c) &&
           !is_adversarial_evidence(c.arrival_local, c.timestamp, params);
  };

  const auto n_prospects = static_cast<std::size_t>(
      std::count_if(candidates.begin(), candidates.end(), prospect));
  if (n_prospects == 1) return nth_matching(candidates, 0, prospect);
  if (n_prospects > 1)
    return nth_matching(candidates, uniform_index(n_prospects, rng), prospect);

  const auto n_window = static_cast<std::size_t>(
      std::count_if(candidates.begin(), candidates.end(), in_window));
  if (n_window == 1) return nth_matching(candidates, 0, in_window);
  return nth_matching(candidates, uniform_index(n_window, rng), in_window);
}

TieCandidate random_rule(std::span<const TieCandidate> candidates, Rng& rng) {
  require_candidates(candidates);
  if (candidates.size() == 1) return candidates.front();
  return candidates[uniform_index(candidates.size(), rng)];
}

TieCandidate first_seen_rule(std::span<const TieCandidate> candidates,
                             Rng& rng) {
  require_candidates(candidates);
  const SimTime earliest = earliest_arrival(candidates);
  auto first = [&](const TieCandidate& c) { return c.arrival_local == earliest; };
  const auto n_first = static_cast<std::size_t>(
      std::count_if(candidates.begin(), candidates.end(), first));
  if (n_first == 1) return nth_matching(candidates, 0, first);
  return nth_matching(candidates, uniform_index(n_first, rng), first);
}

TieCandidate choose_tip(RuleKind rule, std::span<const TieCandidate> candidates,
                        const LocalParams& params, Rng& rng) {
  switch (rule) {
    case RuleKind::proposed: return get_main_chain(candidates, params, rng);
    case RuleKind::random: return random_rule(candidates, rng);
    case RuleKind::first_seen: return first_seen_rule(candidates, rng);
  }
  throw std::logic_error("unhandled rule");
}

}  // namespace tiebreak
