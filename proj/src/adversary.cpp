#include "tiebreak/adversary.hpp"

#include <cstdio>
#include <stdexcept>

namespace tiebreak {

namespace {
template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;
}  // namespace

SimTime choose_timestamp(SimTime adversary_clock_now,
                         const TimestampStrategy& strategy) {
  return std::visit(
      overloaded{
          [&](HonestClock) { return adversary_clock_now; },
          [&](FixedOffset s) { return adversary_clock_now + s.shift; },
          [&](TheoremOptimal s) {
            return adversary_clock_now + s.delta_O + 2.0 * s.delta_B;
          },
      },
      strategy);
}

std::string describe(const TimestampStrategy& strategy) {
  char buf[96];
  std::visit(overloaded{
                 [&](HonestClock) { std::snprintf(buf, sizeof buf, "honest_clock"); },
                 [&](FixedOffset s) {
                   std::snprintf(buf, sizeof buf, "fixed_offset(%g)", s.shift);
                 },
                 [&](TheoremOptimal s) {
                   std::snprintf(buf, sizeof buf, "theorem_optimal(%g,%g)",
                                 s.delta_O, s.delta_B);
                 },
             },
             strategy);
  return buf;
}

AdversaryAction Adversary::on_own_block(const Block& block) {
  if (block.parent() != private_tip_ || block.height() != private_height_ + 1)
    throw std::logic_error("adversary block does not extend its private tip");

  private_tip_ = block.id();
  private_height_ = block.height();
  withheld_.push_back(block.id());

  if (lead() < 2) return {AdversaryAction::Kind::withhold, {}};

  // Two ahead: the whole private chain goes out and wins outright.
  AdversaryAction action{AdversaryAction::Kind::publish, std::move(withheld_)};
  withheld_.clear();
  public_height_ = private_height_;
  return action;
}

AdversaryAction Adversary::on_honest_block(const Block& block) {
  if (block.height() > private_height_) {
    private_tip_ = block.id();
    private_height_ = block.height();
    public_height_ = block.height();
    withheld_.clear();
    return {AdversaryAction::Kind::adopt, {}};
  }
  if (block.height() == private_height_ && !withheld_.empty()) {
    AdversaryAction action{AdversaryAction::Kind::release, std::move(withheld_)};
    withheld_.clear();
    public_height_ = private_height_;
    return action;
  }
  if (block.height() > public_height_) public_height_ = block.height();
  return {AdversaryAction::Kind::ignore, {}};
}

}  // namespace tiebreak
