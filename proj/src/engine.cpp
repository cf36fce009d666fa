#include "tiebreak/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tiebreak {

double SimConfig::honest_interval() const {
  return mean_block_interval / (1.0 - adversary_fraction);
}

void SimConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (n_honest == 0) fail("n_honest: zero honest miners");
  if (!std::isfinite(mean_block_interval) || mean_block_interval <= 0.0)
    fail("T_seconds: mean block interval must be positive");
  if (!(adversary_fraction >= 0.0 && adversary_fraction < 1.0))
    fail("adversary_fraction: must be in [0, 1)");
  if (!std::isfinite(propagation_delay) || propagation_delay < 0.0)
    fail("propagation_delay: must be non-negative");
  if (!std::isfinite(offset_std) || offset_std < 0.0)
    fail("offset_std: must be non-negative");
  if (!std::isfinite(adversary_clock_offset)) fail("a_t: must be finite");
  if (stop.count == 0) fail("stop: count must be positive");
  if (!per_miner_params.empty() && per_miner_params.size() != n_honest)
    fail("per_miner_params: need one entry per honest miner");
  if (script.empty() && stop.kind == StopCondition::Kind::ties &&
      adversary_fraction == 0.0)
    fail("stop: tie target unreachable without adversary hashrate");
  for (const auto& g : script) {
    if (!(g.at >= 0.0)) fail("script: negative generation time");
    if (g.miner.role == Role::honest && g.miner.index >= n_honest)
      fail("script: honest miner index out of range");
  }
}

double next_generation_delay(Rng& rng, double miner_rate) {
  if (!(miner_rate > 0.0)) throw std::invalid_argument("rate must be positive");
  return std::exponential_distribution<double>(miner_rate)(rng);
}

std::vector<ScheduledArrival> deliver(BlockId block,
                                      std::span<const std::uint32_t> receivers,
                                      std::span<const ClockOffset> offsets,
                                      SimTime send_time, double delay) {
  if (!(delay >= 0.0)) throw std::invalid_argument("negative delay");
  std::vector<ScheduledArrival> out;
  out.reserve(receivers.size());
  const SimTime at = send_time + delay;
  for (auto r : receivers)
    out.push_back({block, r, at, to_local(at, offsets[r])});
  return out;
}

bool EventQueue::Later::operator()(const Event& a, const Event& b) const {
  if (a.at != b.at) return a.at > b.at;
  if (a.kind != b.kind) return a.kind > b.kind;
  return a.seq > b.seq;
}

void EventQueue::push(Event e) {
  e.seq = next_seq_++;
  heap_.push(e);
}

Event EventQueue::pop() {
  Event e = heap_.top();
  heap_.pop();
  return e;
}

Engine::Engine(SimConfig config)
    : config_(std::move(config)), rng_(config_.seed) {
  config_.validate();

  const auto n = config_.n_honest;
  offsets_.resize(n);
  if (config_.offset_std > 0.0) {
    std::normal_distribution<double> skew(0.0, config_.offset_std);
    for (auto& o : offsets_) o.seconds = skew(rng_);
  }
  views_.resize(n);
  for (auto& v : views_) v.tied.reserve(4);
  pending_.reserve(n);

  const double honest_share = 1.0 - config_.adversary_fraction;
  honest_weight_ = honest_share / n;
  honest_rate_ = honest_weight_ / config_.mean_block_interval;
  adversary_rate_ = config_.adversary_fraction / config_.mean_block_interval;

  if (config_.script.empty()) {
    for (std::uint32_t m = 0; m <= n; ++m) schedule_generation(m, 0.0);
  } else {
    for (const auto& g : config_.script) {
      Event e;
      e.at = g.at;
      e.kind = EventKind::generation;
      e.miner = g.miner.role == Role::adversary ? n : g.miner.index;
      queue_.push(e);
    }
  }
}

const LocalParams& Engine::params_of(std::uint32_t miner) const {
  return config_.per_miner_params.empty() ? config_.local_params
                                          : config_.per_miner_params[miner];
}

void Engine::schedule_generation(std::uint32_t miner, SimTime now) {
  if (!config_.script.empty()) return;
  const double rate = miner < config_.n_honest ? honest_rate_ : adversary_rate_;
  if (rate <= 0.0) return;
  Event e;
  e.at = now + next_generation_delay(rng_, rate);
  e.kind = EventKind::generation;
  e.miner = miner;
  queue_.push(e);
}

void Engine::broadcast(BlockId block, Receivers to, SimTime now, double delay) {
  Event e;
  e.at = now + delay;
  e.kind = EventKind::arrival;
  e.block = block;
  e.receivers = to;
  queue_.push(e);
}

void Engine::on_generation(const Event& e) {
  const auto m = e.miner;
  const SimTime now = e.at;
  schedule_generation(m, now);

  if (m < config_.n_honest) {
    const BlockId id = store_.add(views_[m].tip, MinerId{m, Role::honest},
                                  to_local(now, offsets_[m]), now);
    ++report_.n_blocks_honest;
    close_episode_if_superseded(store_[id].height());
    broadcast(id, {Receivers::Kind::one, m}, now, 0.0);
    if (config_.n_honest > 1)
      broadcast(id, {Receivers::Kind::all_honest_but, m}, now,
                config_.propagation_delay);
    apply(adversary_.on_honest_block(store_[id]), now);
    return;
  }

  const SimTime stamp = choose_timestamp(
      to_local(now, ClockOffset{config_.adversary_clock_offset}),
      config_.timestamp_strategy);
  const BlockId id = store_.add(adversary_.private_tip(),
                                MinerId{m, Role::adversary}, stamp, now);
  ++report_.n_blocks_adversary;
  apply(adversary_.on_own_block(store_[id]), now);
}

void Engine::apply(const AdversaryAction& action, SimTime now) {
  using Kind = AdversaryAction::Kind;
  if (action.kind != Kind::publish && action.kind != Kind::release) return;

  const BlockId tip = action.blocks.back();
  close_episode_if_superseded(store_[tip].height());
  // Releases reach every honest miner instantly.
  for (auto b : action.blocks)
    broadcast(b, {Receivers::Kind::all_honest, 0}, now, 0.0);

  if (action.kind == Kind::release) {
    if (episode_) finalize_episode();
    OpenEpisode ep;
    ep.id = next_episode_id_++;
    ep.adversary_tip = tip;
    ep.height = store_[tip].height();
    ep.released_at = now;
    ep.withholding = now - store_[tip].created_at();
    episode_ = std::move(ep);
  }
}

void Engine::on_arrival(const Event& e) {
  const auto n = config_.n_honest;
  switch (e.receivers.kind) {
    case Receivers::Kind::one:
      receive(e.receivers.miner, e.block, e.at);
      break;
    case Receivers::Kind::all_honest:
      for (std::uint32_t r = 0; r < n; ++r) receive(r, e.block, e.at);
      break;
    case Receivers::Kind::all_honest_but:
      for (std::uint32_t r = 0; r < n; ++r)
        if (r != e.receivers.miner) receive(r, e.block, e.at);
      break;
  }
}

void Engine::receive(std::uint32_t miner, BlockId block, SimTime now) {
  const Block& b = store_[block];
  MinerView& view = views_[miner];
  const TieCandidate seen{block, to_local(now, offsets_[miner]), b.timestamp()};

  if (b.height() > view.height) {
    view.tip = block;
    view.height = b.height();
    view.tied.clear();
    view.tied.push_back(seen);
    return;
  }
  if (b.height() < view.height) return;
  for (const auto& c : view.tied)
    if (c.tip == block) return;

  view.tied.push_back(seen);
  if (view.pending) return;
  view.pending = true;
  if (pending_.empty()) {
    Event e;
    e.at = now;
    e.kind = EventKind::tie_resolution;
    queue_.push(e);
  }
  pending_.push_back(miner);
}

void Engine::on_tie_resolution(SimTime) {
  std::vector<std::uint32_t> batch;
  batch.swap(pending_);
  for (auto r : batch) {
    MinerView& view = views_[r];
    view.pending = false;
    if (view.tied.size() < 2) continue;

    const TieCandidate chosen =
        choose_tip(config_.rule, view.tied, params_of(r), rng_);
    view.tip = chosen.tip;

    if (!episode_ || view.recorded_episode == episode_->id ||
        view.height != episode_->height)
      continue;
    const auto adv = episode_->adversary_tip;
    if (std::any_of(view.tied.begin(), view.tied.end(),
                    [&](const TieCandidate& c) { return c.tip == adv; }))
      record_choice(r, chosen.tip);
  }
  pending_.swap(batch);
  pending_.clear();

  if (episode_ && episode_->n_recorded == config_.n_honest) finalize_episode();
}

void Engine::record_choice(std::uint32_t miner, BlockId chosen) {
  OpenEpisode& ep = *episode_;
  views_[miner].recorded_episode = ep.id;
  const bool follows = chosen == ep.adversary_tip;
  ++ep.n_recorded;
  ep.recorded_weight += honest_weight_;
  if (follows) {
    ep.following_weight += honest_weight_;
    ++ep.n_following;
  }
  if (config_.record_choices)
    ep.choices.push_back({MinerId{miner, Role::honest}, follows, honest_weight_});
}

void Engine::close_episode_if_superseded(std::uint32_t height) {
  if (episode_ && height > episode_->height) finalize_episode();
}

void Engine::finalize_episode() {
  OpenEpisode& ep = *episode_;
  // Miners that never saw both tips count by the tip they were mining on.
  if (ep.n_recorded < config_.n_honest) {
    for (std::uint32_t r = 0; r < config_.n_honest; ++r)
      if (views_[r].recorded_episode != ep.id) record_choice(r, views_[r].tip);
  }
  TieEvent ev;
  ev.tie_id = ep.id;
  ev.true_time = ep.released_at;
  ev.adversary_withholding_duration = ep.withholding;
  ev.gamma = ep.following_weight / ep.recorded_weight;
  ev.adversary_weight = ep.following_weight;
  ev.honest_weight = ep.recorded_weight;
  ev.miners_following_adversary = ep.n_following;
  ev.choices = std::move(ep.choices);
  report_.tie_events.push_back(std::move(ev));
  episode_.reset();
}

bool Engine::done() const {
  const auto& stop = config_.stop;
  if (stop.kind == StopCondition::Kind::ties)
    return report_.tie_events.size() >= stop.count;
  return report_.n_blocks_honest + report_.n_blocks_adversary >= stop.count;
}

SimReport Engine::run() {
  SimTime now = 0.0;
  while (!queue_.empty() && !done()) {
    const Event e = queue_.pop();
    now = e.at;
    switch (e.kind) {
      case EventKind::generation: on_generation(e); break;
      case EventKind::arrival: on_arrival(e); break;
      case EventKind::tie_resolution: on_tie_resolution(now); break;
    }
  }
  if (episode_) finalize_episode();

  report_.config = config_;
  report_.end_time = now;
  report_.gamma = aggregate(std::span<const TieEvent>(report_.tie_events));
  report_.network_interval = config_.mean_block_interval;
  report_.honest_interval = config_.honest_interval();
  const auto& p = config_.local_params;
  report_.theorem2_bound =
      theorem2_bound(p.delta_O, p.delta_B, config_.mean_block_interval);
  report_.expected_gamma_ideal =
      expected_gamma_ideal(p.delta_O, p.delta_B, report_.honest_interval);
  report_.honest_max_skew = max_pairwise_skew(offsets_);
  report_.skew_within_bound = report_.honest_max_skew <= p.delta_O;
  report_.lineage_ok = !validate_lineage(store_.blocks()).has_value();
  return report_;
}

SimReport run(const SimConfig& config) { return Engine(config).run(); }

}  // namespace tiebreak
