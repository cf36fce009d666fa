#include "tiebreak/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace tiebreak {

double gamma_event(std::span<const HonestChoice> choices) {
  if (choices.empty()) throw std::invalid_argument("no honest choices");
  double following = 0.0;
  double total = 0.0;
  for (const auto& c : choices) {
    total += c.weight;
    if (c.chose_adversary) following += c.weight;
  }
  if (!(total > 0.0)) throw std::invalid_argument("zero honest weight");
  return following / total;
}

double theorem2_bound(double delta_O, double delta_B, double T) {
  if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
  if (delta_O < 0.0 || delta_B < 0.0)
    throw std::invalid_argument("bounds must be non-negative");
  return 0.5 - 0.5 * std::exp(-(2.0 * delta_O + 3.0 * delta_B) / T);
}

double expected_gamma_ideal(double delta_O, double delta_B, double T_honest) {
  if (!(T_honest > 0.0)) throw std::invalid_argument("T_honest must be positive");
  if (delta_O < 0.0 || delta_B < 0.0)
    throw std::invalid_argument("bounds must be non-negative");
  return 0.5 * (std::exp(-2.0 * delta_B / T_honest) -
                std::exp(-(2.0 * delta_O + 3.0 * delta_B) / T_honest));
}

void GammaAccumulator::add(double gamma) {
  ++n_;
  const double d = gamma - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (gamma - mean_);
}

void GammaAccumulator::merge(const GammaAccumulator& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double d = other.mean_ - mean_;
  const double n = na + nb;
  mean_ += d * nb / n;
  m2_ += other.m2_ + d * d * na * nb / n;
  n_ += other.n_;
}

std::optional<GammaSummary> GammaAccumulator::summary() const {
  if (n_ == 0) return std::nullopt;
  GammaSummary s{n_, mean_, std::nullopt};
  if (n_ > 1) {
    const double var = m2_ / static_cast<double>(n_ - 1);
    s.standard_error = std::sqrt(var / static_cast<double>(n_));
  }
  return s;
}

std::optional<GammaSummary> aggregate(std::span<const double> gammas) {
  GammaAccumulator acc;
  for (double g : gammas) acc.add(g);
  return acc.summary();
}

std::optional<GammaSummary> aggregate(std::span<const TieEvent> events) {
  GammaAccumulator acc;
  for (const auto& e : events) acc.add(e.gamma);
  return acc.summary();
}

}  // namespace tiebreak
