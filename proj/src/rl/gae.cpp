#include "layermig/rl/gae.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace layermig::rl {

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, std::span<const std::uint8_t> dones,
                      double gamma, double lambda, double bootstrap) {
  if (rewards.size() != values.size() || rewards.size() != dones.size()) {
    throw std::invalid_argument("compute_gae: length mismatch (rewards " + std::to_string(rewards.size()) +
                                ", values " + std::to_string(values.size()) + ", dones " +
                                std::to_string(dones.size()) + ")");
  }
  const std::size_t n = rewards.size();
  GaeResult r;
  r.advantages.assign(n, 0.0);
  r.returns.assign(n, 0.0);
  double next_adv = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double cont = dones[i] ? 0.0 : 1.0;
    const double next_value = i + 1 < n ? values[i + 1] : bootstrap;
    const double delta = rewards[i] + gamma * next_value * cont - values[i];
    next_adv = delta + gamma * lambda * cont * next_adv;
    r.advantages[i] = next_adv;
    r.returns[i] = next_adv + values[i];
  }
  return r;
}

void normalize_advantages(std::vector<double>& a) {
  if (a.empty()) return;
  double mean = 0.0;
  for (double x : a) mean += x;
  mean /= static_cast<double>(a.size());
  double var = 0.0;
  for (double x : a) var += (x - mean) * (x - mean);
  var /= static_cast<double>(a.size());
  const double sd = std::sqrt(var);
  for (double& x : a) x = sd > 1e-12 ? (x - mean) / sd : x - mean;
}

std::vector<double> discounted_returns(std::span<const double> rewards, std::span<const std::uint8_t> dones, double gamma) {
  if (rewards.size() != dones.size()) throw std::invalid_argument("discounted_returns: length mismatch");
  std::vector<double> g(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    if (dones[i]) acc = 0.0;
    acc = rewards[i] + gamma * acc;
    g[i] = acc;
  }
  return g;
}

}  // namespace layermig::rl
