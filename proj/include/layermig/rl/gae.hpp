#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace layermig::rl {

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;  // advantages + values
};

// Backward recursion
//   delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t)
//   A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
// V(s_{t+1}) past the end of the sequence is `bootstrap`.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, std::span<const std::uint8_t> dones,
                      double gamma, double lambda, double bootstrap = 0.0);

// In place: mean 0, standard deviation 1 (left centred if the spread is 0).
void normalize_advantages(std::vector<double>& advantages);

// Discounted reward-to-go with resets at episode ends.
std::vector<double> discounted_returns(std::span<const double> rewards, std::span<const std::uint8_t> dones, double gamma);

}  // namespace layermig::rl
