#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "layermig/nn/param_store.hpp"
#include "layermig/rl/networks.hpp"
#include "layermig/rl/observation.hpp"
#include "layermig/sim.hpp"

namespace layermig::rl {

struct PpoConfig {
  double lr = 0.0005;
  int epochs = 10;
  int batch = 512;
  double gamma = 0.99;
  double lambda = 0.95;
  double clip = 0.2;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;  // per network; <= 0 disables clipping
  double reward_scale = 10.0;  // rewards are divided by this before GAE
  int expert_episodes = 50;    // alpha: episodes with demonstrations

  // Throws std::invalid_argument naming the field.
  void validate() const;
};

nlohmann::json to_json(const PpoConfig& c);
void merge_json(const nlohmann::json& doc, PpoConfig& c);

struct Transition {
  Observation obs;  // normalized
  int action = 0;
  double reward = 0.0;  // scaled
  std::uint8_t done = 0;
  double log_prob = 0.0;
  double value = 0.0;
  // Filled by prepare_advantages (or the return target for cloning).
  double advantage = 0.0;
  double ret = 0.0;
};

// GAE over the sequence, then per-batch advantage normalization.
void prepare_advantages(std::vector<Transition>& batch, const PpoConfig& config);

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  int minibatches = 0;
};

struct CloneStats {
  double cross_entropy = 0.0;
  double value_loss = 0.0;
  double agreement = 0.0;  // share of samples whose greedy action matches
  int minibatches = 0;
};

// Log-probability of `action` and the entropy of a masked distribution.
double log_prob(const Vector& probs, int action);
double entropy(const Vector& probs);

// dL/dlogits of the clipped surrogate for one sample, before averaging.
// Zero when the clipped branch is the active minimum and the ratio is outside
// [1 - clip, 1 + clip].
double surrogate_weight(double ratio, double advantage, double clip);

enum class AgentMode { kSample, kGreedy };

// The learned scheduler: DCN policy plus attention critic, with its own
// observation normalizer. As a Policy it encodes each decision, picks an
// action (sampled or greedy) and, when recording, keeps what PPO needs.
class PpcmAgent final : public Policy {
 public:
  PpcmAgent(ObservationLayout layout, NetworkConfig config, std::uint64_t init_seed);

  std::string name() const override { return "ppcm"; }
  void reset(std::uint64_t episode_seed) override;
  Target decide(const Simulator& sim, const Task& task, std::span<const Target> feasible) override;

  void set_mode(AgentMode mode) { mode_ = mode; }
  AgentMode mode() const { return mode_; }
  void set_recording(bool on) { recording_ = on; }
  // Steps recorded since the last call, in decision order.
  std::vector<Transition> take_steps();

  // Encodes and normalizes (updating statistics unless frozen).
  Observation observe(const Simulator& sim, const Task& task, std::span<const Target> feasible);
  Vector action_probabilities(const Observation& obs) const;
  double state_value(const Observation& obs) const;

  PpoStats ppo_update(std::vector<Transition>& batch, const PpoConfig& config, Rng& rng);
  // Cross-entropy to `action`, plus value regression to `ret`.
  CloneStats behavior_clone(std::span<const Transition> demos, const PpoConfig& config, Rng& rng);

  Normalizer& normalizer() { return normalizer_; }
  PolicyNetwork& policy() { return policy_; }
  ValueNetwork& value() { return value_; }
  const ObservationLayout& layout() const { return layout_; }

  nlohmann::json checkpoint() const;
  void load_checkpoint(const nlohmann::json& doc);
  void save(const std::string& path) const;
  void load(const std::string& path);

 private:
  ObservationLayout layout_;
  NetworkConfig config_;
  Rng init_rng_;
  PolicyNetwork policy_;
  ValueNetwork value_;
  Normalizer normalizer_;
  Rng rng_;
  AgentMode mode_ = AgentMode::kSample;
  bool recording_ = false;
  std::vector<Transition> steps_;
};

// Network shape recorded in a checkpoint document.
NetworkConfig network_config_from(const nlohmann::json& checkpoint);

// Wraps an expert scheduler: decisions come from the expert while the
// agent's encoder records (observation, expert action) pairs.
class DemoRecorder final : public Policy {
 public:
  DemoRecorder(Policy& expert, PpcmAgent& agent) : expert_(expert), agent_(agent) {}
  std::string name() const override { return expert_.name(); }
  void reset(std::uint64_t seed) override { expert_.reset(seed); }
  void begin_slice(const Simulator& sim, std::span<const TaskId> window) override { expert_.begin_slice(sim, window); }
  Target decide(const Simulator& sim, const Task& task, std::span<const Target> feasible) override;

  std::vector<Transition>& demos() { return demos_; }

 private:
  Policy& expert_;
  PpcmAgent& agent_;
  std::vector<Transition> demos_;
};

}  // namespace layermig::rl
