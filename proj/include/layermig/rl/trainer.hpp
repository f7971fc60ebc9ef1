#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "layermig/rl/agent.hpp"
#include "layermig/scenario.hpp"
#include "layermig/sim.hpp"

namespace layermig::rl {

struct TrainConfig {
  PpoConfig ppo;
  NetworkConfig network;
  int episodes = 300;
  std::uint64_t seed = 1;
  // Demonstration source for the first ppo.expert_episodes episodes; "none"
  // disables the warm start.
  std::string expert = "dep_soft";
  double dep_soft_threshold = 0.8;
  int eval_every = 10;  // 0 disables periodic evaluation
  int eval_episodes = 5;
  // Passes over each demonstration subset; fewer passes keep the cloned
  // policy stochastic enough for PPO to keep exploring.
  int clone_epochs = 1;
};

struct EpisodeLog {
  int episode = 0;
  double mean_reward = 0.0;  // unscaled reward per arrived task
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  std::optional<double> eval_latency_s;  // mean per-task latency, greedy
};

struct TrainResult {
  std::vector<EpisodeLog> log;
  nlohmann::json best_checkpoint;
  double best_eval_latency_s = 0.0;
  int best_episode = -1;
  bool diverged = false;
  std::string divergence;
};

// Seeds of training episode i and of the evaluation episodes; the two
// streams never overlap.
std::uint64_t training_seed(std::uint64_t seed, int episode);
std::vector<std::uint64_t> evaluation_seeds(std::uint64_t seed, int count);

// Share of an expert episode's demonstrations used for cloning: linear from
// 1 at episode 0 down to 1/alpha at episode alpha - 1, then 0.
double demo_fraction(int episode, int alpha);

// Behaviour cloning only: for episodes i < alpha, the expert runs an episode
// and the agent imitates demo_fraction(i) of its decisions while the critic
// regresses the discounted returns.
void expert_pretrain(const Scenario& scenario, PpcmAgent& agent, Policy& expert, int alpha, const TrainConfig& config);

// Mean per-task latency of the greedy agent over the seeds; the normalizer is
// frozen for the duration.
double evaluate_agent(const Scenario& scenario, PpcmAgent& agent, std::span<const std::uint64_t> seeds);

// The full loop: per episode an optional expert phase, then a stochastic
// rollout and a PPO update. Tracks the checkpoint with the best evaluation
// latency. A non-finite loss stops training and restores the last good
// parameters.
TrainResult train(const Scenario& scenario, const TrainConfig& config, PpcmAgent& agent,
                  const std::function<void(const EpisodeLog&)>& on_episode = {});

inline constexpr const char* kTrainLogHeader = "episode,mean_reward,policy_loss,value_loss,entropy,eval_latency_s";
void write_training_log(std::ostream& out, std::span<const EpisodeLog> log);

nlohmann::json to_json(const TrainConfig& c);
void merge_json(const nlohmann::json& doc, TrainConfig& c);

}  // namespace layermig::rl
