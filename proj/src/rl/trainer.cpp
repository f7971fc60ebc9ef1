#include "layermig/rl/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "layermig/policy_factory.hpp"
#include "layermig/rl/gae.hpp"

namespace layermig::rl {

namespace {

constexpr std::uint64_t kTrainStream = 0x7EA1;
constexpr std::uint64_t kEvalStream = 0xE7A1;
constexpr std::uint64_t kUpdateStream = 0x0DA7E;

std::unique_ptr<Policy> make_expert(const TrainConfig& c) {
  if (c.expert == "none" || c.expert.empty()) return nullptr;
  BaselineOptions o;
  o.dep_soft_threshold = c.dep_soft_threshold;
  return make_baseline(c.expert, o);
}

// One expert episode: cloning targets are the expert's actions and the
// discounted (scaled) returns of its decisions.
std::vector<Transition> expert_demos(const Scenario& scenario, PpcmAgent& agent, Policy& expert, std::uint64_t seed,
                                     const PpoConfig& ppo) {
  DemoRecorder recorder(expert, agent);
  std::vector<DecisionRecord> decisions;
  run_episode(scenario, recorder, seed, &decisions);
  std::vector<Transition> demos = std::move(recorder.demos());
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones(decisions.size(), 0);
  for (const DecisionRecord& d : decisions) rewards.push_back(d.reward / ppo.reward_scale);
  if (!dones.empty()) dones.back() = 1;
  const std::vector<double> g = discounted_returns(rewards, dones, ppo.gamma);
  if (demos.size() != decisions.size()) {
    throw std::logic_error("expert episode: " + std::to_string(demos.size()) + " demonstrations for " +
                           std::to_string(decisions.size()) + " decisions");
  }
  for (std::size_t i = 0; i < demos.size(); ++i) {
    demos[i].reward = rewards[i];
    demos[i].done = dones[i];
    demos[i].ret = g[i];
  }
  return demos;
}

PpoConfig clone_config(const TrainConfig& config) {
  PpoConfig c = config.ppo;
  c.epochs = config.clone_epochs;
  return c;
}

std::vector<Transition> demo_subset(std::vector<Transition> demos, double fraction, Rng& rng) {
  const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(demos.size()) - 1e-12));
  std::vector<std::size_t> idx(demos.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(idx));
  std::vector<Transition> out;
  out.reserve(keep);
  for (std::size_t k = 0; k < keep && k < idx.size(); ++k) out.push_back(std::move(demos[idx[k]]));
  return out;
}

}  // namespace

std::uint64_t training_seed(std::uint64_t seed, int episode) {
  return derive_seed(derive_seed(seed, kTrainStream), static_cast<std::uint64_t>(episode));
}

std::vector<std::uint64_t> evaluation_seeds(std::uint64_t seed, int count) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < count; ++i) out.push_back(derive_seed(derive_seed(seed, kEvalStream), static_cast<std::uint64_t>(i)));
  return out;
}

double demo_fraction(int episode, int alpha) {
  if (alpha <= 0 || episode < 0 || episode >= alpha) return 0.0;
  return static_cast<double>(alpha - episode) / static_cast<double>(alpha);
}

void expert_pretrain(const Scenario& scenario, PpcmAgent& agent, Policy& expert, int alpha, const TrainConfig& config) {
  Rng rng(derive_seed(config.seed, kUpdateStream));
  for (int i = 0; i < alpha; ++i) {
    auto demos = expert_demos(scenario, agent, expert, training_seed(config.seed, i), config.ppo);
    const auto subset = demo_subset(std::move(demos), demo_fraction(i, alpha), rng);
    agent.behavior_clone(subset, clone_config(config), rng);
  }
}

double evaluate_agent(const Scenario& scenario, PpcmAgent& agent, std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw std::invalid_argument("evaluate_agent: no seeds");
  const AgentMode mode = agent.mode();
  const bool frozen = agent.normalizer().frozen();
  agent.set_mode(AgentMode::kGreedy);
  agent.normalizer().set_frozen(true);
  agent.set_recording(false);
  double total = 0.0;
  for (std::uint64_t s : seeds) total += run_episode(scenario, agent, s).mean_total_s();
  agent.set_mode(mode);
  agent.normalizer().set_frozen(frozen);
  return total / static_cast<double>(seeds.size());
}

TrainResult train(const Scenario& scenario, const TrainConfig& config, PpcmAgent& agent,
                  const std::function<void(const EpisodeLog&)>& on_episode) {
  config.ppo.validate();
  if (config.episodes < 0) throw std::invalid_argument("train.episodes must be non-negative");
  if (config.eval_every < 0 || config.eval_episodes < 1) throw std::invalid_argument("train.eval_every/eval_episodes out of range");
  if (config.clone_epochs < 1) throw std::invalid_argument("train.clone_epochs must be positive");
  const std::unique_ptr<Policy> expert = make_expert(config);
  const int alpha = expert ? config.ppo.expert_episodes : 0;
  const auto eval_seeds = evaluation_seeds(config.seed, config.eval_episodes);
  Rng rng(derive_seed(config.seed, kUpdateStream));

  TrainResult result;
  result.best_eval_latency_s = std::numeric_limits<double>::infinity();
  nlohmann::json last_good = agent.checkpoint();

  for (int i = 0; i < config.episodes; ++i) {
    const std::uint64_t seed = training_seed(config.seed, i);
    EpisodeLog entry;
    entry.episode = i;
    try {
      agent.normalizer().set_frozen(false);
      if (i < alpha) {
        auto demos = expert_demos(scenario, agent, *expert, seed, config.ppo);
        agent.behavior_clone(demo_subset(std::move(demos), demo_fraction(i, alpha), rng), clone_config(config), rng);
      }

      agent.set_mode(AgentMode::kSample);
      agent.set_recording(true);
      std::vector<DecisionRecord> decisions;
      const EpisodeMetrics m = run_episode(scenario, agent, seed, &decisions);
      agent.set_recording(false);
      std::vector<Transition> steps = agent.take_steps();
      if (steps.size() != decisions.size()) throw std::logic_error("train: recorded steps do not match decisions");
      for (std::size_t k = 0; k < steps.size(); ++k) {
        steps[k].reward = decisions[k].reward / config.ppo.reward_scale;
        steps[k].done = k + 1 == steps.size() ? 1 : 0;
      }
      entry.mean_reward = m.arrivals > 0 ? m.reward_sum / m.arrivals : 0.0;
      prepare_advantages(steps, config.ppo);
      const PpoStats stats = agent.ppo_update(steps, config.ppo, rng);
      entry.policy_loss = stats.policy_loss;
      entry.value_loss = stats.value_loss;
      entry.entropy = stats.entropy;
    } catch (const std::runtime_error& e) {
      agent.set_recording(false);
      agent.load_checkpoint(last_good);
      result.diverged = true;
      result.divergence = "episode " + std::to_string(i) + ": " + e.what();
      break;
    }
    last_good = agent.checkpoint();

    const bool eval_now = config.eval_every > 0 && ((i + 1) % config.eval_every == 0 || i + 1 == config.episodes);
    if (eval_now) {
      const double latency = evaluate_agent(scenario, agent, eval_seeds);
      entry.eval_latency_s = latency;
      if (latency < result.best_eval_latency_s) {
        result.best_eval_latency_s = latency;
        result.best_episode = i;
        result.best_checkpoint = last_good;
      }
    }
    result.log.push_back(entry);
    if (on_episode) on_episode(entry);
  }
  if (result.best_checkpoint.is_null()) {
    result.best_checkpoint = agent.checkpoint();
    result.best_episode = static_cast<int>(result.log.size()) - 1;
  }
  return result;
}

void write_training_log(std::ostream& out, std::span<const EpisodeLog> log) {
  out << kTrainLogHeader << '\n';
  char buf[256];
  for (const EpisodeLog& e : log) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,", e.episode, e.mean_reward, e.policy_loss, e.value_loss,
                  e.entropy);
    out << buf;
    if (e.eval_latency_s) {
      std::snprintf(buf, sizeof buf, "%.17g", *e.eval_latency_s);
      out << buf;
    }
    out << '\n';
  }
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"ppo", to_json(c.ppo)},
          {"episodes", c.episodes},
          {"seed", c.seed},
          {"expert", c.expert},
          {"dep_soft_threshold", c.dep_soft_threshold},
          {"eval_every", c.eval_every},
          {"eval_episodes", c.eval_episodes},
          {"clone_epochs", c.clone_epochs},
          {"network",
           {{"embed_dim", c.network.embed_dim},
            {"cross_layers", c.network.cross_layers},
            {"deep_layers", c.network.deep_layers},
            {"head_init_scale", c.network.head_init_scale},
            {"value_model_dim", c.network.value_model_dim},
            {"value_heads", c.network.value_heads},
            {"value_hidden", c.network.value_hidden}}}};
}

void merge_json(const nlohmann::json& doc, TrainConfig& c) {
  if (doc.contains("ppo")) merge_json(doc.at("ppo"), c.ppo);
  if (doc.contains("episodes")) c.episodes = doc.at("episodes").get<int>();
  if (doc.contains("seed")) c.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("expert")) c.expert = doc.at("expert").get<std::string>();
  if (doc.contains("dep_soft_threshold")) c.dep_soft_threshold = doc.at("dep_soft_threshold").get<double>();
  if (doc.contains("eval_every")) c.eval_every = doc.at("eval_every").get<int>();
  if (doc.contains("clone_epochs")) c.clone_epochs = doc.at("clone_epochs").get<int>();
  if (doc.contains("eval_episodes")) c.eval_episodes = doc.at("eval_episodes").get<int>();
  if (doc.contains("network")) c.network = network_config_from(doc);
}

}  // namespace layermig::rl
