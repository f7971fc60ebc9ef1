#include "layermig/rl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "layermig/rl/gae.hpp"

namespace layermig::rl {

namespace {

constexpr std::uint64_t kSampleStream = 0x5A3B1E;
constexpr const char* kCheckpointFormat = "layermig-checkpoint";
constexpr int kCheckpointVersion = 1;

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(idx));
  return idx;
}

ObsBatch gather(const ObservationLayout& layout, std::span<const Transition> data, std::span<const std::size_t> idx) {
  std::vector<const Observation*> obs;
  obs.reserve(idx.size());
  for (std::size_t i : idx) obs.push_back(&data[i].obs);
  return make_batch(layout, obs);
}

void step_store(nn::ParamStore& store, const PpoConfig& c) {
  store.clip_grad_norm(c.max_grad_norm);
  store.adam_step(nn::AdamConfig{c.lr});
}

int greedy(const Vector& p) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return static_cast<int>(best);
}

}  // namespace

void PpoConfig::validate() const {
  auto fail = [](const std::string& f, const std::string& why) { throw std::invalid_argument("ppo." + f + " " + why); };
  if (!(lr > 0.0)) fail("lr", "must be positive");
  if (epochs < 1) fail("epochs", "must be at least 1");
  if (batch < 1) fail("batch", "must be at least 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma", "must lie in (0, 1]");
  if (!(lambda > 0.0 && lambda <= 1.0)) fail("lambda", "must lie in (0, 1]");
  if (!(clip > 0.0)) fail("clip", "must be positive");
  if (entropy_coef < 0.0) fail("entropy_coef", "must be non-negative");
  if (value_coef < 0.0) fail("value_coef", "must be non-negative");
  if (!(reward_scale > 0.0)) fail("reward_scale", "must be positive");
  if (expert_episodes < 0) fail("expert_episodes", "must be non-negative");
}

nlohmann::json to_json(const PpoConfig& c) {
  return {{"lr", c.lr},
          {"epochs", c.epochs},
          {"batch", c.batch},
          {"gamma", c.gamma},
          {"lambda", c.lambda},
          {"clip", c.clip},
          {"entropy_coef", c.entropy_coef},
          {"value_coef", c.value_coef},
          {"max_grad_norm", c.max_grad_norm},
          {"reward_scale", c.reward_scale},
          {"expert_episodes", c.expert_episodes}};
}

void merge_json(const nlohmann::json& doc, PpoConfig& c) {
  auto take = [&](const char* key, auto& field) {
    if (doc.contains(key)) field = doc.at(key).get<std::decay_t<decltype(field)>>();
  };
  take("lr", c.lr);
  take("epochs", c.epochs);
  take("batch", c.batch);
  take("gamma", c.gamma);
  take("lambda", c.lambda);
  take("clip", c.clip);
  take("entropy_coef", c.entropy_coef);
  take("value_coef", c.value_coef);
  take("max_grad_norm", c.max_grad_norm);
  take("reward_scale", c.reward_scale);
  take("expert_episodes", c.expert_episodes);
}

void prepare_advantages(std::vector<Transition>& batch, const PpoConfig& config) {
  std::vector<double> rewards, values;
  std::vector<std::uint8_t> dones;
  for (const Transition& t : batch) {
    rewards.push_back(t.reward);
    values.push_back(t.value);
    dones.push_back(t.done);
  }
  GaeResult g = compute_gae(rewards, values, dones, config.gamma, config.lambda);
  normalize_advantages(g.advantages);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    batch[i].advantage = g.advantages[i];
    batch[i].ret = g.returns[i];
  }
}

double log_prob(const Vector& probs, int action) {
  const double p = probs[action];
  if (!(p > 0.0)) throw std::domain_error("log_prob: action " + std::to_string(action) + " has zero probability");
  return std::log(p);
}

double entropy(const Vector& probs) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) h -= probs[i] * std::log(probs[i]);
  }
  return h;
}

double surrogate_weight(double ratio, double advantage, double clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  const double unclipped_term = ratio * advantage;
  const double clipped_term = clipped * advantage;
  if (unclipped_term <= clipped_term) return ratio * advantage;
  // Clipped branch is the minimum: constant in the parameters.
  if (ratio < 1.0 - clip || ratio > 1.0 + clip) return 0.0;
  return ratio * advantage;
}

// ---------------------------------------------------------------------------

PpcmAgent::PpcmAgent(ObservationLayout layout, NetworkConfig config, std::uint64_t init_seed)
    : layout_(layout),
      config_(std::move(config)),
      init_rng_(derive_seed(init_seed, 0x1417)),
      policy_(layout, config_, init_rng_),
      value_(layout, config_, init_rng_),
      normalizer_(layout),
      rng_(derive_seed(init_seed, kSampleStream)) {}

void PpcmAgent::reset(std::uint64_t episode_seed) {
  rng_ = Rng(derive_seed(episode_seed, kSampleStream));
  steps_.clear();
}

Observation PpcmAgent::observe(const Simulator& sim, const Task& task, std::span<const Target> feasible) {
  Observation o = encode_state(sim, task, feasible);
  normalizer_.update(o.dense);
  o.dense = normalizer_.apply(o.dense);
  return o;
}

Vector PpcmAgent::action_probabilities(const Observation& obs) const {
  return policy_.probabilities(make_batch(layout_, obs)).row(0).transpose();
}

double PpcmAgent::state_value(const Observation& obs) const { return value_.values(make_batch(layout_, obs))[0]; }

Target PpcmAgent::decide(const Simulator& sim, const Task& task, std::span<const Target> feasible) {
  Observation o = observe(sim, task, feasible);
  const Vector p = action_probabilities(o);
  int action = 0;
  if (mode_ == AgentMode::kGreedy) {
    action = greedy(p);
  } else {
    std::vector<double> w(p.data(), p.data() + p.size());
    action = static_cast<int>(rng_.weighted_index(w));
  }
  if (recording_) {
    Transition t;
    t.action = action;
    t.log_prob = log_prob(p, action);
    t.value = state_value(o);
    t.obs = std::move(o);
    steps_.push_back(std::move(t));
  }
  return Target::from_action(static_cast<std::size_t>(action), layout_.nodes);
}

std::vector<Transition> PpcmAgent::take_steps() {
  std::vector<Transition> out;
  out.swap(steps_);
  return out;
}

PpoStats PpcmAgent::ppo_update(std::vector<Transition>& batch, const PpoConfig& c, Rng& rng) {
  c.validate();
  PpoStats stats;
  if (batch.empty()) return stats;
  const std::size_t n = batch.size();
  const auto mb = static_cast<std::size_t>(c.batch);
  double clipped = 0.0;
  std::size_t samples = 0;
  for (int epoch = 0; epoch < c.epochs; ++epoch) {
    const auto order = shuffled(n, rng);
    for (std::size_t start = 0; start < n; start += mb) {
      const std::size_t end = std::min(n, start + mb);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const ObsBatch obs = gather(layout_, batch, idx);
      const auto B = static_cast<double>(idx.size());

      PolicyNetwork::Cache pc;
      const Matrix logits = policy_.logits(obs, &pc);
      Matrix dlogits = Matrix::Zero(logits.rows(), logits.cols());
      double pl = 0.0;
      double ent = 0.0;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const Transition& t = batch[idx[k]];
        const auto r = static_cast<Eigen::Index>(k);
        const Vector p = nn::masked_softmax(logits.row(r).transpose(), t.obs.mask);
        const double lp = log_prob(p, t.action);
        const double ratio = std::exp(lp - t.log_prob);
        const double clipped_ratio = std::clamp(ratio, 1.0 - c.clip, 1.0 + c.clip);
        pl -= std::min(ratio * t.advantage, clipped_ratio * t.advantage);
        if (ratio != clipped_ratio) clipped += 1.0;
        const double h = entropy(p);
        ent += h;
        // d(-surrogate)/dz = -w * (onehot - p); d(-c_h H)/dz_j = c_h p_j (log p_j + H).
        const double w = surrogate_weight(ratio, t.advantage, c.clip);
        for (Eigen::Index j = 0; j < p.size(); ++j) {
          const double onehot = j == t.action ? 1.0 : 0.0;
          double g = -w * (onehot - p[j]);
          if (p[j] > 0.0) g += c.entropy_coef * p[j] * (std::log(p[j]) + h);
          dlogits(r, j) = g / B;
        }
      }
      pl /= B;
      ent /= B;

      ValueNetwork::Cache vc;
      const Vector v = value_.values(obs, &vc);
      Vector dv(v.size());
      double vl = 0.0;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const double err = v[static_cast<Eigen::Index>(k)] - batch[idx[k]].ret;
        vl += err * err;
        dv[static_cast<Eigen::Index>(k)] = c.value_coef * 2.0 * err / B;
      }
      vl /= B;

      if (!std::isfinite(pl) || !std::isfinite(vl) || !std::isfinite(ent)) {
        std::ostringstream os;
        os << "ppo_update: non-finite loss at epoch " << epoch << ", minibatch " << start / mb << " (policy " << pl
           << ", value " << vl << ", entropy " << ent << ")";
        throw std::runtime_error(os.str());
      }

      policy_.params().zero_grad();
      policy_.backward(obs, dlogits, pc);
      step_store(policy_.params(), c);
      value_.params().zero_grad();
      value_.backward(obs, dv, vc);
      step_store(value_.params(), c);

      stats.policy_loss += pl;
      stats.value_loss += vl;
      stats.entropy += ent;
      samples += idx.size();
      ++stats.minibatches;
    }
  }
  stats.policy_loss /= stats.minibatches;
  stats.value_loss /= stats.minibatches;
  stats.entropy /= stats.minibatches;
  stats.clip_fraction = clipped / static_cast<double>(samples);
  return stats;
}

CloneStats PpcmAgent::behavior_clone(std::span<const Transition> demos, const PpoConfig& c, Rng& rng) {
  c.validate();
  CloneStats stats;
  if (demos.empty()) return stats;
  const std::size_t n = demos.size();
  const auto mb = static_cast<std::size_t>(c.batch);
  double agree = 0.0;
  std::size_t samples = 0;
  for (int epoch = 0; epoch < c.epochs; ++epoch) {
    const auto order = shuffled(n, rng);
    for (std::size_t start = 0; start < n; start += mb) {
      const std::size_t end = std::min(n, start + mb);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const ObsBatch obs = gather(layout_, demos, idx);
      const auto B = static_cast<double>(idx.size());

      PolicyNetwork::Cache pc;
      const Matrix logits = policy_.logits(obs, &pc);
      Matrix dlogits(logits.rows(), logits.cols());
      double ce = 0.0;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const Transition& t = demos[idx[k]];
        const auto r = static_cast<Eigen::Index>(k);
        const Vector p = nn::masked_softmax(logits.row(r).transpose(), t.obs.mask);
        ce -= log_prob(p, t.action);
        if (greedy(p) == t.action) agree += 1.0;
        for (Eigen::Index j = 0; j < p.size(); ++j) dlogits(r, j) = (p[j] - (j == t.action ? 1.0 : 0.0)) / B;
      }
      ce /= B;

      ValueNetwork::Cache vc;
      const Vector v = value_.values(obs, &vc);
      Vector dv(v.size());
      double vl = 0.0;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const double err = v[static_cast<Eigen::Index>(k)] - demos[idx[k]].ret;
        vl += err * err;
        dv[static_cast<Eigen::Index>(k)] = c.value_coef * 2.0 * err / B;
      }
      vl /= B;
      if (!std::isfinite(ce) || !std::isfinite(vl)) {
        throw std::runtime_error("behavior_clone: non-finite loss (cross-entropy " + std::to_string(ce) + ", value " +
                                 std::to_string(vl) + ")");
      }

      policy_.params().zero_grad();
      policy_.backward(obs, dlogits, pc);
      step_store(policy_.params(), c);
      value_.params().zero_grad();
      value_.backward(obs, dv, vc);
      step_store(value_.params(), c);

      stats.cross_entropy += ce;
      stats.value_loss += vl;
      samples += idx.size();
      ++stats.minibatches;
    }
  }
  stats.cross_entropy /= stats.minibatches;
  stats.value_loss /= stats.minibatches;
  stats.agreement = agree / static_cast<double>(samples);
  return stats;
}

nlohmann::json PpcmAgent::checkpoint() const {
  nlohmann::json net = {{"embed_dim", config_.embed_dim},
                        {"cross_layers", config_.cross_layers},
                        {"deep_layers", config_.deep_layers},
                        {"head_init_scale", config_.head_init_scale},
                        {"value_model_dim", config_.value_model_dim},
                        {"value_heads", config_.value_heads},
                        {"value_hidden", config_.value_hidden}};
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"layout", {{"nodes", layout_.nodes}, {"layers", layout_.layers}}},
          {"network", net},
          {"policy", policy_.params().to_json()},
          {"value", value_.params().to_json()},
          {"normalizer", normalizer_.to_json()}};
}

void PpcmAgent::load_checkpoint(const nlohmann::json& doc) {
  if (doc.value("format", "") != kCheckpointFormat) throw std::invalid_argument("checkpoint: unknown format");
  if (doc.value("version", 0) != kCheckpointVersion) {
    throw std::invalid_argument("checkpoint: unsupported version " + std::to_string(doc.value("version", 0)));
  }
  const ObservationLayout stored{doc.at("layout").at("nodes").get<std::size_t>(),
                                 doc.at("layout").at("layers").get<std::size_t>()};
  if (!(stored == layout_)) {
    throw std::invalid_argument("checkpoint: built for " + std::to_string(stored.nodes) + " nodes / " +
                                std::to_string(stored.layers) + " layers, scenario has " +
                                std::to_string(layout_.nodes) + " / " + std::to_string(layout_.layers));
  }
  policy_.params().load_json(doc.at("policy"));
  value_.params().load_json(doc.at("value"));
  normalizer_.load_json(doc.at("normalizer"));
}

NetworkConfig network_config_from(const nlohmann::json& checkpoint) {
  const auto& n = checkpoint.at("network");
  NetworkConfig c;
  c.embed_dim = n.at("embed_dim").get<int>();
  c.cross_layers = n.at("cross_layers").get<int>();
  c.deep_layers = n.at("deep_layers").get<std::vector<int>>();
  c.head_init_scale = n.at("head_init_scale").get<double>();
  c.value_model_dim = n.at("value_model_dim").get<int>();
  c.value_heads = n.at("value_heads").get<int>();
  c.value_hidden = n.at("value_hidden").get<int>();
  return c;
}

void PpcmAgent::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  out << checkpoint().dump() << '\n';
}

void PpcmAgent::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint '" + path + "'");
  load_checkpoint(nlohmann::json::parse(in));
}


Target DemoRecorder::decide(const Simulator& sim, const Task& task, std::span<const Target> feasible) {
  Transition t;
  t.obs = agent_.observe(sim, task, feasible);
  const Target choice = expert_.decide(sim, task, feasible);
  t.action = static_cast<int>(choice.action(agent_.layout().nodes));
  // An infeasible answer is overridden by the simulator; nothing to imitate.
  if (t.obs.mask.at(static_cast<std::size_t>(t.action))) demos_.push_back(std::move(t));
  return choice;
}

}  // namespace layermig::rl
