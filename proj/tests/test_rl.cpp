#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "fixtures.hpp"
#include "gae_oracle.hpp"
#include "gradcheck.hpp"
#include "layermig/rl/agent.hpp"
#include "layermig/rl/gae.hpp"
#include "layermig/rl/observation.hpp"
#include "layermig/rl/trainer.hpp"
#include "layermig/schedulers.hpp"

using namespace layermig;
using namespace layermig::rl;

TEST_CASE("gae matches the explicit series on random sequences") {
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + rng.index(12);
    std::vector<double> r(n), v(n);
    std::vector<std::uint8_t> d(n);
    for (std::size_t t = 0; t < n; ++t) {
      r[t] = rng.uniform(-5, 5);
      v[t] = rng.uniform(-5, 5);
      d[t] = rng.bernoulli(0.15);
    }
    const double gamma = rng.uniform(0.5, 1.0), lambda = rng.uniform(0.0, 1.0), boot = rng.uniform(-3, 3);
    const GaeResult g = compute_gae(r, v, d, gamma, lambda, boot);
    const auto expected = gae_oracle::advantages(r, v, d, gamma, lambda, boot);
    for (std::size_t t = 0; t < n; ++t) {
      CHECK(std::abs(g.advantages[t] - expected[t]) < 1e-9);
      CHECK(std::abs(g.returns[t] - (g.advantages[t] + v[t])) < 1e-12);
    }
  }
}

TEST_CASE("gae degenerate cases") {
  const std::vector<double> r{1, -2, 3, 0.5};
  const std::vector<double> v{0.3, -0.1, 0.7, 0.2};
  const std::vector<std::uint8_t> d{0, 0, 0, 1};
  const GaeResult g0 = compute_gae(r, v, d, 0.9, 0.0);
  for (std::size_t t = 0; t < 4; ++t) {
    const double next = t + 1 < 4 && !d[t] ? v[t + 1] : 0.0;
    CHECK(g0.advantages[t] == doctest::Approx(r[t] + 0.9 * next - v[t]).epsilon(1e-12));
  }
  const std::vector<double> zeros(4, 0.0);
  const GaeResult g1 = compute_gae(r, zeros, d, 1.0, 1.0);
  CHECK(g1.advantages == std::vector<double>{2.5, 1.5, 3.5, 0.5});
  CHECK(discounted_returns(r, d, 1.0) == std::vector<double>{2.5, 1.5, 3.5, 0.5});
  CHECK_THROWS(compute_gae(r, std::vector<double>{1.0}, d, 0.9, 0.9));

  std::vector<double> a{1, 2, 3, 4, 5};
  normalize_advantages(a);
  const double mean = std::accumulate(a.begin(), a.end(), 0.0) / 5;
  double var = 0;
  for (double x : a) var += (x - mean) * (x - mean);
  CHECK(std::abs(mean) < 1e-12);
  CHECK(std::abs(var / 5 - 1.0) < 1e-9);
  std::vector<double> flat{2, 2, 2};
  normalize_advantages(flat);
  CHECK(flat == std::vector<double>{0, 0, 0});
}

TEST_CASE("clipped surrogate weight") {
  // Inside the trust region: plain ratio * advantage.
  CHECK(surrogate_weight(1.1, 2.0, 0.2) == doctest::Approx(2.2));
  // Clipped branch is the minimum: no gradient.
  CHECK(surrogate_weight(1.3, 1.0, 0.2) == 0.0);
  CHECK(surrogate_weight(0.7, -1.0, 0.2) == 0.0);
  // Outside, but the unclipped term is the minimum: gradient flows.
  CHECK(surrogate_weight(1.3, -1.0, 0.2) == doctest::Approx(-1.3));
  CHECK(surrogate_weight(0.7, 1.0, 0.2) == doctest::Approx(0.7));
}

TEST_CASE("observation layout and encoding") {
  const ObservationLayout l{9, 20};
  CHECK(l.dense_len() == 7 * 10 + 5);
  CHECK(l.sparse_len() == 20 * 11);
  CHECK(l.actions() == 10);

  const Scenario s = build_scenario(toy_config());
  Simulator sim(s, 3);
  // Encode every decision of an episode twice.
  class Probe final : public Policy {
   public:
    std::string name() const override { return "probe"; }
    Target decide(const Simulator& sim, const Task& task, std::span<const Target> feasible) override {
      const Observation a = encode_state(sim, task, feasible);
      const Observation b = encode_state(sim, task, feasible);
      same = same && a.dense == b.dense && a.sparse == b.sparse && a.mask == b.mask;
      const auto layout = layout_for(sim.scenario());
      sizes_ok = sizes_ok && a.dense.size() == layout.dense_len() && a.sparse.size() == layout.sparse_len() &&
                 a.mask.size() == layout.actions() && a.mask.back() == 1;
      // A node that holds every layer of the task has nothing left to fetch.
      const auto& nodes = sim.state().infra.nodes;
      for (std::size_t n = 0; n < nodes.size(); ++n) {
        bool all = true;
        for (LayerId id : sim.scenario().catalog.container_layers(task.container)) all = all && nodes[n].layers.has(id);
        if (all) {
          zero_ok = zero_ok && a.dense[n * ObservationLayout::kNodeFeatures + 3] == 0.0;
          ++full_nodes;
        }
      }
      for (auto x : a.sparse) sparse_ok = sparse_ok && (x == 0 || x == 1);
      ++calls;
      return feasible.front();
    }
    bool same = true, sizes_ok = true, zero_ok = true, sparse_ok = true;
    int calls = 0, full_nodes = 0;
  } probe;
  while (!sim.finished()) sim.step(probe);
  CHECK(probe.calls > 0);
  CHECK(probe.same);
  CHECK(probe.sizes_ok);
  CHECK(probe.full_nodes > 0);
  CHECK(probe.zero_ok);
  CHECK(probe.sparse_ok);
}

TEST_CASE("policy network: masking and near-uniform start") {
  const ObservationLayout layout{4, 10};
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    PolicyNetwork net(layout, NetworkConfig{}, rng);
    ObsBatch b = gradcheck::random_batch(layout, 1, rng);
    b.masks[0].assign(layout.actions(), 1);
    const Matrix p = net.probabilities(b);
    CHECK(std::abs(p.sum() - 1.0) < 1e-9);
    CHECK(p.maxCoeff() / p.minCoeff() < 3.0);
    b.masks[0].assign(layout.actions(), 0);
    b.masks[0].back() = 1;
    const Matrix only_cloud = net.probabilities(b);
    CHECK(only_cloud(0, layout.actions() - 1) == 1.0);
    // Forward passes are pure.
    CHECK(net.logits(b) == net.logits(b));
  }
}

TEST_CASE("masked actions are never sampled") {
  const Scenario s = build_scenario(toy_config());
  PpcmAgent agent(layout_for(s), NetworkConfig{}, 5);
  agent.reset(5);
  class Sampler final : public Policy {
   public:
    explicit Sampler(PpcmAgent& a) : agent(a) {}
    std::string name() const override { return "sampler"; }
    Target decide(const Simulator& sim, const Task& task, std::span<const Target>) override {
      if (!done) {
        const std::vector<Target> allowed{Target::edge(1), Target::cloud()};
        for (int i = 0; i < 100000; ++i) {
          const Target t = agent.decide(sim, task, allowed);
          if (t == Target::edge(1)) ++edge;
          else if (t == Target::cloud()) ++cloud;
          else ++bad;
        }
        done = true;
      }
      return Target::cloud();
    }
    PpcmAgent& agent;
    bool done = false;
    int edge = 0, cloud = 0, bad = 0;
  } sampler(agent);
  Simulator sim(s, 1);
  while (!sampler.done) sim.step(sampler);
  CHECK(sampler.bad == 0);
  CHECK(sampler.edge > 0);
  CHECK(sampler.cloud > 0);
}

TEST_CASE("value network is invariant to node order") {
  const ObservationLayout layout{4, 6};
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    ValueNetwork net(layout, NetworkConfig{}, rng);
    const ObsBatch b = gradcheck::random_batch(layout, 3, rng);
    ObsBatch p = b;
    const auto f = static_cast<Eigen::Index>(ObservationLayout::kNodeFeatures);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      p.dense.middleCols(static_cast<Eigen::Index>(i) * f, f) = b.dense.middleCols(static_cast<Eigen::Index>(perm[i]) * f, f);
      p.sparse[i] = b.sparse[perm[i]];
      for (std::size_t r = 0; r < b.size(); ++r) p.masks[r][i] = b.masks[r][perm[i]];
    }
    const Vector v1 = net.values(b);
    const Vector v2 = net.values(p);
    CHECK(v1.allFinite());
    CHECK((v1 - v2).cwiseAbs().maxCoeff() < 1e-9);
  }
}

namespace {

// One fixed observation with two actions (one edge node plus the cloud).
Observation bandit_obs() {
  const ObservationLayout layout{1, 3};
  Observation o;
  Rng rng(1);
  for (std::size_t i = 0; i < layout.dense_len(); ++i) o.dense.push_back(rng.normal());
  o.sparse.assign(layout.sparse_len(), 0);
  o.sparse[1] = 1;
  o.mask = {1, 1};
  return o;
}

}  // namespace

TEST_CASE("ppo solves a two-armed bandit") {
  PpcmAgent agent(ObservationLayout{1, 3}, NetworkConfig{}, 11);
  const Observation obs = bandit_obs();
  PpoConfig cfg;
  cfg.batch = 32;
  cfg.epochs = 4;
  Rng rng(3);
  for (int update = 0; update < 200; ++update) {
    std::vector<Transition> batch;
    const Vector p = agent.action_probabilities(obs);
    const double v = agent.state_value(obs);
    for (int k = 0; k < 32; ++k) {
      Transition t;
      t.obs = obs;
      t.action = rng.uniform() < p[0] ? 0 : 1;
      t.reward = t.action == 0 ? 1.0 : -1.0;
      t.done = 1;
      t.log_prob = log_prob(p, t.action);
      t.value = v;
      batch.push_back(t);
    }
    prepare_advantages(batch, cfg);
    agent.ppo_update(batch, cfg, rng);
  }
  CHECK(agent.action_probabilities(obs)[0] > 0.95);
}

TEST_CASE("ratio-one update: surrogate loss is minus the mean normalized advantage") {
  PpcmAgent agent(ObservationLayout{1, 3}, NetworkConfig{}, 4);
  const Observation obs = bandit_obs();
  const Vector p = agent.action_probabilities(obs);
  Rng rng(2);
  std::vector<Transition> batch;
  for (int k = 0; k < 16; ++k) {
    Transition t;
    t.obs = obs;
    t.action = k % 2;
    t.reward = rng.uniform(-1, 1);
    t.done = 1;
    t.log_prob = log_prob(p, t.action);
    t.value = agent.state_value(obs);
    batch.push_back(t);
  }
  PpoConfig cfg;
  cfg.epochs = 1;
  cfg.batch = 16;
  prepare_advantages(batch, cfg);
  double mean_adv = 0;
  for (const auto& t : batch) mean_adv += t.advantage;
  CHECK(std::abs(mean_adv / 16) < 1e-12);
  const PpoStats s = agent.ppo_update(batch, cfg, rng);
  CHECK(std::abs(s.policy_loss) < 1e-9);
  CHECK(s.clip_fraction == 0.0);
}

TEST_CASE("demonstration schedule") {
  CHECK(demo_fraction(0, 50) == 1.0);
  CHECK(demo_fraction(49, 50) <= 1.0 / 50 + 1e-15);
  CHECK(demo_fraction(50, 50) == 0.0);
  CHECK(demo_fraction(0, 0) == 0.0);
  for (int i = 1; i < 50; ++i) CHECK(demo_fraction(i, 50) < demo_fraction(i - 1, 50));
  const auto e = evaluation_seeds(1, 5);
  for (int i = 0; i < 300; ++i) CHECK(std::find(e.begin(), e.end(), training_seed(1, i)) == e.end());
}

TEST_CASE("alpha = 0 leaves parameters unchanged") {
  const Scenario s = build_scenario(toy_config());
  PpcmAgent agent(layout_for(s), NetworkConfig{}, 1);
  const auto before = agent.checkpoint();
  DepSoftPolicy expert;
  TrainConfig cfg;
  expert_pretrain(s, agent, expert, 0, cfg);
  CHECK(agent.checkpoint() == before);
}

TEST_CASE("recording demonstrations does not change the episode") {
  const Scenario s = build_scenario(toy_config());
  PpcmAgent agent(layout_for(s), NetworkConfig{}, 1);
  DepSoftPolicy plain;
  DepSoftPolicy wrapped;
  DemoRecorder recorder(wrapped, agent);
  std::vector<DecisionRecord> d1, d2;
  const EpisodeMetrics a = run_episode(s, plain, 9, &d1);
  const EpisodeMetrics b = run_episode(s, recorder, 9, &d2);
  std::ostringstream o1, o2;
  write_task_rows(o1, 0, a);
  write_task_rows(o2, 0, b);
  CHECK(o1.str() == o2.str());
  CHECK(recorder.demos().size() == d2.size());
  // Reward identity carries through to the decision records.
  double sum = 0;
  for (const auto& d : d2) sum += d.reward;
  CHECK(std::abs(sum + b.charged.total_s) < 1e-6);
}

TEST_CASE("behaviour cloning reaches > 90% agreement with a deterministic expert") {
  SimConfig cfg = toy_config();
  cfg.num_nodes = 2;
  const Scenario s = build_scenario(cfg);
  PpcmAgent agent(layout_for(s), NetworkConfig{}, 3);
  DownPolicy expert;
  PpoConfig ppo;
  ppo.epochs = 1;
  ppo.batch = 64;
  Rng rng(1);
  std::vector<Transition> train;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    DemoRecorder rec(expert, agent);
    run_episode(s, rec, seed, nullptr);
    for (auto& t : rec.demos()) train.push_back(std::move(t));
  }
  for (int pass = 0; pass < 60; ++pass) agent.behavior_clone(train, ppo, rng);

  // Held-out states: fresh seeds, compare greedy actions with the expert's.
  agent.normalizer().set_frozen(true);
  int agree = 0, total = 0;
  for (std::uint64_t seed = 101; seed <= 110; ++seed) {
    DemoRecorder rec(expert, agent);
    run_episode(s, rec, seed, nullptr);
    for (const auto& t : rec.demos()) {
      const Vector p = agent.action_probabilities(t.obs);
      Eigen::Index best;
      p.maxCoeff(&best);
      agree += best == t.action;
      ++total;
    }
  }
  CAPTURE(total);
  CHECK(static_cast<double>(agree) / total > 0.9);
}

TEST_CASE("checkpoints round trip and training is deterministic") {
  SimConfig sc = toy_config();
  sc.task_budget = 20;
  const Scenario s = build_scenario(sc);
  TrainConfig cfg;
  cfg.episodes = 4;
  cfg.ppo.expert_episodes = 2;
  cfg.eval_every = 2;
  cfg.eval_episodes = 2;
  PpcmAgent a(layout_for(s), cfg.network, cfg.seed);
  PpcmAgent b(layout_for(s), cfg.network, cfg.seed);
  const TrainResult ra = train(s, cfg, a);
  const TrainResult rb = train(s, cfg, b);
  std::ostringstream la, lb;
  write_training_log(la, ra.log);
  write_training_log(lb, rb.log);
  CHECK(la.str() == lb.str());
  CHECK(a.checkpoint() == b.checkpoint());
  CHECK(ra.log.size() == 4);
  CHECK_FALSE(ra.diverged);

  PpcmAgent c(layout_for(s), cfg.network, 99);
  c.load_checkpoint(a.checkpoint());
  CHECK(c.checkpoint() == a.checkpoint());
  const std::vector<std::uint64_t> seeds{7, 8};
  CHECK(evaluate_agent(s, a, seeds) == evaluate_agent(s, c, seeds));
  CHECK(network_config_from(a.checkpoint()).deep_layers == cfg.network.deep_layers);

  auto bad = a.checkpoint();
  bad["layout"]["nodes"] = 7;
  CHECK_THROWS(c.load_checkpoint(bad));
}

TEST_CASE("ppo config validation") {
  PpoConfig c;
  CHECK_NOTHROW(c.validate());
  c.gamma = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = PpoConfig{};
  c.clip = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = PpoConfig{};
  CHECK(c.lr == 0.0005);
  CHECK(c.epochs == 10);
  CHECK(c.batch == 512);
  CHECK(c.gamma == 0.99);
  CHECK(c.lambda == 0.95);
  CHECK(c.clip == 0.2);
  CHECK(c.entropy_coef == 0.01);
  PpoConfig d;
  merge_json(to_json(c), d);
  CHECK(to_json(d) == to_json(c));
}
