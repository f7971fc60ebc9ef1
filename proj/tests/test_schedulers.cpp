#include <doctest.h>

#include <algorithm>
#include <array>

#include "fixtures.hpp"
#include "layermig/policy_factory.hpp"
#include "layermig/metaheuristics.hpp"
#include "layermig/schedulers.hpp"

using namespace layermig;

TEST_CASE("monkey picks uniformly and reproducibly") {
  const std::vector<Target> one{Target::edge(4)};
  Rng r0(1);
  CHECK(monkey(one, r0) == Target::edge(4));

  const std::vector<Target> three{Target::edge(0), Target::edge(1), Target::edge(2)};
  Rng rng(42);
  std::array<int, 3> counts{};
  for (int i = 0; i < 10000; ++i) ++counts[monkey(three, rng).node()];
  for (int c : counts) CHECK(std::abs(c / 10000.0 - 1.0 / 3.0) < 0.05);

  Rng a(9), b(9);
  for (int i = 0; i < 50; ++i) CHECK(monkey(three, a) == monkey(three, b));

  // The cloud is only drawn when nothing at the edge is feasible.
  const std::vector<Target> with_cloud{Target::edge(0), Target::cloud()};
  for (int i = 0; i < 100; ++i) CHECK(monkey(edge_candidates(with_cloud), rng) == Target::edge(0));
  const std::vector<Target> cloud_only{Target::cloud()};
  CHECK(monkey(edge_candidates(cloud_only), rng) == Target::cloud());
}

TEST_CASE("kube scores whole images") {
  const auto cat = fixtures::catalog({30, 30}, {{0, 1}});
  LayerStore s(2);
  CHECK(kube_score(s, 0, cat) == 0.0);
  s.add(0, 30);
  CHECK(kube_score(s, 0, cat) == 0.0);  // half the layers: still nothing
  s.add(1, 30);
  CHECK(kube_score(s, 0, cat) == 1.0);
}

TEST_CASE("dep_soft scores local layer bytes") {
  const auto cat = fixtures::catalog({30, 30}, {{0, 1}});
  LayerStore s(2);
  CHECK(dep_soft_score(s, 0, cat) == 0.0);
  s.add(0, 30);
  CHECK(dep_soft_score(s, 0, cat) == 0.5);
  s.add(1, 30);
  CHECK(dep_soft_score(s, 0, cat) == 1.0);
  // Queued layers are not local yet.
  LayerStore q(2);
  q.enqueue(0, 30);
  CHECK(dep_soft_score(q, 0, cat) == 0.0);
}

TEST_CASE("dep_soft selection honours the threshold") {
  const std::vector<NodeScore> scores{{Target::edge(0), 0.5}, {Target::edge(1), 1.0}, {Target::edge(2), 0.85},
                                      {Target::edge(3), 1.0}};
  Rng rng(3);
  std::array<int, 4> hits{};
  for (int i = 0; i < 2000; ++i) ++hits[dep_soft_select(scores, 1.0, rng).node()];
  CHECK(hits[0] == 0);
  CHECK(hits[2] == 0);
  CHECK(hits[1] > 0);
  CHECK(hits[3] > 0);
  hits = {};
  for (int i = 0; i < 3000; ++i) ++hits[dep_soft_select(scores, 0.8, rng).node()];
  CHECK(hits[0] == 0);
  CHECK(hits[2] > 0);

  // Nothing scores: argmax by lowest id.
  const std::vector<NodeScore> zeros{{Target::edge(2), 0.0}, {Target::edge(1), 0.0}};
  CHECK(dep_soft_select(zeros, 0.8, rng) == Target::edge(1));
}

TEST_CASE("down scores negated download time") {
  const auto cat = fixtures::catalog({50, 20}, {{0}, {1}});
  LayerStore s(2);
  CHECK(std::abs(down_score(s, 1000, 0, cat) - (-0.4)) < 1e-12);
  s.add(0, 50);
  CHECK(down_score(s, 1000, 0, cat) == 0.0);
  LayerStore busy(2);
  busy.enqueue(1, 20);
  CHECK(down_score(busy, 1000, 0, cat) < down_score(LayerStore(2), 1000, 0, cat));
}

TEST_CASE("argmax ties go to the lowest node, cloud last") {
  const std::vector<NodeScore> s{{Target::cloud(), 1.0}, {Target::edge(3), 1.0}, {Target::edge(1), 1.0}};
  CHECK(argmax(s) == Target::edge(1));
  const std::vector<NodeScore> c{{Target::cloud(), 2.0}, {Target::edge(0), 1.0}};
  CHECK(argmax(c) == Target::cloud());
}

TEST_CASE("kube never exceeds dep_soft") {
  CatalogConfig cc;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const LayerCatalog cat = generate_catalog(cc, seed);
    Rng rng(seed);
    LayerStore s(cat.num_layers());
    for (LayerId l = 0; l < cat.num_layers(); ++l) {
      if (rng.bernoulli(0.4)) s.add(l, cat.layer_size_mb(l));
    }
    for (ContainerId c = 0; c < cat.num_containers(); ++c) CHECK(kube_score(s, c, cat) <= dep_soft_score(s, c, cat));
  }
}

namespace {

// Forwards to another policy and records whether every answer was feasible.
class Checked final : public Policy {
 public:
  explicit Checked(Policy& inner) : inner_(inner) {}
  std::string name() const override { return inner_.name(); }
  void reset(std::uint64_t seed) override { inner_.reset(seed); }
  void begin_slice(const Simulator& sim, std::span<const TaskId> w) override { inner_.begin_slice(sim, w); }
  Target decide(const Simulator& sim, const Task& task, std::span<const Target> feasible) override {
    const Target t = inner_.decide(sim, task, feasible);
    ++answers;
    if (std::find(feasible.begin(), feasible.end(), t) == feasible.end()) ++bad;
    return t;
  }
  Policy& inner_;
  int answers = 0;
  int bad = 0;
};

}  // namespace

TEST_CASE("every baseline answers from the feasible set") {
  SimConfig cfg = toy_config();
  cfg.max_containers = 2;
  cfg.node_storage_gb = {0.1, 0.2};
  cfg.task_budget = 80;
  const Scenario s = build_scenario(cfg);
  BaselineOptions bc;
  bc.meta.budget = 40;
  for (const std::string& name : baseline_names()) {
    auto inner = make_baseline(name, bc);
    Checked policy(*inner);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      Simulator sim(s, seed);
      policy.reset(seed);
      while (!sim.finished()) sim.step(policy);
      CHECK(sim.cloud_fallbacks() == 0);
    }
    INFO(name);
    CHECK(policy.answers > 0);
    CHECK(policy.bad == 0);
  }
}

namespace {

// Captures the first decision window it sees.
class Capture final : public Policy {
 public:
  std::string name() const override { return "capture"; }
  void begin_slice(const Simulator& sim, std::span<const TaskId> w) override {
    if (!problem) problem = make_window(sim, w);
  }
  Target decide(const Simulator&, const Task&, std::span<const Target> f) override { return f.back(); }
  std::optional<WindowProblem> problem;
};

// 3 tasks over 4 edge nodes (64 assignments), with randomized hardware,
// caches and container caps so the optimum moves around.
struct SmallWindow {
  Scenario scenario;
  WindowProblem problem;
};

std::unique_ptr<SmallWindow> small_window(std::uint64_t seed) {
  Rng rng(seed);
  const auto cat = fixtures::catalog({40, 25, 60, 10, 35}, {{0, 1}, {1, 2}, {3, 4}});
  std::vector<fixtures::NodeSpec> nodes;
  for (int i = 0; i < 4; ++i) {
    nodes.push_back({.position = {i, 0},
                     .cpu_ghz = rng.uniform(20, 128),
                     .bandwidth_mbps = rng.uniform(100, 1000),
                     .storage_gb = 1.0,
                     .max_containers = rng.uniform_int(1, 3),
                     .radius = 3});
  }
  auto w = std::make_unique<SmallWindow>();
  w->scenario = fixtures::scenario(fixtures::flat_config(), cat, nodes, Grid{4, 1});
  for (auto& n : w->scenario.initial.nodes) {
    for (LayerId l = 0; l < 5; ++l) {
      if (rng.bernoulli(0.4)) n.layers.add(l, cat.layer_size_mb(l));
    }
  }
  Simulator sim(w->scenario, seed, {fixtures::user(0, {{rng.uniform_int(0, 3), 0}})});
  sim.set_arrivals_enabled(false);
  for (ContainerId c = 0; c < 3; ++c) {
    sim.inject_task(0, c, rng.uniform(0.1, 5), rng.uniform(1, 100), rng.uniform(200, 10000), rng.uniform(1, 4));
  }
  Capture cap;
  sim.step(cap);
  w->problem = std::move(*cap.problem);
  for (auto& d : w->problem.domains) d.erase(std::remove(d.begin(), d.end(), Target::cloud()), d.end());
  return w;
}

}  // namespace

TEST_CASE("metaheuristics with a budget covering the space find the brute-force optimum") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto w = small_window(seed);
    REQUIRE(w->problem.space_size() == 64.0);
    const MetaResult exact = brute_force(w->problem);
    CHECK(exact.evaluations == 64);
    for (MetaVariant v : {MetaVariant::kGA, MetaVariant::kDE, MetaVariant::kPSO}) {
      MetaConfig cfg;
      cfg.budget = 64;
      Rng rng(seed * 7 + 1);
      const MetaResult r = metaheuristic_select(w->problem, v, cfg, rng);
      INFO(to_string(v), " seed ", seed);
      CHECK(r.fitness == exact.fitness);
      CHECK(r.assignment == exact.assignment);
      CHECK(r.fitness >= r.initial_best);
    }
  }
}

TEST_CASE("metaheuristics are anytime and deterministic") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto w = small_window(seed);
    for (MetaVariant v : {MetaVariant::kGA, MetaVariant::kDE, MetaVariant::kPSO}) {
      double prev = -1e300;
      for (int budget : {1, 5, 10, 20, 30, 45, 64}) {
        MetaConfig cfg;
        cfg.budget = budget;
        cfg.population = 8;
        Rng rng(seed);
        const MetaResult r = metaheuristic_select(w->problem, v, cfg, rng);
        CHECK(r.evaluations <= budget);
        CHECK(r.fitness >= prev);
        CHECK(r.fitness >= r.initial_best);
        prev = r.fitness;
        Rng again(seed);
        CHECK(metaheuristic_select(w->problem, v, cfg, again).genes == r.genes);
      }
    }
  }
}

TEST_CASE("metaheuristic edge cases") {
  WindowProblem empty;
  Rng rng(1);
  CHECK(metaheuristic_select(empty, MetaVariant::kGA, MetaConfig{}, rng).assignment.empty());

  // One task: exhaustive over its feasible set.
  auto w = small_window(3);
  w->problem.tasks.resize(1);
  w->problem.contexts.resize(1);
  w->problem.domains.resize(1);
  const MetaResult exact = brute_force(w->problem);
  for (MetaVariant v : {MetaVariant::kGA, MetaVariant::kDE, MetaVariant::kPSO}) {
    MetaConfig cfg;
    cfg.budget = 4;
    CHECK(metaheuristic_select(w->problem, v, cfg, rng).assignment == exact.assignment);
  }
}
