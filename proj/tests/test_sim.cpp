#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "fixtures.hpp"
#include "layermig/constraints.hpp"
#include "layermig/schedulers.hpp"
#include "layermig/sim.hpp"

using namespace layermig;
using fixtures::NodeSpec;

namespace {

constexpr double kTol = 1e-9;

// Two nodes side by side on a 2x1 grid; both cells are ring 0 (60 Mbps).
Scenario two_nodes(double cpu_ghz = 128.0, int radius = 1, double storage_gb = 1.0) {
  const auto cat = fixtures::catalog({50, 25, 40}, {{0, 1}, {2}});
  return fixtures::scenario(fixtures::flat_config(), cat,
                            {{.position = {0, 0}, .cpu_ghz = cpu_ghz, .storage_gb = storage_gb, .radius = radius},
                             {.position = {1, 0}, .cpu_ghz = cpu_ghz, .storage_gb = storage_gb, .radius = radius}},
                            Grid{2, 1});
}

bool contains(const std::vector<TaskId>& v, TaskId id) { return std::find(v.begin(), v.end(), id) != v.end(); }

}  // namespace

TEST_CASE("hand-walked episode on two nodes") {
  const Scenario s = two_nodes();
  Simulator sim(s, 1, {fixtures::user(0, {{0, 0}})});
  sim.set_arrivals_enabled(false);
  fixtures::FixedPolicy policy(Target::edge(0));

  const TaskId a = sim.inject_task(0, 0, 1.0, 100.0, 1000.0, 2.0);
  auto ev = sim.step(policy);  // slice 0
  CHECK(ev.arrivals == std::vector<TaskId>{a});
  CHECK(ev.decisions == 1);
  REQUIRE(sim.decisions().size() == 1);
  // New task: no movement; layers 50 + 25 MB at 1000 Mbps finish at 0.6 s.
  // S = 0.6, P = max(8/60, 0.6) = 0.6, reward so far -(S + P).
  CHECK(std::abs(sim.decisions()[0].reward - (-1.2)) < kTol);
  CHECK(sim.state().tasks[a].assignment == Target::edge(0));
  CHECK(sim.state().infra.nodes[0].layers.queued(0));
  CHECK(ev.completions.empty());

  ev = sim.step(policy);  // slice 1: downloads finish, task completes
  CHECK(sim.state().infra.nodes[0].layers.has(0));
  CHECK(sim.state().infra.nodes[0].layers.has(1));
  REQUIRE(ev.completions.size() == 1);
  const DelayBreakdown& d = ev.completions[0].second;
  CHECK(std::abs(d.migration_s - 0.6) < kTol);
  CHECK(std::abs(d.computation_s - 0.0625) < kTol);  // 8e9 cycles / 128 GHz
  CHECK(std::abs(d.deployment_s - 0.6) < kTol);
  CHECK(std::abs(d.backhaul_s - 0.016) < kTol);  // 8 Mb / 500 Mbps, 0 hops
  CHECK(std::abs(d.total_s - 1.2785) < kTol);
  CHECK(std::abs(sim.decisions()[0].reward - (-1.2785)) < kTol);

  // Same image again: layers are cached, so only the access delay remains.
  const TaskId b = sim.inject_task(0, 0, 1.0, 100.0, 1000.0, 2.0);
  sim.step(policy);
  ev = sim.step(policy);
  REQUIRE(ev.completions.size() == 1);
  CHECK(ev.completions[0].first == b);
  CHECK(ev.completions[0].second.migration_s == 0.0);
  CHECK(std::abs(ev.completions[0].second.deployment_s - 8.0 / 60.0) < kTol);
  CHECK(sim.finished());

  const EpisodeMetrics m = collect_metrics(sim);
  CHECK(m.completions == 2);
  CHECK(m.arrivals == 2);
  CHECK(std::abs(m.totals.total_s - (1.2785 + 8.0 / 60.0 + 0.0625 + 0.016)) < kTol);
}

TEST_CASE("computation waits behind the node's running load") {
  const Scenario s = two_nodes();
  Simulator sim(s, 1, {fixtures::user(0, {{0, 0}})});
  sim.set_arrivals_enabled(false);
  fixtures::FixedPolicy policy(Target::edge(0));
  const TaskId a = sim.inject_task(0, 0, 1.0, 1.0, 1000.0, 2.0);
  const TaskId b = sim.inject_task(0, 0, 1.0, 1.0, 1000.0, 2.0);
  sim.step(policy);
  CHECK(std::abs(sim.state().tasks[a].computation_s - 0.0625) < kTol);
  CHECK(std::abs(sim.state().tasks[b].computation_s - 0.125) < kTol);  // 8e9 cycles already running
}

TEST_CASE("passive migration: trigger one slice, decide the next") {
  // 10 GHz nodes: 5 MB at 10000 cycles/bit runs 40 s = 4 slices.
  const Scenario s = two_nodes(10.0, 0);
  Simulator sim(s, 1, {fixtures::user(0, {{0, 0}, {1, 0}})});
  sim.set_arrivals_enabled(false);
  fixtures::FirstPolicy policy;
  const TaskId id = sim.inject_task(0, 0, 5.0, 100.0, 10000.0, 2.0);

  auto ev = sim.step(policy);  // slice 0: placed on node 1 (index 0)
  CHECK(sim.state().tasks[id].assignment == Target::edge(0));
  CHECK(sim.state().tasks[id].finish_slice == 4);

  ev = sim.step(policy);  // slice 1: user moved out of coverage
  CHECK(ev.passive_migrations == std::vector<TaskId>{id});
  CHECK(ev.proactive_migrations.empty());
  CHECK(ev.decisions == 0);  // re-queued at t_u = 1, decided from slice 2
  CHECK_FALSE(sim.state().tasks[id].assignment.has_value());
  CHECK(sim.state().infra.nodes[0].running.empty());
  CHECK(sim.state().tasks[id].passive_count == 1);

  ev = sim.step(policy);  // slice 2
  REQUIRE(ev.decisions == 1);
  const DecisionRecord& rec = sim.decisions().back();
  CHECK(rec.reason == PendingReason::kPassive);
  CHECK(rec.target == Target::edge(1));
  // M = 100*8/1000 + 2*1 = 2.8, D = 0.6, wait 1 slice -> S = 3.8;
  // P = max(5*8/60, 0.6).
  CHECK(std::abs(rec.reward - (-(3.8 + 40.0 / 60.0))) < kTol);
  CHECK(sim.state().tasks[id].finish_slice == 6);

  while (!sim.finished()) sim.step(policy);
  const EpisodeMetrics m = collect_metrics(sim);
  CHECK(m.passive_migrations == 1);
  CHECK(m.proactive_migrations == 0);
  REQUIRE(m.tasks.size() == 1);
  CHECK(m.tasks[0].passive_count == 1);
  CHECK(m.tasks[0].node == "2");
}

TEST_CASE("no migrations fire while every condition holds") {
  const Scenario s = two_nodes(10.0, 1);
  Simulator sim(s, 1, {fixtures::user(0, {{0, 0}, {1, 0}, {0, 0}})});
  sim.set_arrivals_enabled(false);
  fixtures::FirstPolicy policy;
  sim.inject_task(0, 0, 5.0, 100.0, 10000.0, 2.0);
  while (!sim.finished()) {
    const auto ev = sim.step(policy);
    CHECK(ev.passive_migrations.empty());
    CHECK(ev.proactive_migrations.empty());
  }
}

TEST_CASE("proactive migration when a node exceeds its CPU ceiling") {
  const Scenario s = two_nodes(10.0, 1);
  Simulator sim(s, 1, {fixtures::user(0, {{0, 0}})});
  sim.set_arrivals_enabled(false);
  fixtures::FirstPolicy policy;
  const TaskId a = sim.inject_task(0, 0, 5.0, 10.0, 10000.0, 3.0);
  const TaskId b = sim.inject_task(0, 1, 5.0, 10.0, 10000.0, 3.0);
  sim.step(policy);
  REQUIRE(sim.state().tasks[a].assignment == Target::edge(0));
  REQUIRE(sim.state().tasks[b].assignment == Target::edge(0));

  // 3 + 3 = 6 GHz is within 0.8 * 10; 3 + 5.5 is not.
  auto ev = sim.step(policy);
  CHECK(ev.proactive_migrations.empty());
  sim.set_task_cpu(a, 5.5);
  CHECK_FALSE(node_within_limits(sim.state().infra.nodes[0], s.catalog, s.config).feasible());
  ev = sim.step(policy);
  // The most recently placed task leaves first, which is enough here.
  CHECK(ev.proactive_migrations == std::vector<TaskId>{b});
  CHECK(ev.passive_migrations.empty());
  CHECK(sim.state().tasks[b].proactive_count == 1);
  CHECK(sim.state().tasks[b].current_cpu_ghz == 3.0);
  CHECK(node_within_limits(sim.state().infra.nodes[0], s.catalog, s.config).feasible());
}

TEST_CASE("infeasible answers fall back to the cloud and are counted") {
  const Scenario s = two_nodes();
  Simulator sim(s, 1, {fixtures::user(0, {{0, 0}})});
  sim.set_arrivals_enabled(false);
  fixtures::StubbornPolicy policy(Target::edge(7));
  const TaskId id = sim.inject_task(0, 0, 1.0, 1.0, 1000.0, 2.0);
  sim.step(policy);
  CHECK(sim.state().tasks[id].assignment == Target::cloud());
  CHECK(sim.cloud_fallbacks() == 1);
  CHECK(sim.decisions().back().fallback);
}

TEST_CASE("cloud placement uses cloud bandwidth and hop distance") {
  const Scenario s = two_nodes();
  Simulator sim(s, 1, {fixtures::user(0, {{0, 0}})});
  sim.set_arrivals_enabled(false);
  fixtures::FixedPolicy policy(Target::cloud());
  sim.inject_task(0, 0, 1.0, 1.0, 1000.0, 2.0);
  sim.step(policy);
  const auto ev = sim.step(policy);
  REQUIRE(ev.completions.size() == 1);
  const DelayBreakdown& d = ev.completions[0].second;
  CHECK(std::abs(d.migration_s - 75.0 * 8 / 100.0) < kTol);  // 100 Mbps cloud registry
  CHECK(std::abs(d.backhaul_s - (8.0 / 500.0 + 0.02 * 6)) < kTol);
}

TEST_CASE("LRU eviction makes room for new layers") {
  // 0.1 GB node: 80 MB ceiling. Image 0 = 75 MB, image 1 = 40 MB.
  const Scenario s = two_nodes(128.0, 1, 0.1);
  Simulator sim(s, 1, {fixtures::user(0, {{0, 0}})});
  sim.set_arrivals_enabled(false);
  fixtures::FixedPolicy policy(Target::edge(0));
  sim.inject_task(0, 0, 1.0, 1.0, 1000.0, 2.0);
  sim.step(policy);
  sim.step(policy);
  const LayerStore& store = sim.state().infra.nodes[0].layers;
  CHECK(store.has(0));
  CHECK(store.has(1));
  const TaskId b = sim.inject_task(0, 1, 1.0, 1.0, 1000.0, 2.0);
  sim.step(policy);
  CHECK(sim.state().tasks[b].assignment == Target::edge(0));
  // 75 + 40 > 80: the older unpinned layers go, oldest first (ties by id),
  // until the new 40 MB fit.
  CHECK_FALSE(store.has(0));
  CHECK(store.has(1));
  CHECK(store.queued(2));
  CHECK(store.occupancy_mb() <= 80.0 + kTol);
}

TEST_CASE("reward identity and determinism on the default scenario") {
  const Scenario s = build_scenario(SimConfig{});
  MonkeyPolicy p1;
  MonkeyPolicy p2;
  std::vector<DecisionRecord> d1, d2;
  const EpisodeMetrics a = run_episode(s, p1, 5, &d1);
  const EpisodeMetrics b = run_episode(s, p2, 5, &d2);
  std::ostringstream o1, o2;
  write_task_rows(o1, 0, a);
  write_task_rows(o2, 0, b);
  CHECK(o1.str() == o2.str());
  CHECK(a.completions == 200);
  double rewards = 0.0;
  for (const auto& d : d1) rewards += d.reward;
  CHECK(std::abs(rewards + a.charged.total_s) < 1e-6);
  CHECK(std::abs(a.reward_sum - rewards) < 1e-6);
  CHECK(a.decisions == static_cast<int>(d1.size()));
}

TEST_CASE("task csv rows follow the header") {
  const Scenario s = build_scenario(toy_config());
  DepSoftPolicy p;
  const EpisodeMetrics m = run_episode(s, p, 2);
  std::ostringstream os;
  write_task_rows(os, 3, m);
  std::istringstream in(os.str());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 10);
    CHECK(line.rfind("3,2,", 0) == 0);
  }
  CHECK(rows == m.completions);
  CHECK(std::string(kTaskCsvHeader).find("total_s") != std::string::npos);
}

namespace {

// Config that makes every limit bind: tight storage, few container slots,
// low CPU headroom and fast users.
SimConfig stressed(std::uint64_t seed) {
  SimConfig c;
  c.rng_seed = seed;
  c.num_nodes = 4 + static_cast<int>(seed % 6);
  c.node_storage_gb = {0.05, 0.3};
  c.max_containers = 3;
  c.node_cpu_ghz = 40.0;
  c.cpu_jitter = 0.5;
  c.poisson_rate = 3.0;
  c.task_budget = 100000;
  c.max_slices = 200;
  c.user_speed_cells = 0.8;
  c.num_users = 30;
  c.kappa = {2000.0, 40000.0};
  c.storage_check = seed % 2 ? StorageCheck::kOccupancy : StorageCheck::kMissingBytes;
  return c;
}

}  // namespace

TEST_CASE("fuzz: 50 seeds x 200 slices never break caps, storage or single assignment") {
  int proactive = 0, passive = 0, cloud = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const Scenario s = build_scenario(stressed(seed));
    MonkeyPolicy monkey;
    DepSoftPolicy dep;
    Policy& policy = seed % 2 ? static_cast<Policy&>(monkey) : static_cast<Policy&>(dep);
    policy.reset(seed);
    Simulator sim(s, seed);
    for (int t = 0; t < 200; ++t) {
      const auto ev = sim.step(policy);
      proactive += static_cast<int>(ev.proactive_migrations.size());
      passive += static_cast<int>(ev.passive_migrations.size());
      const SystemState& st = sim.state();
      std::vector<TaskId> placed;
      std::vector<std::pair<TaskId, Target>> asg;
      for (const Task& task : st.tasks) {
        if (task.assignment) placed.push_back(task.id);
      }
      for (std::size_t i = 0; i < st.infra.nodes.size(); ++i) {
        const EdgeNode& n = st.infra.nodes[i];
        CHECK(static_cast<int>(n.running.size()) <= n.max_containers);
        CHECK(n.layers.occupancy_mb() <= n.storage_mb() + 1e-9);
        for (TaskId id : n.running) asg.emplace_back(id, Target::edge(i));
      }
      for (TaskId id : st.infra.cloud.running) asg.emplace_back(id, Target::cloud());
      cloud += static_cast<int>(st.infra.cloud.running.size());
      CHECK(validate_assignment(placed, asg).empty());
      CHECK(sim.check_invariants().empty());
      // Every migrated task went back to the queue.
      for (TaskId id : ev.proactive_migrations) CHECK(contains({st.pending.begin(), st.pending.end()}, id));
      for (TaskId id : ev.passive_migrations) CHECK(contains({st.pending.begin(), st.pending.end()}, id));
    }
  }
  // The stress settings really exercise both triggers and the cloud.
  CHECK(proactive > 0);
  CHECK(passive > 0);
  CHECK(cloud > 0);
}

TEST_CASE("fuzz: triggers fire iff their conditions hold") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Scenario s = build_scenario(stressed(seed));
    MonkeyPolicy policy;
    policy.reset(seed);
    Simulator sim(s, seed);
    for (int t = 0; t < 100; ++t) {
      // Snapshot which running tasks are out of coverage at the coming slice.
      const SystemState before = sim.state();
      const auto ev = sim.step(policy);
      for (std::size_t i = 0; i < before.infra.nodes.size(); ++i) {
        const EdgeNode& n = before.infra.nodes[i];
        for (TaskId id : n.running) {
          const Task& task = before.tasks[id];
          const GridPos cell = before.users[task.user].at(before.slice);
          const bool left = !n.covers(cell);
          const bool was_passive = contains(ev.passive_migrations, id);
          const bool was_proactive = contains(ev.proactive_migrations, id);
          // Passive iff the user left (unless proactive got there first).
          if (!was_proactive) CHECK(was_passive == left);
          if (was_proactive) CHECK_FALSE(was_passive);
        }
      }
      // After the scan, no node with running tasks is over its limits.
      for (const EdgeNode& n : sim.state().infra.nodes) {
        if (!ev.proactive_migrations.empty()) CHECK(node_within_limits(n, s.catalog, s.config).feasible());
      }
    }
  }
}
