#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "layermig/constraints.hpp"
#include "layermig/delay.hpp"
#include "layermig/domain.hpp"
#include "layermig/random.hpp"
#include "layermig/scenario.hpp"

namespace layermig {

// Link conditions redrawn at the start of every slice.
struct SliceConditions {
  double sigma_migr = 0.0;     // s/hop
  double eta_migr_mbps = 0.0;  // node-to-node transfer rate
  double eta_bh_mbps = 0.0;    // result return rate
};

struct SystemState {
  int slice = 0;
  Infrastructure infra;
  std::vector<MobileUser> users;
  std::vector<Task> tasks;      // indexed by TaskId
  std::deque<TaskId> pending;   // P, in queue order
  SliceConditions conditions;
  int arrivals = 0;
};

// What placing a task on a target would cost right now.
struct PlacementEstimate {
  Target target;
  int movement_hops = 0;
  double movement_s = 0.0;
  double download_s = 0.0;
  double access_s = 0.0;
  int backhaul_hops = 0;
  // S, C, P and an estimate of B with the user standing still.
  DelayBreakdown delay;
};

struct PlacementContext {
  int slice = 0;
  SliceConditions conditions;
  GridPos user_cell;
};

PlacementEstimate estimate_placement(const Scenario& scenario, const Infrastructure& infra, const Task& task,
                                     Target target, const PlacementContext& ctx);

// Hosts the task on `target`: makes room (LRU over unpinned layers the task
// does not need), enqueues missing layers, pins the task's layers, adds its
// CPU demand and cycles to the target's load and fixes its computation time.
// Returns the estimate taken before the state changed.
PlacementEstimate apply_placement(const Scenario& scenario, Infrastructure& infra, Task& task, Target target,
                                  const PlacementContext& ctx);

// Inverse of apply_placement's load bookkeeping (layers stay cached).
void release_placement(const Scenario& scenario, Infrastructure& infra, const std::vector<Task>& tasks,
                       const Task& task);

// Hops y between a target and the node nearest to the user.
int backhaul_hops(const Infrastructure& infra, Target target, GridPos user_cell);

struct DecisionRecord {
  TaskId task = 0;
  int slice = 0;
  Target target;
  PendingReason reason = PendingReason::kArrival;
  bool fallback = false;  // policy answer was infeasible; sent to the cloud
  // -(S + P) at decision time, minus (C + B) once the task completes if this
  // was its final placement.
  double reward = 0.0;
};

struct SliceEvents {
  int slice = 0;
  std::vector<TaskId> arrivals;
  std::vector<TaskId> proactive_migrations;
  std::vector<TaskId> passive_migrations;
  std::vector<std::pair<TaskId, DelayBreakdown>> completions;
  std::size_t decisions = 0;
};

class Simulator;

// A scheduler. Policies see the simulator read-only and answer one decision
// at a time; begin_slice exposes the whole decision window first for
// policies that plan jointly.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual void reset(std::uint64_t episode_seed) { (void)episode_seed; }
  virtual void begin_slice(const Simulator& sim, std::span<const TaskId> window) {
    (void)sim;
    (void)window;
  }
  // Must return a member of `feasible`; anything else is a fault and the
  // simulator sends the task to the cloud.
  virtual Target decide(const Simulator& sim, const Task& task, std::span<const Target> feasible) = 0;
};

class Simulator {
 public:
  Simulator(const Scenario& scenario, std::uint64_t episode_seed);
  // Uses the given users instead of drawing them (instrumented scenarios).
  Simulator(const Scenario& scenario, std::uint64_t episode_seed, std::vector<MobileUser> users);

  const Scenario& scenario() const { return *scenario_; }
  const SystemState& state() const { return state_; }
  const std::vector<DecisionRecord>& decisions() const { return decisions_; }
  std::uint64_t seed() const { return seed_; }
  int cloud_fallbacks() const { return fallbacks_; }

  GridPos user_cell(UserId user) const { return state_.users.at(user).at(state_.slice); }
  PlacementContext context_for(const Task& task) const;
  std::vector<Target> feasible_targets(const Task& task) const;
  PlacementEstimate estimate(const Task& task, Target target) const;

  // Tasks that get a decision this slice, in queue order. Valid between
  // arrivals and decisions, i.e. inside Policy::begin_slice / decide.
  std::vector<TaskId> decision_window() const;

  // Arrivals are exhausted and nothing is pending or running, or the horizon
  // was reached.
  bool finished() const;

  SliceEvents step(Policy& policy);

  // Test hook: inject a task that arrives in the next step instead of a
  // Poisson draw. Returns its id.
  TaskId inject_task(UserId user, ContainerId container, double offload_mb, double service_mb, double kappa,
                     double cpu_demand_ghz);
  // Test hook: disable random arrivals.
  void set_arrivals_enabled(bool enabled) { arrivals_enabled_ = enabled; }
  // Test hook: overwrite a running task's current CPU demand.
  void set_task_cpu(TaskId task, double ghz);

  // Capacity, storage and single-assignment checks over the whole state;
  // empty when consistent.
  std::vector<std::string> check_invariants() const;

 private:
  void draw_conditions();
  void jitter_cpu();
  void migrate(Task& task, PendingReason reason, SliceEvents& events);
  Task make_task(UserId user, ContainerId container, double offload_mb, double service_mb, double kappa,
                 double cpu_demand_ghz);
  void recompute_load(Target target);
  std::vector<TaskId>& running_on(Target target);

  const Scenario* scenario_;
  std::uint64_t seed_;
  SystemState state_;
  std::vector<DecisionRecord> decisions_;
  std::vector<TaskId> injected_;
  Rng arrival_rng_;
  Rng condition_rng_;
  Rng jitter_rng_;
  int fallbacks_ = 0;
  bool arrivals_enabled_ = true;
};

struct TaskRecord {
  TaskId id = 0;
  std::string node;  // final target label
  DelayBreakdown delay;
  int proactive_count = 0;
  int passive_count = 0;
  bool completed = false;
};

struct EpisodeMetrics {
  std::uint64_t seed = 0;
  int slices = 0;
  int arrivals = 0;
  int completions = 0;
  int pending_at_end = 0;
  int running_at_end = 0;
  int decisions = 0;
  int proactive_migrations = 0;
  int passive_migrations = 0;
  int cloud_placements = 0;
  int cloud_fallbacks = 0;
  // Summed over completed tasks.
  DelayBreakdown totals;
  // Everything charged, including tasks unfinished at the horizon.
  DelayBreakdown charged;
  double reward_sum = 0.0;
  std::vector<TaskRecord> tasks;

  double mean_total_s() const { return completions > 0 ? totals.total_s / completions : 0.0; }
};

EpisodeMetrics collect_metrics(const Simulator& sim);

// Runs one episode to completion. Identical (scenario, policy, seed) give
// identical metrics.
EpisodeMetrics run_episode(const Scenario& scenario, Policy& policy, std::uint64_t seed,
                           std::vector<DecisionRecord>* decisions = nullptr);
EpisodeMetrics run_episode(const SimConfig& config, Policy& policy, std::uint64_t seed);

inline constexpr const char* kTaskCsvHeader =
    "episode,seed,task_id,node,migration_s,computation_s,deployment_s,backhaul_s,total_s,proactive_count,"
    "passive_count";

// One row per completed task.
void write_task_rows(std::ostream& out, int episode, const EpisodeMetrics& metrics);

}  // namespace layermig
