#include "layermig/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "layermig/cost.hpp"

namespace layermig {

namespace {

constexpr std::uint64_t kArrivalStream = 0xA221;
constexpr std::uint64_t kConditionStream = 0xC0D1;
constexpr std::uint64_t kJitterStream = 0x7177;

const LayerStore& store_of(const Infrastructure& infra, Target t) {
  return t.is_cloud() ? infra.cloud.layers : infra.nodes.at(t.node()).layers;
}

double bandwidth_of(const Infrastructure& infra, Target t) {
  return t.is_cloud() ? infra.cloud.bandwidth_mbps : infra.nodes.at(t.node()).bandwidth_mbps;
}

double cpu_of(const Infrastructure& infra, Target t) {
  return t.is_cloud() ? infra.cloud.cpu_ghz : infra.nodes.at(t.node()).cpu_ghz;
}

double load_of(const Infrastructure& infra, Target t) {
  return t.is_cloud() ? infra.cloud.load_cycles : infra.nodes.at(t.node()).load_cycles;
}

// Frees unpinned layers the task does not need, least recently used first,
// until the new downloads fit under `ceiling`.
void make_room(EdgeNode& node, std::span<const LayerId> needed, double ceiling, const LayerCatalog& catalog) {
  const double incoming = new_download_mb(node.layers, needed, catalog);
  if (node.layers.occupancy_mb() + incoming <= ceiling) return;
  std::vector<LayerId> candidates;
  for (LayerId l : node.layers.inventory()) {
    if (node.layers.refs(l) == 0 && std::find(needed.begin(), needed.end(), l) == needed.end()) {
      candidates.push_back(l);
    }
  }
  std::sort(candidates.begin(), candidates.end(), [&](LayerId a, LayerId b) {
    const auto ua = node.layers.last_used(a);
    const auto ub = node.layers.last_used(b);
    return ua != ub ? ua < ub : a < b;
  });
  for (LayerId l : candidates) {
    if (node.layers.occupancy_mb() + incoming <= ceiling) break;
    node.layers.remove(l, catalog.layer_size_mb(l));
  }
}

}  // namespace

int backhaul_hops(const Infrastructure& infra, Target target, GridPos user_cell) {
  if (target.is_cloud()) return infra.cloud.hop_distance;
  const std::size_t access = nearest_node(infra, user_cell);
  return target_hops(infra, target, Target::edge(access));
}

PlacementEstimate estimate_placement(const Scenario& scenario, const Infrastructure& infra, const Task& task,
                                     Target target, const PlacementContext& ctx) {
  const SimConfig& cfg = scenario.config;
  const auto needed = scenario.catalog.container_layers(task.container);

  PlacementEstimate e;
  e.target = target;
  e.movement_hops = task.previous ? target_hops(infra, *task.previous, target) : 0;
  e.movement_s =
      cost::movement_delay(task.service_size_mb, ctx.conditions.eta_migr_mbps, ctx.conditions.sigma_migr, e.movement_hops);
  e.download_s = cost::download_delay(needed, store_of(infra, target), bandwidth_of(infra, target), scenario.catalog);
  const int wait = ctx.slice - task.queue_entry_slice;
  const double uplink = uplink_mbps(scenario.grid, ctx.user_cell, cfg.uplink_table_mbps);
  e.access_s = cost::access_delay(task.offload_size_mb, uplink);
  e.backhaul_hops = backhaul_hops(infra, target, ctx.user_cell);

  const double s = cost::migration_delay(e.movement_s, e.download_s, wait, cfg.sigma_wait);
  const double c = cost::computation_delay_cycles(task_cycles(task.offload_size_mb, task.kappa), load_of(infra, target),
                                                  cpu_of(infra, target));
  const double p = cost::deployment_delay(task.offload_size_mb, uplink, e.download_s);
  const double b = cost::backhaul_delay(task.offload_size_mb, ctx.conditions.eta_bh_mbps, cfg.sigma_bh, e.backhaul_hops);
  e.delay = cost::total_task_time(s, c, p, b);
  return e;
}

PlacementEstimate apply_placement(const Scenario& scenario, Infrastructure& infra, Task& task, Target target,
                                  const PlacementContext& ctx) {
  const PlacementEstimate e = estimate_placement(scenario, infra, task, target, ctx);
  const LayerCatalog& catalog = scenario.catalog;
  const auto needed = catalog.container_layers(task.container);
  const std::uint64_t order = ++infra.placements;

  LayerStore* store = nullptr;
  if (target.is_cloud()) {
    store = &infra.cloud.layers;
    infra.cloud.running.push_back(task.id);
  } else {
    EdgeNode& node = infra.nodes.at(target.node());
    const double ceiling = scenario.config.storage_check == StorageCheck::kOccupancy
                               ? scenario.config.sigma_mem * node.storage_mb()
                               : node.storage_mb();
    make_room(node, needed, ceiling, catalog);
    store = &node.layers;
    node.running.push_back(task.id);
  }
  for (LayerId l : needed) {
    if (!store->has_or_queued(l)) store->enqueue(l, catalog.layer_size_mb(l));
    store->pin(l);
    store->touch(l, order);
  }

  task.cycles = task_cycles(task.offload_size_mb, task.kappa);
  task.computation_s = e.delay.computation_s;
  task.assignment = target;
  task.placement_order = order;
  task.placed_slice = ctx.slice;
  const double slice_s = scenario.config.slice_seconds;
  const int occupancy = std::max(1, static_cast<int>(std::ceil(task.computation_s / slice_s - 1e-12)));
  task.finish_slice = ctx.slice + occupancy;

  if (target.is_cloud()) {
    infra.cloud.load_cycles += task.cycles;
  } else {
    EdgeNode& node = infra.nodes[target.node()];
    node.committed_cpu_ghz += task.current_cpu_ghz;
    node.load_cycles += task.cycles;
  }
  return e;
}

void release_placement(const Scenario& scenario, Infrastructure& infra, const std::vector<Task>& tasks,
                       const Task& task) {
  if (!task.assignment) throw std::logic_error("release_placement: task " + std::to_string(task.id) + " is not placed");
  const Target target = *task.assignment;
  std::vector<TaskId>& running = target.is_cloud() ? infra.cloud.running : infra.nodes.at(target.node()).running;
  const auto it = std::find(running.begin(), running.end(), task.id);
  if (it == running.end()) throw std::logic_error("release_placement: task " + std::to_string(task.id) + " not running");
  running.erase(it);
  LayerStore& store = target.is_cloud() ? infra.cloud.layers : infra.nodes[target.node()].layers;
  for (LayerId l : scenario.catalog.container_layers(task.container)) store.unpin(l);

  double cpu = 0.0;
  double cycles = 0.0;
  for (TaskId id : running) {
    cpu += tasks.at(id).current_cpu_ghz;
    cycles += tasks.at(id).cycles;
  }
  if (target.is_cloud()) {
    infra.cloud.load_cycles = cycles;
  } else {
    infra.nodes[target.node()].committed_cpu_ghz = cpu;
    infra.nodes[target.node()].load_cycles = cycles;
  }
}

// ---------------------------------------------------------------------------

Simulator::Simulator(const Scenario& scenario, std::uint64_t episode_seed)
    : Simulator(scenario, episode_seed, episode_users(scenario, episode_seed)) {}

Simulator::Simulator(const Scenario& scenario, std::uint64_t episode_seed, std::vector<MobileUser> users)
    : scenario_(&scenario),
      seed_(episode_seed),
      arrival_rng_(derive_seed(episode_seed, kArrivalStream)),
      condition_rng_(derive_seed(episode_seed, kConditionStream)),
      jitter_rng_(derive_seed(episode_seed, kJitterStream)) {
  if (users.empty()) throw std::invalid_argument("Simulator: at least one user is required");
  state_.infra = scenario.initial;
  state_.users = std::move(users);
  draw_conditions();
}

void Simulator::draw_conditions() {
  const SimConfig& cfg = scenario_->config;
  state_.conditions.sigma_migr = cfg.sigma_migr.sample(condition_rng_);
  state_.conditions.eta_migr_mbps = cfg.eta_migr_mbps.sample(condition_rng_);
  state_.conditions.eta_bh_mbps = cfg.eta_bh_mbps.sample(condition_rng_);
}

PlacementContext Simulator::context_for(const Task& task) const {
  return PlacementContext{state_.slice, state_.conditions, user_cell(task.user)};
}

std::vector<Target> Simulator::feasible_targets(const Task& task) const {
  return feasible_set(state_.infra, user_cell(task.user), task, scenario_->catalog, scenario_->config);
}

PlacementEstimate Simulator::estimate(const Task& task, Target target) const {
  return estimate_placement(*scenario_, state_.infra, task, target, context_for(task));
}

std::vector<TaskId> Simulator::decision_window() const {
  std::vector<TaskId> window;
  for (TaskId id : state_.pending) {
    const Task& t = state_.tasks[id];
    if (t.reason == PendingReason::kArrival || t.queue_entry_slice < state_.slice) window.push_back(id);
  }
  return window;
}

bool Simulator::finished() const {
  if (state_.slice >= scenario_->config.max_slices) return true;
  const bool arrivals_done = !arrivals_enabled_ || state_.arrivals >= scenario_->config.task_budget;
  if (!arrivals_done || !injected_.empty() || !state_.pending.empty()) return false;
  if (!state_.infra.cloud.running.empty()) return false;
  for (const EdgeNode& n : state_.infra.nodes) {
    if (!n.running.empty()) return false;
  }
  return true;
}

Task Simulator::make_task(UserId user, ContainerId container, double offload_mb, double service_mb, double kappa,
                          double cpu_demand_ghz) {
  Task t;
  t.id = state_.tasks.size();
  t.user = user;
  t.container = container;
  t.offload_size_mb = offload_mb;
  t.service_size_mb = service_mb;
  t.kappa = kappa;
  t.cpu_demand_ghz = cpu_demand_ghz;
  t.current_cpu_ghz = cpu_demand_ghz;
  t.arrival_slice = state_.slice;
  t.queue_entry_slice = state_.slice;
  t.reason = PendingReason::kArrival;
  return t;
}

TaskId Simulator::inject_task(UserId user, ContainerId container, double offload_mb, double service_mb, double kappa,
                              double cpu_demand_ghz) {
  if (user >= state_.users.size()) throw std::out_of_range("inject_task: unknown user");
  if (container >= scenario_->catalog.num_containers()) throw std::out_of_range("inject_task: unknown container");
  Task t = make_task(user, container, offload_mb, service_mb, kappa, cpu_demand_ghz);
  const TaskId id = t.id;
  state_.tasks.push_back(std::move(t));
  injected_.push_back(id);
  return id;
}

void Simulator::set_task_cpu(TaskId id, double ghz) {
  Task& t = state_.tasks.at(id);
  t.current_cpu_ghz = ghz;
  if (t.assignment) recompute_load(*t.assignment);
}

std::vector<TaskId>& Simulator::running_on(Target target) {
  return target.is_cloud() ? state_.infra.cloud.running : state_.infra.nodes.at(target.node()).running;
}

void Simulator::recompute_load(Target target) {
  double cpu = 0.0;
  double cycles = 0.0;
  for (TaskId id : running_on(target)) {
    cpu += state_.tasks[id].current_cpu_ghz;
    cycles += state_.tasks[id].cycles;
  }
  if (target.is_cloud()) {
    state_.infra.cloud.load_cycles = cycles;
  } else {
    state_.infra.nodes[target.node()].committed_cpu_ghz = cpu;
    state_.infra.nodes[target.node()].load_cycles = cycles;
  }
}

void Simulator::jitter_cpu() {
  const double j = scenario_->config.cpu_jitter;
  if (j <= 0.0) return;
  for (std::size_t i = 0; i < state_.infra.nodes.size(); ++i) {
    for (TaskId id : state_.infra.nodes[i].running) {
      Task& t = state_.tasks[id];
      t.current_cpu_ghz = t.cpu_demand_ghz * jitter_rng_.uniform(1.0 - j, 1.0 + j);
    }
    recompute_load(Target::edge(i));
  }
}

void Simulator::migrate(Task& task, PendingReason reason, SliceEvents& events) {
  release_placement(*scenario_, state_.infra, state_.tasks, task);
  task.previous = task.assignment;
  task.assignment.reset();
  task.reason = reason;
  task.queue_entry_slice = state_.slice;
  task.finish_slice = -1;
  task.current_cpu_ghz = task.cpu_demand_ghz;
  if (reason == PendingReason::kProactive) {
    ++task.proactive_count;
    events.proactive_migrations.push_back(task.id);
  } else {
    ++task.passive_count;
    events.passive_migrations.push_back(task.id);
  }
  state_.pending.push_back(task.id);
}

SliceEvents Simulator::step(Policy& policy) {
  const SimConfig& cfg = scenario_->config;
  const LayerCatalog& catalog = scenario_->catalog;
  SliceEvents events;
  events.slice = state_.slice;

  // (1) Users are read at the current slice through user_cell(); link
  // conditions are redrawn (slice 0 was drawn at construction).
  if (state_.slice > 0) draw_conditions();

  // (2) Registry downloads progress; running demand fluctuates.
  if (state_.slice > 0) {
    for (EdgeNode& n : state_.infra.nodes) n.layers.progress(cfg.slice_seconds * n.bandwidth_mbps / kMegabitsPerMegabyte, catalog);
    CloudNode& c = state_.infra.cloud;
    c.layers.progress(cfg.slice_seconds * c.bandwidth_mbps / kMegabitsPerMegabyte, catalog);
    jitter_cpu();
  }

  // (3) Proactive triggers first: a node over its limits sheds its most
  // recently placed tasks until it is back within them.
  for (std::size_t i = 0; i < state_.infra.nodes.size(); ++i) {
    EdgeNode& node = state_.infra.nodes[i];
    while (!node.running.empty() && !node_within_limits(node, catalog, cfg).feasible()) {
      const auto newest = std::max_element(node.running.begin(), node.running.end(), [&](TaskId a, TaskId b) {
        return state_.tasks[a].placement_order < state_.tasks[b].placement_order;
      });
      migrate(state_.tasks[*newest], PendingReason::kProactive, events);
    }
  }
  // Passive triggers: the user left the serving node's coverage.
  for (EdgeNode& node : state_.infra.nodes) {
    const std::vector<TaskId> snapshot = node.running;
    for (TaskId id : snapshot) {
      Task& t = state_.tasks[id];
      if (!node.covers(user_cell(t.user))) migrate(t, PendingReason::kPassive, events);
    }
  }

  // (4) Arrivals.
  for (TaskId id : injected_) {
    state_.pending.push_back(id);
    events.arrivals.push_back(id);
    ++state_.arrivals;
  }
  injected_.clear();
  if (arrivals_enabled_ && state_.arrivals < cfg.task_budget) {
    const int drawn = arrival_rng_.poisson(cfg.poisson_rate);
    const int n = std::min(drawn, cfg.task_budget - state_.arrivals);
    for (int k = 0; k < n; ++k) {
      const auto user = static_cast<UserId>(arrival_rng_.index(state_.users.size()));
      const auto container = static_cast<ContainerId>(arrival_rng_.index(catalog.num_containers()));
      const double offload = cfg.offload_mb.sample(arrival_rng_);
      const double service = cfg.service_mb.sample(arrival_rng_);
      const double kappa = cfg.kappa.sample(arrival_rng_);
      const double cpu = cfg.cpu_demand_ghz.sample(arrival_rng_);
      Task t = make_task(user, container, offload, service, kappa, cpu);
      events.arrivals.push_back(t.id);
      state_.pending.push_back(t.id);
      state_.tasks.push_back(std::move(t));
      ++state_.arrivals;
    }
  }

  // (5) Decisions.
  const std::vector<TaskId> window = decision_window();
  if (!window.empty()) policy.begin_slice(*this, window);
  for (TaskId id : window) {
    Task& task = state_.tasks[id];
    const std::vector<Target> feasible = feasible_targets(task);
    Target choice = policy.decide(*this, task, feasible);
    DecisionRecord rec;
    rec.task = id;
    rec.slice = state_.slice;
    rec.reason = task.reason;
    if (std::find(feasible.begin(), feasible.end(), choice) == feasible.end()) {
      choice = Target::cloud();
      rec.fallback = true;
      ++fallbacks_;
    }
    const PlacementEstimate e = apply_placement(*scenario_, state_.infra, task, choice, context_for(task));
    task.charged.migration_s += e.delay.migration_s;
    task.charged.deployment_s += e.delay.deployment_s;
    task.charged.total_s += e.delay.migration_s + e.delay.deployment_s;
    rec.target = choice;
    rec.reward = -(e.delay.migration_s + e.delay.deployment_s);
    task.decision_index = decisions_.size();
    decisions_.push_back(rec);
    state_.pending.erase(std::find(state_.pending.begin(), state_.pending.end(), id));
    ++events.decisions;
  }

  // (6) Completions.
  auto complete_on = [&](Target target) {
    const std::vector<TaskId> snapshot = running_on(target);
    for (TaskId id : snapshot) {
      Task& t = state_.tasks[id];
      if (state_.slice < t.finish_slice) continue;
      const int y = backhaul_hops(state_.infra, target, user_cell(t.user));
      const double b = cost::backhaul_delay(t.offload_size_mb, state_.conditions.eta_bh_mbps, cfg.sigma_bh, y);
      t.charged.computation_s += t.computation_s;
      t.charged.backhaul_s += b;
      t.charged.total_s += t.computation_s + b;
      decisions_.at(t.decision_index).reward -= t.computation_s + b;
      release_placement(*scenario_, state_.infra, state_.tasks, t);
      t.previous = t.assignment;
      t.assignment.reset();
      t.finish_slice = -1;
      events.completions.emplace_back(id, t.charged);
    }
  };
  for (std::size_t i = 0; i < state_.infra.nodes.size(); ++i) complete_on(Target::edge(i));
  complete_on(Target::cloud());

  // (7) Postconditions.
  const auto violations = check_invariants();
  if (!violations.empty()) {
    std::ostringstream os;
    os << "slice " << state_.slice << ": " << violations.front();
    if (violations.size() > 1) os << " (+" << violations.size() - 1 << " more)";
    throw std::logic_error(os.str());
  }
  ++state_.slice;
  return events;
}

std::vector<std::string> Simulator::check_invariants() const {
  std::vector<std::string> out;
  std::vector<TaskId> placed;
  std::vector<std::pair<TaskId, Target>> assignments;
  int running = 0;
  for (const Task& t : state_.tasks) {
    if (t.assignment) placed.push_back(t.id);
  }
  for (std::size_t i = 0; i < state_.infra.nodes.size(); ++i) {
    const EdgeNode& n = state_.infra.nodes[i];
    for (TaskId id : n.running) assignments.emplace_back(id, Target::edge(i));
    running += static_cast<int>(n.running.size());
    if (static_cast<int>(n.running.size()) > n.max_containers) {
      out.push_back("node " + std::to_string(n.id) + " runs " + std::to_string(n.running.size()) + " containers");
    }
    if (n.layers.occupancy_mb() > n.storage_mb() + 1e-9) {
      out.push_back("node " + std::to_string(n.id) + " exceeds its storage");
    }
  }
  for (TaskId id : state_.infra.cloud.running) assignments.emplace_back(id, Target::cloud());
  running += static_cast<int>(state_.infra.cloud.running.size());
  for (const auto& v : validate_assignment(placed, assignments)) out.push_back(v.message);
  for (const auto& [id, target] : assignments) {
    const Task& t = state_.tasks.at(id);
    if (!t.assignment || *t.assignment != target) out.push_back("task " + std::to_string(id) + " listed on the wrong target");
  }
  int completed = 0;
  for (const Task& t : state_.tasks) {
    if (!t.assignment && t.finish_slice < 0 && t.placed_slice >= 0 &&
        std::find(state_.pending.begin(), state_.pending.end(), t.id) == state_.pending.end()) {
      ++completed;
    }
  }
  const int pending = static_cast<int>(state_.pending.size());
  if (state_.arrivals != completed + pending + running) {
    out.push_back("conservation: " + std::to_string(state_.arrivals) + " arrivals != " + std::to_string(completed) +
                  " completed + " + std::to_string(pending) + " pending + " + std::to_string(running) + " running");
  }
  return out;
}

// ---------------------------------------------------------------------------

EpisodeMetrics collect_metrics(const Simulator& sim) {
  const SystemState& s = sim.state();
  EpisodeMetrics m;
  m.seed = sim.seed();
  m.slices = s.slice;
  m.arrivals = s.arrivals;
  m.pending_at_end = static_cast<int>(s.pending.size());
  m.decisions = static_cast<int>(sim.decisions().size());
  m.cloud_fallbacks = sim.cloud_fallbacks();
  for (const DecisionRecord& d : sim.decisions()) {
    m.reward_sum += d.reward;
    if (d.target.is_cloud()) ++m.cloud_placements;
  }
  for (const Task& t : s.tasks) {
    const bool queued = std::find(s.pending.begin(), s.pending.end(), t.id) != s.pending.end();
    if (t.placed_slice < 0 && !t.assignment && !queued) continue;  // injected, not yet arrived
    m.proactive_migrations += t.proactive_count;
    m.passive_migrations += t.passive_count;
    m.charged.add(t.charged);
    TaskRecord r;
    r.id = t.id;
    r.completed = !t.assignment && !queued && t.placed_slice >= 0;
    if (t.assignment) ++m.running_at_end;
    r.node = t.assignment ? t.assignment->label() : (t.previous ? t.previous->label() : "");
    r.delay = t.charged;
    r.proactive_count = t.proactive_count;
    r.passive_count = t.passive_count;
    if (r.completed) {
      ++m.completions;
      m.totals.add(t.charged);
    }
    m.tasks.push_back(std::move(r));
  }
  return m;
}

EpisodeMetrics run_episode(const Scenario& scenario, Policy& policy, std::uint64_t seed,
                           std::vector<DecisionRecord>* decisions) {
  Simulator sim(scenario, seed);
  policy.reset(seed);
  while (!sim.finished()) sim.step(policy);
  if (decisions) *decisions = sim.decisions();
  return collect_metrics(sim);
}

EpisodeMetrics run_episode(const SimConfig& config, Policy& policy, std::uint64_t seed) {
  const Scenario scenario = build_scenario(config);
  return run_episode(scenario, policy, seed);
}

void write_task_rows(std::ostream& out, int episode, const EpisodeMetrics& metrics) {
  char buf[512];
  for (const TaskRecord& r : metrics.tasks) {
    if (!r.completed) continue;
    std::snprintf(buf, sizeof buf, "%d,%llu,%llu,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d\n", episode,
                  static_cast<unsigned long long>(metrics.seed), static_cast<unsigned long long>(r.id), r.node.c_str(),
                  r.delay.migration_s, r.delay.computation_s, r.delay.deployment_s, r.delay.backhaul_s,
                  r.delay.total_s, r.proactive_count, r.passive_count);
    out << buf;
  }
}

}  // namespace layermig
