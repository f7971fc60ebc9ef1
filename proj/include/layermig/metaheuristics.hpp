#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "layermig/random.hpp"
#include "layermig/scenario.hpp"
#include "layermig/sim.hpp"

namespace layermig {

enum class MetaVariant { kGA, kDE, kPSO };

std::string to_string(MetaVariant v);

struct MetaConfig {
  int budget = 200;  // distinct fitness evaluations per window
  int population = 20;
  // GA
  int tournament = 2;
  double crossover_rate = 0.9;
  double mutation_rate = 0.1;
  int elites = 1;
  // DE (rand/1/bin)
  double de_f = 0.5;
  double de_cr = 0.9;
  // PSO
  double inertia = 0.7;
  double cognitive = 1.5;
  double social = 1.5;
};

// A batch of pending tasks placed one after another onto a snapshot of the
// infrastructure. Gene i indexes domains[i].
struct WindowProblem {
  const Scenario* scenario = nullptr;
  Infrastructure base;
  std::vector<Task> tasks;
  std::vector<PlacementContext> contexts;
  std::vector<std::vector<Target>> domains;

  std::size_t size() const { return tasks.size(); }
  // Number of distinct candidates (saturates at ~1e18).
  double space_size() const;
};

WindowProblem make_window(const Simulator& sim, std::span<const TaskId> window);

// Penalty added per gene whose target is no longer feasible once the
// earlier genes of the same candidate have been placed.
inline constexpr double kInfeasiblePenalty = 1e6;

// -(sum of estimated T_k) over the window, placing tasks in order.
double window_fitness(const WindowProblem& problem, std::span<const int> genes);

struct MetaResult {
  std::vector<int> genes;
  std::vector<Target> assignment;
  double fitness = 0.0;
  double initial_best = 0.0;  // best fitness in the initial population
  int evaluations = 0;        // distinct candidates evaluated
};

// Stops after `budget` distinct evaluations or once the whole space has been
// visited, so budget >= space_size() yields the exact optimum. Candidates are
// generated independently of the budget; a larger budget only extends the
// same run.
MetaResult metaheuristic_select(const WindowProblem& problem, MetaVariant variant, const MetaConfig& config, Rng& rng);

// Exhaustive search; ties go to the lexicographically smallest gene vector.
MetaResult brute_force(const WindowProblem& problem);

class MetaheuristicPolicy final : public Policy {
 public:
  MetaheuristicPolicy(MetaVariant variant, MetaConfig config = {});
  std::string name() const override;
  void reset(std::uint64_t seed) override;
  void begin_slice(const Simulator& sim, std::span<const TaskId> window) override;
  Target decide(const Simulator& sim, const Task& task, std::span<const Target> feasible) override;

 private:
  MetaVariant variant_;
  MetaConfig config_;
  Rng rng_;
  std::map<TaskId, Target> plan_;
};

}  // namespace layermig
