#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "layermig/config.hpp"
#include "layermig/policy_factory.hpp"
#include "layermig/rl/trainer.hpp"
#include "layermig/scenario.hpp"
#include "layermig/sim.hpp"

namespace layermig {

// Everything needed to reproduce a run; written next to its outputs.
struct ExperimentSpec {
  SimConfig sim;
  // Arrivals are spread over this many slices: setting a task count also
  // sets poisson_rate = tasks / arrival_slices.
  int arrival_slices = 100;
  std::string policy = "dep_soft";
  BaselineOptions baseline;
  std::vector<std::uint64_t> seeds = seed_range(1, 20);
  std::string checkpoint;  // for policy "ppcm"
  rl::TrainConfig train;
  std::string output_dir;

  static std::vector<std::uint64_t> seed_range(std::uint64_t first, int count);
};

void set_task_count(ExperimentSpec& spec, int tasks);
void validate(const ExperimentSpec& spec);

nlohmann::json to_json(const ExperimentSpec& spec);
void merge_json(const nlohmann::json& doc, ExperimentSpec& spec);

// Baselines plus "ppcm".
std::vector<std::string> policy_names();
// Throws UnknownPolicy for names outside policy_names().
std::unique_ptr<Policy> make_policy(const ExperimentSpec& spec, const Scenario& scenario);

struct ComponentStats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation across seeds
};

// Per-seed mean per-task latencies, aggregated across seeds.
struct RunSummary {
  std::string policy;
  int seeds = 0;
  ComponentStats migration_s, computation_s, deployment_s, backhaul_s, total_s;
  double tasks_completed = 0.0;  // per seed
  double proactive_migrations = 0.0;
  double passive_migrations = 0.0;
  double cloud_placements = 0.0;
  double cloud_fallbacks = 0.0;
  std::vector<EpisodeMetrics> episodes;

  nlohmann::json to_json() const;
};

// Runs spec.policy over spec.seeds; task rows go to `task_csv` (header
// included) when given.
RunSummary run_policy(const ExperimentSpec& spec, const Scenario& scenario, std::ostream* task_csv = nullptr);

// run_policy plus, if spec.output_dir is set, tasks.csv, summary.json and
// spec.json in that directory.
RunSummary run(const ExperimentSpec& spec);

enum class SweepAxis { kNodes, kTasks };
SweepAxis parse_axis(const std::string& name);
std::string to_string(SweepAxis axis);

struct SweepRow {
  std::string policy;
  SweepAxis axis = SweepAxis::kNodes;
  int value = 0;
  RunSummary summary;
};

// One row per (policy, value); values must be ascending.
std::vector<SweepRow> sweep(const ExperimentSpec& spec, SweepAxis axis, const std::vector<int>& values,
                            const std::vector<std::string>& policies);

inline constexpr const char* kSweepCsvHeader =
    "policy,axis,value,seeds,migration_s,computation_s,deployment_s,backhaul_s,total_s,total_s_std,"
    "proactive_migrations,passive_migrations,cloud_placements";
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

// Trains on spec.sim; writes training_log.csv, checkpoint.json (best by
// evaluation latency), final_checkpoint.json and spec.json when
// spec.output_dir is set.
rl::TrainResult train_cmd(const ExperimentSpec& spec);

void write_text(const std::string& path, const std::string& content);

}  // namespace layermig
