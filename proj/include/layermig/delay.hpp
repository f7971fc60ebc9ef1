#pragma once

namespace layermig {

// Per-task delay components in seconds. total_s is kept equal to the sum of
// the four parts; use cost::total_task_time or add() to maintain that.
struct DelayBreakdown {
  double migration_s = 0.0;
  double computation_s = 0.0;
  double deployment_s = 0.0;
  double backhaul_s = 0.0;
  double total_s = 0.0;

  void add(const DelayBreakdown& other) {
    migration_s += other.migration_s;
    computation_s += other.computation_s;
    deployment_s += other.deployment_s;
    backhaul_s += other.backhaul_s;
    total_s = migration_s + computation_s + deployment_s + backhaul_s;
  }
};

}  // namespace layermig
