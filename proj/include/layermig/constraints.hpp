#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "layermig/catalog.hpp"
#include "layermig/config.hpp"
#include "layermig/domain.hpp"
#include "layermig/scenario.hpp"

namespace layermig {

struct FeasibilityReport {
  Target target;
  bool container_ok = true;
  bool storage_ok = true;
  bool cpu_ok = true;
  std::vector<std::string> reasons;

  bool feasible() const { return container_ok && storage_ok && cpu_ok; }
};

// Stored bytes that could be evicted: layers no running task uses and that
// are not in `keep`.
double reclaimable_mb(const LayerStore& store, std::span<const LayerId> keep, const LayerCatalog& catalog);

// Bytes of `needed` neither stored nor already queued.
double new_download_mb(const LayerStore& store, std::span<const LayerId> needed, const LayerCatalog& catalog);

// Admission check for placing `task` on `node`:
//   containers: |running| + 1 <= C_n
//   storage:    see StorageCheck, ceiling sigma_mem * d_n
//   cpu:        committed + p_k <= sigma_cpu * f_n
FeasibilityReport feasible(const EdgeNode& node, const Task& task, const LayerCatalog& catalog, const SimConfig& config);

// The cloud admits everything.
FeasibilityReport cloud_feasible();

// The same limits applied to a node as it currently stands (no new task).
// A failure here is what triggers proactive migration.
FeasibilityReport node_within_limits(const EdgeNode& node, const LayerCatalog& catalog, const SimConfig& config);

// Edge nodes that cover the user's cell and admit the task, in index order,
// followed by the cloud. Never empty.
std::vector<Target> feasible_set(const Infrastructure& infra, GridPos user_cell, const Task& task,
                                 const LayerCatalog& catalog, const SimConfig& config);

struct AssignmentViolation {
  TaskId task = 0;
  int count = 0;  // number of targets the task is assigned to
  std::string message;
};

// Every task in `tasks` must appear exactly once in `assignments`; tasks not
// listed in `tasks` must not appear at all.
std::vector<AssignmentViolation> validate_assignment(std::span<const TaskId> tasks,
                                                     std::span<const std::pair<TaskId, Target>> assignments);

}  // namespace layermig
