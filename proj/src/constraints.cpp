#include "layermig/constraints.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace layermig {

namespace {

bool contains(std::span<const LayerId> ids, LayerId l) { return std::find(ids.begin(), ids.end(), l) != ids.end(); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Bytes the node holds (or will hold) that cannot be reclaimed, plus extra.
double pinned_occupancy_mb(const LayerStore& store, std::span<const LayerId> keep, const LayerCatalog& catalog) {
  return store.occupancy_mb() - reclaimable_mb(store, keep, catalog);
}

double missing_catalog_mb(const LayerStore& store, std::span<const LayerId> adding, const LayerCatalog& catalog) {
  double missing = 0.0;
  for (const Layer& l : catalog.layers()) {
    if (!store.has_or_queued(l.id) && !contains(adding, l.id)) missing += l.size_mb;
  }
  return missing;
}

}  // namespace

double reclaimable_mb(const LayerStore& store, std::span<const LayerId> keep, const LayerCatalog& catalog) {
  double total = 0.0;
  for (std::size_t i = 0; i < store.num_layers(); ++i) {
    const auto l = static_cast<LayerId>(i);
    if (store.has(l) && store.refs(l) == 0 && !contains(keep, l)) total += catalog.layer_size_mb(l);
  }
  return total;
}

double new_download_mb(const LayerStore& store, std::span<const LayerId> needed, const LayerCatalog& catalog) {
  double total = 0.0;
  for (LayerId l : needed) {
    if (!store.has_or_queued(l)) total += catalog.layer_size_mb(l);
  }
  return total;
}

FeasibilityReport feasible(const EdgeNode& node, const Task& task, const LayerCatalog& catalog, const SimConfig& config) {
  FeasibilityReport r;
  r.target = Target::edge(static_cast<std::size_t>(node.id - 1));
  const auto needed = catalog.container_layers(task.container);

  if (static_cast<int>(node.running.size()) + 1 > node.max_containers) {
    r.container_ok = false;
    r.reasons.push_back("containers " + std::to_string(node.running.size()) + "+1 > " + std::to_string(node.max_containers));
  }

  const double ceiling = config.sigma_mem * node.storage_mb();
  double storage_after = 0.0;
  if (config.storage_check == StorageCheck::kOccupancy) {
    storage_after = pinned_occupancy_mb(node.layers, needed, catalog) + new_download_mb(node.layers, needed, catalog);
  } else {
    storage_after = missing_catalog_mb(node.layers, needed, catalog);
  }
  if (storage_after > ceiling) {
    r.storage_ok = false;
    r.reasons.push_back("storage " + fmt(storage_after) + " MB > " + fmt(ceiling) + " MB");
  }

  const double cpu_after = node.committed_cpu_ghz + task.current_cpu_ghz;
  const double cpu_ceiling = config.sigma_cpu * node.cpu_ghz;
  if (cpu_after > cpu_ceiling) {
    r.cpu_ok = false;
    r.reasons.push_back("cpu " + fmt(cpu_after) + " GHz > " + fmt(cpu_ceiling) + " GHz");
  }
  return r;
}

FeasibilityReport cloud_feasible() {
  FeasibilityReport r;
  r.target = Target::cloud();
  return r;
}

FeasibilityReport node_within_limits(const EdgeNode& node, const LayerCatalog& catalog, const SimConfig& config) {
  FeasibilityReport r;
  r.target = Target::edge(static_cast<std::size_t>(node.id - 1));
  if (static_cast<int>(node.running.size()) > node.max_containers) {
    r.container_ok = false;
    r.reasons.push_back("containers " + std::to_string(node.running.size()) + " > " + std::to_string(node.max_containers));
  }
  const double ceiling = config.sigma_mem * node.storage_mb();
  const double storage = config.storage_check == StorageCheck::kOccupancy
                             ? pinned_occupancy_mb(node.layers, {}, catalog)
                             : missing_catalog_mb(node.layers, {}, catalog);
  if (storage > ceiling) {
    r.storage_ok = false;
    r.reasons.push_back("storage " + fmt(storage) + " MB > " + fmt(ceiling) + " MB");
  }
  const double cpu_ceiling = config.sigma_cpu * node.cpu_ghz;
  if (node.committed_cpu_ghz > cpu_ceiling) {
    r.cpu_ok = false;
    r.reasons.push_back("cpu " + fmt(node.committed_cpu_ghz) + " GHz > " + fmt(cpu_ceiling) + " GHz");
  }
  return r;
}

std::vector<Target> feasible_set(const Infrastructure& infra, GridPos user_cell, const Task& task,
                                 const LayerCatalog& catalog, const SimConfig& config) {
  std::vector<Target> out;
  for (std::size_t i = 0; i < infra.nodes.size(); ++i) {
    const EdgeNode& node = infra.nodes[i];
    if (!node.covers(user_cell)) continue;
    if (feasible(node, task, catalog, config).feasible()) out.push_back(Target::edge(i));
  }
  out.push_back(Target::cloud());
  return out;
}

std::vector<AssignmentViolation> validate_assignment(std::span<const TaskId> tasks,
                                                     std::span<const std::pair<TaskId, Target>> assignments) {
  std::map<TaskId, int> counts;
  for (TaskId t : tasks) counts.emplace(t, 0);
  std::vector<AssignmentViolation> violations;
  for (const auto& [task, target] : assignments) {
    auto it = counts.find(task);
    if (it == counts.end()) {
      violations.push_back({task, 1, "task " + std::to_string(task) + " assigned to " + target.label() + " but not expected"});
      continue;
    }
    ++it->second;
  }
  for (const auto& [task, n] : counts) {
    if (n == 0) violations.push_back({task, 0, "task " + std::to_string(task) + " has no assignment"});
    if (n > 1) violations.push_back({task, n, "task " + std::to_string(task) + " assigned to " + std::to_string(n) + " targets"});
  }
  return violations;
}

}  // namespace layermig
