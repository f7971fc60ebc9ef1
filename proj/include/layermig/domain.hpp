#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "layermig/delay.hpp"

namespace layermig {

// Layer, image and container ids are dense indices into the catalog.
using LayerId = std::uint32_t;
using ImageId = std::uint32_t;
using ContainerId = std::uint32_t;
using UserId = std::uint32_t;
using TaskId = std::uint64_t;

inline constexpr double kMegabitsPerMegabyte = 8.0;
inline constexpr double kMegabytesPerGigabyte = 1000.0;

struct GridPos {
  int x = 0;
  int y = 0;
  auto operator<=>(const GridPos&) const = default;
};

int manhattan_hops(GridPos a, GridPos b);

// Rectangular cell grid; nodes occupy cells in row-major order.
struct Grid {
  int cols = 1;
  int rows = 1;

  bool contains(GridPos p) const { return p.x >= 0 && p.y >= 0 && p.x < cols && p.y < rows; }
  // Chebyshev ring index around the grid centre (0 = innermost).
  int ring(GridPos p) const;
};

// Smallest near-square grid with at least node_count cells.
Grid grid_for_nodes(int node_count);
GridPos node_cell(const Grid& grid, int node_index);

// Uplink rate for a user standing in `cell`: rates are assigned by ring
// distance from the centre, the outermost entry repeating beyond the table.
double uplink_mbps(const Grid& grid, GridPos cell, std::span<const double> table);

// A scheduling target: one of the edge nodes or the cloud. Ordering puts
// edge nodes by ascending index and the cloud last.
class Target {
 public:
  constexpr Target() = default;
  static constexpr Target edge(std::size_t index) { return Target(static_cast<int>(index)); }
  static constexpr Target cloud() { return Target(kCloudIndex); }

  constexpr bool is_cloud() const { return index_ == kCloudIndex; }
  std::size_t node() const;
  // Action index in [0, node_count]; the cloud maps to node_count.
  std::size_t action(std::size_t node_count) const {
    return is_cloud() ? node_count : static_cast<std::size_t>(index_);
  }
  static Target from_action(std::size_t action, std::size_t node_count) {
    return action == node_count ? cloud() : edge(action);
  }
  // 1-based node id as printed in reports, or "cloud".
  std::string label() const;

  auto operator<=>(const Target&) const = default;

 private:
  static constexpr int kCloudIndex = std::numeric_limits<int>::max();
  explicit constexpr Target(int index) : index_(index) {}
  int index_ = kCloudIndex;
};

struct QueuedLayer {
  LayerId layer = 0;
  double remaining_mb = 0.0;
};

class LayerCatalog;

// Layer inventory plus the FIFO download queue of one node's registry link.
class LayerStore {
 public:
  LayerStore() = default;
  explicit LayerStore(std::size_t num_layers)
      : present_(num_layers, 0), last_used_(num_layers, 0), refs_(num_layers, 0) {}

  std::size_t num_layers() const { return present_.size(); }
  bool has(LayerId layer) const { return present_.at(layer) != 0; }
  bool queued(LayerId layer) const;
  // Present or already on its way.
  bool has_or_queued(LayerId layer) const { return has(layer) || queued(layer); }

  void add(LayerId layer, double size_mb);
  void remove(LayerId layer, double size_mb);
  void enqueue(LayerId layer, double size_mb);

  // Drains up to budget_mb from the head of the queue; completed layers move
  // into the inventory. Returns the completed layer ids.
  std::vector<LayerId> progress(double budget_mb, const LayerCatalog& catalog);

  const std::deque<QueuedLayer>& queue() const { return queue_; }
  double stored_mb() const { return stored_mb_; }
  double queued_mb() const;
  double occupancy_mb() const { return stored_mb_ + queued_mb(); }

  void touch(LayerId layer, std::uint64_t tick) { last_used_.at(layer) = tick; }
  std::uint64_t last_used(LayerId layer) const { return last_used_.at(layer); }

  // Number of running tasks that use a layer; pinned layers are never evicted.
  void pin(LayerId layer) { ++refs_.at(layer); }
  void unpin(LayerId layer);
  int refs(LayerId layer) const { return refs_.at(layer); }

  std::vector<LayerId> inventory() const;

 private:
  std::vector<std::uint8_t> present_;
  std::vector<std::uint64_t> last_used_;
  std::vector<int> refs_;
  std::deque<QueuedLayer> queue_;
  double stored_mb_ = 0.0;
};

struct EdgeNode {
  int id = 1;  // 1..|N|
  GridPos position;
  double cpu_ghz = 0.0;
  double bandwidth_mbps = 0.0;
  double storage_gb = 0.0;
  int max_containers = 0;
  int coverage_radius_cells = 0;

  LayerStore layers;
  std::vector<TaskId> running;
  // Maintained by the simulator: sum of current CPU demand and of the
  // computation cycles of the running tasks.
  double committed_cpu_ghz = 0.0;
  double load_cycles = 0.0;

  double storage_mb() const { return storage_gb * kMegabytesPerGigabyte; }
  bool covers(GridPos cell) const { return manhattan_hops(position, cell) <= coverage_radius_cells; }
};

// The cloud accepts every task; it still keeps a layer store and a load so
// the same delay formulas apply.
struct CloudNode {
  double cpu_ghz = 0.0;
  double bandwidth_mbps = 0.0;
  int hop_distance = 0;

  LayerStore layers;
  std::vector<TaskId> running;
  double load_cycles = 0.0;
};

struct MobileUser {
  UserId id = 0;
  std::vector<GridPos> trajectory;

  // Position at a slice; slices past the end hold the last position.
  GridPos at(int slice) const;
};

enum class PendingReason { kArrival, kProactive, kPassive };

struct Task {
  TaskId id = 0;
  UserId user = 0;
  ContainerId container = 0;
  double offload_size_mb = 0.0;   // s_u^k
  double service_size_mb = 0.0;   // s_u^s
  double kappa = 0.0;             // cycles per bit
  double cpu_demand_ghz = 0.0;    // nominal p_k
  double current_cpu_ghz = 0.0;   // p_k this slice
  int arrival_slice = 0;
  int queue_entry_slice = 0;      // t_u

  std::optional<Target> assignment;
  std::optional<Target> previous;  // last serving target, for movement hops
  PendingReason reason = PendingReason::kArrival;
  int placed_slice = -1;
  int finish_slice = -1;
  double computation_s = 0.0;
  double cycles = 0.0;
  std::uint64_t placement_order = 0;
  std::size_t decision_index = 0;

  int proactive_count = 0;
  int passive_count = 0;
  DelayBreakdown charged;
};

// Computation cycles c_t of a task: size (MB -> bits) times processing density.
double task_cycles(double size_mb, double kappa);

}  // namespace layermig
