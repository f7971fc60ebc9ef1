#include "layermig/domain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "layermig/catalog.hpp"

namespace layermig {

int manhattan_hops(GridPos a, GridPos b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

int Grid::ring(GridPos p) const {
  const int dx = std::abs(2 * p.x - (cols - 1));
  const int dy = std::abs(2 * p.y - (rows - 1));
  return std::max(dx, dy) / 2;
}

Grid grid_for_nodes(int node_count) {
  if (node_count <= 0) throw std::invalid_argument("grid_for_nodes: node count must be positive");
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(node_count))));
  const int rows = (node_count + cols - 1) / cols;
  return Grid{cols, rows};
}

GridPos node_cell(const Grid& grid, int node_index) {
  return GridPos{node_index % grid.cols, node_index / grid.cols};
}

double uplink_mbps(const Grid& grid, GridPos cell, std::span<const double> table) {
  if (table.empty()) throw std::invalid_argument("uplink_mbps: empty rate table");
  const auto ring = static_cast<std::size_t>(grid.ring(cell));
  return table[std::min(ring, table.size() - 1)];
}

std::size_t Target::node() const {
  if (is_cloud()) throw std::logic_error("Target::node called on the cloud target");
  return static_cast<std::size_t>(index_);
}

std::string Target::label() const { return is_cloud() ? "cloud" : std::to_string(index_ + 1); }

bool LayerStore::queued(LayerId layer) const {
  return std::any_of(queue_.begin(), queue_.end(), [layer](const QueuedLayer& q) { return q.layer == layer; });
}

void LayerStore::add(LayerId layer, double size_mb) {
  if (present_.at(layer)) return;
  present_[layer] = 1;
  stored_mb_ += size_mb;
}

void LayerStore::remove(LayerId layer, double size_mb) {
  if (!present_.at(layer)) return;
  present_[layer] = 0;
  stored_mb_ = std::max(0.0, stored_mb_ - size_mb);
}

void LayerStore::enqueue(LayerId layer, double size_mb) {
  if (has_or_queued(layer)) throw std::logic_error("LayerStore::enqueue: layer already present or queued");
  queue_.push_back(QueuedLayer{layer, size_mb});
}

std::vector<LayerId> LayerStore::progress(double budget_mb, const LayerCatalog& catalog) {
  std::vector<LayerId> done;
  while (budget_mb > 0.0 && !queue_.empty()) {
    QueuedLayer& head = queue_.front();
    if (head.remaining_mb <= budget_mb) {
      budget_mb -= head.remaining_mb;
      add(head.layer, catalog.layer_size_mb(head.layer));
      done.push_back(head.layer);
      queue_.pop_front();
    } else {
      head.remaining_mb -= budget_mb;
      budget_mb = 0.0;
    }
  }
  return done;
}

double LayerStore::queued_mb() const {
  double total = 0.0;
  for (const auto& q : queue_) total += q.remaining_mb;
  return total;
}

void LayerStore::unpin(LayerId layer) {
  if (refs_.at(layer) <= 0) throw std::logic_error("LayerStore::unpin: layer not pinned");
  --refs_[layer];
}

std::vector<LayerId> LayerStore::inventory() const {
  std::vector<LayerId> ids;
  for (std::size_t i = 0; i < present_.size(); ++i) {
    if (present_[i]) ids.push_back(static_cast<LayerId>(i));
  }
  return ids;
}

GridPos MobileUser::at(int slice) const {
  if (trajectory.empty()) throw std::logic_error("MobileUser::at: empty trajectory");
  if (slice < 0) return trajectory.front();
  const auto i = std::min(static_cast<std::size_t>(slice), trajectory.size() - 1);
  return trajectory[i];
}

double task_cycles(double size_mb, double kappa) { return size_mb * kMegabitsPerMegabyte * 1e6 * kappa; }

}  // namespace layermig
