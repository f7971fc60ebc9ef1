#include "layermig/rl/observation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace layermig::rl {

ObservationLayout layout_for(const Scenario& scenario) {
  return ObservationLayout{scenario.initial.nodes.size(), scenario.catalog.num_layers()};
}

namespace {

double pending_mb(const LayerStore& store, std::span<const LayerId> needed, const LayerCatalog& catalog) {
  double mb = 0.0;
  for (LayerId l : needed) {
    if (store.has(l)) continue;
    if (store.queued(l)) {
      for (const QueuedLayer& q : store.queue()) {
        if (q.layer == l) mb += q.remaining_mb;
      }
    } else {
      mb += catalog.layer_size_mb(l);
    }
  }
  return mb;
}

double running_mb(const std::vector<TaskId>& running, const std::vector<Task>& tasks) {
  double mb = 0.0;
  for (TaskId id : running) mb += tasks[id].offload_size_mb;
  return mb;
}

void push_inventory(std::vector<std::uint8_t>& out, const LayerStore& store) {
  for (std::size_t l = 0; l < store.num_layers(); ++l) out.push_back(store.has_or_queued(static_cast<LayerId>(l)) ? 1 : 0);
}

}  // namespace

Observation encode_state(const Simulator& sim, const Task& task, std::span<const Target> feasible) {
  const Scenario& sc = sim.scenario();
  const Infrastructure& infra = sim.state().infra;
  const auto needed = sc.catalog.container_layers(task.container);
  const GridPos cell = sim.user_cell(task.user);
  const ObservationLayout layout = layout_for(sc);

  Observation o;
  o.dense.reserve(layout.dense_len());
  for (const EdgeNode& n : infra.nodes) {
    o.dense.insert(o.dense.end(), {static_cast<double>(n.position.x), static_cast<double>(n.position.y),
                                   static_cast<double>(manhattan_hops(n.position, cell)),
                                   pending_mb(n.layers, needed, sc.catalog), running_mb(n.running, sim.state().tasks),
                                   n.cpu_ghz, n.bandwidth_mbps});
  }
  const CloudNode& c = infra.cloud;
  o.dense.insert(o.dense.end(), {-1.0, -1.0, static_cast<double>(c.hop_distance), pending_mb(c.layers, needed, sc.catalog),
                                 running_mb(c.running, sim.state().tasks), c.cpu_ghz, c.bandwidth_mbps});
  double total_mb = 0.0;
  for (LayerId l : needed) total_mb += sc.catalog.layer_size_mb(l);
  o.dense.insert(o.dense.end(), {static_cast<double>(cell.x), static_cast<double>(cell.y), task.current_cpu_ghz,
                                 uplink_mbps(sc.grid, cell, sc.config.uplink_table_mbps), total_mb});

  o.sparse.reserve(layout.sparse_len());
  for (const EdgeNode& n : infra.nodes) push_inventory(o.sparse, n.layers);
  push_inventory(o.sparse, c.layers);
  const std::size_t base = o.sparse.size();
  o.sparse.resize(base + layout.layers, 0);
  for (LayerId l : needed) o.sparse[base + l] = 1;

  o.mask.assign(layout.actions(), 0);
  for (Target t : feasible) o.mask.at(t.action(layout.nodes)) = 1;
  return o;
}

Normalizer::Normalizer(ObservationLayout layout) : layout_(layout) {}

std::size_t Normalizer::kind_of(std::size_t index) const {
  const std::size_t node_part = ObservationLayout::kNodeFeatures * layout_.targets();
  if (index < node_part) return index % ObservationLayout::kNodeFeatures;
  return ObservationLayout::kNodeFeatures + (index - node_part);
}

void Normalizer::observe(std::size_t kind, double x) {
  ++count_[kind];
  const double delta = x - mean_[kind];
  mean_[kind] += delta / static_cast<double>(count_[kind]);
  m2_[kind] += delta * (x - mean_[kind]);
}

void Normalizer::update(std::span<const double> dense) {
  if (frozen_) return;
  if (dense.size() != layout_.dense_len()) throw std::invalid_argument("Normalizer::update: wrong dense length");
  for (std::size_t i = 0; i < dense.size(); ++i) observe(kind_of(i), dense[i]);
}

double Normalizer::variance(std::size_t kind) const {
  return count_.at(kind) > 1 ? m2_[kind] / static_cast<double>(count_[kind]) : 1.0;
}

std::vector<double> Normalizer::apply(std::span<const double> dense) const {
  if (dense.size() != layout_.dense_len()) throw std::invalid_argument("Normalizer::apply: wrong dense length");
  std::vector<double> out(dense.size());
  for (std::size_t i = 0; i < dense.size(); ++i) {
    const std::size_t k = kind_of(i);
    const double z = (dense[i] - mean_[k]) / std::sqrt(variance(k) + 1e-8);
    out[i] = std::clamp(z, -kClip, kClip);
  }
  return out;
}

nlohmann::json Normalizer::to_json() const {
  nlohmann::json j;
  j["count"] = count_;
  j["mean"] = mean_;
  j["m2"] = m2_;
  return j;
}

void Normalizer::load_json(const nlohmann::json& doc) {
  count_ = doc.at("count").get<std::array<std::uint64_t, kKinds>>();
  mean_ = doc.at("mean").get<std::array<double, kKinds>>();
  m2_ = doc.at("m2").get<std::array<double, kKinds>>();
}

}  // namespace layermig::rl
