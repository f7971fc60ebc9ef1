#pragma once

// Hand-built scenarios for tests: explicit catalogs, node hardware and
// scripted users, so expected delays can be worked out by hand.

#include <utility>
#include <vector>

#include "layermig/catalog.hpp"
#include "layermig/config.hpp"
#include "layermig/scenario.hpp"
#include "layermig/sim.hpp"

namespace fixtures {

using namespace layermig;

// images[i] lists the layer ids of image i; container i runs image i.
inline LayerCatalog catalog(const std::vector<double>& layer_mb, const std::vector<std::vector<LayerId>>& images) {
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < layer_mb.size(); ++i) layers.push_back({static_cast<LayerId>(i), layer_mb[i]});
  std::vector<Image> imgs;
  std::vector<Container> containers;
  for (std::size_t i = 0; i < images.size(); ++i) {
    imgs.push_back({static_cast<ImageId>(i), images[i]});
    containers.push_back({static_cast<ContainerId>(i), static_cast<ImageId>(i)});
  }
  return LayerCatalog(std::move(layers), std::move(imgs), std::move(containers));
}

struct NodeSpec {
  GridPos position;
  double cpu_ghz = 128.0;
  double bandwidth_mbps = 1000.0;
  double storage_gb = 1.0;
  int max_containers = 30;
  int radius = 1;
};

// Deterministic link conditions (constant ranges) so delays are exact.
inline SimConfig flat_config() {
  SimConfig c;
  c.sigma_migr = {2.0, 2.0};
  c.eta_migr_mbps = {1000.0, 1000.0};
  c.eta_bh_mbps = {500.0, 500.0};
  c.cpu_jitter = 0.0;
  c.cloud_cpu_ghz = 128.0;
  c.cloud_bandwidth_mbps = 100.0;
  c.cloud_hop_distance = 6;
  return c;
}

inline Scenario scenario(SimConfig config, LayerCatalog cat, const std::vector<NodeSpec>& nodes, Grid grid) {
  Scenario s;
  config.num_nodes = static_cast<int>(nodes.size());
  s.config = config;
  s.catalog = std::move(cat);
  s.grid = grid;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    EdgeNode n;
    n.id = static_cast<int>(i) + 1;
    n.position = nodes[i].position;
    n.cpu_ghz = nodes[i].cpu_ghz;
    n.bandwidth_mbps = nodes[i].bandwidth_mbps;
    n.storage_gb = nodes[i].storage_gb;
    n.max_containers = nodes[i].max_containers;
    n.coverage_radius_cells = nodes[i].radius;
    n.layers = LayerStore(s.catalog.num_layers());
    s.initial.nodes.push_back(std::move(n));
  }
  s.initial.cloud.cpu_ghz = config.cloud_cpu_ghz;
  s.initial.cloud.bandwidth_mbps = config.cloud_bandwidth_mbps;
  s.initial.cloud.hop_distance = config.cloud_hop_distance;
  s.initial.cloud.layers = LayerStore(s.catalog.num_layers());
  return s;
}

// A user who stays in one cell, or follows `path` and then holds the last cell.
inline MobileUser user(UserId id, std::vector<GridPos> path) {
  MobileUser u;
  u.id = id;
  u.trajectory = std::move(path);
  return u;
}

// Always answers with a fixed target when feasible, else the cloud.
class FixedPolicy final : public Policy {
 public:
  explicit FixedPolicy(Target t) : target_(t) {}
  std::string name() const override { return "fixed"; }
  Target decide(const Simulator&, const Task&, std::span<const Target> feasible) override {
    for (Target t : feasible) {
      if (t == target_) return t;
    }
    return Target::cloud();
  }
  Target target_;
};

// First member of the feasible set: the lowest covering edge node.
class FirstPolicy final : public Policy {
 public:
  std::string name() const override { return "first"; }
  Target decide(const Simulator&, const Task&, std::span<const Target> feasible) override { return feasible.front(); }
};

// Answers with whatever it is told, feasible or not.
class StubbornPolicy final : public Policy {
 public:
  explicit StubbornPolicy(Target t) : target_(t) {}
  std::string name() const override { return "stubborn"; }
  Target decide(const Simulator&, const Task&, std::span<const Target>) override { return target_; }
  Target target_;
};

}  // namespace fixtures
