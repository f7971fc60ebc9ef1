#include "layermig/scenario.hpp"

#include <stdexcept>

#include "layermig/mobility.hpp"
#include "layermig/random.hpp"

namespace layermig {

Scenario build_scenario(const SimConfig& config) {
  validate(config);
  Scenario s;
  s.config = config;
  s.catalog = generate_catalog(config.catalog, config.rng_seed);
  s.grid = grid_for_nodes(config.num_nodes);

  Rng rng(derive_seed(config.rng_seed, 0x40DE5ULL));
  for (int i = 0; i < config.num_nodes; ++i) {
    EdgeNode node;
    node.id = i + 1;
    node.position = node_cell(s.grid, i);
    node.cpu_ghz = config.node_cpu_ghz;
    node.storage_gb = config.node_storage_gb.sample(rng);
    node.bandwidth_mbps = config.node_bandwidth_mbps.sample(rng);
    node.max_containers = config.max_containers;
    node.coverage_radius_cells = config.coverage_radius_cells;
    node.layers = LayerStore(s.catalog.num_layers());
    s.initial.nodes.push_back(std::move(node));
  }
  s.initial.cloud.cpu_ghz = config.cloud_cpu_ghz;
  s.initial.cloud.bandwidth_mbps = config.cloud_bandwidth_mbps;
  s.initial.cloud.hop_distance = config.cloud_hop_distance;
  s.initial.cloud.layers = LayerStore(s.catalog.num_layers());

  if (!config.trace_path.empty()) {
    TraceOptions options;
    options.region = config.trace_region;
    options.grid = s.grid;
    options.slice_seconds = config.slice_seconds;
    options.max_gap_s = config.trace_max_gap_s;
    s.trace_users = load_trajectories(config.trace_path, options).users;
    if (s.trace_users.empty()) throw std::runtime_error("trace '" + config.trace_path + "' yielded no usable users");
  }
  return s;
}

std::vector<MobileUser> episode_users(const Scenario& scenario, std::uint64_t episode_seed) {
  if (!scenario.trace_users.empty()) return scenario.trace_users;
  Rng rng(derive_seed(episode_seed, 0x05E75ULL));
  return random_waypoint_users(scenario.config.num_users, scenario.grid, scenario.config.max_slices,
                               scenario.config.user_speed_cells, rng);
}

std::size_t nearest_node(const Infrastructure& infra, GridPos cell) {
  if (infra.nodes.empty()) throw std::logic_error("nearest_node: no edge nodes");
  std::size_t best = 0;
  int best_hops = manhattan_hops(infra.nodes[0].position, cell);
  for (std::size_t i = 1; i < infra.nodes.size(); ++i) {
    const int h = manhattan_hops(infra.nodes[i].position, cell);
    if (h < best_hops) {
      best = i;
      best_hops = h;
    }
  }
  return best;
}

int target_hops(const Infrastructure& infra, Target a, Target b) {
  if (a == b) return 0;
  if (a.is_cloud() || b.is_cloud()) return infra.cloud.hop_distance;
  return manhattan_hops(infra.nodes.at(a.node()).position, infra.nodes.at(b.node()).position);
}

}  // namespace layermig
