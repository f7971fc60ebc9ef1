#pragma once

#include <cstdint>
#include <vector>

#include "layermig/catalog.hpp"
#include "layermig/config.hpp"
#include "layermig/domain.hpp"

namespace layermig {

struct Infrastructure {
  std::vector<EdgeNode> nodes;
  CloudNode cloud;
  // Placements made so far; orders placements and drives layer LRU.
  std::uint64_t placements = 0;
};

// Everything fixed for the lifetime of an experiment: catalog, node
// hardware, and (optionally) trace users. A pure function of the config and
// config.rng_seed; episodes vary only by their own seed.
struct Scenario {
  SimConfig config;
  LayerCatalog catalog;
  Grid grid;
  Infrastructure initial;  // empty layer stores, no running tasks
  std::vector<MobileUser> trace_users;
};

Scenario build_scenario(const SimConfig& config);

// Users for one episode: the trace users if a trace was loaded, otherwise
// seeded random-waypoint walkers covering config.max_slices.
std::vector<MobileUser> episode_users(const Scenario& scenario, std::uint64_t episode_seed);

// Index of the node closest to a cell (lowest index on ties).
std::size_t nearest_node(const Infrastructure& infra, GridPos cell);

// Hops between two targets; the cloud sits cloud_hop_distance away from
// every edge node.
int target_hops(const Infrastructure& infra, Target a, Target b);

}  // namespace layermig
