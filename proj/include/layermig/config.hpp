#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "layermig/catalog.hpp"
#include "layermig/mobility.hpp"
#include "layermig/random.hpp"

namespace layermig {

// Closed interval sampled uniformly; lo == hi yields a constant.
struct Range {
  double lo = 0.0;
  double hi = 0.0;

  double sample(Rng& rng) const { return lo == hi ? lo : rng.uniform(lo, hi); }
  bool operator==(const Range&) const = default;
};

enum class StorageCheck {
  // Bytes stored, queued and newly required after placement, excluding layers
  // that could be evicted, must stay under sigma_mem * d_n.
  kOccupancy,
  // Literal reading: bytes of catalog layers absent from the node after
  // placement must stay under sigma_mem * d_n.
  kMissingBytes,
};

struct SimConfig {
  // Topology.
  int num_nodes = 9;
  int coverage_radius_cells = 1;
  double node_cpu_ghz = 128.0;
  Range node_storage_gb{30.0, 100.0};
  Range node_bandwidth_mbps{800.0, 1024.0};
  int max_containers = 30;
  double cloud_cpu_ghz = 128.0;
  double cloud_bandwidth_mbps = 1000.0;
  int cloud_hop_distance = 6;
  std::vector<double> uplink_table_mbps{60.0, 48.0, 36.0, 24.0, 12.0};

  // Delay model. Ranges are redrawn every slice.
  Range sigma_migr{1.0, 3.0};         // s/hop
  Range eta_migr_mbps{800.0, 1024.0};
  Range eta_bh_mbps{400.0, 600.0};
  double sigma_bh = 0.02;             // s/hop
  double sigma_wait = 1.0;            // s/slice
  double sigma_mem = 0.8;
  double sigma_cpu = 0.8;
  StorageCheck storage_check = StorageCheck::kOccupancy;

  // Workload.
  double slice_seconds = 10.0;
  double poisson_rate = 2.0;          // arrivals per slice
  int task_budget = 200;              // arrivals stop after this many tasks
  int max_slices = 2000;              // hard horizon
  Range offload_mb{0.05, 5.0};
  Range service_mb{0.5, 100.0};
  Range kappa{200.0, 10000.0};        // cycles/bit
  Range cpu_demand_ghz{2.0, 12.0};
  double cpu_jitter = 0.25;           // running demand redrawn in p * [1-j, 1+j]

  // Mobility.
  int num_users = 40;
  double user_speed_cells = 0.2;      // cells per slice, random waypoint
  std::string trace_path;             // when set, users come from this trace
  TraceRegion trace_region;
  double trace_max_gap_s = 600.0;

  CatalogConfig catalog;
  std::uint64_t rng_seed = 1;         // scenario seed: catalog and node hardware
};

// Throws std::invalid_argument naming the offending field.
void validate(const SimConfig& config);

nlohmann::json to_json(const SimConfig& config);
// Fields missing from the document keep the values already in `config`.
void merge_json(const nlohmann::json& doc, SimConfig& config);

// Small three-node scenario with a skewed 20-layer catalog and slow registry
// links, used for learning experiments where placement quality dominates.
SimConfig toy_config();

}  // namespace layermig
