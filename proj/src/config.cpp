#include "layermig/config.hpp"

#include <cmath>
#include <stdexcept>

namespace layermig {

using nlohmann::json;

namespace {

void require(bool ok, const std::string& field, const std::string& rule) {
  if (!ok) throw std::invalid_argument("config." + field + " " + rule);
}

void require_range(const Range& r, const std::string& field, bool allow_zero = false) {
  require(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi, field, "must satisfy lo <= hi");
  require(allow_zero ? r.lo >= 0.0 : r.lo > 0.0, field, allow_zero ? "must be >= 0" : "must be > 0");
}

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

void read_range(const json& doc, const char* key, Range& out) {
  if (!doc.contains(key)) return;
  const json& v = doc.at(key);
  if (v.is_number()) {
    out.lo = out.hi = v.get<double>();
  } else {
    if (!v.is_array() || v.size() != 2) throw std::invalid_argument(std::string("config.") + key + " must be [lo, hi]");
    out.lo = v[0].get<double>();
    out.hi = v[1].get<double>();
  }
}

template <typename T>
void read(const json& doc, const char* key, T& out) {
  if (doc.contains(key)) out = doc.at(key).get<T>();
}

}  // namespace

void validate(const SimConfig& c) {
  require(c.num_nodes >= 1, "num_nodes", "must be >= 1");
  require(c.coverage_radius_cells >= 0, "coverage_radius_cells", "must be >= 0");
  require(c.node_cpu_ghz > 0.0, "node_cpu_ghz", "must be > 0");
  require_range(c.node_storage_gb, "node_storage_gb");
  require_range(c.node_bandwidth_mbps, "node_bandwidth_mbps");
  require(c.max_containers >= 1, "max_containers", "must be >= 1");
  require(c.cloud_cpu_ghz > 0.0, "cloud_cpu_ghz", "must be > 0");
  require(c.cloud_bandwidth_mbps > 0.0, "cloud_bandwidth_mbps", "must be > 0");
  require(c.cloud_hop_distance >= 0, "cloud_hop_distance", "must be >= 0");
  require(!c.uplink_table_mbps.empty(), "uplink_table_mbps", "must not be empty");
  for (double r : c.uplink_table_mbps) require(r > 0.0, "uplink_table_mbps", "entries must be > 0");
  require_range(c.sigma_migr, "sigma_migr");
  require_range(c.eta_migr_mbps, "eta_migr_mbps");
  require_range(c.eta_bh_mbps, "eta_bh_mbps");
  require(c.sigma_bh > 0.0, "sigma_bh", "must be > 0");
  require(c.sigma_wait > 0.0, "sigma_wait", "must be > 0");
  require(c.sigma_mem > 0.0 && c.sigma_mem < 1.0, "sigma_mem", "must lie in (0, 1)");
  require(c.sigma_cpu > 0.0 && c.sigma_cpu < 1.0, "sigma_cpu", "must lie in (0, 1)");
  require(c.slice_seconds > 0.0, "slice_seconds", "must be > 0");
  require(c.poisson_rate >= 0.0, "poisson_rate", "must be >= 0");
  require(c.task_budget >= 0, "task_budget", "must be >= 0");
  require(c.max_slices >= 1, "max_slices", "must be >= 1");
  require_range(c.offload_mb, "offload_mb", true);
  require_range(c.service_mb, "service_mb", true);
  require_range(c.kappa, "kappa", true);
  require_range(c.cpu_demand_ghz, "cpu_demand_ghz", true);
  require(c.cpu_jitter >= 0.0 && c.cpu_jitter < 1.0, "cpu_jitter", "must lie in [0, 1)");
  require(c.num_users >= 1 || !c.trace_path.empty(), "num_users", "must be >= 1");
  require(c.user_speed_cells >= 0.0, "user_speed_cells", "must be >= 0");
  validate(c.catalog);
}

json to_json(const SimConfig& c) {
  return json{
      {"num_nodes", c.num_nodes},
      {"coverage_radius_cells", c.coverage_radius_cells},
      {"node_cpu_ghz", c.node_cpu_ghz},
      {"node_storage_gb", range_json(c.node_storage_gb)},
      {"node_bandwidth_mbps", range_json(c.node_bandwidth_mbps)},
      {"max_containers", c.max_containers},
      {"cloud_cpu_ghz", c.cloud_cpu_ghz},
      {"cloud_bandwidth_mbps", c.cloud_bandwidth_mbps},
      {"cloud_hop_distance", c.cloud_hop_distance},
      {"uplink_table_mbps", c.uplink_table_mbps},
      {"sigma_migr", range_json(c.sigma_migr)},
      {"eta_migr_mbps", range_json(c.eta_migr_mbps)},
      {"eta_bh_mbps", range_json(c.eta_bh_mbps)},
      {"sigma_bh", c.sigma_bh},
      {"sigma_wait", c.sigma_wait},
      {"sigma_mem", c.sigma_mem},
      {"sigma_cpu", c.sigma_cpu},
      {"storage_check", c.storage_check == StorageCheck::kOccupancy ? "occupancy" : "missing_bytes"},
      {"slice_seconds", c.slice_seconds},
      {"poisson_rate", c.poisson_rate},
      {"task_budget", c.task_budget},
      {"max_slices", c.max_slices},
      {"offload_mb", range_json(c.offload_mb)},
      {"service_mb", range_json(c.service_mb)},
      {"kappa", range_json(c.kappa)},
      {"cpu_demand_ghz", range_json(c.cpu_demand_ghz)},
      {"cpu_jitter", c.cpu_jitter},
      {"num_users", c.num_users},
      {"user_speed_cells", c.user_speed_cells},
      {"trace_path", c.trace_path},
      {"trace_region",
       {{"lat_min", c.trace_region.lat_min},
        {"lat_max", c.trace_region.lat_max},
        {"lon_min", c.trace_region.lon_min},
        {"lon_max", c.trace_region.lon_max}}},
      {"trace_max_gap_s", c.trace_max_gap_s},
      {"catalog",
       {{"num_layers", c.catalog.num_layers},
        {"num_images", c.catalog.num_images},
        {"min_layers_per_image", c.catalog.min_layers_per_image},
        {"max_layers_per_image", c.catalog.max_layers_per_image},
        {"min_layer_mb", c.catalog.min_layer_mb},
        {"max_image_mb", c.catalog.max_image_mb},
        {"popularity_skew", c.catalog.popularity_skew}}},
      {"rng_seed", c.rng_seed},
  };
}

void merge_json(const json& doc, SimConfig& c) {
  if (!doc.is_object()) throw std::invalid_argument("config document must be a JSON object");
  read(doc, "num_nodes", c.num_nodes);
  read(doc, "coverage_radius_cells", c.coverage_radius_cells);
  read(doc, "node_cpu_ghz", c.node_cpu_ghz);
  read_range(doc, "node_storage_gb", c.node_storage_gb);
  read_range(doc, "node_bandwidth_mbps", c.node_bandwidth_mbps);
  read(doc, "max_containers", c.max_containers);
  read(doc, "cloud_cpu_ghz", c.cloud_cpu_ghz);
  read(doc, "cloud_bandwidth_mbps", c.cloud_bandwidth_mbps);
  read(doc, "cloud_hop_distance", c.cloud_hop_distance);
  read(doc, "uplink_table_mbps", c.uplink_table_mbps);
  read_range(doc, "sigma_migr", c.sigma_migr);
  read_range(doc, "eta_migr_mbps", c.eta_migr_mbps);
  read_range(doc, "eta_bh_mbps", c.eta_bh_mbps);
  read(doc, "sigma_bh", c.sigma_bh);
  read(doc, "sigma_wait", c.sigma_wait);
  read(doc, "sigma_mem", c.sigma_mem);
  read(doc, "sigma_cpu", c.sigma_cpu);
  if (doc.contains("storage_check")) {
    const auto mode = doc.at("storage_check").get<std::string>();
    if (mode == "occupancy") {
      c.storage_check = StorageCheck::kOccupancy;
    } else if (mode == "missing_bytes") {
      c.storage_check = StorageCheck::kMissingBytes;
    } else {
      throw std::invalid_argument("config.storage_check must be 'occupancy' or 'missing_bytes'");
    }
  }
  read(doc, "slice_seconds", c.slice_seconds);
  read(doc, "poisson_rate", c.poisson_rate);
  read(doc, "task_budget", c.task_budget);
  read(doc, "max_slices", c.max_slices);
  read_range(doc, "offload_mb", c.offload_mb);
  read_range(doc, "service_mb", c.service_mb);
  read_range(doc, "kappa", c.kappa);
  read_range(doc, "cpu_demand_ghz", c.cpu_demand_ghz);
  read(doc, "cpu_jitter", c.cpu_jitter);
  read(doc, "num_users", c.num_users);
  read(doc, "user_speed_cells", c.user_speed_cells);
  read(doc, "trace_path", c.trace_path);
  if (doc.contains("trace_region")) {
    const json& r = doc.at("trace_region");
    read(r, "lat_min", c.trace_region.lat_min);
    read(r, "lat_max", c.trace_region.lat_max);
    read(r, "lon_min", c.trace_region.lon_min);
    read(r, "lon_max", c.trace_region.lon_max);
  }
  read(doc, "trace_max_gap_s", c.trace_max_gap_s);
  if (doc.contains("catalog")) {
    const json& k = doc.at("catalog");
    read(k, "num_layers", c.catalog.num_layers);
    read(k, "num_images", c.catalog.num_images);
    read(k, "min_layers_per_image", c.catalog.min_layers_per_image);
    read(k, "max_layers_per_image", c.catalog.max_layers_per_image);
    read(k, "min_layer_mb", c.catalog.min_layer_mb);
    read(k, "max_image_mb", c.catalog.max_image_mb);
    read(k, "popularity_skew", c.catalog.popularity_skew);
  }
  read(doc, "rng_seed", c.rng_seed);
}

SimConfig toy_config() {
  SimConfig c;
  c.num_nodes = 3;
  c.coverage_radius_cells = 2;
  c.node_cpu_ghz = 512.0;
  c.node_bandwidth_mbps = {40.0, 80.0};
  c.catalog.num_layers = 20;
  c.catalog.num_images = 8;
  c.catalog.min_layers_per_image = 2;
  c.catalog.max_layers_per_image = 6;
  c.catalog.popularity_skew = 1.2;
  c.task_budget = 60;
  c.poisson_rate = 2.0;
  c.num_users = 12;
  return c;
}

}  // namespace layermig
