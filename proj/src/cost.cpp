#include "layermig/cost.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace layermig::cost {

namespace {

void require_non_negative(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw std::domain_error(std::string(name) + " must be a finite value >= 0");
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::domain_error(std::string(name) + " must be a finite value > 0");
}

}  // namespace

double movement_delay(double service_size_mb, double eta_migr_mbps, double sigma_migr, int hops) {
  require_non_negative(service_size_mb, "service_size_mb");
  require_positive(eta_migr_mbps, "eta_migr_mbps");
  require_non_negative(sigma_migr, "sigma_migr");
  if (hops < 0) throw std::domain_error("hops must be >= 0");
  if (hops == 0) return 0.0;
  return service_size_mb * kMegabitsPerMegabyte / eta_migr_mbps + sigma_migr * hops;
}

std::vector<double> layer_completion_times(std::span<const LayerId> needed, const LayerStore& store,
                                           double bandwidth_mbps, const LayerCatalog& catalog) {
  require_positive(bandwidth_mbps, "bandwidth_mbps");
  for (LayerId l : needed) {
    if (l >= catalog.num_layers()) throw std::out_of_range("unknown layer id " + std::to_string(l));
  }
  // Finish time of everything already queued, in queue order.
  std::vector<std::pair<LayerId, double>> queued;
  double clock = 0.0;
  for (const auto& q : store.queue()) {
    clock += q.remaining_mb * kMegabitsPerMegabyte / bandwidth_mbps;
    queued.emplace_back(q.layer, clock);
  }
  std::vector<double> times;
  times.reserve(needed.size());
  std::vector<LayerId> appended;
  std::vector<double> appended_finish;
  for (LayerId l : needed) {
    if (store.has(l)) {
      times.push_back(0.0);
      continue;
    }
    auto it = std::find_if(queued.begin(), queued.end(), [l](const auto& q) { return q.first == l; });
    if (it != queued.end()) {
      times.push_back(it->second);
      continue;
    }
    auto again = std::find(appended.begin(), appended.end(), l);
    if (again != appended.end()) {
      times.push_back(appended_finish[static_cast<std::size_t>(again - appended.begin())]);
      continue;
    }
    clock += catalog.layer_size_mb(l) * kMegabitsPerMegabyte / bandwidth_mbps;
    appended.push_back(l);
    appended_finish.push_back(clock);
    times.push_back(clock);
  }
  return times;
}

double download_delay(std::span<const LayerId> needed, const LayerStore& store, double bandwidth_mbps,
                      const LayerCatalog& catalog) {
  const auto times = layer_completion_times(needed, store, bandwidth_mbps, catalog);
  double worst = 0.0;
  for (double t : times) worst = std::max(worst, t);
  return worst;
}

double download_delay(std::span<const LayerId> needed, const EdgeNode& node, const LayerCatalog& catalog) {
  return download_delay(needed, node.layers, node.bandwidth_mbps, catalog);
}

double migration_delay(double movement_s, double download_s, int wait_slices, double sigma_wait) {
  require_non_negative(movement_s, "movement_s");
  require_non_negative(download_s, "download_s");
  require_non_negative(sigma_wait, "sigma_wait");
  if (wait_slices < 0) throw std::domain_error("wait_slices must be >= 0");
  return std::max(movement_s, download_s) + sigma_wait * wait_slices;
}

double computation_delay_cycles(double task_cycles, double load_cycles, double cpu_ghz) {
  require_non_negative(task_cycles, "task_cycles");
  require_non_negative(load_cycles, "load_cycles");
  require_positive(cpu_ghz, "cpu_ghz");
  return (load_cycles + task_cycles) / (cpu_ghz * 1e9);
}

double computation_delay(double task_size_mb, double kappa, double node_load_cycles, double cpu_ghz) {
  require_non_negative(task_size_mb, "task_size_mb");
  require_non_negative(kappa, "kappa");
  return computation_delay_cycles(task_cycles(task_size_mb, kappa), node_load_cycles, cpu_ghz);
}

double access_delay(double task_size_mb, double uplink_mbps) {
  require_non_negative(task_size_mb, "task_size_mb");
  require_positive(uplink_mbps, "uplink_mbps");
  return task_size_mb * kMegabitsPerMegabyte / uplink_mbps;
}

double deployment_delay(double task_size_mb, double uplink_mbps, double download_s) {
  require_non_negative(download_s, "download_s");
  return std::max(access_delay(task_size_mb, uplink_mbps), download_s);
}

double backhaul_delay(double task_size_mb, double eta_bh_mbps, double sigma_bh, int hops) {
  require_non_negative(task_size_mb, "task_size_mb");
  require_positive(eta_bh_mbps, "eta_bh_mbps");
  require_non_negative(sigma_bh, "sigma_bh");
  if (hops < 0) throw std::domain_error("hops must be >= 0");
  return task_size_mb * kMegabitsPerMegabyte / eta_bh_mbps + sigma_bh * hops;
}

DelayBreakdown total_task_time(double migration_s, double computation_s, double deployment_s, double backhaul_s) {
  require_non_negative(migration_s, "migration_s");
  require_non_negative(computation_s, "computation_s");
  require_non_negative(deployment_s, "deployment_s");
  require_non_negative(backhaul_s, "backhaul_s");
  DelayBreakdown b;
  b.migration_s = migration_s;
  b.computation_s = computation_s;
  b.deployment_s = deployment_s;
  b.backhaul_s = backhaul_s;
  b.total_s = migration_s + computation_s + deployment_s + backhaul_s;
  return b;
}

}  // namespace layermig::cost
