#pragma once

#include <span>
#include <vector>

#include "layermig/catalog.hpp"
#include "layermig/delay.hpp"
#include "layermig/domain.hpp"

// Delay model. Sizes are in MB, rates in Mbps (8 Mb per MB), CPU in GHz and
// distances in grid hops. All functions are pure and throw std::domain_error
// on negative or otherwise invalid inputs.
namespace layermig::cost {

// Movement of the service state between two nodes. Zero when hops == 0.
double movement_delay(double service_size_mb, double eta_migr_mbps, double sigma_migr, int hops);

// Completion time of each needed layer on a node's download link: 0 for
// layers already stored, the FIFO finish time otherwise. Layers already in
// the queue keep their queued finish time; missing layers are appended in the
// order given.
std::vector<double> layer_completion_times(std::span<const LayerId> needed, const LayerStore& store,
                                           double bandwidth_mbps, const LayerCatalog& catalog);

// Download time D: the latest completion over the needed layers.
double download_delay(std::span<const LayerId> needed, const LayerStore& store, double bandwidth_mbps,
                      const LayerCatalog& catalog);
double download_delay(std::span<const LayerId> needed, const EdgeNode& node, const LayerCatalog& catalog);

// S = max(M, D) + sigma_wait * w, with w = t - t_u in slices.
double migration_delay(double movement_s, double download_s, int wait_slices, double sigma_wait);

// C = (w_t + c_t) / f, cycles over Hz.
double computation_delay_cycles(double task_cycles, double load_cycles, double cpu_ghz);
// Convenience form taking the task size and density; node_load_cycles is the
// summed cycles of the node's running tasks (each with its own density).
double computation_delay(double task_size_mb, double kappa, double node_load_cycles, double cpu_ghz);

// Access delay A = s_k / rho.
double access_delay(double task_size_mb, double uplink_mbps);
// P = max(A, D).
double deployment_delay(double task_size_mb, double uplink_mbps, double download_s);

// B = s_k / eta_bh + sigma_bh * y.
double backhaul_delay(double task_size_mb, double eta_bh_mbps, double sigma_bh, int hops);

// T_k = S + C + P + B.
DelayBreakdown total_task_time(double migration_s, double computation_s, double deployment_s, double backhaul_s);

}  // namespace layermig::cost
