#include "layermig/schedulers.hpp"

#include <stdexcept>

#include "layermig/cost.hpp"

namespace layermig {

namespace {

constexpr std::uint64_t kPolicyStream = 0x9011C7;

const EdgeNode& node_of(const Simulator& sim, Target t) { return sim.state().infra.nodes.at(t.node()); }

}  // namespace

std::vector<Target> edge_candidates(std::span<const Target> feasible) {
  std::vector<Target> out;
  for (Target t : feasible) {
    if (!t.is_cloud()) out.push_back(t);
  }
  if (out.empty()) out.push_back(Target::cloud());
  return out;
}

Target monkey(std::span<const Target> feasible, Rng& rng) {
  if (feasible.empty()) throw std::invalid_argument("monkey: empty candidate set");
  return feasible[rng.index(feasible.size())];
}

double kube_score(const LayerStore& store, ContainerId container, const LayerCatalog& catalog) {
  for (LayerId l : catalog.container_layers(container)) {
    if (!store.has(l)) return 0.0;
  }
  return 1.0;
}

double dep_soft_score(const LayerStore& store, ContainerId container, const LayerCatalog& catalog) {
  double local = 0.0;
  double total = 0.0;
  for (LayerId l : catalog.container_layers(container)) {
    const double mb = catalog.layer_size_mb(l);
    total += mb;
    if (store.has(l)) local += mb;
  }
  return total > 0.0 ? local / total : 0.0;
}

Target argmax(std::span<const NodeScore> scores) {
  if (scores.empty()) throw std::invalid_argument("argmax: no scores");
  const NodeScore* best = &scores[0];
  for (const NodeScore& s : scores) {
    if (s.score > best->score || (s.score == best->score && s.target < best->target)) best = &s;
  }
  return best->target;
}

Target dep_soft_select(std::span<const NodeScore> scores, double threshold, Rng& rng) {
  if (scores.empty()) throw std::invalid_argument("dep_soft_select: no scores");
  if (threshold < 0.0 || threshold > 1.0) throw std::invalid_argument("dep_soft_select: threshold outside [0, 1]");
  double max_score = scores[0].score;
  for (const NodeScore& s : scores) max_score = std::max(max_score, s.score);
  std::vector<Target> pool;
  for (const NodeScore& s : scores) {
    if (s.score >= threshold * max_score) pool.push_back(s.target);
  }
  if (pool.empty()) return argmax(scores);
  return pool[rng.index(pool.size())];
}

double down_score(const LayerStore& store, double bandwidth_mbps, ContainerId container, const LayerCatalog& catalog) {
  return -cost::download_delay(catalog.container_layers(container), store, bandwidth_mbps, catalog);
}

void MonkeyPolicy::reset(std::uint64_t seed) { rng_ = Rng(derive_seed(seed, kPolicyStream)); }

Target MonkeyPolicy::decide(const Simulator&, const Task&, std::span<const Target> feasible) {
  return monkey(edge_candidates(feasible), rng_);
}

Target KubePolicy::decide(const Simulator& sim, const Task& task, std::span<const Target> feasible) {
  const auto candidates = edge_candidates(feasible);
  if (candidates.front().is_cloud()) return candidates.front();
  std::vector<NodeScore> scores;
  for (Target t : candidates) {
    scores.push_back({t, kube_score(node_of(sim, t).layers, task.container, sim.scenario().catalog)});
  }
  return argmax(scores);
}

DepSoftPolicy::DepSoftPolicy(double threshold) : threshold_(threshold) {
  if (threshold < 0.0 || threshold > 1.0) throw std::invalid_argument("dep_soft threshold must lie in [0, 1]");
}

void DepSoftPolicy::reset(std::uint64_t seed) { rng_ = Rng(derive_seed(seed, kPolicyStream)); }

Target DepSoftPolicy::decide(const Simulator& sim, const Task& task, std::span<const Target> feasible) {
  const auto candidates = edge_candidates(feasible);
  if (candidates.front().is_cloud()) return candidates.front();
  std::vector<NodeScore> scores;
  for (Target t : candidates) {
    scores.push_back({t, dep_soft_score(node_of(sim, t).layers, task.container, sim.scenario().catalog)});
  }
  return dep_soft_select(scores, threshold_, rng_);
}

Target DownPolicy::decide(const Simulator& sim, const Task& task, std::span<const Target> feasible) {
  const auto candidates = edge_candidates(feasible);
  if (candidates.front().is_cloud()) return candidates.front();
  std::vector<NodeScore> scores;
  for (Target t : candidates) {
    const EdgeNode& n = node_of(sim, t);
    scores.push_back({t, down_score(n.layers, n.bandwidth_mbps, task.container, sim.scenario().catalog)});
  }
  return argmax(scores);
}

}  // namespace layermig
