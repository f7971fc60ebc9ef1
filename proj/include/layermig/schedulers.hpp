#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "layermig/catalog.hpp"
#include "layermig/domain.hpp"
#include "layermig/random.hpp"
#include "layermig/sim.hpp"

namespace layermig {

struct NodeScore {
  Target target;
  double score = 0.0;  // higher is better
};

// Edge members of a feasible set; if there are none, just the cloud.
std::vector<Target> edge_candidates(std::span<const Target> feasible);

// Uniform pick.
Target monkey(std::span<const Target> feasible, Rng& rng);

// Image locality at whole-image granularity: 1 when every layer of the
// container's image is stored on the node, else 0.
double kube_score(const LayerStore& store, ContainerId container, const LayerCatalog& catalog);

// Fraction of the container's layer bytes already stored on the node.
double dep_soft_score(const LayerStore& store, ContainerId container, const LayerCatalog& catalog);

// Uniform among scores >= threshold * max; argmax (lowest id) if none qualify.
Target dep_soft_select(std::span<const NodeScore> scores, double threshold, Rng& rng);

// Negated estimated download time of the container's missing layers,
// including the wait behind the node's current queue.
double down_score(const LayerStore& store, double bandwidth_mbps, ContainerId container, const LayerCatalog& catalog);

// Highest score; ties go to the lowest node id, the cloud last.
Target argmax(std::span<const NodeScore> scores);

class MonkeyPolicy final : public Policy {
 public:
  std::string name() const override { return "monkey"; }
  void reset(std::uint64_t seed) override;
  Target decide(const Simulator& sim, const Task& task, std::span<const Target> feasible) override;

 private:
  Rng rng_;
};

class KubePolicy final : public Policy {
 public:
  std::string name() const override { return "kube"; }
  Target decide(const Simulator& sim, const Task& task, std::span<const Target> feasible) override;
};

class DepSoftPolicy final : public Policy {
 public:
  explicit DepSoftPolicy(double threshold = 0.8);
  std::string name() const override { return "dep_soft"; }
  void reset(std::uint64_t seed) override;
  Target decide(const Simulator& sim, const Task& task, std::span<const Target> feasible) override;

 private:
  double threshold_;
  Rng rng_;
};

class DownPolicy final : public Policy {
 public:
  std::string name() const override { return "down"; }
  Target decide(const Simulator& sim, const Task& task, std::span<const Target> feasible) override;
};

}  // namespace layermig
