#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "layermig/sim.hpp"

namespace layermig::rl {

// Dense part: one block per target (edge nodes in order, then the cloud)
//   [x, y, hops to the user, MB of the task's layers still to fetch,
//    MB of running tasks, CPU GHz, registry Mbps]
// followed by the task block
//   [user x, user y, CPU demand GHz, uplink Mbps, total layer MB].
// Sparse part: per target the layer inventory (stored or queued), then the
// task's required-layer indicator. The cloud sits at (-1, -1).
struct ObservationLayout {
  static constexpr std::size_t kNodeFeatures = 7;
  static constexpr std::size_t kTaskFeatures = 5;

  std::size_t nodes = 0;   // edge nodes
  std::size_t layers = 0;  // catalog size

  std::size_t targets() const { return nodes + 1; }
  std::size_t actions() const { return nodes + 1; }
  std::size_t dense_len() const { return kNodeFeatures * targets() + kTaskFeatures; }
  std::size_t sparse_blocks() const { return nodes + 2; }
  std::size_t sparse_len() const { return layers * sparse_blocks(); }

  bool operator==(const ObservationLayout&) const = default;
};

ObservationLayout layout_for(const Scenario& scenario);

struct Observation {
  std::vector<double> dense;
  std::vector<std::uint8_t> sparse;
  std::vector<std::uint8_t> mask;  // per action, 1 = feasible
};

// Raw (unnormalized) encoding of the state as seen by `task`.
Observation encode_state(const Simulator& sim, const Task& task, std::span<const Target> feasible);

// Running mean/variance per feature kind, shared across the target blocks so
// node order does not matter.
class Normalizer {
 public:
  Normalizer() = default;
  explicit Normalizer(ObservationLayout layout);

  void update(std::span<const double> dense);
  std::vector<double> apply(std::span<const double> dense) const;

  bool frozen() const { return frozen_; }
  void set_frozen(bool frozen) { frozen_ = frozen; }

  double mean(std::size_t kind) const { return mean_.at(kind); }
  double variance(std::size_t kind) const;
  std::uint64_t count(std::size_t kind) const { return count_.at(kind); }

  nlohmann::json to_json() const;
  void load_json(const nlohmann::json& doc);

  static constexpr double kClip = 5.0;

 private:
  std::size_t kind_of(std::size_t index) const;
  void observe(std::size_t kind, double x);

  ObservationLayout layout_;
  static constexpr std::size_t kKinds = ObservationLayout::kNodeFeatures + ObservationLayout::kTaskFeatures;
  std::array<std::uint64_t, kKinds> count_{};
  std::array<double, kKinds> mean_{};
  std::array<double, kKinds> m2_{};
  bool frozen_ = false;
};

}  // namespace layermig::rl
