#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "layermig/nn/tensor.hpp"
#include "layermig/random.hpp"

namespace layermig::nn {

struct Parameter {
  std::string name;
  bool is_vector = false;  // rank-1 in checkpoints
  Matrix value;
  Matrix grad;
  Matrix m;  // Adam first moment
  Matrix v;  // Adam second moment
};

struct AdamConfig {
  double lr = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Named parameters with gradient and Adam buffers. Parameters live at
// stable addresses for the lifetime of the store.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;

  // Uniform(-scale/sqrt(fan_in), scale/sqrt(fan_in)) weights.
  Parameter& add_matrix(const std::string& name, Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0);
  Parameter& add_vector(const std::string& name, Eigen::Index size);  // zeros
  Parameter& add(const std::string& name, Matrix value, bool is_vector);

  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<std::unique_ptr<Parameter>>& params() { return params_; }
  const std::vector<std::unique_ptr<Parameter>>& params() const { return params_; }
  std::size_t parameter_count() const;

  void zero_grad();
  double grad_norm() const;
  // Rescales gradients so their global L2 norm is at most max_norm.
  // Returns the norm before clipping.
  double clip_grad_norm(double max_norm);
  void adam_step(const AdamConfig& config);
  std::uint64_t steps() const { return steps_; }
  void reset_optimizer();

  // Values only, as {name, shape, values} entries in insertion order.
  nlohmann::json to_json() const;
  // Names and shapes must match exactly.
  void load_json(const nlohmann::json& doc);
  void copy_values_from(const ParamStore& other);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::uint64_t steps_ = 0;
};

}  // namespace layermig::nn
