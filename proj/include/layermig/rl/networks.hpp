#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "layermig/nn/attention.hpp"
#include "layermig/nn/layers.hpp"
#include "layermig/nn/param_store.hpp"
#include "layermig/rl/observation.hpp"

namespace layermig::rl {

using nn::Matrix;
using nn::Vector;

struct NetworkConfig {
  int embed_dim = 32;
  int cross_layers = 2;
  std::vector<int> deep_layers{128, 128};
  double head_init_scale = 0.01;
  int value_model_dim = 32;
  int value_heads = 4;
  int value_hidden = 64;
};

// A minibatch of (already normalized) observations.
struct ObsBatch {
  Matrix dense;                 // (B x dense_len)
  std::vector<Matrix> sparse;   // per block, (B x layers)
  std::vector<std::vector<std::uint8_t>> masks;

  std::size_t size() const { return static_cast<std::size_t>(dense.rows()); }
};

ObsBatch make_batch(const ObservationLayout& layout, std::span<const Observation* const> obs);
ObsBatch make_batch(const ObservationLayout& layout, const Observation& obs);

// Deep & cross policy: layer inventories pass through a shared linear
// embedding, are concatenated with the dense features into x0, fed to a
// cross stack and a ReLU stack in parallel, and the two outputs are joined
// by a linear head producing one logit per action.
class PolicyNetwork {
 public:
  PolicyNetwork(ObservationLayout layout, const NetworkConfig& config, Rng& rng);

  struct Cache {
    Matrix x0;
    std::vector<nn::CrossCache> cross;
    std::vector<nn::DenseCache> deep;
    nn::DenseCache head;
    Eigen::Index cross_width = 0;
  };

  Matrix logits(const ObsBatch& batch, Cache* cache = nullptr) const;
  // Row-wise masked softmax of logits(); masked actions get exactly 0.
  Matrix probabilities(const ObsBatch& batch) const;
  // Accumulates gradients given dL/dlogits.
  void backward(const ObsBatch& batch, const Matrix& dlogits, const Cache& cache);

  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }
  const ObservationLayout& layout() const { return layout_; }
  Eigen::Index input_width() const { return input_width_; }

 private:
  ObservationLayout layout_;
  nn::ParamStore store_;
  nn::Parameter* embed_ = nullptr;
  std::vector<nn::Cross> cross_;
  std::vector<nn::Dense> deep_;
  nn::Dense head_;
  Eigen::Index input_width_ = 0;
};

// Attention critic: each target block becomes a token from its dense
// features plus its embedded inventory, the task becomes one more token, a
// residual multi-head self-attention mixes them, and the mean token feeds a
// small MLP producing V(s).
class ValueNetwork {
 public:
  ValueNetwork(ObservationLayout layout, const NetworkConfig& config, Rng& rng);

  struct SampleCache {
    Matrix tokens_in;  // pre-projection, node rows first then the task row
    nn::AttentionCache attention;
  };
  struct Cache {
    nn::DenseCache node_proj;
    nn::DenseCache task_proj;
    std::vector<SampleCache> samples;
    Matrix node_raw;  // (B*targets x 7+embed)
    Matrix task_raw;  // (B x 5+embed)
    nn::DenseCache hidden;
    nn::DenseCache out;
  };

  Vector values(const ObsBatch& batch, Cache* cache = nullptr) const;
  void backward(const ObsBatch& batch, const Vector& dvalues, const Cache& cache);

  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }

 private:
  ObservationLayout layout_;
  nn::ParamStore store_;
  nn::Parameter* embed_ = nullptr;
  nn::Dense node_proj_;
  nn::Dense task_proj_;
  nn::MultiHeadAttention attention_;
  nn::Dense hidden_;
  nn::Dense out_;
  Eigen::Index d_ = 0;
};

}  // namespace layermig::rl
