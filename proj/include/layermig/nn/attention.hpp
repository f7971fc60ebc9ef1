#pragma once

#include <string>
#include <vector>

#include "layermig/nn/param_store.hpp"
#include "layermig/nn/tensor.hpp"

namespace layermig::nn {

struct AttentionCache {
  Matrix q_in, k_in, v_in;
  Matrix q, k, v;               // projected, (tokens x d_model)
  std::vector<Matrix> weights;  // per head, (queries x keys), rows sum to 1
  Matrix concat;                // heads side by side before W^O
};

struct AttentionGrads {
  Matrix dq_in, dk_in, dv_in;
};

// Multi-head scaled dot-product attention without biases:
//   head_i = softmax(Q_i K_i^T / sqrt(d_k)) V_i,  out = [head_1 .. head_h] W_O^T
// where Q = q_in W_Q^T etc. and d_k = d_model / heads.
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(ParamStore& store, const std::string& name, Eigen::Index d_model, int heads, Rng& rng);

  Matrix forward(const Matrix& q_in, const Matrix& k_in, const Matrix& v_in, AttentionCache& cache) const;
  Matrix forward(const Matrix& x, AttentionCache& cache) const { return forward(x, x, x, cache); }
  // Accumulates parameter gradients; returns input gradients.
  AttentionGrads backward(const Matrix& dout, const AttentionCache& cache);

  int heads() const { return heads_; }
  Eigen::Index d_model() const { return d_model_; }

 private:
  Parameter* wq_ = nullptr;
  Parameter* wk_ = nullptr;
  Parameter* wv_ = nullptr;
  Parameter* wo_ = nullptr;
  Eigen::Index d_model_ = 0;
  int heads_ = 1;
};

}  // namespace layermig::nn
