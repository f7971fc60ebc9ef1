#pragma once

#include <string>

#include "layermig/nn/param_store.hpp"
#include "layermig/nn/tensor.hpp"

// Batched layers: inputs are (batch x features) matrices, one sample per row.
namespace layermig::nn {

enum class Activation { kIdentity, kRelu };

struct DenseCache {
  Matrix x;  // input
  Matrix z;  // pre-activation
};

struct DenseGrads {
  Matrix dx;
  Matrix dw;
  Vector db;
};

// y = f(x W^T + b); W is (out x in). An empty b means no bias.
Matrix dense_forward(const Matrix& x, const Matrix& w, const Vector& b, Activation f, DenseCache* cache = nullptr);
DenseGrads dense_backward(const Matrix& dy, const Matrix& w, Activation f, const DenseCache& cache);

struct CrossCache {
  Matrix x0;
  Matrix xl;
  Vector s;  // xl . w per row
};

struct CrossGrads {
  Matrix dx0;
  Matrix dxl;
  Vector dw;
  Vector db;
};

// x_{l+1} = x0 * (xl . w) + b + xl, row by row.
Matrix cross_forward(const Matrix& x0, const Matrix& xl, const Vector& w, const Vector& b, CrossCache* cache = nullptr);
CrossGrads cross_backward(const Matrix& dy, const Vector& w, const CrossCache& cache);

// Parameterized wrappers that accumulate into a ParamStore's gradients.
class Dense {
 public:
  Dense() = default;
  Dense(ParamStore& store, const std::string& name, Eigen::Index in, Eigen::Index out, Activation f, bool bias,
        Rng& rng, double init_scale = 1.0);

  Matrix forward(const Matrix& x, DenseCache& cache) const;
  Matrix forward(const Matrix& x) const;
  Matrix backward(const Matrix& dy, const DenseCache& cache);

  Eigen::Index in() const { return w_->value.cols(); }
  Eigen::Index out() const { return w_->value.rows(); }

 private:
  Parameter* w_ = nullptr;
  Parameter* b_ = nullptr;
  Activation f_ = Activation::kIdentity;
};

class Cross {
 public:
  Cross() = default;
  Cross(ParamStore& store, const std::string& name, Eigen::Index dim, Rng& rng);

  Matrix forward(const Matrix& x0, const Matrix& xl, CrossCache& cache) const;
  // Returns (dx0, dxl).
  std::pair<Matrix, Matrix> backward(const Matrix& dy, const CrossCache& cache);

 private:
  Parameter* w_ = nullptr;
  Parameter* b_ = nullptr;
};

}  // namespace layermig::nn
