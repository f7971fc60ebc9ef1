#include "layermig/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace layermig::nn {

Matrix dense_forward(const Matrix& x, const Matrix& w, const Vector& b, Activation f, DenseCache* cache) {
  if (x.cols() != w.cols()) {
    throw std::invalid_argument("dense: input " + shape_string(x) + " does not match weight " + shape_string(w));
  }
  if (b.size() != 0 && b.size() != w.rows()) {
    throw std::invalid_argument("dense: bias " + shape_string(Matrix(b)) + " does not match weight " + shape_string(w));
  }
  require_finite(x, "dense input");
  Matrix z = x * w.transpose();
  if (b.size() != 0) z.rowwise() += b.transpose();
  if (cache) {
    cache->x = x;
    cache->z = z;
  }
  if (f == Activation::kRelu) return z.cwiseMax(0.0);
  return z;
}

DenseGrads dense_backward(const Matrix& dy, const Matrix& w, Activation f, const DenseCache& cache) {
  if (dy.rows() != cache.z.rows() || dy.cols() != cache.z.cols()) {
    throw std::invalid_argument("dense backward: gradient " + shape_string(dy) + " does not match output " +
                                shape_string(cache.z));
  }
  Matrix dz = dy;
  if (f == Activation::kRelu) dz = (cache.z.array() > 0.0).select(dy, 0.0);
  DenseGrads g;
  g.dw = dz.transpose() * cache.x;
  g.db = dz.colwise().sum().transpose();
  g.dx = dz * w;
  return g;
}

Matrix cross_forward(const Matrix& x0, const Matrix& xl, const Vector& w, const Vector& b, CrossCache* cache) {
  if (x0.rows() != xl.rows() || x0.cols() != xl.cols() || w.size() != xl.cols() || b.size() != xl.cols()) {
    throw std::invalid_argument("cross: x0 " + shape_string(x0) + ", xl " + shape_string(xl) + ", w " +
                                shape_string(Matrix(w)) + ", b " + shape_string(Matrix(b)) + " must share one width");
  }
  require_finite(xl, "cross input");
  const Vector s = xl * w;
  Matrix y = x0.array().colwise() * s.array();
  y.rowwise() += b.transpose();
  y += xl;
  if (cache) {
    cache->x0 = x0;
    cache->xl = xl;
    cache->s = s;
  }
  return y;
}

CrossGrads cross_backward(const Matrix& dy, const Vector& w, const CrossCache& cache) {
  CrossGrads g;
  g.dx0 = dy.array().colwise() * cache.s.array();
  const Vector ds = dy.cwiseProduct(cache.x0).rowwise().sum();
  g.dw = cache.xl.transpose() * ds;
  g.dxl = dy + ds * w.transpose();
  g.db = dy.colwise().sum().transpose();
  return g;
}

Dense::Dense(ParamStore& store, const std::string& name, Eigen::Index in, Eigen::Index out, Activation f, bool bias,
             Rng& rng, double init_scale)
    : f_(f) {
  w_ = &store.add_matrix(name + ".w", out, in, rng, init_scale);
  if (bias) b_ = &store.add_vector(name + ".b", out);
}

Matrix Dense::forward(const Matrix& x, DenseCache& cache) const {
  return dense_forward(x, w_->value, b_ ? Vector(b_->value.col(0)) : Vector(), f_, &cache);
}

Matrix Dense::forward(const Matrix& x) const {
  return dense_forward(x, w_->value, b_ ? Vector(b_->value.col(0)) : Vector(), f_, nullptr);
}

Matrix Dense::backward(const Matrix& dy, const DenseCache& cache) {
  DenseGrads g = dense_backward(dy, w_->value, f_, cache);
  w_->grad += g.dw;
  if (b_) b_->grad.col(0) += g.db;
  return std::move(g.dx);
}

Cross::Cross(ParamStore& store, const std::string& name, Eigen::Index dim, Rng& rng) {
  w_ = &store.add_matrix(name + ".w", dim, 1, rng);
  // add_matrix scales by 1/sqrt(cols) = 1; use the fan-in of the dot product.
  w_->value /= std::sqrt(static_cast<double>(dim));
  w_->is_vector = true;
  b_ = &store.add_vector(name + ".b", dim);
}

Matrix Cross::forward(const Matrix& x0, const Matrix& xl, CrossCache& cache) const {
  return cross_forward(x0, xl, w_->value.col(0), b_->value.col(0), &cache);
}

std::pair<Matrix, Matrix> Cross::backward(const Matrix& dy, const CrossCache& cache) {
  CrossGrads g = cross_backward(dy, w_->value.col(0), cache);
  w_->grad.col(0) += g.dw;
  b_->grad.col(0) += g.db;
  return {std::move(g.dx0), std::move(g.dxl)};
}

}  // namespace layermig::nn
