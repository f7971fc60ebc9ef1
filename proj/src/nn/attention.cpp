#include "layermig/nn/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace layermig::nn {

namespace {

Matrix row_softmax(const Matrix& s) {
  Matrix a(s.rows(), s.cols());
  for (Eigen::Index r = 0; r < s.rows(); ++r) a.row(r) = softmax(s.row(r).transpose()).transpose();
  return a;
}

}  // namespace

MultiHeadAttention::MultiHeadAttention(ParamStore& store, const std::string& name, Eigen::Index d_model, int heads,
                                       Rng& rng)
    : d_model_(d_model), heads_(heads) {
  if (heads <= 0 || d_model % heads != 0) {
    throw std::invalid_argument("attention: model width " + std::to_string(d_model) + " is not divisible by " +
                                std::to_string(heads) + " heads");
  }
  wq_ = &store.add_matrix(name + ".wq", d_model, d_model, rng);
  wk_ = &store.add_matrix(name + ".wk", d_model, d_model, rng);
  wv_ = &store.add_matrix(name + ".wv", d_model, d_model, rng);
  wo_ = &store.add_matrix(name + ".wo", d_model, d_model, rng);
}

Matrix MultiHeadAttention::forward(const Matrix& q_in, const Matrix& k_in, const Matrix& v_in,
                                   AttentionCache& c) const {
  if (q_in.cols() != d_model_ || k_in.cols() != d_model_ || v_in.cols() != d_model_) {
    throw std::invalid_argument("attention: inputs " + shape_string(q_in) + ", " + shape_string(k_in) + ", " +
                                shape_string(v_in) + " must have " + std::to_string(d_model_) + " columns");
  }
  if (k_in.rows() != v_in.rows() || k_in.rows() == 0) {
    throw std::invalid_argument("attention: keys " + shape_string(k_in) + " and values " + shape_string(v_in) +
                                " need the same non-zero token count");
  }
  require_finite(q_in, "attention query");
  require_finite(k_in, "attention key");
  require_finite(v_in, "attention value");
  const Eigen::Index dk = d_model_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  c.q_in = q_in;
  c.k_in = k_in;
  c.v_in = v_in;
  c.q = q_in * wq_->value.transpose();
  c.k = k_in * wk_->value.transpose();
  c.v = v_in * wv_->value.transpose();
  c.weights.assign(static_cast<std::size_t>(heads_), Matrix());
  c.concat.resize(q_in.rows(), d_model_);
  for (int h = 0; h < heads_; ++h) {
    const Eigen::Index off = h * dk;
    const Matrix s = c.q.middleCols(off, dk) * c.k.middleCols(off, dk).transpose() * scale;
    c.weights[static_cast<std::size_t>(h)] = row_softmax(s);
    c.concat.middleCols(off, dk) = c.weights[static_cast<std::size_t>(h)] * c.v.middleCols(off, dk);
  }
  return c.concat * wo_->value.transpose();
}

AttentionGrads MultiHeadAttention::backward(const Matrix& dout, const AttentionCache& c) {
  const Eigen::Index dk = d_model_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  wo_->grad += dout.transpose() * c.concat;
  const Matrix dconcat = dout * wo_->value;
  Matrix dq = Matrix::Zero(c.q.rows(), d_model_);
  Matrix dk_ = Matrix::Zero(c.k.rows(), d_model_);
  Matrix dv = Matrix::Zero(c.v.rows(), d_model_);
  for (int h = 0; h < heads_; ++h) {
    const Eigen::Index off = h * dk;
    const Matrix& a = c.weights[static_cast<std::size_t>(h)];
    const Matrix dh = dconcat.middleCols(off, dk);
    const Matrix da = dh * c.v.middleCols(off, dk).transpose();
    dv.middleCols(off, dk) = a.transpose() * dh;
    const Vector inner = da.cwiseProduct(a).rowwise().sum();
    const Matrix ds = a.cwiseProduct(da.colwise() - inner) * scale;
    dq.middleCols(off, dk) = ds * c.k.middleCols(off, dk);
    dk_.middleCols(off, dk) = ds.transpose() * c.q.middleCols(off, dk);
  }
  wq_->grad += dq.transpose() * c.q_in;
  wk_->grad += dk_.transpose() * c.k_in;
  wv_->grad += dv.transpose() * c.v_in;
  AttentionGrads g;
  g.dq_in = dq * wq_->value;
  g.dk_in = dk_ * wk_->value;
  g.dv_in = dv * wv_->value;
  return g;
}

}  // namespace layermig::nn
