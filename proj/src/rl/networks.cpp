#include "layermig/rl/networks.hpp"

#include <stdexcept>
#include <string>

namespace layermig::rl {

ObsBatch make_batch(const ObservationLayout& layout, std::span<const Observation* const> obs) {
  ObsBatch b;
  const auto n = static_cast<Eigen::Index>(obs.size());
  const auto L = static_cast<Eigen::Index>(layout.layers);
  b.dense.resize(n, static_cast<Eigen::Index>(layout.dense_len()));
  b.sparse.assign(layout.sparse_blocks(), Matrix(n, L));
  b.masks.reserve(obs.size());
  for (Eigen::Index r = 0; r < n; ++r) {
    const Observation& o = *obs[static_cast<std::size_t>(r)];
    if (o.dense.size() != layout.dense_len() || o.sparse.size() != layout.sparse_len() ||
        o.mask.size() != layout.actions()) {
      throw std::invalid_argument("make_batch: observation does not match the layout (dense " +
                                  std::to_string(o.dense.size()) + ", sparse " + std::to_string(o.sparse.size()) + ")");
    }
    for (Eigen::Index c = 0; c < b.dense.cols(); ++c) b.dense(r, c) = o.dense[static_cast<std::size_t>(c)];
    for (std::size_t blk = 0; blk < layout.sparse_blocks(); ++blk) {
      for (Eigen::Index l = 0; l < L; ++l) b.sparse[blk](r, l) = o.sparse[blk * layout.layers + static_cast<std::size_t>(l)];
    }
    b.masks.push_back(o.mask);
  }
  return b;
}

ObsBatch make_batch(const ObservationLayout& layout, const Observation& obs) {
  const Observation* p = &obs;
  return make_batch(layout, std::span<const Observation* const>(&p, 1));
}

// ---------------------------------------------------------------------------

PolicyNetwork::PolicyNetwork(ObservationLayout layout, const NetworkConfig& config, Rng& rng) : layout_(layout) {
  const auto L = static_cast<Eigen::Index>(layout.layers);
  const Eigen::Index e = config.embed_dim;
  embed_ = &store_.add_matrix("policy.embed", e, L, rng);
  input_width_ = static_cast<Eigen::Index>(layout.dense_len()) + e * static_cast<Eigen::Index>(layout.sparse_blocks());
  for (int i = 0; i < config.cross_layers; ++i) {
    cross_.emplace_back(store_, "policy.cross" + std::to_string(i), input_width_, rng);
  }
  Eigen::Index width = input_width_;
  for (std::size_t i = 0; i < config.deep_layers.size(); ++i) {
    deep_.emplace_back(store_, "policy.deep" + std::to_string(i), width, config.deep_layers[i], nn::Activation::kRelu,
                       true, rng);
    width = config.deep_layers[i];
  }
  head_ = nn::Dense(store_, "policy.head", input_width_ + width, static_cast<Eigen::Index>(layout.actions()),
                    nn::Activation::kIdentity, true, rng, config.head_init_scale);
}

Matrix PolicyNetwork::logits(const ObsBatch& batch, Cache* cache) const {
  const Eigen::Index n = batch.dense.rows();
  const Eigen::Index e = embed_->value.rows();
  const Eigen::Index dd = batch.dense.cols();
  if (dd != static_cast<Eigen::Index>(layout_.dense_len()) || batch.sparse.size() != layout_.sparse_blocks()) {
    throw std::invalid_argument("PolicyNetwork: batch does not match the layout");
  }
  Matrix x0(n, input_width_);
  x0.leftCols(dd) = batch.dense;
  for (std::size_t j = 0; j < batch.sparse.size(); ++j) {
    x0.middleCols(dd + e * static_cast<Eigen::Index>(j), e) = batch.sparse[j] * embed_->value.transpose();
  }
  Cache local;
  Cache& c = cache ? *cache : local;
  c.x0 = x0;
  c.cross.assign(cross_.size(), {});
  c.deep.assign(deep_.size(), {});
  Matrix xl = x0;
  for (std::size_t i = 0; i < cross_.size(); ++i) xl = cross_[i].forward(x0, xl, c.cross[i]);
  Matrix h = x0;
  for (std::size_t i = 0; i < deep_.size(); ++i) h = deep_[i].forward(h, c.deep[i]);
  Matrix joined(n, xl.cols() + h.cols());
  joined << xl, h;
  c.cross_width = xl.cols();
  return head_.forward(joined, c.head);
}

Matrix PolicyNetwork::probabilities(const ObsBatch& batch) const {
  const Matrix z = logits(batch);
  Matrix p(z.rows(), z.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    p.row(r) = nn::masked_softmax(z.row(r).transpose(), batch.masks[static_cast<std::size_t>(r)]).transpose();
  }
  return p;
}

void PolicyNetwork::backward(const ObsBatch& batch, const Matrix& dlogits, const Cache& c) {
  const Matrix djoined = head_.backward(dlogits, c.head);
  Matrix dxl = djoined.leftCols(c.cross_width);
  Matrix dh = djoined.rightCols(djoined.cols() - c.cross_width);
  for (std::size_t i = deep_.size(); i-- > 0;) dh = deep_[i].backward(dh, c.deep[i]);
  Matrix dx0 = dh;
  for (std::size_t i = cross_.size(); i-- > 0;) {
    auto [d0, dprev] = cross_[i].backward(dxl, c.cross[i]);
    dx0 += d0;
    dxl = std::move(dprev);
  }
  dx0 += dxl;
  const Eigen::Index e = embed_->value.rows();
  const Eigen::Index dd = batch.dense.cols();
  for (std::size_t j = 0; j < batch.sparse.size(); ++j) {
    embed_->grad += dx0.middleCols(dd + e * static_cast<Eigen::Index>(j), e).transpose() * batch.sparse[j];
  }
}

// ---------------------------------------------------------------------------

ValueNetwork::ValueNetwork(ObservationLayout layout, const NetworkConfig& config, Rng& rng)
    : layout_(layout), d_(config.value_model_dim) {
  const auto L = static_cast<Eigen::Index>(layout.layers);
  const Eigen::Index e = config.embed_dim;
  embed_ = &store_.add_matrix("value.embed", e, L, rng);
  node_proj_ = nn::Dense(store_, "value.node_proj", ObservationLayout::kNodeFeatures + e, d_, nn::Activation::kIdentity,
                         true, rng);
  task_proj_ = nn::Dense(store_, "value.task_proj", ObservationLayout::kTaskFeatures + e, d_, nn::Activation::kIdentity,
                         true, rng);
  attention_ = nn::MultiHeadAttention(store_, "value.attention", d_, config.value_heads, rng);
  hidden_ = nn::Dense(store_, "value.hidden", d_, config.value_hidden, nn::Activation::kRelu, true, rng);
  out_ = nn::Dense(store_, "value.out", config.value_hidden, 1, nn::Activation::kIdentity, true, rng);
}

Vector ValueNetwork::values(const ObsBatch& batch, Cache* cache) const {
  const Eigen::Index n = batch.dense.rows();
  const auto T = static_cast<Eigen::Index>(layout_.targets());
  const Eigen::Index e = embed_->value.rows();
  const Eigen::Index nf = ObservationLayout::kNodeFeatures;
  const Eigen::Index tf = ObservationLayout::kTaskFeatures;
  if (batch.dense.cols() != static_cast<Eigen::Index>(layout_.dense_len()) ||
      batch.sparse.size() != layout_.sparse_blocks()) {
    throw std::invalid_argument("ValueNetwork: batch does not match the layout");
  }
  Cache local;
  Cache& c = cache ? *cache : local;

  c.node_raw.resize(n * T, nf + e);
  for (Eigen::Index j = 0; j < T; ++j) {
    const Matrix emb = batch.sparse[static_cast<std::size_t>(j)] * embed_->value.transpose();
    for (Eigen::Index b = 0; b < n; ++b) {
      c.node_raw.row(b * T + j) << batch.dense.row(b).segment(j * nf, nf), emb.row(b);
    }
  }
  c.task_raw.resize(n, tf + e);
  c.task_raw << batch.dense.rightCols(tf), batch.sparse.back() * embed_->value.transpose();

  const Matrix node_tok = node_proj_.forward(c.node_raw, c.node_proj);
  const Matrix task_tok = task_proj_.forward(c.task_raw, c.task_proj);

  c.samples.assign(static_cast<std::size_t>(n), {});
  Matrix pooled(n, d_);
  for (Eigen::Index b = 0; b < n; ++b) {
    SampleCache& s = c.samples[static_cast<std::size_t>(b)];
    s.tokens_in.resize(T + 1, d_);
    s.tokens_in << node_tok.middleRows(b * T, T), task_tok.row(b);
    const Matrix y = s.tokens_in + attention_.forward(s.tokens_in, s.attention);
    pooled.row(b) = y.colwise().mean();
  }
  const Matrix h = hidden_.forward(pooled, c.hidden);
  return out_.forward(h, c.out).col(0);
}

void ValueNetwork::backward(const ObsBatch& batch, const Vector& dvalues, const Cache& c) {
  const Eigen::Index n = batch.dense.rows();
  const auto T = static_cast<Eigen::Index>(layout_.targets());
  const Eigen::Index e = embed_->value.rows();

  const Matrix dh = out_.backward(Matrix(dvalues), c.out);
  const Matrix dpooled = hidden_.backward(dh, c.hidden);
  Matrix dnode_tok(n * T, d_);
  Matrix dtask_tok(n, d_);
  for (Eigen::Index b = 0; b < n; ++b) {
    const SampleCache& s = c.samples[static_cast<std::size_t>(b)];
    const Matrix dy = Matrix::Ones(T + 1, 1) * dpooled.row(b) / static_cast<double>(T + 1);
    const nn::AttentionGrads g = attention_.backward(dy, s.attention);
    const Matrix dx = dy + g.dq_in + g.dk_in + g.dv_in;
    dnode_tok.middleRows(b * T, T) = dx.topRows(T);
    dtask_tok.row(b) = dx.row(T);
  }
  const Matrix dnode_raw = node_proj_.backward(dnode_tok, c.node_proj);
  const Matrix dtask_raw = task_proj_.backward(dtask_tok, c.task_proj);
  for (Eigen::Index j = 0; j < T; ++j) {
    Matrix demb(n, e);
    for (Eigen::Index b = 0; b < n; ++b) demb.row(b) = dnode_raw.row(b * T + j).tail(e);
    embed_->grad += demb.transpose() * batch.sparse[static_cast<std::size_t>(j)];
  }
  embed_->grad += dtask_raw.rightCols(e).transpose() * batch.sparse.back();
}

}  // namespace layermig::rl
