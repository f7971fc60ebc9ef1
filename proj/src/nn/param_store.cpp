#include "layermig/nn/param_store.hpp"

#include <cmath>
#include <stdexcept>

namespace layermig::nn {

Parameter& ParamStore::add(const std::string& name, Matrix value, bool is_vector) {
  if (contains(name)) throw std::invalid_argument("ParamStore: duplicate parameter '" + name + "'");
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->is_vector = is_vector;
  p->grad = Matrix::Zero(value.rows(), value.cols());
  p->m = Matrix::Zero(value.rows(), value.cols());
  p->v = Matrix::Zero(value.rows(), value.cols());
  p->value = std::move(value);
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParamStore::add_matrix(const std::string& name, Eigen::Index rows, Eigen::Index cols, Rng& rng,
                                  double scale) {
  const double bound = scale / std::sqrt(static_cast<double>(cols));
  Matrix w(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = rng.uniform(-bound, bound);
  }
  return add(name, std::move(w), false);
}

Parameter& ParamStore::add_vector(const std::string& name, Eigen::Index size) {
  return add(name, Matrix::Zero(size, 1), true);
}

bool ParamStore::contains(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return true;
  }
  return false;
}

Parameter& ParamStore::get(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return *p;
  }
  throw std::out_of_range("ParamStore: no parameter '" + name + "'");
}

const Parameter& ParamStore::get(const std::string& name) const {
  return const_cast<ParamStore*>(this)->get(name);
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->grad.setZero();
}

double ParamStore::grad_norm() const {
  double s = 0.0;
  for (const auto& p : params_) s += p->grad.squaredNorm();
  return std::sqrt(s);
}

double ParamStore::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (max_norm > 0.0 && norm > max_norm) {
    const double k = max_norm / norm;
    for (auto& p : params_) p->grad *= k;
  }
  return norm;
}

void ParamStore::adam_step(const AdamConfig& c) {
  ++steps_;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(steps_));
  for (auto& p : params_) {
    p->m = c.beta1 * p->m + (1.0 - c.beta1) * p->grad;
    p->v = c.beta2 * p->v + (1.0 - c.beta2) * p->grad.cwiseProduct(p->grad);
    p->value.array() -= c.lr * (p->m.array() / bc1) / ((p->v.array() / bc2).sqrt() + c.eps);
  }
}

void ParamStore::reset_optimizer() {
  steps_ = 0;
  for (auto& p : params_) {
    p->m.setZero();
    p->v.setZero();
  }
}

nlohmann::json ParamStore::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : params_) {
    const Tensor t = Tensor::from_matrix(p->value, p->is_vector);
    arr.push_back({{"name", p->name}, {"shape", t.shape}, {"values", t.values}});
  }
  return arr;
}

void ParamStore::load_json(const nlohmann::json& doc) {
  if (!doc.is_array() || doc.size() != params_.size()) {
    throw std::invalid_argument("checkpoint: expected " + std::to_string(params_.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& entry = doc[i];
    Parameter& p = *params_[i];
    const auto name = entry.at("name").get<std::string>();
    if (name != p.name) throw std::invalid_argument("checkpoint: parameter " + std::to_string(i) + " is '" + name + "', expected '" + p.name + "'");
    const Tensor t(entry.at("shape").get<std::vector<std::size_t>>(), entry.at("values").get<std::vector<double>>());
    const Tensor expected = Tensor::from_matrix(p.value, p.is_vector);
    if (t.shape != expected.shape) {
      throw std::invalid_argument("checkpoint: '" + name + "' has shape " + shape_string(t.shape) + ", expected " +
                                  shape_string(expected.shape));
    }
    if (!t.all_finite()) throw std::invalid_argument("checkpoint: '" + name + "' contains non-finite values");
    p.value = t.to_matrix();
  }
}

void ParamStore::copy_values_from(const ParamStore& other) {
  if (other.params_.size() != params_.size()) throw std::invalid_argument("copy_values_from: layout differs");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (other.params_[i]->value.rows() != params_[i]->value.rows() ||
        other.params_[i]->value.cols() != params_[i]->value.cols()) {
      throw std::invalid_argument("copy_values_from: shape of '" + params_[i]->name + "' differs");
    }
    params_[i]->value = other.params_[i]->value;
  }
}

}  // namespace layermig::nn
