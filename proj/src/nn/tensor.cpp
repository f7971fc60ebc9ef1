#include "layermig/nn/tensor.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace layermig::nn {

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

std::string shape_string(const Matrix& m) {
  return shape_string(std::vector<std::size_t>{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
  if (shape.empty() || shape.size() > 2) throw std::invalid_argument("Tensor: rank must be 1 or 2, got " + shape_string(shape));
  if (shape_size(shape) != values.size()) {
    throw std::invalid_argument("Tensor: shape " + shape_string(shape) + " needs " + std::to_string(shape_size(shape)) +
                                " values, got " + std::to_string(values.size()));
  }
}

bool Tensor::all_finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix Tensor::to_matrix() const {
  const auto rows = static_cast<Eigen::Index>(shape.at(0));
  const auto cols = static_cast<Eigen::Index>(shape.size() == 2 ? shape[1] : 1);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = values[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

Tensor Tensor::from_matrix(const Matrix& m, bool as_vector) {
  Tensor t;
  if (as_vector) {
    t.shape = {static_cast<std::size_t>(m.size())};
  } else {
    t.shape = {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
  }
  t.values.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.values.push_back(m(r, c));
  }
  return t;
}

void require_finite(const Matrix& m, const std::string& where) {
  if (!m.allFinite()) throw std::domain_error(where + ": non-finite value in " + shape_string(m) + " tensor");
}

Vector softmax(const Vector& logits) {
  if (logits.size() == 0) throw std::invalid_argument("softmax: empty input");
  Vector e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

Vector masked_softmax(const Vector& logits, const std::vector<std::uint8_t>& mask) {
  if (logits.size() == 0) throw std::invalid_argument("masked_softmax: empty input");
  if (static_cast<std::size_t>(logits.size()) != mask.size()) {
    throw std::invalid_argument("masked_softmax: " + std::to_string(logits.size()) + " logits vs " +
                                std::to_string(mask.size()) + " mask entries");
  }
  double hi = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (mask[static_cast<std::size_t>(i)]) hi = std::max(hi, logits[i]);
  }
  if (!std::isfinite(hi)) throw std::invalid_argument("masked_softmax: every entry is masked");
  Vector p = Vector::Zero(logits.size());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (mask[static_cast<std::size_t>(i)]) {
      p[i] = std::exp(logits[i] - hi);
      sum += p[i];
    }
  }
  return p / sum;
}

}  // namespace layermig::nn
