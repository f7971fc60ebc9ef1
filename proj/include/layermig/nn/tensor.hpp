#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace layermig::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Shape plus row-major values; the interchange format for parameters.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  std::size_t size() const { return values.size(); }
  bool all_finite() const;

  // Rank 1 becomes a column; rank 2 keeps (rows, cols).
  Matrix to_matrix() const;
  static Tensor from_matrix(const Matrix& m, bool as_vector = false);

  bool operator==(const Tensor&) const = default;
};

std::size_t shape_size(const std::vector<std::size_t>& shape);
std::string shape_string(const std::vector<std::size_t>& shape);
std::string shape_string(const Matrix& m);

// Throws std::domain_error mentioning `where` if any entry is NaN or Inf.
void require_finite(const Matrix& m, const std::string& where);

// Max-shifted softmax. Throws on empty input.
Vector softmax(const Vector& logits);
// Softmax restricted to mask != 0; masked entries are exactly 0.
Vector masked_softmax(const Vector& logits, const std::vector<std::uint8_t>& mask);

}  // namespace layermig::nn
