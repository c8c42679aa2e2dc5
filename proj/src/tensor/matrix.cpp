#include "ufo/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "ufo/error.hpp"

namespace ufo {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols) {
    throw InvalidArgument("Matrix: value count does not match shape");
  }
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Matrix::reshape(std::size_t rows, std::size_t cols) {
  if (rows * cols != data_.size()) throw InvalidArgument("Matrix::reshape: size mismatch");
  rows_ = rows;
  cols_ = cols;
}

}  // namespace ufo
