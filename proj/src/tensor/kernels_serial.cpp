#include "ufo/error.hpp"
#include "ufo/kernels.hpp"

namespace ufo::kernels::serial {

void gemm(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (a.cols() != b.rows()) throw InvalidArgument("gemm: inner dimension mismatch");
  if (!accumulate) c = Matrix(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) += s;
    }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (a.rows() != b.rows()) throw InvalidArgument("gemm_tn: row count mismatch");
  if (!accumulate) c = Matrix(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < a.rows(); ++r) s += a(r, i) * b(r, j);
      c(i, j) += s;
    }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (a.cols() != b.cols()) throw InvalidArgument("gemm_nt: column count mismatch");
  if (!accumulate) c = Matrix(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      c(i, j) += s;
    }
}

}  // namespace ufo::kernels::serial
