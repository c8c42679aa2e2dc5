#include "ufo/kernels.hpp"

#include <omp.h>

#include "ufo/error.hpp"

namespace ufo::kernels {
namespace {

// Below this many multiply-adds the parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

void prepare(Matrix& c, std::size_t rows, std::size_t cols, bool accumulate) {
  if (accumulate) {
    if (c.rows() != rows || c.cols() != cols) throw InvalidArgument("gemm: accumulator shape");
  } else if (c.rows() != rows || c.cols() != cols) {
    c = Matrix(rows, cols);
  } else {
    c.fill(0.0);
  }
}

// Rows [i0, i0 + 4) of c += a * b; each b row is loaded once per block.
inline void gemm_block4(const double* a, const double* b, double* c, std::size_t k_dim,
                        std::size_t n) {
  const double* a0 = a;
  const double* a1 = a + k_dim;
  const double* a2 = a + 2 * k_dim;
  const double* a3 = a + 3 * k_dim;
  double* c0 = c;
  double* c1 = c + n;
  double* c2 = c + 2 * n;
  double* c3 = c + 3 * n;
  for (std::size_t k = 0; k < k_dim; ++k) {
    const double* br = b + k * n;
    const double x0 = a0[k], x1 = a1[k], x2 = a2[k], x3 = a3[k];
#pragma omp simd
    for (std::size_t j = 0; j < n; ++j) {
      const double bj = br[j];
      c0[j] += x0 * bj;
      c1[j] += x1 * bj;
      c2[j] += x2 * bj;
      c3[j] += x3 * bj;
    }
  }
}

inline void gemm_row(const double* a, const double* b, double* c, std::size_t k_dim,
                     std::size_t n) {
  for (std::size_t k = 0; k < k_dim; ++k) {
    const double* br = b + k * n;
    const double x = a[k];
#pragma omp simd
    for (std::size_t j = 0; j < n; ++j) c[j] += x * br[j];
  }
}

}  // namespace

int worker_count() { return omp_get_max_threads(); }
void set_worker_count(int n) { omp_set_num_threads(n < 1 ? 1 : n); }

void gemm(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (a.cols() != b.rows()) throw InvalidArgument("gemm: inner dimension mismatch");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  prepare(c, m, n, accumulate);
  const std::size_t blocks = m / 4;
  const bool par = m * k * n >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    const std::size_t i = blk * 4;
    gemm_block4(a.data() + i * k, b.data(), c.data() + i * n, k, n);
  }
  for (std::size_t i = blocks * 4; i < m; ++i) gemm_row(a.data() + i * k, b.data(), c.data() + i * n, k, n);
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  // c[i][j] += sum_r a[r][i] * b[r][j]
  if (a.rows() != b.rows()) throw InvalidArgument("gemm_tn: row count mismatch");
  const std::size_t rows = a.rows(), m = a.cols(), n = b.cols();
  prepare(c, m, n, accumulate);
  const bool par = rows * m * n >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c.data() + i * n;
    for (std::size_t r = 0; r < rows; ++r) {
      const double x = a(r, i);
      if (x == 0.0) continue;
      const double* br = b.data() + r * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) ci[j] += x * br[j];
    }
  }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  // c[i][j] += dot(a[i], b[j])
  if (a.cols() != b.cols()) throw InvalidArgument("gemm_nt: column count mismatch");
  const std::size_t m = a.rows(), n = b.rows(), k = a.cols();
  prepare(c, m, n, accumulate);
  const bool par = m * n * k >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b.data() + j * k;
      double s = 0.0;
#pragma omp simd reduction(+ : s)
      for (std::size_t t = 0; t < k; ++t) s += ai[t] * bj[t];
      c(i, j) += s;
    }
  }
}

}  // namespace ufo::kernels
