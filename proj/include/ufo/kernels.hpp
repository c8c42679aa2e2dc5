#pragma once

#include "ufo/matrix.hpp"

// Dense kernels used by the tape. The default versions are OpenMP-parallel
// over output rows; every output element is produced by exactly one thread in
// a fixed summation order, so results do not depend on the thread count.
// The serial namespace holds straightforward reference loops kept for tests
// and the benchmark.
namespace ufo::kernels {

// c = a * b, or c += a * b when accumulate is set.
void gemm(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
// c (+)= a^T * b
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
// c (+)= a * b^T
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);

// Worker count used by the parallel kernels (wraps omp_get_max_threads).
int worker_count();
void set_worker_count(int n);

namespace serial {
void gemm(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
}  // namespace serial

}  // namespace ufo::kernels
