#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "ufo/matrix.hpp"

// Regularized Nadaraya-Watson smoothing with a decaying exponential kernel:
//
//   x(t) = sum_i x_i K(t_i, t) / (lambda + sum_i K(t_i, t)),
//   K(a, b) = exp(-|a - b| / scale).
//
// lambda acts as a zero-valued pseudo-observation present everywhere, so the
// estimate shrinks toward zero where data are sparse.
namespace ufo::interp {

struct KernelConfig {
  // Weight of an observation three time units away.
  double lambda = std::exp(-3.0);
  double kernel_scale = 1.0;

  void validate() const;
};

struct IrregularChannel {
  std::vector<double> times;
  std::vector<double> values;

  // Strictly increasing finite times, finite values, equal lengths.
  void validate() const;
  std::size_t count() const noexcept { return times.size(); }
};

double kernel_weight(double a, double b, double scale);

// Normalized weights w_i(query) = K(t_i, query) / (lambda + sum_j K(t_j, query)).
// Throws DegenerateError when the design is empty and lambda is zero.
void smoother_weights(std::span<const double> times, double query, const KernelConfig& cfg,
                      std::span<double> out);

std::vector<double> interpolate(const IrregularChannel& channel, std::span<const double> query_times,
                                const KernelConfig& cfg);

// Every column of `values` (rows aligned with `times`) smoothed independently.
Matrix interpolate_columns(std::span<const double> times, const Matrix& values,
                           std::span<const double> query_times, const KernelConfig& cfg);

}  // namespace ufo::interp
