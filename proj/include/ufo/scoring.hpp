#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "ufo/matrix.hpp"
#include "ufo/tape.hpp"

namespace ufo::scoring {

// Sorted-coefficient CRPS of an empirical ensemble:
// (1/P) sum |X_i - y| - (1/P^2) sum (2i - P - 1) X_(i).
double crps_samples(std::span<const double> samples, double y);

// Exact integral of (F(z) - 1{y <= z})^2 for the empirical step CDF.
double crps_brute(std::span<const double> samples, double y);

struct ScoreReport {
  std::vector<double> channel_ncrps;
  std::vector<double> crps_sums;
  std::vector<double> denominators;  // per-channel sum |y|
  double aggregate = 0.0;

  void write(std::ostream& out) const;
};

// Ensembles are stored sample-major: row s*L + t of `samples` is step t of
// sample s. Accumulates CRPS and |y| sums per channel across many horizons,
// so a report can pool a whole test split.
class NcrpsAccumulator {
 public:
  explicit NcrpsAccumulator(std::size_t channels);
  void add(const Matrix& samples, std::size_t sample_count, const Matrix& truth);
  std::size_t channels() const noexcept { return crps_.size(); }
  // Throws DegenerateError naming the channels with a zero denominator.
  ScoreReport report() const;

 private:
  std::vector<double> crps_;
  std::vector<double> denom_;
};

ScoreReport ncrps(const Matrix& samples, std::size_t sample_count, const Matrix& truth);

// Training loss: mean over windows of each window's NCRPS. samples has rows
// ordered (window, sample, step); truth has rows (window, step).
Var ncrps_loss(Var samples, const Matrix& truth, std::size_t windows, std::size_t sample_count);

// Everything the loss's piecewise-linear structure depends on: every cell's
// sort order and the sign of every sample's error. Two parameter settings
// with equal signatures lie on the same smooth piece.
std::vector<long> kink_signature(const Matrix& samples, const Matrix& truth, std::size_t windows,
                                 std::size_t sample_count);

}  // namespace ufo::scoring
