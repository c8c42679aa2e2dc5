#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "ufo/data.hpp"
#include "ufo/model.hpp"

namespace ufo::analysis {

struct SensitivityReport {
  std::vector<double> norms;  // mean gradient norm per input position
  double r_squared = 0.0;     // log-norm against position, over nonzero norms
  std::size_t zero_positions = 0;

  // Two columns (position, norm) followed by an "# r2" footer line.
  void write(std::ostream& out) const;
};

// Fits log(norm) ~ position over positions with nonzero norm.
// Throws DegenerateError when every norm is zero.
SensitivityReport summarize_sensitivity(std::vector<double> norms);

// forward maps a window's raw context (a tape variable, T x d_x) to outputs.
using ContextFn = std::function<Var(Tape&, const data::Window&, Var context)>;

// Mean over windows of ||d sum(outputs) / d x_i|| for every context row i.
SensitivityReport sensitivity(std::span<const data::Window> windows, const ContextFn& forward);

// The forecaster's mean prediction (latent noise fixed at zero) in data units.
SensitivityReport sensitivity(const model::Model& model, std::span<const data::Window> windows);

// gap_cv of each level's coarse times, levels 0..M, on the visible rows.
std::vector<double> cv_study(const data::Dataset& observed, std::size_t w, std::size_t levels);

struct LogisticConfig {
  std::size_t iterations = 500;
  double learning_rate = 0.1;
  double l2 = 1e-4;
};

// Balanced-class-weight logistic regression on standardized features,
// trained by full-batch gradient descent.
struct LogisticModel {
  std::vector<double> mean, scale, weights;
  double bias = 0.0;

  double probability(std::span<const double> x) const;
};

LogisticModel fit_logistic(const Matrix& features, std::span<const int> labels, const LogisticConfig& cfg = {});

struct ProbeReport {
  double f1 = 0.0;
  std::size_t positives = 0, negatives = 0;
  std::size_t train_count = 0, test_count = 0;
  double weight_norm = 0.0;

  void write(std::ostream& out) const;
};

// Seeded 70/30 split of the rows, logistic fit on one part, F1 on the other.
// Throws DegenerateError if all labels agree.
ProbeReport probe_features(const Matrix& features, std::span<const int> labels, std::uint64_t seed,
                           const LogisticConfig& cfg = {});

struct ProbeData {
  Matrix features;          // one row per level-1 patch
  std::vector<int> labels;  // 1 if the patch covers a missing row
};

// Bottom downsampler outputs of every context patch, labelled by whether any
// dataset row the patch spans (first to last point) is missing.
ProbeData probe_data(const model::Model& model, const data::Dataset& observed, std::span<const data::Window> windows);

// Skip-representation windows over the whole dataset, anchored every
// horizon + 1 rows so patch boundaries drift across the calendar.
std::vector<data::Window> probe_windows(const data::Dataset& observed, const data::Dataset& clean,
                                        std::size_t context, std::size_t horizon);

ProbeReport irregularity_probe(const model::Model& model, const data::Dataset& observed,
                               std::span<const data::Window> windows, std::uint64_t seed);

struct TimingReport {
  std::vector<double> batch_seconds;  // measured batches, warm-up excluded
  double seconds_per_sequence = 0.0;
  std::size_t batch_size = 0;
  std::size_t threads = 0;

  void write(std::ostream& out) const;
};

// Forward passes with one sample per sequence over `batches` batches after a
// warm-up batch.
TimingReport timing(const model::Model& model, std::span<const data::Window> windows, std::size_t batches = 6,
                    std::size_t batch_size = 32);

struct SpeedupReport {
  double patched_seconds = 0.0;
  double sequential_seconds = 0.0;
  double speedup = 0.0;
  std::size_t patched_steps = 0;     // RK4 steps per sequence
  std::size_t sequential_steps = 0;  // RK4 steps per sequence
  std::size_t length = 0, batch = 0, threads = 0;

  void write(std::ostream& out) const;
};

struct SpeedupConfig {
  std::size_t length = 720;
  std::size_t batch = 32;
  std::size_t patch_len = 4;
  std::size_t dim = 16;
  std::size_t threads = 4;
  std::size_t repeats = 3;
  std::uint64_t seed = 0;
};

// Level-0 downsampling of `batch` sequences by patched integration against
// the whole-sequence integrator at the same number of RK4 steps per
// sequence. Reports the best of `repeats` runs for each.
SpeedupReport speedup(const SpeedupConfig& cfg);

}  // namespace ufo::analysis
