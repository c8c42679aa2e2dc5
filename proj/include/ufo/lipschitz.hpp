#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ufo/matrix.hpp"
#include "ufo/rng.hpp"

namespace ufo::cde {

// f(x, z) = out^T tanh(wx^T x + wz^T z + bias); slope of tanh is at most 1.
struct TanhField {
  Matrix wx;    // d x hidden
  Matrix wz;    // d x hidden
  Matrix bias;  // 1 x hidden
  Matrix out;   // hidden x d

  std::size_t dim() const { return out.cols(); }
  void eval(std::span<const double> x, std::span<const double> z, std::span<double> dz) const;
  // Upper bound on the joint Lipschitz constant w.r.t. |dx| + |dz|.
  double lipschitz() const;
};

// Random field rescaled so that lipschitz() == target.
TanhField random_tanh_field(std::size_t dim, std::size_t hidden, double target, CounterRng& rng);

// x_i(t) = amp_i sin(freq_i t + phase_i).
struct SineControl {
  std::vector<double> amp, freq, phase;

  void eval(double t, std::span<double> x) const;
  double lipschitz() const;
};

SineControl random_sine_control(std::size_t dim, CounterRng& rng);

// Largest singular value by power iteration.
double spectral_norm(const Matrix& m, int iterations = 200);

// z(0) = 0, dz/dtau = f(x(start + tau), z) on [0, w]; returns z(w).
std::vector<double> patch_endpoint(const TanhField& f, const SineControl& x, double start, double w,
                                   int steps = 64);

struct LipschitzCheck {
  double w = 0.0;
  double field_lipschitz = 0.0;
  double control_lipschitz = 0.0;
  double bound = 0.0;
  double max_ratio = 0.0;
};

// L_x (e^{L_f w} - 1) / (L_f w).
double rescaled_lipschitz_bound(double control_lipschitz, double field_lipschitz, double w);

// Largest |Phi(t w) - Phi(t' w)| / |t w - t' w| over random pairs t, t' in [0, span).
LipschitzCheck check_rescaled_lipschitz(const TanhField& f, const SineControl& x, double w,
                                        std::size_t pairs, double span, CounterRng& rng);

}  // namespace ufo::cde
