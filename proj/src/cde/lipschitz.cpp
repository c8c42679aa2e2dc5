#include "ufo/lipschitz.hpp"

#include <algorithm>
#include <cmath>

#include "ufo/cde.hpp"
#include "ufo/error.hpp"

namespace ufo::cde {

void TanhField::eval(std::span<const double> x, std::span<const double> z, std::span<double> dz) const {
  const std::size_t d = dim(), h = out.rows();
  std::vector<double> a(bias.values().begin(), bias.values().end());
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < h; ++k) a[k] += x[i] * wx(i, k) + z[i] * wz(i, k);
  std::fill(dz.begin(), dz.end(), 0.0);
  for (std::size_t k = 0; k < h; ++k) {
    const double g = std::tanh(a[k]);
    for (std::size_t i = 0; i < d; ++i) dz[i] += g * out(k, i);
  }
}

double TanhField::lipschitz() const {
  Matrix stacked(2 * wx.rows(), wx.cols());
  for (std::size_t i = 0; i < wx.rows(); ++i)
    for (std::size_t k = 0; k < wx.cols(); ++k) {
      stacked(i, k) = wx(i, k);
      stacked(wx.rows() + i, k) = wz(i, k);
    }
  // |W [dx; dz]| <= |W| |(dx, dz)|_2 <= |W| (|dx| + |dz|).
  return spectral_norm(out) * spectral_norm(stacked);
}

TanhField random_tanh_field(std::size_t dim, std::size_t hidden, double target, CounterRng& rng) {
  if (dim == 0 || hidden == 0 || !(target > 0.0)) throw InvalidArgument("random_tanh_field: bad shape or target");
  TanhField f{Matrix(dim, hidden), Matrix(dim, hidden), Matrix(1, hidden), Matrix(hidden, dim)};
  for (Matrix* m : {&f.wx, &f.wz, &f.bias, &f.out})
    for (double& v : m->values()) v = rng.normal();
  const double s = std::sqrt(target / f.lipschitz());
  for (Matrix* m : {&f.wx, &f.wz, &f.out})
    for (double& v : m->values()) v *= s;
  return f;
}

void SineControl::eval(double t, std::span<double> x) const {
  for (std::size_t i = 0; i < amp.size(); ++i) x[i] = amp[i] * std::sin(freq[i] * t + phase[i]);
}

double SineControl::lipschitz() const {
  double s = 0.0;
  for (std::size_t i = 0; i < amp.size(); ++i) s += amp[i] * amp[i] * freq[i] * freq[i];
  return std::sqrt(s);
}

SineControl random_sine_control(std::size_t dim, CounterRng& rng) {
  SineControl c;
  for (std::size_t i = 0; i < dim; ++i) {
    c.amp.push_back(rng.uniform(0.2, 1.0));
    c.freq.push_back(rng.uniform(0.2, 2.0));
    c.phase.push_back(rng.uniform(0.0, 2.0 * M_PI));
  }
  return c;
}

double spectral_norm(const Matrix& m, int iterations) {
  if (m.empty()) return 0.0;
  std::vector<double> v(m.cols(), 1.0), u(m.rows());
  double sigma = 0.0;
  for (int it = 0; it < iterations; ++it) {
    std::fill(u.begin(), u.end(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < m.cols(); ++c) u[r] += m(r, c) * v[c];
    std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < m.cols(); ++c) v[c] += m(r, c) * u[r];
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n == 0.0) return 0.0;
    sigma = std::sqrt(n);
    for (double& x : v) x /= n;
  }
  return sigma;
}

std::vector<double> patch_endpoint(const TanhField& f, const SineControl& x, double start, double w, int steps) {
  const std::size_t d = f.dim();
  std::vector<double> xt(d);
  const FieldFn field = [&](double tau, std::span<const double> z, std::span<double> dz) {
    x.eval(start + tau, xt);
    f.eval(xt, z, dz);
  };
  const std::vector<double> z0(d, 0.0);
  const double times[] = {0.0, w};
  return integrate_patch(field, z0, times, steps).states.back();
}

double rescaled_lipschitz_bound(double control_lipschitz, double field_lipschitz, double w) {
  const double a = field_lipschitz * w;
  return control_lipschitz * (a == 0.0 ? 1.0 : std::expm1(a) / a);
}

LipschitzCheck check_rescaled_lipschitz(const TanhField& f, const SineControl& x, double w, std::size_t pairs,
                                        double span, CounterRng& rng) {
  LipschitzCheck out;
  out.w = w;
  out.field_lipschitz = f.lipschitz();
  out.control_lipschitz = x.lipschitz();
  out.bound = rescaled_lipschitz_bound(out.control_lipschitz, out.field_lipschitz, w);
  for (std::size_t i = 0; i < pairs; ++i) {
    const double t = rng.uniform(0.0, span), s = rng.uniform(0.0, span);
    if (t == s) continue;
    const auto a = patch_endpoint(f, x, t, w), b = patch_endpoint(f, x, s, w);
    double dist = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) dist += (a[k] - b[k]) * (a[k] - b[k]);
    out.max_ratio = std::max(out.max_ratio, std::sqrt(dist) / std::abs(t * w - s * w));
  }
  return out;
}

}  // namespace ufo::cde
