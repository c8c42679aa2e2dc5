#include <algorithm>
#include <cmath>

#include "ufo/cde_kernels.hpp"
#include "ufo/error.hpp"

namespace ufo::cde::fast {
namespace {

constexpr std::size_t kBlock = 32;

inline double swish(double x) { return x / (1.0 + std::exp(-x)); }

// c = a (m x k) * b (k x n), row-major.
inline void small_gemm(const double* a, std::size_t m, std::size_t k, const double* b, std::size_t n, double* c) {
  std::fill(c, c + m * n, 0.0);
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    double* c0 = c + i * n;
    double* c1 = c0 + n;
    double* c2 = c1 + n;
    double* c3 = c2 + n;
    const double* a0 = a + i * k;
    for (std::size_t t = 0; t < k; ++t) {
      const double* br = b + t * n;
      const double x0 = a0[t], x1 = a0[k + t], x2 = a0[2 * k + t], x3 = a0[3 * k + t];
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) {
        c0[j] += x0 * br[j];
        c1[j] += x1 * br[j];
        c2[j] += x2 * br[j];
        c3[j] += x3 * br[j];
      }
    }
  }
  for (; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t t = 0; t < k; ++t) {
      const double x = a[i * k + t];
      const double* br = b + t * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) ci[j] += x * br[j];
    }
  }
}

// Scratch space and field evaluation for a block of rows.
struct FieldScratch {
  std::size_t rows, in, hidden, dim;
  std::vector<double> u, g, v, out;
  FieldScratch(std::size_t r, const SwigluWeights& w)
      : rows(r), in(w.gate.rows()), hidden(w.gate.cols()), dim(w.out.cols()),
        u(r * in), g(r * hidden), v(r * hidden), out(r * dim) {}

  // u must already hold [tau, control, state] per row.
  void eval(const SwigluWeights& w, std::size_t m) {
    small_gemm(u.data(), m, in, w.gate.data(), hidden, g.data());
    small_gemm(u.data(), m, in, w.value.data(), hidden, v.data());
    for (std::size_t i = 0; i < m * hidden; ++i) g[i] = swish(g[i]) * v[i];
    small_gemm(g.data(), m, hidden, w.out.data(), dim, out.data());
  }
};

std::vector<std::size_t> schedule(const PatchGeometry& geo, const SolverConfig& cfg) {
  const std::size_t R = geo.patches, w = geo.patch_len;
  std::vector<std::size_t> n(w > 0 ? w - 1 : 0);
  for (std::size_t j = 0; j + 1 < w; ++j) {
    double widest = 0.0;
    for (std::size_t p = 0; p < R; ++p)
      widest = std::max(widest, geo.fine_times[p * w + j + 1] - geo.fine_times[p * w + j]);
    n[j] = substeps_for(widest, cfg);
  }
  return n;
}

// Integrates patches [p0, p1) and writes their terminal states into out.
void integrate_block(const DownsamplerWeights& wt, const Matrix& x, const PatchGeometry& geo,
                     const SolverConfig& cfg, const std::vector<std::size_t>& steps, std::size_t p0,
                     std::size_t p1, Matrix& out) {
  const std::size_t w = geo.patch_len, d = wt.init_weight.cols(), c = geo.fine_covariates.cols();
  const std::size_t m = p1 - p0;
  FieldScratch fs(m, wt.field);
  std::vector<double> z(m * d), zt(m * d), acc(m * d), h(m), kw(w), ctrl(m * d), x0(m * d);

  // Writes the smoothed control/covariates at per-row times into fs.u,
  // followed by `state` as the last d columns.
  auto load_inputs = [&](const std::vector<double>& q, const double* state) {
    for (std::size_t r = 0; r < m; ++r) {
      const std::size_t p = p0 + r;
      interp::smoother_weights(std::span<const double>(geo.fine_times.data() + p * w, w), q[r], cfg.kernel, kw);
      double* ur = fs.u.data() + r * fs.in;
      std::fill(ur, ur + c + d, 0.0);
      for (std::size_t j = 0; j < w; ++j) {
        const double wj = kw[j];
        const double* cov = geo.fine_covariates.data() + (p * w + j) * c;
        for (std::size_t k = 0; k < c; ++k) ur[k] += wj * cov[k];
        const double* xr = x.data() + (p * w + j) * d;
        for (std::size_t k = 0; k < d; ++k) ur[c + k] += wj * xr[k];
      }
      std::copy(state + r * d, state + (r + 1) * d, ur + c + d);
    }
  };

  std::vector<double> q(m);
  for (std::size_t r = 0; r < m; ++r) q[r] = geo.fine_times[(p0 + r) * w];
  load_inputs(q, z.data());
  for (std::size_t r = 0; r < m; ++r)
    std::copy(fs.u.data() + r * fs.in + c, fs.u.data() + r * fs.in + c + d, x0.data() + r * d);
  small_gemm(x0.data(), m, d, wt.init_weight.data(), d, z.data());
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t k = 0; k < d; ++k) z[r * d + k] = swish(z[r * d + k] + wt.init_bias(0, k));

  for (std::size_t j = 0; j + 1 < w; ++j) {
    const std::size_t n = steps[j];
    for (std::size_t r = 0; r < m; ++r) {
      const std::size_t p = p0 + r;
      h[r] = (geo.fine_times[p * w + j + 1] - geo.fine_times[p * w + j]) / static_cast<double>(n);
    }
    for (std::size_t s = 0; s < n; ++s) {
      auto stage = [&](double frac, const double* state) {
        for (std::size_t r = 0; r < m; ++r)
          q[r] = geo.fine_times[(p0 + r) * w + j] + (static_cast<double>(s) + frac) * h[r];
        load_inputs(q, state);
        fs.eval(wt.field, m);
      };
      // k1
      stage(0.0, z.data());
      for (std::size_t i = 0; i < m * d; ++i) acc[i] = fs.out[i];
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t k = 0; k < d; ++k) zt[r * d + k] = z[r * d + k] + 0.5 * h[r] * fs.out[r * d + k];
      // k2
      stage(0.5, zt.data());
      for (std::size_t i = 0; i < m * d; ++i) acc[i] += 2.0 * fs.out[i];
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t k = 0; k < d; ++k) zt[r * d + k] = z[r * d + k] + 0.5 * h[r] * fs.out[r * d + k];
      // k3
      stage(0.5, zt.data());
      for (std::size_t i = 0; i < m * d; ++i) acc[i] += 2.0 * fs.out[i];
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t k = 0; k < d; ++k) zt[r * d + k] = z[r * d + k] + h[r] * fs.out[r * d + k];
      // k4
      stage(1.0, zt.data());
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t k = 0; k < d; ++k) z[r * d + k] += h[r] / 6.0 * (acc[r * d + k] + fs.out[r * d + k]);
    }
  }
  for (std::size_t r = 0; r < m; ++r) std::copy(z.data() + r * d, z.data() + (r + 1) * d, out.row(p0 + r).begin());
}

void check(const DownsamplerWeights& w, const Matrix& x, const PatchGeometry& geo, const SolverConfig& cfg) {
  cfg.validate();
  geo.validate();
  const std::size_t d = w.init_weight.cols();
  if (x.rows() != geo.patches * geo.patch_len || x.cols() != d)
    throw InvalidArgument("fast::downsample: input shape does not match geometry");
  if (w.field.gate.rows() != geo.fine_covariates.cols() + 2 * d)
    throw InvalidArgument("fast::downsample: field input dimension mismatch");
}

}  // namespace

DownsamplerWeights extract(const ParamStore& store, const DownsamplerParams& p) {
  return {{store.value(p.field.gate), store.value(p.field.value), store.value(p.field.out)},
          store.value(p.init_weight),
          store.value(p.init_bias)};
}

std::size_t patched_step_count(const PatchGeometry& geo, const SolverConfig& cfg) {
  std::size_t total = 0;
  for (std::size_t n : schedule(geo, cfg)) total += n;
  return total * geo.patches;
}

Matrix downsample(const DownsamplerWeights& w, const Matrix& x, const PatchGeometry& geo, const SolverConfig& cfg) {
  check(w, x, geo, cfg);
  const auto steps = schedule(geo, cfg);
  Matrix out(geo.patches, w.init_weight.cols());
  const std::size_t blocks = (geo.patches + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static)
  for (std::size_t b = 0; b < blocks; ++b)
    integrate_block(w, x, geo, cfg, steps, b * kBlock, std::min(geo.patches, (b + 1) * kBlock), out);
  if (!out.all_finite()) throw IntegrationDiverged("fast::downsample: state diverged", geo.fine_times.back());
  return out;
}

namespace serial {
Matrix downsample(const DownsamplerWeights& w, const Matrix& x, const PatchGeometry& geo, const SolverConfig& cfg) {
  check(w, x, geo, cfg);
  const auto steps = schedule(geo, cfg);
  Matrix out(geo.patches, w.init_weight.cols());
  for (std::size_t p = 0; p < geo.patches; ++p) integrate_block(w, x, geo, cfg, steps, p, p + 1, out);
  if (!out.all_finite()) throw IntegrationDiverged("fast::downsample: state diverged", geo.fine_times.back());
  return out;
}
}  // namespace serial

Matrix sequential_reference(const DownsamplerWeights& wt, std::span<const Sequence> batch, std::size_t total_steps,
                            const interp::KernelConfig& kernel) {
  kernel.validate();
  if (total_steps == 0) throw InvalidArgument("sequential_reference: total_steps must be >= 1");
  const std::size_t d = wt.init_weight.cols();
  for (const Sequence& seq : batch) {
    if (seq.times.size() < 2 || seq.values.rows() != seq.times.size() || seq.values.cols() != d ||
        seq.covariates.rows() != seq.times.size() || wt.field.gate.rows() != seq.covariates.cols() + 2 * d)
      throw InvalidArgument("sequential_reference: sequence shape mismatch");
  }
  Matrix out(batch.size(), d);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Sequence& seq = batch[b];
    const std::size_t n = seq.times.size(), c = seq.covariates.cols();
    FieldScratch fs(1, wt.field);
    std::vector<double> z(d), zt(d), acc(d), x0(d), kw(n);

    auto load = [&](double t, const double* state) {
      interp::smoother_weights(seq.times, t, kernel, kw);
      std::fill(fs.u.begin(), fs.u.begin() + c + d, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double wi = kw[i];
        const double* cov = seq.covariates.data() + i * c;
        for (std::size_t k = 0; k < c; ++k) fs.u[k] += wi * cov[k];
        const double* xr = seq.values.data() + i * d;
        for (std::size_t k = 0; k < d; ++k) fs.u[c + k] += wi * xr[k];
      }
      std::copy(state, state + d, fs.u.begin() + c + d);
    };

    load(seq.times.front(), z.data());
    std::copy(fs.u.begin() + c, fs.u.begin() + c + d, x0.begin());
    small_gemm(x0.data(), 1, d, wt.init_weight.data(), d, z.data());
    for (std::size_t k = 0; k < d; ++k) z[k] = swish(z[k] + wt.init_bias(0, k));

    const double h = (seq.times[n - 1] - seq.times[0]) / static_cast<double>(total_steps);
    for (std::size_t s = 0; s < total_steps; ++s) {
      const double t = seq.times[0] + static_cast<double>(s) * h;
      load(t, z.data());
      fs.eval(wt.field, 1);
      for (std::size_t k = 0; k < d; ++k) {
        acc[k] = fs.out[k];
        zt[k] = z[k] + 0.5 * h * fs.out[k];
      }
      load(t + 0.5 * h, zt.data());
      fs.eval(wt.field, 1);
      for (std::size_t k = 0; k < d; ++k) {
        acc[k] += 2.0 * fs.out[k];
        zt[k] = z[k] + 0.5 * h * fs.out[k];
      }
      load(t + 0.5 * h, zt.data());
      fs.eval(wt.field, 1);
      for (std::size_t k = 0; k < d; ++k) {
        acc[k] += 2.0 * fs.out[k];
        zt[k] = z[k] + h * fs.out[k];
      }
      load(t + h, zt.data());
      fs.eval(wt.field, 1);
      for (std::size_t k = 0; k < d; ++k) z[k] += h / 6.0 * (acc[k] + fs.out[k]);
    }
    std::copy(z.begin(), z.end(), out.row(b).begin());
  }
  if (!out.all_finite()) throw NumericError("sequential_reference: state diverged");
  return out;
}

}  // namespace ufo::cde::fast
