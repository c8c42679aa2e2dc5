#include <cmath>
#include <string>

#include "ufo/cde.hpp"
#include "ufo/error.hpp"

namespace ufo::cde {
namespace {

Matrix uniform_init(std::size_t rows, std::size_t cols, double bound, CounterRng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-bound, bound);
  return m;
}

FieldParams add_field(ParamStore& store, const std::string& prefix, std::size_t in_dim, std::size_t hidden,
                      std::size_t dim, CounterRng& rng) {
  FieldParams f;
  f.in_dim = in_dim;
  f.hidden = hidden;
  f.dim = dim;
  const double b_in = 1.0 / std::sqrt(static_cast<double>(in_dim));
  f.gate = store.add(prefix + ".gate", uniform_init(in_dim, hidden, b_in, rng));
  f.value = store.add(prefix + ".value", uniform_init(in_dim, hidden, b_in, rng));
  f.out = store.add(prefix + ".out", uniform_init(hidden, dim, 0.5 / std::sqrt(static_cast<double>(hidden)), rng));
  return f;
}

// Smoother weights, within each patch, at one query time per patch.
struct StageInputs {
  SparseMix mix;
  Matrix tau;
};

StageInputs stage_inputs(const PatchGeometry& geo, std::span<const double> query,
                         const interp::KernelConfig& kernel) {
  const std::size_t w = geo.patch_len;
  StageInputs s;
  s.mix.in_rows = geo.patches * w;
  s.tau = Matrix(geo.patches, geo.fine_covariates.cols());
  std::vector<double> weights(w);
  for (std::size_t p = 0; p < geo.patches; ++p) {
    const std::span<const double> times(geo.fine_times.data() + p * w, w);
    interp::smoother_weights(times, query[p], kernel, weights);
    for (std::size_t j = 0; j < w; ++j) {
      s.mix.add(p * w + j, weights[j]);
      for (std::size_t c = 0; c < s.tau.cols(); ++c) s.tau(p, c) += weights[j] * geo.fine_covariates(p * w + j, c);
    }
    s.mix.end_row();
  }
  return s;
}

Var field_eval(ParamBinder& pb, const FieldParams& f, std::span<const Var> inputs) {
  const Var u = inputs.size() == 1 ? inputs[0] : ops::concat_cols(inputs);
  const Var gate = ops::swish(ops::matmul(u, pb(f.gate)));
  const Var val = ops::matmul(u, pb(f.value));
  return ops::matmul(ops::mul(gate, val), pb(f.out));
}

// Integrates every patch from fine point 0 to patch_len-1. `field` maps
// (stage index tuple, state) to the derivative; `on_point` receives the
// state at each fine point j >= 1.
template <class Field, class OnPoint>
Var integrate_batch(const PatchGeometry& geo, const SolverConfig& cfg, Var z, Field field, OnPoint on_point) {
  const std::size_t R = geo.patches, w = geo.patch_len;
  std::vector<double> h(R), half(R), sixth(R), base(R), q(R);
  for (std::size_t j = 0; j + 1 < w; ++j) {
    double widest = 0.0;
    for (std::size_t p = 0; p < R; ++p)
      widest = std::max(widest, geo.fine_times[p * w + j + 1] - geo.fine_times[p * w + j]);
    const std::size_t n = substeps_for(widest, cfg);
    for (std::size_t p = 0; p < R; ++p) {
      h[p] = (geo.fine_times[p * w + j + 1] - geo.fine_times[p * w + j]) / static_cast<double>(n);
      half[p] = 0.5 * h[p];
      sixth[p] = h[p] / 6.0;
    }
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t p = 0; p < R; ++p) base[p] = geo.fine_times[p * w + j] + static_cast<double>(s) * h[p];
      auto at = [&](double frac) {
        for (std::size_t p = 0; p < R; ++p) q[p] = base[p] + frac * h[p];
        return q;
      };
      const Var k1 = field(at(0.0), z);
      const Var k2 = field(at(0.5), ops::add(z, ops::scale_rows(k1, half)));
      const Var k3 = field(at(0.5), ops::add(z, ops::scale_rows(k2, half)));
      const Var k4 = field(at(1.0), ops::add(z, ops::scale_rows(k3, h)));
      const std::vector<Var> ks{k1, ops::scale(k2, 2.0), ops::scale(k3, 2.0), k4};
      Var incr = ops::add(ops::add(ks[0], ks[1]), ops::add(ks[2], ks[3]));
      z = ops::add(z, ops::scale_rows(incr, sixth));
    }
    on_point(j + 1, z);
  }
  return z;
}

}  // namespace

DownsamplerParams add_downsampler(ParamStore& store, const std::string& prefix, std::size_t dim,
                                  std::size_t cov_dim, std::size_t hidden, CounterRng& rng) {
  DownsamplerParams p;
  p.field = add_field(store, prefix + ".field", cov_dim + 2 * dim, hidden, dim, rng);
  const double b = 1.0 / std::sqrt(static_cast<double>(dim));
  p.init_weight = store.add(prefix + ".init.weight", uniform_init(dim, dim, b, rng));
  p.init_bias = store.add(prefix + ".init.bias", Matrix(1, dim));
  return p;
}

UpsamplerParams add_upsampler(ParamStore& store, const std::string& prefix, std::size_t dim,
                              std::size_t cov_dim, std::size_t hidden, CounterRng& rng) {
  return UpsamplerParams{add_field(store, prefix + ".field", cov_dim + dim, hidden, dim, rng)};
}

Var ncde_downsample(ParamBinder& pb, const DownsamplerParams& p, Var fine_values, const PatchGeometry& geo,
                    const SolverConfig& cfg) {
  cfg.validate();
  geo.validate();
  const std::size_t R = geo.patches, w = geo.patch_len;
  if (fine_values.rows() != R * w) throw InvalidArgument("ncde_downsample: input length does not match grid");
  if (fine_values.cols() != p.field.dim) throw InvalidArgument("ncde_downsample: embedding dimension mismatch");
  if (geo.fine_covariates.cols() + 2 * p.field.dim != p.field.in_dim)
    throw InvalidArgument("ncde_downsample: covariate dimension mismatch");
  Tape& tape = pb.tape();

  std::vector<double> start(R);
  for (std::size_t r = 0; r < R; ++r) start[r] = geo.fine_times[r * w];
  const StageInputs s0 = stage_inputs(geo, start, cfg.kernel);
  const Var x0 = ops::mix_rows(fine_values, s0.mix);
  Var z = ops::swish(ops::add_row(ops::matmul(x0, pb(p.init_weight)), pb(p.init_bias)));

  const bool has_tau = geo.fine_covariates.cols() > 0;
  auto field = [&](std::span<const double> q, Var state) {
    StageInputs s = stage_inputs(geo, q, cfg.kernel);
    const Var ctrl = ops::mix_rows(fine_values, s.mix);
    if (has_tau) {
      const Var tau = tape.constant(std::move(s.tau));
      const Var in[] = {tau, ctrl, state};
      return field_eval(pb, p.field, in);
    }
    const Var in[] = {ctrl, state};
    return field_eval(pb, p.field, in);
  };
  try {
    return integrate_batch(geo, cfg, z, field, [](std::size_t, Var) {});
  } catch (const NumericError& e) {
    throw IntegrationDiverged(std::string("ncde_downsample: ") + e.what(), geo.fine_times.back());
  }
}

Var ncde_upsample(ParamBinder& pb, const UpsamplerParams& p, Var seeds, const PatchGeometry& geo,
                  const SolverConfig& cfg) {
  cfg.validate();
  geo.validate();
  const std::size_t R = geo.patches, w = geo.patch_len;
  if (seeds.rows() != R) throw InvalidArgument("ncde_upsample: seed count does not match patch count");
  if (seeds.cols() != p.field.dim) throw InvalidArgument("ncde_upsample: embedding dimension mismatch");
  if (geo.fine_covariates.cols() + p.field.dim != p.field.in_dim)
    throw InvalidArgument("ncde_upsample: covariate dimension mismatch");
  if (w == 1) return seeds;
  Tape& tape = pb.tape();

  const bool has_tau = geo.fine_covariates.cols() > 0;
  auto field = [&](std::span<const double> q, Var state) {
    if (!has_tau) return field_eval(pb, p.field, std::span<const Var>(&state, 1));
    StageInputs s = stage_inputs(geo, q, cfg.kernel);
    const Var in[] = {tape.constant(std::move(s.tau)), state};
    return field_eval(pb, p.field, in);
  };
  std::vector<Var> points{seeds};
  try {
    integrate_batch(geo, cfg, seeds, field, [&](std::size_t, Var z) { points.push_back(z); });
  } catch (const NumericError& e) {
    throw IntegrationDiverged(std::string("ncde_upsample: ") + e.what(), geo.fine_times.back());
  }
  // Rows of the stacked result are ordered (point, patch); reorder to (patch, point).
  const Var stacked = ops::concat_rows(points);
  std::vector<std::size_t> order(R * w);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t j = 0; j < w; ++j) order[r * w + j] = j * R + r;
  return ops::mix_rows(stacked, SparseMix::select(R * w, order));
}

}  // namespace ufo::cde
