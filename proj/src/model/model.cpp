#include "ufo/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "ufo/error.hpp"
#include "ufo/rng.hpp"

namespace ufo::model {
namespace {

Matrix uniform_init(std::size_t rows, std::size_t cols, CounterRng& rng) {
  const double b = 1.0 / std::sqrt(static_cast<double>(rows));
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-b, b);
  return m;
}

Matrix rows_of(const Matrix& src, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(src.row(rows[i]).begin(), src.row(rows[i]).end(), out.row(i).begin());
  return out;
}

// One output row per group of `size` consecutive input rows, holding their sum.
SparseMix group_sum(std::size_t groups, std::size_t size) {
  SparseMix m;
  m.in_rows = groups * size;
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t k = 0; k < size; ++k) m.add(g * size + k, 1.0);
    m.end_row();
  }
  return m;
}

// Covariates of every point of each level, looked up at the observation
// closing the point's span.
std::vector<Matrix> level_covariates(const GridStack& g, const Matrix& base) {
  std::vector<Matrix> out;
  for (const LevelGrid& lv : g.levels) out.push_back(rows_of(base, lv.origin));
  return out;
}

Var resample_down(ParamBinder& pb, const Model& model, std::size_t m, Var in, const cde::PatchGeometry& geo) {
  const ModelConfig& cfg = model.config();
  if (cfg.resampler == Resampler::ncde) return cde::ncde_downsample(pb, model.params().down[m], in, geo, cfg.solver());
  return cde::alt_resample(pb, model.params().alt_down[m], in, geo);
}

Var resample_up(ParamBinder& pb, const Model& model, std::size_t m, Var in, const cde::PatchGeometry& geo) {
  const ModelConfig& cfg = model.config();
  if (cfg.resampler == Resampler::ncde) return cde::ncde_upsample(pb, model.params().up[m], in, geo, cfg.solver());
  return cde::alt_resample(pb, model.params().alt_up[m], in, geo);
}

std::uint64_t window_key(const data::Window& w) {
  return splitmix64(std::bit_cast<std::uint64_t>(w.horizon_times.front()));
}

}  // namespace

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  CounterRng rng("init", cfg_.init_seed);
  const std::size_t d = cfg_.dim, dx = cfg_.channels, c = cfg_.cov_dim, M = cfg_.levels;
  ModelParams& p = params_;
  p.in_weight = store_.add("input.weight", uniform_init(dx, d, rng));
  p.in_bias = store_.add("input.bias", Matrix(1, d));
  p.revin_gamma = store_.add("revin.gamma", Matrix(1, dx, 1.0));
  p.revin_beta = store_.add("revin.beta", Matrix(1, dx));
  p.enc_refiner.resize(M);
  p.dec_refiner.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    const std::string lv = "level" + std::to_string(m);
    switch (cfg_.resampler) {
      case Resampler::ncde:
        p.down.push_back(cde::add_downsampler(store_, lv + ".down", d, c, cfg_.vf_hidden, rng));
        p.up.push_back(cde::add_upsampler(store_, lv + ".up", d, c, cfg_.vf_hidden, rng));
        break;
      case Resampler::rnn:
      case Resampler::conv: {
        const auto kind = cfg_.resampler == Resampler::rnn ? cde::AltKind::rnn : cde::AltKind::conv;
        p.alt_down.push_back(cde::add_alt_resampler(store_, lv + ".down", kind, cde::Direction::down, d, c,
                                                    cfg_.patch_len, rng));
        p.alt_up.push_back(
            cde::add_alt_resampler(store_, lv + ".up", kind, cde::Direction::up, d, c, cfg_.patch_len, rng));
        break;
      }
    }
    if (m > 0) {
      p.enc_refiner[m] =
          refiner::add_refiner(store_, lv + ".enc", d, cfg_.heads, cfg_.blocks, cfg_.ff_hidden, false, rng);
      p.dec_refiner[m] =
          refiner::add_refiner(store_, lv + ".dec", d, cfg_.heads, cfg_.blocks, cfg_.ff_hidden, true, rng);
    }
  }
  p.top_gamma = store_.add("top.norm.gamma", Matrix(1, d, 1.0));
  p.top_beta = store_.add("top.norm.beta", Matrix(1, d));
  p.mu_weight = store_.add("top.mu.weight", uniform_init(d, d, rng));
  p.mu_bias = store_.add("top.mu.bias", Matrix(1, d));
  p.sigma_weight = store_.add("top.sigma.weight", uniform_init(d, d, rng));
  p.sigma_bias = store_.add("top.sigma.bias", Matrix(1, d));
  p.out_weight = store_.add("output.weight", uniform_init(d, dx, rng));
  p.out_bias = store_.add("output.bias", Matrix(1, dx));
}

Batch make_batch(const ModelConfig& cfg, std::span<const data::Window> windows) {
  if (windows.empty()) throw InvalidArgument("make_batch: no windows");
  const std::size_t M = cfg.levels, w = cfg.patch_len, dx = cfg.channels;
  Batch b;
  b.windows = windows.size();
  b.horizon = cfg.horizon;
  b.enc.resize(M);
  b.dec.resize(M);
  std::vector<double> values, observed, truth;
  for (const data::Window& win : windows) {
    if (win.context_values.cols() != dx || win.horizon_values.cols() != dx)
      throw InvalidArgument("make_batch: window has " + std::to_string(win.context_values.cols()) +
                            " channels, model expects " + std::to_string(dx));
    if (win.context_length() < cfg.context)
      throw ConfigError("make_batch: context of " + std::to_string(win.context_length()) +
                        " observations, model needs " + std::to_string(cfg.context));
    if (win.horizon_times.size() != cfg.horizon)
      throw ConfigError("make_batch: horizon of " + std::to_string(win.horizon_times.size()) +
                        " steps, model needs " + std::to_string(cfg.horizon));
    // Most recent cfg.context observations.
    const std::size_t skip = win.context_length() - cfg.context;
    std::vector<std::size_t> keep(cfg.context);
    for (std::size_t i = 0; i < cfg.context; ++i) keep[i] = skip + i;
    const double origin = win.context_times[skip];
    std::vector<double> t0(cfg.context), th(cfg.horizon);
    for (std::size_t i = 0; i < cfg.context; ++i) t0[i] = (win.context_times[keep[i]] - origin) / cfg.time_unit;
    for (std::size_t i = 0; i < cfg.horizon; ++i) th[i] = (win.horizon_times[i] - origin) / cfg.time_unit;

    const GridStack cg = data::build_level_grids(t0, {}, w, M);
    const GridStack hg = data::build_level_grids(th, {}, w, M);
    const auto ccov = level_covariates(cg, rows_of(win.context_covariates, keep));
    const auto hcov = level_covariates(hg, win.horizon_covariates);
    for (std::size_t m = 0; m < M; ++m) {
      b.enc[m].append(cde::geometry_from_grid(cg.levels[m + 1], ccov[m]));
      b.dec[m].push_back(cde::geometry_from_grid(hg.levels[m + 1], hcov[m]));
    }

    std::vector<double> obs_row(dx);
    for (std::size_t c = 0; c < dx; ++c) {
      // A channel never observed in the context falls back to its filled values.
      bool any = false;
      for (std::size_t i : keep) any = any || win.context_observed[i * dx + c];
      obs_row[c] = any ? 0.0 : 1.0;
    }
    for (std::size_t i : keep)
      for (std::size_t c = 0; c < dx; ++c) {
        values.push_back(win.context_values(i, c));
        observed.push_back(win.context_observed[i * dx + c] ? 1.0 : obs_row[c]);
      }
    for (std::size_t i = 0; i < cfg.horizon; ++i)
      for (std::size_t c = 0; c < dx; ++c) truth.push_back(win.horizon_values(i, c));
    b.horizon_times.insert(b.horizon_times.end(), win.horizon_times.begin(), win.horizon_times.end());
    b.keys.push_back(window_key(win));
  }
  b.context = cfg.context;
  b.context_values = Matrix(b.windows * cfg.context, dx, std::move(values));
  b.observed = Matrix(b.windows * cfg.context, dx, std::move(observed));
  b.truth = Matrix(b.windows * cfg.horizon, dx, std::move(truth));
  return b;
}

Encoded encode(ParamBinder& pb, const Model& model, const Batch& batch, Var raw, Sinks sinks) {
  const ModelConfig& cfg = model.config();
  const ModelParams& p = model.params();
  const std::size_t W = batch.windows, T = batch.context, M = cfg.levels;
  if (raw.rows() != W * T || raw.cols() != cfg.channels) throw InvalidArgument("encode: context shape mismatch");
  Tape& tape = pb.tape();
  Encoded e;

  // Reversible instance normalization with statistics over observed cells.
  const Var mask = tape.constant(batch.observed);
  const SparseMix sum_rows = group_sum(W, T);
  const SparseMix spread = SparseMix::broadcast(W, T);
  const Var counts = ops::mix_rows(mask, sum_rows);
  e.mean = ops::div(ops::mix_rows(ops::mul(raw, mask), sum_rows), counts);
  const Var centered = ops::sub(raw, ops::mix_rows(e.mean, spread));
  const Var var = ops::div(ops::mix_rows(ops::mul(ops::square(centered), mask), sum_rows), counts);
  e.scale = ops::sqrt(ops::add_scalar(var, 1e-5));
  Var x = ops::div(centered, ops::mix_rows(e.scale, spread));
  x = ops::add_row(ops::mul_row(x, pb(p.revin_gamma)), pb(p.revin_beta));
  x = ops::add_row(ops::matmul(x, pb(p.in_weight)), pb(p.in_bias));

  e.levels.push_back(x);
  for (std::size_t m = 0; m < M; ++m) {
    Var h = x;
    if (m > 0) h = refiner::encoder_refine(pb, p.enc_refiner[m], x, W, {m, sinks.records});
    e.skips.push_back(cfg.skip == SkipSource::post_refiner ? h : x);
    const Var in = cfg.pre_resample_norm ? ops::normalize_rows(h) : h;
    x = resample_down(pb, model, m, in, batch.enc[m]);
    e.levels.push_back(x);
  }
  const Var top = ops::add_row(ops::mul_row(ops::normalize_rows(x), pb(p.top_gamma)), pb(p.top_beta));
  e.mu = ops::add_row(ops::matmul(top, pb(p.mu_weight)), pb(p.mu_bias));
  e.sigma = ops::add_scalar(ops::softplus(ops::add_row(ops::matmul(top, pb(p.sigma_weight)), pb(p.sigma_bias))), 1e-6);
  return e;
}

Matrix latent_noise(const Batch& batch, std::size_t top_len, std::size_t dim, std::size_t first, std::size_t last,
                    std::uint64_t seed) {
  if (last < first) throw InvalidArgument("latent_noise: bad sample range");
  const std::size_t per_sample = top_len * dim;
  Matrix eps(batch.windows * (last - first) * top_len, dim);
  double* out = eps.data();
  for (std::size_t b = 0; b < batch.windows; ++b) {
    CounterRng rng("latent", splitmix64(seed ^ batch.keys[b]));
    for (std::size_t i = 0; i < first * per_sample; ++i) rng.normal();
    for (std::size_t i = 0; i < (last - first) * per_sample; ++i) *out++ = rng.normal();
  }
  return eps;
}

Var sample_latent(const Model& model, const Batch& batch, const Encoded& enc, const Matrix& eps, std::size_t samples) {
  const ModelConfig& cfg = model.config();
  const std::size_t W = batch.windows, TM = batch.context / cfg.block(), LM = batch.horizon / cfg.block();
  if (LM > TM) throw InvalidArgument("sample_latent: horizon needs more latent positions than the context has");
  if (eps.rows() != W * samples * LM || eps.cols() != cfg.dim) throw InvalidArgument("sample_latent: noise shape mismatch");
  std::vector<std::size_t> rows;
  rows.reserve(W * samples * LM);
  for (std::size_t b = 0; b < W; ++b)
    for (std::size_t s = 0; s < samples; ++s)
      for (std::size_t k = 0; k < LM; ++k) rows.push_back(b * TM + TM - LM + k);
  const SparseMix pick = SparseMix::select(W * TM, rows);
  Tape& tape = *enc.mu.tape();
  return ops::add(ops::mix_rows(enc.mu, pick), ops::mul(ops::mix_rows(enc.sigma, pick), tape.constant(eps)));
}

Var decode(ParamBinder& pb, const Model& model, const Batch& batch, const Encoded& enc, Var latent,
           std::size_t samples, Sinks sinks) {
  const ModelConfig& cfg = model.config();
  const ModelParams& p = model.params();
  const std::size_t W = batch.windows, M = cfg.levels;
  if (latent.rows() != W * samples * (batch.horizon / cfg.block()))
    throw InvalidArgument("decode: latent length does not match the horizon's top-level patch count");
  Var y = latent;
  for (std::size_t m = M; m-- > 0;) {
    cde::PatchGeometry geo;
    geo.patch_len = cfg.patch_len;
    std::vector<double> cov;
    for (std::size_t b = 0; b < W; ++b) {
      const cde::PatchGeometry& one = batch.dec[m][b];
      for (std::size_t s = 0; s < samples; ++s) {
        geo.patches += one.patches;
        geo.fine_times.insert(geo.fine_times.end(), one.fine_times.begin(), one.fine_times.end());
        cov.insert(cov.end(), one.fine_covariates.values().begin(), one.fine_covariates.values().end());
      }
    }
    const std::size_t cdim = batch.dec[m].front().fine_covariates.cols();
    geo.fine_covariates = Matrix(geo.fine_times.size(), cdim, std::move(cov));
    const Var in = cfg.pre_resample_norm ? ops::normalize_rows(y) : y;
    y = resample_up(pb, model, m, in, geo);
    if (m > 0) y = refiner::decoder_refine(pb, p.dec_refiner[m], y, enc.skips[m], W * samples, samples, {m, sinks.records});
  }
  return y;
}

Var output_head(ParamBinder& pb, const Model& model, const Batch& batch, const Encoded& enc, Var emb,
                std::size_t samples) {
  const ModelParams& p = model.params();
  const SparseMix spread = SparseMix::broadcast(batch.windows, samples * batch.horizon);
  Var y = ops::add_row(ops::matmul(emb, pb(p.out_weight)), pb(p.out_bias));
  y = ops::sub(y, ops::mix_rows(pb(p.revin_beta), SparseMix::broadcast(1, y.rows())));
  y = ops::div(y, ops::mix_rows(ops::add_scalar(pb(p.revin_gamma), 1e-10), SparseMix::broadcast(1, y.rows())));
  return ops::add(ops::mul(y, ops::mix_rows(enc.scale, spread)), ops::mix_rows(enc.mean, spread));
}

Var forecast_on_tape(ParamBinder& pb, const Model& model, const Batch& batch, Var raw, const Matrix& eps,
                     std::size_t samples, Sinks sinks) {
  const Encoded enc = encode(pb, model, batch, raw, sinks);
  const Var latent = sample_latent(model, batch, enc, eps, samples);
  return output_head(pb, model, batch, enc, decode(pb, model, batch, enc, latent, samples, sinks), samples);
}

Matrix forecast_batch(const Model& model, const Batch& batch, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw InvalidArgument("forecast: need at least one sample");
  const ModelConfig& cfg = model.config();
  const std::size_t W = batch.windows, L = batch.horizon, LM = L / cfg.block();
  // Decode in sample chunks to bound the tape's memory.
  const std::size_t chunk = std::max<std::size_t>(1, 32 / W);
  Matrix out(W * samples * L, cfg.channels);
  for (std::size_t s0 = 0; s0 < samples; s0 += chunk) {
    const std::size_t s1 = std::min(samples, s0 + chunk), n = s1 - s0;
    Tape tape;
    ParamBinder pb(tape, model.store(), false);
    const Matrix eps = latent_noise(batch, LM, cfg.dim, s0, s1, seed);
    const Matrix y = forecast_on_tape(pb, model, batch, tape.constant(batch.context_values), eps, n).value();
    for (std::size_t b = 0; b < W; ++b)
      for (std::size_t s = 0; s < n; ++s)
        for (std::size_t t = 0; t < L; ++t) {
          const auto src = y.row((b * n + s) * L + t);
          std::copy(src.begin(), src.end(), out.row((b * samples + s0 + s) * L + t).begin());
        }
  }
  return out;
}

ForecastEnsemble forecast(const Model& model, const data::Window& window, std::size_t samples, std::uint64_t seed) {
  const Batch batch = make_batch(model.config(), std::span<const data::Window>(&window, 1));
  return {samples, forecast_batch(model, batch, samples, seed), window.horizon_times};
}

std::vector<refiner::AttentionRecord> export_attention(const Model& model, const data::Window& window) {
  const ModelConfig& cfg = model.config();
  const Batch batch = make_batch(cfg, std::span<const data::Window>(&window, 1));
  std::vector<refiner::AttentionRecord> records;
  Tape tape;
  ParamBinder pb(tape, model.store(), false);
  const Matrix eps(batch.horizon / cfg.block(), cfg.dim);
  forecast_on_tape(pb, model, batch, tape.constant(batch.context_values), eps, 1, {&records});
  return records;
}

scoring::ScoreReport evaluate(const Model& model, std::span<const data::Window> windows, std::size_t samples,
                              std::uint64_t seed, std::size_t batch_size) {
  if (windows.empty()) throw InvalidArgument("evaluate: no windows");
  if (batch_size == 0) throw InvalidArgument("evaluate: batch size must be >= 1");
  const std::size_t L = model.config().horizon;
  scoring::NcrpsAccumulator acc(model.config().channels);
  for (std::size_t i = 0; i < windows.size(); i += batch_size) {
    const auto part = windows.subspan(i, std::min(batch_size, windows.size() - i));
    const Batch batch = make_batch(model.config(), part);
    const Matrix ens = forecast_batch(model, batch, samples, seed);
    for (std::size_t b = 0; b < batch.windows; ++b) {
      Matrix one(samples * L, ens.cols());
      std::copy(ens.data() + b * samples * L * ens.cols(), ens.data() + (b + 1) * samples * L * ens.cols(), one.data());
      acc.add(one, samples, part[b].horizon_values);
    }
  }
  return acc.report();
}

scoring::ScoreReport persistence_score(std::span<const data::Window> windows) {
  if (windows.empty()) throw InvalidArgument("persistence_score: no windows");
  scoring::NcrpsAccumulator acc(windows.front().horizon_values.cols());
  for (const data::Window& w : windows) {
    Matrix ens(w.horizon_values.rows(), w.horizon_values.cols());
    const auto last = w.context_values.row(w.context_values.rows() - 1);
    for (std::size_t t = 0; t < ens.rows(); ++t) std::copy(last.begin(), last.end(), ens.row(t).begin());
    acc.add(ens, 1, w.horizon_values);
  }
  return acc.report();
}

std::vector<data::Window> model_windows(const ModelConfig& cfg, const data::Dataset& observed,
                                        const data::Dataset& clean, data::Split split, std::size_t stride) {
  data::WindowSpec spec;
  spec.context = cfg.context;
  spec.horizon = cfg.horizon;
  spec.stride = stride;
  spec.repr = cfg.input_repr();
  return data::make_windows(observed, clean, split, spec);
}

}  // namespace ufo::model
