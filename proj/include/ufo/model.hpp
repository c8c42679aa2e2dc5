#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ufo/cde.hpp"
#include "ufo/config.hpp"
#include "ufo/data.hpp"
#include "ufo/params.hpp"
#include "ufo/refiner.hpp"
#include "ufo/scoring.hpp"

namespace ufo::model {

struct ModelParams {
  std::size_t in_weight = 0, in_bias = 0;
  std::size_t revin_gamma = 0, revin_beta = 0;
  // Indexed by the finer level m = 0..M-1 of each resampling step.
  std::vector<cde::DownsamplerParams> down;
  std::vector<cde::UpsamplerParams> up;
  std::vector<cde::AltParams> alt_down, alt_up;
  // Indexed by level; entry 0 is unused because the bottom level is not refined.
  std::vector<refiner::RefinerParams> enc_refiner, dec_refiner;
  std::size_t top_gamma = 0, top_beta = 0;
  std::size_t mu_weight = 0, mu_bias = 0, sigma_weight = 0, sigma_bias = 0;
  std::size_t out_weight = 0, out_bias = 0;
};

class Model {
 public:
  // Initializes every parameter from cfg.init_seed.
  explicit Model(ModelConfig cfg);

  const ModelConfig& config() const noexcept { return cfg_; }
  const ModelParams& params() const noexcept { return params_; }
  ParamStore& store() noexcept { return store_; }
  const ParamStore& store() const noexcept { return store_; }

 private:
  ModelConfig cfg_;
  ParamStore store_;
  ModelParams params_;
};

// Level grids and covariates for a set of windows of equal shape.
struct Batch {
  std::size_t windows = 0;
  std::size_t context = 0;  // rows per window after truncation
  std::size_t horizon = 0;
  Matrix context_values;    // (windows*context) x d_x, raw units
  Matrix observed;          // same shape, 1 where the cell was observed
  Matrix truth;             // (windows*horizon) x d_x
  std::vector<double> horizon_times;  // epoch seconds, windows*horizon
  std::vector<std::uint64_t> keys;    // per window, seeds its latent noise
  // Geometry of the resampling step between level m and m+1: enc[m] for
  // all context windows stacked, dec[m][b] for window b's horizon.
  std::vector<cde::PatchGeometry> enc;
  std::vector<std::vector<cde::PatchGeometry>> dec;
};

Batch make_batch(const ModelConfig& cfg, std::span<const data::Window> windows);

struct Encoded {
  std::vector<Var> skips;  // per level, the features the decoder attends to
  std::vector<Var> levels; // x^(0..M)
  Var mu, sigma;           // (windows * T_M) x d
  Var mean, scale;         // RevIN statistics, windows x d_x
};

struct Sinks {
  std::vector<refiner::AttentionRecord>* records = nullptr;
};

// raw_context holds batch.context_values on the tape (a variable when input
// gradients are wanted).
Encoded encode(ParamBinder& pb, const Model& model, const Batch& batch, Var raw_context, Sinks sinks = {});

// Standard normal noise for samples [first, last) of every window, rows
// ordered (window, sample, top horizon position). Each window's draws depend
// only on (seed, its key), not on the batch it is in.
Matrix latent_noise(const Batch& batch, std::size_t top_len, std::size_t dim, std::size_t first,
                    std::size_t last, std::uint64_t seed);

// mu + sigma * eps over the last L_M latent positions of every window.
Var sample_latent(const Model& model, const Batch& batch, const Encoded& enc, const Matrix& eps, std::size_t samples);

// Upsamples and refines the latent samples back to the horizon grid,
// returning (windows*samples*L) x d embeddings.
Var decode(ParamBinder& pb, const Model& model, const Batch& batch, const Encoded& enc, Var latent,
           std::size_t samples, Sinks sinks = {});

// Output projection plus inverse RevIN; rows (window, sample, step).
Var output_head(ParamBinder& pb, const Model& model, const Batch& batch, const Encoded& enc, Var embeddings,
                std::size_t samples);

// Full pipeline on a tape: samples in data units.
Var forecast_on_tape(ParamBinder& pb, const Model& model, const Batch& batch, Var raw_context, const Matrix& eps,
                     std::size_t samples, Sinks sinks = {});

// Ensembles for a batch, rows (window, sample, step).
Matrix forecast_batch(const Model& model, const Batch& batch, std::size_t samples, std::uint64_t seed);

struct ForecastEnsemble {
  std::size_t samples = 0;
  Matrix values;  // (samples*L) x d_x, sample-major
  std::vector<double> horizon_times;
};

ForecastEnsemble forecast(const Model& model, const data::Window& window, std::size_t samples, std::uint64_t seed);

// Attention matrices of one forward pass over one window with eps = 0.
std::vector<refiner::AttentionRecord> export_attention(const Model& model, const data::Window& window);

// Pooled NCRPS over all windows' horizons.
scoring::ScoreReport evaluate(const Model& model, std::span<const data::Window> windows, std::size_t samples,
                              std::uint64_t seed, std::size_t batch_size = 4);

// Repeats the last observed context value across the horizon.
scoring::ScoreReport persistence_score(std::span<const data::Window> windows);

// The windows of a dataset in the representation the model consumes.
std::vector<data::Window> model_windows(const ModelConfig& cfg, const data::Dataset& observed,
                                        const data::Dataset& clean, data::Split split, std::size_t stride);

}  // namespace ufo::model
