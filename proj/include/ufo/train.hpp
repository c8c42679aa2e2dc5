#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ufo/model.hpp"

namespace ufo::model {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 1.0;  // global gradient norm; <= 0 disables clipping
};

struct AdamState {
  std::vector<Matrix> m, v;
  std::size_t step = 0;
};

AdamState adam_init(const ParamStore& store);

// Clips grads to the global norm and applies one Adam update.
void adam_update(ParamStore& store, std::vector<Matrix>& grads, AdamState& state, const AdamConfig& cfg);

// NCRPS loss of the batch under `samples` draws per window, with gradients
// accumulated into grads (same layout as the store).
double loss_and_grad(const Model& model, const Batch& batch, std::size_t samples, std::uint64_t seed,
                     std::vector<Matrix>* grads);

// One optimizer step on a batch. Throws NumericError if the loss is not finite.
double train_step(Model& model, const Batch& batch, AdamState& state, const AdamConfig& cfg, std::uint64_t seed);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  std::size_t patience = 5;
  std::uint64_t seed = 0;
  std::size_t val_samples = 16;
  AdamConfig adam;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_ncrps = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val = 0.0;
};

// Shuffled minibatch epochs with early stopping on validation NCRPS; the
// model ends holding the parameters of the best epoch.
TrainResult train(Model& model, std::span<const data::Window> train_windows, std::span<const data::Window> val_windows,
                  const TrainConfig& cfg, const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace ufo::model
