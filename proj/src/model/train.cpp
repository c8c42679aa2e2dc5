#include "ufo/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ufo/error.hpp"
#include "ufo/rng.hpp"

namespace ufo::model {

AdamState adam_init(const ParamStore& store) {
  return {store.zeros_like(), store.zeros_like(), 0};
}

void adam_update(ParamStore& store, std::vector<Matrix>& grads, AdamState& st, const AdamConfig& cfg) {
  if (grads.size() != store.size() || st.m.size() != store.size()) throw InvalidArgument("adam: state does not match store");
  const double norm = global_norm(grads);
  if (!std::isfinite(norm)) throw NumericError("adam: non-finite gradient norm");
  const double clip = cfg.clip_norm > 0.0 && norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
  ++st.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < store.size(); ++i) {
    double* p = store.value(i).data();
    const double* g = grads[i].data();
    double* m = st.m[i].data();
    double* v = st.v[i].data();
    for (std::size_t k = 0; k < grads[i].size(); ++k) {
      const double gk = g[k] * clip;
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gk;
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gk * gk;
      p[k] -= cfg.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg.eps);
    }
  }
}

double loss_and_grad(const Model& model, const Batch& batch, std::size_t samples, std::uint64_t seed,
                     std::vector<Matrix>* grads) {
  const ModelConfig& cfg = model.config();
  Tape tape;
  ParamBinder pb(tape, model.store(), grads != nullptr);
  const Matrix eps = latent_noise(batch, batch.horizon / cfg.block(), cfg.dim, 0, samples, seed);
  const Var y = forecast_on_tape(pb, model, batch, tape.constant(batch.context_values), eps, samples);
  const Var loss = scoring::ncrps_loss(y, batch.truth, batch.windows, samples);
  const double value = loss.value()(0, 0);
  if (grads != nullptr) {
    tape.backward(loss);
    pb.accumulate(*grads);
  }
  return value;
}

double train_step(Model& model, const Batch& batch, AdamState& state, const AdamConfig& cfg, std::uint64_t seed) {
  std::vector<Matrix> grads = model.store().zeros_like();
  double loss = 0.0;
  try {
    loss = loss_and_grad(model, batch, model.config().train_samples, seed, &grads);
  } catch (const DegenerateError&) {
    throw;
  } catch (const NumericError& e) {
    throw NumericError(std::string("training diverged at step ") + std::to_string(state.step + 1) + ": " + e.what());
  }
  if (!std::isfinite(loss))
    throw NumericError("training diverged at step " + std::to_string(state.step + 1) + ": loss is not finite");
  adam_update(model.store(), grads, state, cfg);
  return loss;
}

TrainResult train(Model& model, std::span<const data::Window> train_windows, std::span<const data::Window> val_windows,
                  const TrainConfig& cfg, const std::function<void(const EpochLog&)>& on_epoch) {
  if (train_windows.empty()) throw ConfigError("train: no training windows");
  if (cfg.batch_size == 0) throw ConfigError("train.batch_size: must be >= 1");
  AdamState state = adam_init(model.store());
  TrainResult result;
  std::vector<Matrix> best;
  std::size_t stale = 0;

  std::vector<std::size_t> order(train_windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<data::Window> chunk;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    CounterRng rng("shuffle", splitmix64(cfg.seed) ^ epoch);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double total = 0.0;
    std::size_t steps = 0;
    for (std::size_t i = 0; i < order.size(); i += cfg.batch_size) {
      chunk.clear();
      for (std::size_t k = i; k < std::min(order.size(), i + cfg.batch_size); ++k) chunk.push_back(train_windows[order[k]]);
      const Batch batch = make_batch(model.config(), chunk);
      total += train_step(model, batch, state, cfg.adam, splitmix64(cfg.seed + 0x9e37 * state.step + 1));
      ++steps;
    }
    EpochLog log{epoch, total / static_cast<double>(steps), 0.0};
    log.val_ncrps = val_windows.empty() ? log.train_loss
                                        : evaluate(model, val_windows, cfg.val_samples, cfg.seed).aggregate;
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
    if (best.empty() || log.val_ncrps < result.best_val) {
      result.best_val = log.val_ncrps;
      result.best_epoch = epoch;
      best.clear();
      for (std::size_t p = 0; p < model.store().size(); ++p) best.push_back(model.store().value(p));
      stale = 0;
    } else if (++stale >= cfg.patience && cfg.patience > 0) {
      break;
    }
  }
  for (std::size_t p = 0; p < best.size(); ++p) model.store().value(p) = best[p];
  return result;
}

}  // namespace ufo::model
