#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>


#include "ufo/analysis.hpp"
#include "ufo/cde_kernels.hpp"
#include "ufo/error.hpp"
#include "ufo/kernels.hpp"
#include "ufo/rng.hpp"

namespace ufo::analysis {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

void TimingReport::write(std::ostream& out) const {
  out.precision(9);
  out << "batch,seconds\n";
  for (std::size_t i = 0; i < batch_seconds.size(); ++i) out << i << ',' << batch_seconds[i] << '\n';
  out << "# seconds_per_sequence," << seconds_per_sequence << '\n';
  out << "# batch_size," << batch_size << '\n';
  out << "# threads," << threads << '\n';
}

TimingReport timing(const model::Model& model, std::span<const data::Window> windows, std::size_t batches,
                    std::size_t batch_size) {
  if (windows.empty() || batches == 0 || batch_size == 0) throw InvalidArgument("timing: nothing to time");
  // Batches are assembled before the clock starts.
  std::vector<model::Batch> prepared;
  std::vector<data::Window> chunk;
  for (std::size_t b = 0; b <= batches; ++b) {
    chunk.clear();
    for (std::size_t k = 0; k < batch_size; ++k) chunk.push_back(windows[(b * batch_size + k) % windows.size()]);
    prepared.push_back(model::make_batch(model.config(), chunk));
  }
  TimingReport r;
  r.batch_size = batch_size;
  r.threads = static_cast<std::size_t>(kernels::worker_count());
  model::forecast_batch(model, prepared[0], 1, 0);
  for (std::size_t b = 1; b <= batches; ++b) {
    const auto t0 = Clock::now();
    model::forecast_batch(model, prepared[b], 1, 0);
    r.batch_seconds.push_back(seconds_since(t0));
  }
  double total = 0.0;
  for (double s : r.batch_seconds) total += s;
  r.seconds_per_sequence = total / static_cast<double>(batches * batch_size);
  return r;
}

void SpeedupReport::write(std::ostream& out) const {
  out.precision(9);
  out << "path,seconds,steps_per_sequence\n";
  out << "patched," << patched_seconds << ',' << patched_steps << '\n';
  out << "sequential," << sequential_seconds << ',' << sequential_steps << '\n';
  out << "# speedup," << speedup << '\n';
  out << "# length," << length << '\n';
  out << "# batch," << batch << '\n';
  out << "# threads," << threads << '\n';
}

SpeedupReport speedup(const SpeedupConfig& cfg) {
  if (cfg.length < 2 * cfg.patch_len || cfg.length % cfg.patch_len != 0 || cfg.batch == 0 || cfg.repeats == 0)
    throw InvalidArgument("speedup: length must be a multiple of patch_len with at least two patches");
  const std::size_t d = cfg.dim, c = data::kCovariateDim, w = cfg.patch_len;
  ParamStore store;
  CounterRng init("speedup.init", cfg.seed);
  const auto params = cde::add_downsampler(store, "down", d, c, d, init);
  cde::fast::DownsamplerWeights weights = cde::fast::extract(store, params);
  // Damped so the whole-span trajectory stays finite.
  for (double& v : weights.field.out.values()) v *= 1e-2;
  cde::SolverConfig solver;

  // Hourly sequences: a random walk per feature and calendar covariates.
  std::vector<cde::fast::Sequence> seqs(cfg.batch);
  cde::PatchGeometry geo;
  Matrix fine(cfg.batch * cfg.length, d);
  CounterRng noise("speedup.data", cfg.seed);
  for (std::size_t b = 0; b < cfg.batch; ++b) {
    cde::fast::Sequence& s = seqs[b];
    std::vector<double> stamps(cfg.length);
    for (std::size_t i = 0; i < cfg.length; ++i) {
      s.times.push_back(static_cast<double>(i));
      stamps[i] = 1451606400.0 + 3600.0 * static_cast<double>(i + b * cfg.length);
    }
    s.covariates = data::time_covariates(stamps);
    s.values = Matrix(cfg.length, d);
    for (std::size_t k = 0; k < d; ++k) {
      double v = 0.0;
      for (std::size_t i = 0; i < cfg.length; ++i) s.values(i, k) = v += 0.1 * noise.normal();
    }
    cde::PatchGeometry one;
    one.patches = cfg.length / w;
    one.patch_len = w;
    one.fine_times = s.times;
    one.fine_covariates = s.covariates;
    geo.append(one);
    std::copy(s.values.data(), s.values.data() + s.values.size(), fine.data() + b * s.values.size());
  }

  SpeedupReport r;
  r.length = cfg.length;
  r.batch = cfg.batch;
  r.threads = cfg.threads;
  r.patched_steps = cde::fast::patched_step_count(geo, solver) / cfg.batch;
  r.sequential_steps = r.patched_steps;

  const int previous = kernels::worker_count();
  kernels::set_worker_count(static_cast<int>(cfg.threads));
  r.patched_seconds = r.sequential_seconds = INFINITY;
  double sink = 0.0;
  for (std::size_t k = 0; k < cfg.repeats; ++k) {
    auto t0 = Clock::now();
    const Matrix a = cde::fast::downsample(weights, fine, geo, solver);
    r.patched_seconds = std::min(r.patched_seconds, seconds_since(t0));
    t0 = Clock::now();
    const Matrix b = cde::fast::sequential_reference(weights, seqs, r.sequential_steps, solver.kernel);
    r.sequential_seconds = std::min(r.sequential_seconds, seconds_since(t0));
    sink += a(0, 0) + b(0, 0);
  }
  kernels::set_worker_count(previous);
  if (!std::isfinite(sink)) throw NumericError("speedup: non-finite states");
  r.speedup = r.sequential_seconds / r.patched_seconds;
  return r;
}

}  // namespace ufo::analysis
