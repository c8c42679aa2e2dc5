#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ufo/cde.hpp"

// Tape-free NCDE kernels for inference timing. `downsample` integrates all
// patches of a batch with OpenMP over blocks of patches; serial::downsample
// is the same arithmetic in one loop and serves as the test reference.
// sequential_reference integrates one trajectory across a whole sequence,
// the baseline that time-parallel patching is measured against.
namespace ufo::cde::fast {

struct DownsamplerWeights {
  SwigluWeights field;
  Matrix init_weight;
  Matrix init_bias;
};

DownsamplerWeights extract(const ParamStore& store, const DownsamplerParams& p);

// Terminal state of every patch, (patches x d).
Matrix downsample(const DownsamplerWeights& w, const Matrix& fine_values, const PatchGeometry& geo,
                  const SolverConfig& cfg);

// Number of RK4 steps downsample() takes across one batch.
std::size_t patched_step_count(const PatchGeometry& geo, const SolverConfig& cfg);

namespace serial {
Matrix downsample(const DownsamplerWeights& w, const Matrix& fine_values, const PatchGeometry& geo,
                  const SolverConfig& cfg);
}  // namespace serial

struct Sequence {
  std::vector<double> times;
  Matrix values;      // n x d
  Matrix covariates;  // n x c
};

// One trajectory per sequence from its first to its last time, using
// `total_steps` equal RK4 steps, driven by the smoother over the whole
// sequence (direct summation over all of its observations). Sequences run
// in parallel; each trajectory is inherently serial.
// Returns (sequences x d) terminal states.
Matrix sequential_reference(const DownsamplerWeights& w, std::span<const Sequence> batch,
                            std::size_t total_steps, const interp::KernelConfig& kernel);

}  // namespace ufo::cde::fast
