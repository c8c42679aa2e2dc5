#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "ufo/grid.hpp"
#include "ufo/interp.hpp"
#include "ufo/params.hpp"
#include "ufo/rng.hpp"
#include "ufo/tape.hpp"

namespace ufo::cde {

struct SolverConfig {
  int steps_per_interval = 2;
  // Longest RK4 step, in level time units. Intervals wider than this get
  // proportionally more steps (long gaps left by missing days).
  double max_step = 1.0;
  interp::KernelConfig kernel;

  void validate() const;
};

// Number of RK4 steps used for an interval of the given width.
std::size_t substeps_for(double width, const SolverConfig& cfg);

// Plain SwiGLU weights: gate/value are (in x hidden), out is (hidden x d).
struct SwigluWeights {
  Matrix gate;
  Matrix value;
  Matrix out;
};

// out^T (swish(gate^T u) * value^T u) with u = [tau, control, state];
// control may be empty (upsampling field).
std::vector<double> swiglu_field(std::span<const double> tau, std::span<const double> control,
                                 std::span<const double> state, const SwigluWeights& w);

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
};

using FieldFn = std::function<void(double t, std::span<const double> z, std::span<double> dz)>;

// Classic RK4 from the first to the last fine time with steps_per_interval
// steps per interval (more if an interval exceeds max_step), recording the
// state at every fine time. Throws IntegrationDiverged on non-finite state.
Trajectory integrate_patch(const FieldFn& field, std::span<const double> z0,
                           std::span<const double> fine_times, int steps_per_interval,
                           double max_step = std::numeric_limits<double>::infinity());

// Constant geometry of a batch of equal-length patches: row p*patch_len + j
// of the fine sequence is point j of patch p.
struct PatchGeometry {
  std::size_t patches = 0;
  std::size_t patch_len = 0;
  std::vector<double> fine_times;
  Matrix fine_covariates;  // (patches*patch_len) x c

  void validate() const;
  // Appends another geometry with the same patch length (batching).
  void append(const PatchGeometry& other);
};

// Geometry of a level grid with the given covariates per fine point.
PatchGeometry geometry_from_grid(const LevelGrid& grid, const Matrix& fine_covariates);

struct FieldParams {
  std::size_t gate = 0, value = 0, out = 0;
  std::size_t in_dim = 0, hidden = 0, dim = 0;
};

struct DownsamplerParams {
  FieldParams field;
  std::size_t init_weight = 0, init_bias = 0;
};

struct UpsamplerParams {
  FieldParams field;
};

DownsamplerParams add_downsampler(ParamStore& store, const std::string& prefix, std::size_t dim,
                                  std::size_t cov_dim, std::size_t hidden, CounterRng& rng);
UpsamplerParams add_upsampler(ParamStore& store, const std::string& prefix, std::size_t dim,
                              std::size_t cov_dim, std::size_t hidden, CounterRng& rng);

// One embedding per patch: NN_0 of the smoothed first point seeds the state,
// which is integrated across the patch driven by the smoothed fine sequence
// and covariates; the terminal state is emitted. Patches are independent.
Var ncde_downsample(ParamBinder& pb, const DownsamplerParams& p, Var fine_values,
                    const PatchGeometry& geo, const SolverConfig& cfg);

// Each seed row starts a trajectory at its patch's first fine time, driven
// only by the smoothed covariates; the state at every fine time is emitted.
Var ncde_upsample(ParamBinder& pb, const UpsamplerParams& p, Var seeds, const PatchGeometry& geo,
                  const SolverConfig& cfg);

// Ablation resamplers operating on regular (forward-filled) grids.
enum class AltKind { rnn, conv };
enum class Direction { down, up };

AltKind parse_alt_kind(std::string_view name);

struct AltParams {
  AltKind kind = AltKind::conv;
  Direction direction = Direction::down;
  std::size_t dim = 0, input_dim = 0, patch_len = 0;
  // conv
  std::size_t weight = 0, bias = 0;
  // rnn (GRU)
  std::size_t wz = 0, wr = 0, wn = 0, uz = 0, ur = 0, un = 0, bz = 0, br = 0, bn = 0;
};

AltParams add_alt_resampler(ParamStore& store, const std::string& prefix, AltKind kind,
                            Direction direction, std::size_t dim, std::size_t cov_dim,
                            std::size_t patch_len, CounterRng& rng);

// down: seq has patches*patch_len rows, returns one row per patch.
// up: seq has one row per patch, returns patches*patch_len rows.
Var alt_resample(ParamBinder& pb, const AltParams& p, Var seq, const PatchGeometry& geo);

// Single GRU step h' = n + z * (h - n) on the tape.
Var gru_cell(ParamBinder& pb, const AltParams& p, Var x, Var h);

}  // namespace ufo::cde
