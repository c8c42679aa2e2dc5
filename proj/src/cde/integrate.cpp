#include <algorithm>
#include <cmath>
#include <string>

#include "ufo/cde.hpp"
#include "ufo/error.hpp"

namespace ufo {

void LevelGrid::validate() const {
  if (level == 0) {
    for (std::size_t i = 1; i < coarse_times.size(); ++i)
      if (!(coarse_times[i] > coarse_times[i - 1]))
        throw InvalidArgument("level grid: coarse times not strictly increasing");
    return;
  }
  if (patch_len == 0) throw InvalidArgument("level grid: empty patch");
  if (fine_times.size() != patches() * patch_len)
    throw InvalidArgument("level grid: fine time count does not match patches");
  for (std::size_t p = 0; p < patches(); ++p) {
    const auto [ts, te] = patch_bounds(p);
    for (std::size_t j = 0; j < patch_len; ++j) {
      const double t = fine_times[p * patch_len + j];
      if (t < ts || t > te) throw InvalidArgument("level grid: fine time outside its patch");
      if (j > 0 && !(t > fine_times[p * patch_len + j - 1]))
        throw InvalidArgument("level grid: fine times not increasing");
    }
    if (p > 0 && !(ts > patch_bounds(p - 1).second))
      throw InvalidArgument("level grid: patches overlap");
    if (p > 0 && !(coarse_times[p] > coarse_times[p - 1]))
      throw InvalidArgument("level grid: coarse times not strictly increasing");
  }
}

namespace cde {

void SolverConfig::validate() const {
  if (steps_per_interval < 1) throw InvalidArgument("solver: steps_per_interval must be >= 1");
  if (!(max_step > 0.0)) throw InvalidArgument("solver: max_step must be > 0");
  kernel.validate();
}

std::size_t substeps_for(double width, const SolverConfig& cfg) {
  const auto base = static_cast<std::size_t>(cfg.steps_per_interval);
  if (!std::isfinite(cfg.max_step)) return base;
  const double needed = std::ceil(width / (cfg.max_step * static_cast<double>(base)));
  return base * std::max<std::size_t>(1, static_cast<std::size_t>(needed));
}

namespace {
double swish_scalar(double x) { return x / (1.0 + std::exp(-x)); }
}  // namespace

std::vector<double> swiglu_field(std::span<const double> tau, std::span<const double> control,
                                 std::span<const double> state, const SwigluWeights& w) {
  const std::size_t in = tau.size() + control.size() + state.size();
  if (w.gate.rows() != in || w.value.rows() != in || w.gate.cols() != w.value.cols() ||
      w.out.rows() != w.gate.cols() || w.out.cols() != state.size())
    throw InvalidArgument("swiglu_field: dimension mismatch");
  std::vector<double> u;
  u.reserve(in);
  u.insert(u.end(), tau.begin(), tau.end());
  u.insert(u.end(), control.begin(), control.end());
  u.insert(u.end(), state.begin(), state.end());
  const std::size_t hidden = w.gate.cols();
  std::vector<double> act(hidden);
  for (std::size_t h = 0; h < hidden; ++h) {
    double g = 0.0, v = 0.0;
    for (std::size_t i = 0; i < in; ++i) {
      g += u[i] * w.gate(i, h);
      v += u[i] * w.value(i, h);
    }
    act[h] = swish_scalar(g) * v;
  }
  std::vector<double> out(state.size(), 0.0);
  for (std::size_t h = 0; h < hidden; ++h)
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += act[h] * w.out(h, k);
  return out;
}

Trajectory integrate_patch(const FieldFn& field, std::span<const double> z0,
                           std::span<const double> fine_times, int steps_per_interval, double max_step) {
  if (steps_per_interval < 1) throw InvalidArgument("integrate_patch: steps_per_interval must be >= 1");
  if (fine_times.empty()) throw InvalidArgument("integrate_patch: no fine times");
  for (std::size_t i = 1; i < fine_times.size(); ++i)
    if (!(fine_times[i] > fine_times[i - 1])) throw InvalidArgument("integrate_patch: times not increasing");
  SolverConfig cfg;
  cfg.steps_per_interval = steps_per_interval;
  cfg.max_step = max_step;

  const std::size_t d = z0.size();
  std::vector<double> z(z0.begin(), z0.end()), k1(d), k2(d), k3(d), k4(d), tmp(d);
  Trajectory traj;
  traj.times.assign(fine_times.begin(), fine_times.end());
  traj.states.push_back(z);
  for (std::size_t j = 0; j + 1 < fine_times.size(); ++j) {
    const double width = fine_times[j + 1] - fine_times[j];
    const std::size_t n = substeps_for(width, cfg);
    const double h = width / static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) {
      const double t = fine_times[j] + static_cast<double>(s) * h;
      field(t, z, k1);
      for (std::size_t i = 0; i < d; ++i) tmp[i] = z[i] + 0.5 * h * k1[i];
      field(t + 0.5 * h, tmp, k2);
      for (std::size_t i = 0; i < d; ++i) tmp[i] = z[i] + 0.5 * h * k2[i];
      field(t + 0.5 * h, tmp, k3);
      for (std::size_t i = 0; i < d; ++i) tmp[i] = z[i] + h * k3[i];
      field(t + h, tmp, k4);
      for (std::size_t i = 0; i < d; ++i) {
        z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (!std::isfinite(z[i]))
          throw IntegrationDiverged("integrate_patch: state diverged at t=" + std::to_string(t + h), t + h);
      }
    }
    traj.states.push_back(z);
  }
  return traj;
}

void PatchGeometry::validate() const {
  if (patch_len == 0) throw InvalidArgument("patch geometry: empty patch");
  if (fine_times.size() != patches * patch_len) throw InvalidArgument("patch geometry: fine time count");
  if (fine_covariates.rows() != patches * patch_len)
    throw InvalidArgument("patch geometry: covariate row count");
  for (std::size_t p = 0; p < patches; ++p)
    for (std::size_t j = 1; j < patch_len; ++j)
      if (!(fine_times[p * patch_len + j] > fine_times[p * patch_len + j - 1]))
        throw InvalidArgument("patch geometry: fine times not increasing within a patch");
}

void PatchGeometry::append(const PatchGeometry& other) {
  if (patches == 0 && fine_times.empty()) {
    *this = other;
    return;
  }
  if (other.patch_len != patch_len || other.fine_covariates.cols() != fine_covariates.cols())
    throw InvalidArgument("patch geometry: cannot append mismatched geometry");
  patches += other.patches;
  fine_times.insert(fine_times.end(), other.fine_times.begin(), other.fine_times.end());
  Matrix merged(fine_covariates.rows() + other.fine_covariates.rows(), fine_covariates.cols());
  std::copy(fine_covariates.values().begin(), fine_covariates.values().end(), merged.data());
  std::copy(other.fine_covariates.values().begin(), other.fine_covariates.values().end(),
            merged.data() + fine_covariates.size());
  fine_covariates = std::move(merged);
}

PatchGeometry geometry_from_grid(const LevelGrid& grid, const Matrix& fine_covariates) {
  if (grid.level == 0) throw InvalidArgument("geometry_from_grid: level 0 has no patches");
  PatchGeometry g;
  g.patches = grid.patches();
  g.patch_len = grid.patch_len;
  g.fine_times = grid.fine_times;
  g.fine_covariates = fine_covariates;
  g.validate();
  return g;
}

}  // namespace cde
}  // namespace ufo
