#include "ufo/interp.hpp"

#include <cmath>

#include "ufo/error.hpp"

namespace ufo::interp {

void KernelConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("kernel: lambda must be >= 0");
  if (!(kernel_scale > 0.0) || !std::isfinite(kernel_scale))
    throw InvalidArgument("kernel: kernel_scale must be > 0");
}

void IrregularChannel::validate() const {
  if (times.size() != values.size()) throw InvalidArgument("channel: times/values length mismatch");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || !std::isfinite(values[i]))
      throw InvalidArgument("channel: non-finite entry");
    if (i > 0 && !(times[i] > times[i - 1])) throw InvalidArgument("channel: times not strictly increasing");
  }
}

double kernel_weight(double a, double b, double scale) {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(scale))
    throw InvalidArgument("kernel_weight: non-finite input");
  if (!(scale > 0.0)) throw InvalidArgument("kernel_weight: scale must be > 0");
  return std::exp(-std::abs(a - b) / scale);
}

void smoother_weights(std::span<const double> times, double query, const KernelConfig& cfg,
                      std::span<double> out) {
  if (out.size() != times.size()) throw InvalidArgument("smoother_weights: output size");
  if (times.empty() && cfg.lambda == 0.0)
    throw DegenerateError("kernel smoother: empty design with lambda = 0");
  double total = cfg.lambda;
  for (std::size_t i = 0; i < times.size(); ++i) {
    out[i] = std::exp(-std::abs(times[i] - query) / cfg.kernel_scale);
    total += out[i];
  }
  if (total == 0.0) {
    // All kernel weights underflowed; the nearest observation takes the mass.
    std::size_t best = 0;
    for (std::size_t i = 1; i < times.size(); ++i)
      if (std::abs(times[i] - query) < std::abs(times[best] - query)) best = i;
    out[best] = 1.0;
    return;
  }
  for (double& w : out) w /= total;
}

std::vector<double> interpolate(const IrregularChannel& channel, std::span<const double> query_times,
                                const KernelConfig& cfg) {
  cfg.validate();
  channel.validate();
  std::vector<double> out(query_times.size(), 0.0);
  std::vector<double> w(channel.count());
  for (std::size_t q = 0; q < query_times.size(); ++q) {
    smoother_weights(channel.times, query_times[q], cfg, w);
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * channel.values[i];
    out[q] = s;
  }
  return out;
}

Matrix interpolate_columns(std::span<const double> times, const Matrix& values,
                           std::span<const double> query_times, const KernelConfig& cfg) {
  cfg.validate();
  if (values.rows() != times.size()) throw InvalidArgument("interpolate_columns: row count mismatch");
  Matrix out(query_times.size(), values.cols());
  std::vector<double> w(times.size());
  for (std::size_t q = 0; q < query_times.size(); ++q) {
    smoother_weights(times, query_times[q], cfg, w);
    for (std::size_t i = 0; i < w.size(); ++i)
      for (std::size_t c = 0; c < values.cols(); ++c) out(q, c) += w[i] * values(i, c);
  }
  return out;
}

}  // namespace ufo::interp
