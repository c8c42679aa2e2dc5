#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "ufo/error.hpp"
#include "ufo/scoring.hpp"

namespace ufo::scoring {

double crps_samples(std::span<const double> samples, double y) {
  const std::size_t P = samples.size();
  if (P == 0) throw InvalidArgument("crps_samples: empty sample set");
  std::vector<double> x(samples.begin(), samples.end());
  std::stable_sort(x.begin(), x.end());
  double mae = 0.0, spread = 0.0;
  const double p = static_cast<double>(P);
  for (std::size_t i = 0; i < P; ++i) {
    mae += std::abs(x[i] - y);
    spread += (2.0 * static_cast<double>(i + 1) - p - 1.0) * x[i];
  }
  return std::max(0.0, mae / p - spread / (p * p));
}

double crps_brute(std::span<const double> samples, double y) {
  const std::size_t P = samples.size();
  if (P == 0) throw InvalidArgument("crps_brute: empty sample set");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  std::vector<double> cuts = x;
  cuts.push_back(y);
  std::sort(cuts.begin(), cuts.end());
  const double p = static_cast<double>(P);
  double total = 0.0;
  std::size_t below = 0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k];
    while (below < P && x[below] <= a) ++below;
    const double F = static_cast<double>(below) / p;
    const double H = y <= a ? 1.0 : 0.0;
    total += (F - H) * (F - H) * (cuts[k + 1] - a);
  }
  return total;
}

void ScoreReport::write(std::ostream& out) const {
  out << "channel,denominator,ncrps\n";
  out.precision(17);
  for (std::size_t j = 0; j < channel_ncrps.size(); ++j)
    out << j << ',' << denominators[j] << ',' << channel_ncrps[j] << '\n';
  out << "mean,," << aggregate << '\n';
}

NcrpsAccumulator::NcrpsAccumulator(std::size_t channels) : crps_(channels, 0.0), denom_(channels, 0.0) {}

void NcrpsAccumulator::add(const Matrix& samples, std::size_t P, const Matrix& truth) {
  const std::size_t L = truth.rows(), C = truth.cols();
  if (C != crps_.size()) throw InvalidArgument("ncrps: channel count mismatch");
  if (P == 0 || samples.rows() != P * L || samples.cols() != C)
    throw InvalidArgument("ncrps: ensemble shape does not match truth");
  std::vector<double> cell(P);
  for (std::size_t t = 0; t < L; ++t)
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t s = 0; s < P; ++s) cell[s] = samples(s * L + t, c);
      crps_[c] += crps_samples(cell, truth(t, c));
      denom_[c] += std::abs(truth(t, c));
    }
}

ScoreReport NcrpsAccumulator::report() const {
  ScoreReport r;
  std::string bad;
  for (std::size_t c = 0; c < crps_.size(); ++c)
    if (!(denom_[c] > 0.0)) bad += (bad.empty() ? "" : ",") + std::to_string(c);
  if (!bad.empty()) throw DegenerateError("ncrps: zero l1 denominator in channel(s) " + bad);
  r.crps_sums = crps_;
  r.denominators = denom_;
  for (std::size_t c = 0; c < crps_.size(); ++c) r.channel_ncrps.push_back(crps_[c] / denom_[c]);
  r.aggregate = r.channel_ncrps.empty()
                    ? 0.0
                    : std::accumulate(r.channel_ncrps.begin(), r.channel_ncrps.end(), 0.0) /
                          static_cast<double>(r.channel_ncrps.size());
  return r;
}

ScoreReport ncrps(const Matrix& samples, std::size_t P, const Matrix& truth) {
  NcrpsAccumulator acc(truth.cols());
  acc.add(samples, P, truth);
  return acc.report();
}

}  // namespace ufo::scoring
