#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ufo/data.hpp"
#include "ufo/error.hpp"
#include "ufo/rng.hpp"

namespace ufo::data {

Matrix time_covariates(std::span<const double> timestamps) {
  static constexpr double cycles[] = {kDay, kWeek, kMonth, kYear};
  Matrix out(timestamps.size(), kCovariateDim);
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      const double phase = 2.0 * std::numbers::pi * std::fmod(timestamps[i], cycles[k]) / cycles[k];
      out(i, 2 * k) = std::sin(phase);
      out(i, 2 * k + 1) = std::cos(phase);
    }
  }
  return out;
}

MissingRepr parse_missing_repr(std::string_view name) {
  if (name == "nan") return MissingRepr::nan;
  if (name == "ffill") return MissingRepr::ffill;
  throw InvalidArgument("unknown missing representation '" + std::string(name) + "' (expected nan or ffill)");
}

Injection inject_block_missing(const Dataset& ds, double fraction, std::uint64_t seed, MissingRepr repr) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw InvalidArgument("inject_block_missing: fraction must be in [0, 1)");
  Injection inj{ds, std::vector<std::uint8_t>(ds.rows(), 0), {}};
  std::vector<std::int64_t> days;
  for (double t : ds.timestamps) {
    const auto day = static_cast<std::int64_t>(std::floor(t / kDay));
    if (days.empty() || days.back() != day) days.push_back(day);
  }
  if (days.size() < 2) throw InvalidArgument("inject_block_missing: dataset must span at least two days");
  const auto remove = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(days.size()) - 1e-9));
  if (remove == 0) return inj;

  CounterRng rng("inject", seed);
  for (std::size_t i = 0; i < remove; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(days.size() - i));
    std::swap(days[i], days[j]);
  }
  inj.days.assign(days.begin(), days.begin() + static_cast<std::ptrdiff_t>(remove));
  std::sort(inj.days.begin(), inj.days.end());

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const auto day = static_cast<std::int64_t>(std::floor(ds.timestamps[r] / kDay));
    if (!std::binary_search(inj.days.begin(), inj.days.end(), day)) continue;
    inj.removed[r] = 1;
    for (std::size_t c = 0; c < ds.dims(); ++c) inj.data.values(r, c) = nan;
  }
  if (repr == MissingRepr::ffill) {
    for (std::size_t c = 0; c < ds.dims(); ++c) {
      // Leading gaps take the first surviving value.
      double last = nan;
      for (std::size_t r = 0; r < ds.rows() && !std::isfinite(last); ++r) last = inj.data.values(r, c);
      for (std::size_t r = 0; r < ds.rows(); ++r) {
        double& v = inj.data.values(r, c);
        if (std::isfinite(v))
          last = v;
        else
          v = last;
      }
    }
  }
  for (std::size_t c = 0; c < ds.dims(); ++c) {
    bool any = false;
    for (std::size_t r = 0; r < ds.rows() && !any; ++r) any = std::isfinite(inj.data.values(r, c));
    if (!any) throw ConfigError("inject_block_missing: a channel lost every observation");
  }
  return inj;
}

}  // namespace ufo::data
