#include <cmath>
#include <string>

#include "ufo/data.hpp"
#include "ufo/error.hpp"

namespace ufo::data {

GridStack build_level_grids(std::span<const double> times, std::span<const std::uint8_t> missing, std::size_t w,
                            std::size_t levels) {
  if (w < 1) throw InvalidArgument("build_level_grids: patch length must be >= 1");
  if (!missing.empty() && missing.size() != times.size())
    throw InvalidArgument("build_level_grids: mask length does not match times");
  std::size_t block = 1;
  for (std::size_t m = 0; m < levels; ++m) block *= w;

  GridStack g;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (missing.empty() || !missing[i]) g.selected.push_back(i);
  if (g.selected.size() < block)
    throw ConfigError("build_level_grids: " + std::to_string(g.selected.size()) +
                      " surviving observations, need at least " + std::to_string(block));
  const std::size_t keep = g.selected.size() / block * block;
  g.selected.erase(g.selected.begin(), g.selected.end() - static_cast<std::ptrdiff_t>(keep));

  LevelGrid base;
  base.level = 0;
  base.patch_len = 1;
  for (std::size_t k = 0; k < keep; ++k) {
    base.coarse_times.push_back(times[g.selected[k]]);
    base.origin.push_back(k);
  }
  base.validate();
  g.levels.push_back(std::move(base));

  for (std::size_t m = 1; m <= levels; ++m) {
    const LevelGrid& prev = g.levels.back();
    LevelGrid next;
    next.level = m;
    next.patch_len = w;
    next.fine_times = prev.coarse_times;
    const std::size_t patches = prev.coarse_times.size() / w;
    for (std::size_t p = 0; p < patches; ++p) {
      next.coarse_times.push_back(prev.coarse_times[p * w + w - 1] / static_cast<double>(w));
      next.origin.push_back(prev.origin[p * w + w - 1]);
    }
    next.validate();
    g.levels.push_back(std::move(next));
  }
  return g;
}

double gap_cv(std::span<const double> times) {
  if (times.size() < 3) throw InvalidArgument("gap_cv: need at least two gaps");
  const std::size_t n = times.size() - 1;
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += times[i + 1] - times[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = times[i + 1] - times[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(n);
  if (!(mean > 0.0)) throw InvalidArgument("gap_cv: times must increase");
  return std::sqrt(var) / mean;
}

}  // namespace ufo::data
