#include <cmath>

#include "ufo/analysis.hpp"
#include "ufo/error.hpp"

namespace ufo::analysis {

std::vector<double> cv_study(const data::Dataset& observed, std::size_t w, std::size_t levels) {
  if (!(observed.period > 0.0)) throw InvalidArgument("cv_study: dataset has no period");
  std::vector<double> times(observed.rows());
  std::vector<std::uint8_t> missing(observed.rows());
  for (std::size_t r = 0; r < observed.rows(); ++r) {
    times[r] = (observed.timestamps[r] - observed.timestamps.front()) / observed.period;
    missing[r] = observed.row_visible(r) ? 0 : 1;
  }
  const GridStack g = data::build_level_grids(times, missing, w, levels);
  std::vector<double> cv;
  for (const LevelGrid& lv : g.levels) {
    if (lv.coarse_times.size() < 3)
      throw ConfigError("cv_study: level " + std::to_string(lv.level) + " has fewer than 3 points");
    cv.push_back(data::gap_cv(lv.coarse_times));
  }
  return cv;
}

}  // namespace ufo::analysis
