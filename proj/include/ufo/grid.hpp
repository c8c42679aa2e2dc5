#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace ufo {

// Patch partition of one hierarchy level. Level 0 holds the surviving input
// observations (patch_len 1, no fine times). Level m >= 1 groups the level
// m-1 points into consecutive patches of patch_len points; the coarse time
// of a patch is its end time divided by patch_len.
struct LevelGrid {
  std::size_t level = 0;
  std::size_t patch_len = 1;
  std::vector<double> fine_times;    // patches() * patch_len, level m-1 time units
  std::vector<double> coarse_times;  // one per patch, level m time units
  // Position, within the level-0 observations, of the observation that
  // closes each patch. Used to look up calendar covariates per level.
  std::vector<std::size_t> origin;

  std::size_t patches() const noexcept { return coarse_times.size(); }
  std::pair<double, double> patch_bounds(std::size_t p) const {
    return {fine_times[p * patch_len], fine_times[p * patch_len + patch_len - 1]};
  }
  // Throws InvalidArgument if the invariants do not hold.
  void validate() const;
};

struct GridStack {
  // Indices (into the caller's row sequence) of the observations that
  // survived the missing-skip and left-truncation rules, in order.
  std::vector<std::size_t> selected;
  std::vector<LevelGrid> levels;  // levels[0..M]
};

}  // namespace ufo
