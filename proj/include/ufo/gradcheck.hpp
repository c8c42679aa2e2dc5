#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ufo/params.hpp"

namespace ufo {

struct GradCheckOptions {
  double step = 1e-4;
  // Entries whose analytic and numeric values are both below this magnitude
  // are compared absolutely against abs_tolerance instead of relatively.
  double tiny = 1e-7;
  double abs_tolerance = 1e-9;
};

struct GradCheckEntry {
  std::size_t param = 0;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double error = 0.0;
};

struct GradCheckReport {
  std::size_t checked = 0;
  GradCheckEntry worst;
  std::vector<GradCheckEntry> entries;

  double max_error() const { return worst.error; }
};

// Error measure used by every gradient check in the project:
// |a - n| / max(|a|, |n|), or |a - n| / abs_tolerance-scaled when both are tiny.
double grad_error(double analytic, double numeric, const GradCheckOptions& opt);

// Central finite differences of loss() over every scalar of every parameter
// in the store, compared against analytic gradients. `numeric_override`, when
// set, replaces the plain central difference for one scalar (used to step
// around kinks in piecewise-smooth losses).
using FiniteDifference =
    std::function<double(ParamStore&, std::size_t param, std::size_t index, double step)>;

GradCheckReport check_gradients(ParamStore& store, const std::function<double(ParamStore&)>& loss,
                                const std::vector<Matrix>& analytic,
                                const GradCheckOptions& opt = {},
                                const FiniteDifference& numeric_override = {});

double central_difference(ParamStore& store, const std::function<double(ParamStore&)>& loss,
                          std::size_t param, std::size_t index, double step);

}  // namespace ufo
