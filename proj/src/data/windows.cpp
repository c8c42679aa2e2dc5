#include <algorithm>
#include <cmath>
#include <string>

#include "ufo/data.hpp"
#include "ufo/error.hpp"

namespace ufo::data {

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw InvalidArgument("unknown split '" + std::string(name) + "' (expected train, val or test)");
}

std::pair<std::size_t, std::size_t> SplitBounds::range(Split s) const {
  switch (s) {
    case Split::train: return {0, train_end};
    case Split::val: return {train_end, val_end};
    case Split::test: return {val_end, rows};
  }
  return {0, 0};
}

SplitBounds split_bounds(std::size_t rows) {
  SplitBounds b;
  b.rows = rows;
  b.train_end = rows * 7 / 10;
  b.val_end = rows * 8 / 10;
  return b;
}

Window make_window(const Dataset& obs, const Dataset& clean, std::size_t anchor, const WindowSpec& spec) {
  if (obs.rows() != clean.rows() || obs.dims() != clean.dims())
    throw InvalidArgument("make_window: observed and clean datasets differ in shape");
  if (spec.context == 0 || spec.horizon == 0) throw InvalidArgument("make_window: empty context or horizon");
  if (anchor + spec.horizon > obs.rows()) throw ConfigError("make_window: horizon runs past the data");
  const std::size_t C = obs.dims();
  Window w;
  w.anchor = anchor;

  if (spec.repr == MissingRepr::nan) {
    for (std::size_t r = anchor; r-- > 0 && w.context_rows.size() < spec.context;)
      if (obs.row_visible(r)) w.context_rows.push_back(r);
    std::reverse(w.context_rows.begin(), w.context_rows.end());
  } else if (anchor >= spec.context) {
    for (std::size_t r = anchor - spec.context; r < anchor; ++r) w.context_rows.push_back(r);
  }
  if (w.context_rows.size() < spec.context)
    throw ConfigError("make_window: context shorter than " + std::to_string(spec.context) + " at row " +
                      std::to_string(anchor));

  const std::size_t T = w.context_rows.size();
  w.context_values = Matrix(T, C);
  w.context_observed.assign(T * C, 0);
  for (std::size_t c = 0; c < C; ++c) {
    // Carry the most recent observation into missing cells; a window that
    // opens on a gap looks back before its first row.
    double last = std::nan("");
    for (std::size_t r = w.context_rows.front(); r-- > 0 && !std::isfinite(last);) last = obs.values(r, c);
    for (std::size_t i = 0; i < T; ++i) {
      const double v = obs.values(w.context_rows[i], c);
      if (std::isfinite(v)) {
        last = v;
        w.context_observed[i * C + c] = 1;
      }
      w.context_values(i, c) = last;
    }
    // Nothing before: take the first value seen in the window.
    if (!std::isfinite(w.context_values(0, c))) {
      double first = 0.0;
      bool found = false;
      for (std::size_t i = 0; i < T && !found; ++i)
        if (std::isfinite(w.context_values(i, c))) first = w.context_values(i, c), found = true;
      if (!found) throw ConfigError("make_window: channel " + std::to_string(c) + " unobserved in context");
      for (std::size_t i = 0; i < T && !std::isfinite(w.context_values(i, c)); ++i) w.context_values(i, c) = first;
    }
  }
  for (std::size_t r : w.context_rows) w.context_times.push_back(obs.timestamps[r]);
  w.context_covariates = time_covariates(w.context_times);

  w.horizon_values = Matrix(spec.horizon, C);
  for (std::size_t i = 0; i < spec.horizon; ++i) {
    w.horizon_times.push_back(clean.timestamps[anchor + i]);
    for (std::size_t c = 0; c < C; ++c) {
      const double v = clean.values(anchor + i, c);
      if (!std::isfinite(v)) throw ConfigError("make_window: missing horizon truth at row " + std::to_string(anchor + i));
      w.horizon_values(i, c) = v;
    }
  }
  w.horizon_covariates = time_covariates(w.horizon_times);
  return w;
}

std::vector<Window> make_windows(const Dataset& obs, const Dataset& clean, Split split, const WindowSpec& spec) {
  const auto [begin, end] = split_bounds(obs.rows()).range(split);
  const std::size_t stride = spec.stride == 0 ? spec.horizon : spec.stride;
  std::vector<Window> out;
  for (std::size_t a = begin; a + spec.horizon <= end; a += stride) {
    try {
      out.push_back(make_window(obs, clean, a, spec));
    } catch (const ConfigError&) {
      // Not enough context or truth for this anchor.
    }
  }
  return out;
}

}  // namespace ufo::data
