#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ufo/grid.hpp"
#include "ufo/matrix.hpp"

namespace ufo::data {

// A multivariate series on strictly increasing epoch-second timestamps.
// Missing cells hold NaN.
struct Dataset {
  std::vector<double> timestamps;
  Matrix values;
  std::vector<std::string> channels;
  double period = 0.0;    // modal gap in seconds
  std::string frequency;  // label of the modal gap, e.g. "15m"

  std::size_t rows() const noexcept { return timestamps.size(); }
  std::size_t dims() const noexcept { return values.cols(); }
  bool observed(std::size_t row, std::size_t channel) const;
  bool row_visible(std::size_t row) const;  // any channel observed
  // Strictly increasing finite timestamps, matching shapes, and at least one
  // observation per channel.
  void validate() const;
};

// Parses ISO-8601 dates ("2016-07-01", "2016-07-01 00:15:00", "...T...Z")
// or plain epoch seconds.
double parse_timestamp(std::string_view text);
std::string format_timestamp(double epoch_seconds);
std::string frequency_label(double seconds);
// Fills period and frequency from the modal gap.
void infer_frequency(Dataset& ds);

Dataset read_csv(std::istream& in, const std::string& source = "<stream>");
Dataset load_csv(const std::string& path);
void write_csv(const Dataset& ds, std::ostream& out);
void save_csv(const Dataset& ds, const std::string& path);

constexpr double kDay = 86400.0;
constexpr double kWeek = 7.0 * kDay;
constexpr double kMonth = 30.4375 * kDay;
constexpr double kYear = 365.25 * kDay;
constexpr std::size_t kCovariateDim = 8;

// Sine/cosine of the day, week, month and year phases (n x 8).
Matrix time_covariates(std::span<const double> timestamps);

enum class MissingRepr { nan, ffill };
MissingRepr parse_missing_repr(std::string_view name);

struct Injection {
  Dataset data;
  std::vector<std::uint8_t> removed;  // per row
  std::vector<std::int64_t> days;     // removed calendar days (days since epoch)
};

// Removes ceil(fraction * D) whole calendar days (UTC) chosen uniformly at
// random. With MissingRepr::ffill the removed rows repeat the last value
// before them instead of holding NaN.
Injection inject_block_missing(const Dataset& ds, double fraction, std::uint64_t seed,
                               MissingRepr repr = MissingRepr::nan);

// Patches the non-missing points (times in level-0 units) into w-point
// patches for levels 1..M, after left-truncating to a multiple of w^M.
GridStack build_level_grids(std::span<const double> times, std::span<const std::uint8_t> missing,
                            std::size_t w, std::size_t levels);

// Standard deviation over mean of consecutive gaps.
double gap_cv(std::span<const double> times);

enum class SynthKind { sine_mix, bimodal, ou };
SynthKind parse_synth_kind(std::string_view name);
std::string_view synth_kind_name(SynthKind kind);

struct SynthSpec {
  SynthKind kind = SynthKind::sine_mix;
  std::size_t rows = 4096;
  std::size_t channels = 3;
  std::uint64_t seed = 0;
  double noise = 0.1;
  double period = 3600.0;     // seconds between rows
  double start = 1451606400;  // 2016-01-01 00:00:00 UTC
};

// Per-channel terms of the sine-mix signal:
// level + a_day sin(2 pi h / 24 + p_day) + a_week sin(2 pi h / 168 + p_week),
// with h the row time in hours since the start.
struct SineTerms {
  double level, amp_day, phase_day, amp_week, phase_week;
};
SineTerms sine_terms(const SynthSpec& spec, std::size_t channel);
double sine_mix_clean(const SynthSpec& spec, std::size_t row, std::size_t channel);

Dataset synth_dataset(const SynthSpec& spec);

// Chronological split: rows [0, train_end), [train_end, val_end), [val_end, N).
enum class Split { train, val, test };
Split parse_split(std::string_view name);
struct SplitBounds {
  std::size_t train_end = 0, val_end = 0, rows = 0;
  std::pair<std::size_t, std::size_t> range(Split s) const;
};
SplitBounds split_bounds(std::size_t rows);

struct WindowSpec {
  std::size_t context = 64;
  std::size_t horizon = 64;
  std::size_t stride = 0;  // 0 means the horizon length
  MissingRepr repr = MissingRepr::nan;
};

// One forecasting instance. With MissingRepr::nan the context holds the last
// `context` visible rows before the horizon; with ffill it holds the last
// `context` rows, forward-filled. Horizon values come from the clean series.
struct Window {
  std::size_t anchor = 0;                // first horizon row
  std::vector<std::size_t> context_rows;  // dataset rows feeding the context
  std::vector<double> context_times;
  Matrix context_values;
  std::vector<std::uint8_t> context_observed;  // per cell, row-major
  Matrix context_covariates;
  std::vector<double> horizon_times;
  Matrix horizon_values;
  Matrix horizon_covariates;

  std::size_t context_length() const noexcept { return context_times.size(); }
};

Window make_window(const Dataset& observed, const Dataset& clean, std::size_t anchor, const WindowSpec& spec);

// Windows whose horizons lie entirely within the split, anchored every
// `stride` rows from the split start. Context may reach back before the
// split; anchors without enough context are dropped.
std::vector<Window> make_windows(const Dataset& observed, const Dataset& clean, Split split,
                                 const WindowSpec& spec);

}  // namespace ufo::data
