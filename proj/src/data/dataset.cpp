#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>

#include "ufo/data.hpp"
#include "ufo/error.hpp"

namespace ufo::data {

bool Dataset::observed(std::size_t row, std::size_t channel) const { return std::isfinite(values(row, channel)); }

bool Dataset::row_visible(std::size_t row) const {
  for (std::size_t c = 0; c < dims(); ++c)
    if (observed(row, c)) return true;
  return false;
}

void Dataset::validate() const {
  if (values.rows() != timestamps.size()) throw InvalidArgument("dataset: timestamp count does not match rows");
  if (!channels.empty() && channels.size() != values.cols())
    throw InvalidArgument("dataset: channel names do not match columns");
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    if (!std::isfinite(timestamps[i])) throw InvalidArgument("dataset: non-finite timestamp");
    if (i > 0 && !(timestamps[i] > timestamps[i - 1]))
      throw InvalidArgument("dataset: timestamps not strictly increasing at row " + std::to_string(i));
  }
  for (std::size_t c = 0; c < values.cols(); ++c) {
    bool any = false;
    for (std::size_t r = 0; r < rows() && !any; ++r) any = observed(r, c);
    if (!any) throw InvalidArgument("dataset: channel " + std::to_string(c) + " has no observations");
  }
}

namespace {

bool read_int(std::string_view s, std::size_t& pos, std::size_t width, int& out) {
  if (pos + width > s.size()) return false;
  const auto* first = s.data() + pos;
  const auto [ptr, ec] = std::from_chars(first, first + width, out);
  if (ec != std::errc() || ptr != first + width) return false;
  pos += width;
  return true;
}

bool expect(std::string_view s, std::size_t& pos, char c) {
  if (pos >= s.size() || s[pos] != c) return false;
  ++pos;
  return true;
}

}  // namespace

double parse_timestamp(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) throw ParseError("empty timestamp");
  // Plain epoch seconds.
  if (text.find('-', 1) == std::string_view::npos) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
      throw ParseError("bad timestamp '" + std::string(text) + "'");
    return v;
  }
  std::size_t pos = 0;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  bool ok = read_int(text, pos, 4, y) && expect(text, pos, '-') && read_int(text, pos, 2, mo) &&
            expect(text, pos, '-') && read_int(text, pos, 2, d);
  double frac = 0.0;
  if (ok && pos < text.size()) {
    ok = (text[pos] == ' ' || text[pos] == 'T') && (++pos, read_int(text, pos, 2, h)) && expect(text, pos, ':') &&
         read_int(text, pos, 2, mi);
    if (ok && pos < text.size() && text[pos] == ':') {
      ++pos;
      ok = read_int(text, pos, 2, sec);
      if (ok && pos < text.size() && text[pos] == '.') {
        const std::size_t start = pos;
        ++pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        std::from_chars(text.data() + start, text.data() + pos, frac);
        ok = pos > start + 1;
      }
    }
    if (ok && pos < text.size() && text[pos] == 'Z') ++pos;
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ok || pos != text.size() || !ymd.ok() || h > 23 || mi > 59 || sec > 60)
    throw ParseError("bad timestamp '" + std::string(text) + "'");
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<double>(days) * kDay + h * 3600.0 + mi * 60.0 + sec + frac;
}

std::string format_timestamp(double t) {
  using namespace std::chrono;
  const double day_start = std::floor(t / kDay);
  const year_month_day ymd{sys_days{days{static_cast<long>(day_start)}}};
  double rem = t - day_start * kDay;
  const int h = static_cast<int>(rem / 3600.0);
  rem -= h * 3600.0;
  const int mi = static_cast<int>(rem / 60.0);
  rem -= mi * 60.0;
  char buf[64];
  const int s = static_cast<int>(std::floor(rem));
  if (rem - s > 1e-9) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%09.6f", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), h, mi, rem);
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), h, mi, s);
  }
  return buf;
}

std::string frequency_label(double seconds) {
  if (!(seconds > 0.0)) throw InvalidArgument("frequency_label: period must be positive");
  struct Unit {
    double size;
    const char* name;
  };
  static constexpr Unit units[] = {{kWeek, "w"}, {kDay, "d"}, {3600.0, "h"}, {60.0, "m"}, {1.0, "s"}};
  for (const Unit& u : units) {
    const double n = seconds / u.size;
    if (n >= 1.0 && std::abs(n - std::round(n)) < 1e-9)
      return std::to_string(static_cast<long long>(std::round(n))) + u.name;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%gs", seconds);
  return buf;
}

void infer_frequency(Dataset& ds) {
  if (ds.rows() < 2) throw InvalidArgument("infer_frequency: need at least two rows");
  std::map<double, std::size_t> counts;
  for (std::size_t i = 1; i < ds.rows(); ++i) ++counts[ds.timestamps[i] - ds.timestamps[i - 1]];
  // Ties go to the smallest gap.
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it)
    if (it->second > best->second) best = it;
  ds.period = best->first;
  ds.frequency = frequency_label(ds.period);
}

}  // namespace ufo::data
