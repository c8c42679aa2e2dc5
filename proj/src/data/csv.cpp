#include <cmath>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "ufo/data.hpp"
#include "ufo/error.hpp"

namespace ufo::data {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

Dataset read_csv(std::istream& in, const std::string& source) {
  auto fail = [&](std::size_t line, const std::string& msg) {
    throw ParseError(source + ":" + std::to_string(line) + ": " + msg);
  };
  std::string line;
  if (!std::getline(in, line)) fail(1, "missing header");
  const auto header = split_fields(trim(line));
  if (header.size() < 2) fail(1, "header needs a date column and at least one channel");
  Dataset ds;
  for (std::size_t c = 1; c < header.size(); ++c) ds.channels.emplace_back(trim(header[c]));
  const std::size_t C = ds.channels.size();
  std::vector<double> vals;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    const auto f = split_fields(row);
    if (f.size() != C + 1) fail(lineno, "expected " + std::to_string(C + 1) + " fields, got " + std::to_string(f.size()));
    try {
      ds.timestamps.push_back(parse_timestamp(f[0]));
    } catch (const ParseError& e) {
      fail(lineno, e.what());
    }
    if (ds.timestamps.size() > 1) {
      const double prev = ds.timestamps[ds.timestamps.size() - 2];
      if (ds.timestamps.back() == prev) fail(lineno, "duplicate timestamp");
      if (ds.timestamps.back() < prev) fail(lineno, "timestamps not increasing");
    }
    for (std::size_t c = 1; c <= C; ++c) {
      const std::string_view cell = trim(f[c]);
      if (cell.empty() || cell == "nan" || cell == "NaN" || cell == "NA") {
        vals.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
        fail(lineno, "bad number '" + std::string(cell) + "' in column " + std::to_string(c + 1));
      vals.push_back(v);
    }
  }
  if (ds.timestamps.size() < 2) fail(lineno, "need at least two data rows");
  ds.values = Matrix(ds.timestamps.size(), C, std::move(vals));
  ds.validate();
  infer_frequency(ds);
  return ds;
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return read_csv(in, path);
}

void write_csv(const Dataset& ds, std::ostream& out) {
  out << "date";
  for (std::size_t c = 0; c < ds.dims(); ++c)
    out << ',' << (c < ds.channels.size() ? ds.channels[c] : "ch" + std::to_string(c));
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    out << format_timestamp(ds.timestamps[r]);
    for (std::size_t c = 0; c < ds.dims(); ++c) {
      out << ',';
      const double v = ds.values(r, c);
      if (std::isfinite(v)) {
        const auto res = std::to_chars(buf, buf + sizeof buf, v);
        out.write(buf, res.ptr - buf);
      }
    }
    out << '\n';
  }
}

void save_csv(const Dataset& ds, const std::string& path) {
  const std::filesystem::path target(path);
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ParseError("cannot write '" + path + "'");
    write_csv(ds, out);
    if (!out) throw ParseError("write failed for '" + path + "'");
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace ufo::data
