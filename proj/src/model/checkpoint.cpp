#include "ufo/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

#include "ufo/error.hpp"

namespace ufo::model {
namespace {

constexpr std::array<char, 8> kMagic{'U', 'F', 'O', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw ParseError("checkpoint truncated");
  return v;
}

std::string get_string(std::istream& in, std::uint64_t len) {
  if (len > (1u << 24)) throw ParseError("checkpoint string too long");
  std::string s(len, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(len))) throw ParseError("checkpoint truncated");
  return s;
}

}  // namespace

void write_checkpoint(const Model& model, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kVersion);
  const std::string cfg = model.config().to_json();
  put<std::uint64_t>(out, cfg.size());
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  const ParamStore& store = model.store();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
  for (std::size_t i = 0; i < store.size(); ++i) {
    const std::string& name = store.name(i);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    const Matrix& m = store.value(i);
    put<std::uint64_t>(out, m.rows());
    put<std::uint64_t>(out, m.cols());
    for (double v : m.values()) put<float>(out, static_cast<float>(v));
  }
}

Model read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw ParseError("bad checkpoint header");
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version));
  ModelConfig cfg;
  try {
    cfg = ModelConfig::from_json(get_string(in, get<std::uint64_t>(in)));
  } catch (const ConfigError& e) {
    throw ParseError(std::string("checkpoint config: ") + e.what());
  }
  Model model(cfg);
  ParamStore& store = model.store();
  const auto count = get<std::uint32_t>(in);
  if (count != store.size())
    throw ParseError("checkpoint holds " + std::to_string(count) + " tensors, config implies " + std::to_string(store.size()));
  for (std::size_t i = 0; i < count; ++i) {
    const std::string name = get_string(in, get<std::uint32_t>(in));
    const auto idx = store.find(name);
    if (!idx) throw ParseError("checkpoint tensor '" + name + "' not in model");
    Matrix& m = store.value(*idx);
    const auto rows = get<std::uint64_t>(in), cols = get<std::uint64_t>(in);
    if (rows != m.rows() || cols != m.cols())
      throw ParseError("checkpoint tensor '" + name + "' has shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                       ", expected " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    for (double& v : m.values()) {
      v = static_cast<double>(get<float>(in));
      if (!std::isfinite(v)) throw ParseError("checkpoint tensor '" + name + "' holds non-finite values");
    }
  }
  return model;
}

void save_checkpoint(const Model& model, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ParseError("cannot write '" + path + "'");
    write_checkpoint(model, out);
    if (!out) throw ParseError("write failed for '" + path + "'");
  }
  std::filesystem::rename(tmp, path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint '" + path + "'");
  return read_checkpoint(in);
}

}  // namespace ufo::model
