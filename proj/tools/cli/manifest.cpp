#include "manifest.hpp"

#include <ctime>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "ufo/error.hpp"

#ifndef UFO_VERSION
#define UFO_VERSION "unknown"
#endif

namespace ufo::cli {

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << content;
    if (!out) throw ConfigError("write failed for '" + path + "'");
  }
  std::filesystem::rename(tmp, target);
}

std::string Manifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["code_version"] = UFO_VERSION;
  j["config_hash"] = config_hash;
  nlohmann::ordered_json s = nlohmann::ordered_json::object();
  for (const auto& [name, value] : seeds) s[name] = value;
  j["seeds"] = s;
  j["outputs"] = outputs;
  const std::time_t t = std::chrono::system_clock::to_time_t(started);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  nlohmann::ordered_json clock;
  clock["started"] = buf;
  if (seconds >= 0.0) clock["seconds"] = seconds;
  j["wall_clock"] = clock;
  return j.dump(2) + "\n";
}

void Manifest::write(const std::string& path) const { write_text_atomic(path, to_json()); }

}  // namespace ufo::cli
