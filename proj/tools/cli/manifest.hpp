#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ufo::cli {

// Writes through a temporary file and a rename.
void write_text_atomic(const std::string& path, const std::string& content);

struct Manifest {
  std::string command;
  std::string config_hash;  // hex FNV-1a of the serialized run config; empty if none
  std::vector<std::pair<std::string, std::uint64_t>> seeds;
  std::vector<std::string> outputs;
  std::chrono::system_clock::time_point started = std::chrono::system_clock::now();
  double seconds = -1.0;  // negative while the command is running

  // Everything outside "wall_clock" is a function of the inputs.
  std::string to_json() const;
  void write(const std::string& path) const;
};

}  // namespace ufo::cli
