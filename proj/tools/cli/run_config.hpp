#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ufo/config.hpp"
#include "ufo/data.hpp"

namespace ufo::cli {

struct DataBlock {
  std::string path;  // CSV file; empty means generate from synth
  data::SynthSpec synth;
};

struct TrainBlock {
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  std::size_t patience = 5;
  std::uint64_t seed = 0;
  std::size_t stride = 8;      // rows between training anchors
  std::size_t val_stride = 0;  // 0 means the horizon
  std::size_t val_samples = 16;
  double learning_rate = 1e-3;
  double clip_norm = 1.0;
};

struct EvalBlock {
  std::size_t samples = 100;
  data::Split split = data::Split::test;
  std::uint64_t seed = 0;
  std::size_t stride = 0;  // 0 means the horizon
};

struct IrregularBlock {
  double fraction = 0.0;  // share of calendar days removed
  std::uint64_t seed = 0;
};

struct RunConfig {
  DataBlock data;
  model::ModelConfig model;
  bool channels_set = false;  // otherwise taken from the dataset
  TrainBlock train;
  EvalBlock eval;
  IrregularBlock irregular;
  std::string out = "run";
  std::size_t threads = 0;  // 0: UFO_THREADS or the OpenMP default

  // Throws ConfigError naming the field.
  void validate() const;
  // Canonical INI text with every field resolved. The [run] section (output
  // location, thread count) does not change results and can be left out.
  std::string serialize(bool with_run = true) const;
  // Hash of the result-determining sections.
  std::uint64_t hash() const;
};

// Defaults, then the file, then "section.key=value" overrides. Relative paths
// in the file resolve against the file's directory.
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides = {});
RunConfig parse_run_config(std::istream& in, const std::vector<std::string>& overrides = {},
                           const std::string& base_dir = "");

struct RunData {
  data::Dataset clean;
  data::Dataset observed;  // clean with the injected days removed
};

// Loads or generates the dataset and applies the irregular block. Fills
// model.channels from the data when it was not set.
RunData prepare_data(RunConfig& cfg);

}  // namespace ufo::cli
