#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "ufo/cde.hpp"
#include "ufo/data.hpp"

namespace ufo::model {

enum class Resampler { ncde, rnn, conv };
Resampler parse_resampler(std::string_view name);
std::string_view resampler_name(Resampler r);

// Which encoder features the decoder cross-attends to at each level.
enum class SkipSource { post_refiner, pre_refiner };
SkipSource parse_skip_source(std::string_view name);
std::string_view skip_source_name(SkipSource s);

struct ModelConfig {
  std::size_t levels = 2;      // M
  std::size_t patch_len = 4;   // w
  std::size_t dim = 16;        // d
  std::size_t channels = 1;    // d_x
  std::size_t cov_dim = data::kCovariateDim;
  std::size_t blocks = 2;
  std::size_t heads = 4;
  std::size_t ff_hidden = 32;
  std::size_t vf_hidden = 16;
  std::size_t context = 64;    // T
  std::size_t horizon = 64;    // L
  int steps_per_interval = 2;
  double max_step = 1.0;
  double lambda = 0.049787068367863944;  // exp(-3)
  double kernel_scale = 1.0;
  Resampler resampler = Resampler::ncde;
  std::size_t train_samples = 16;
  bool pre_resample_norm = true;
  SkipSource skip = SkipSource::post_refiner;
  double time_unit = 3600.0;  // seconds per level-0 time unit
  std::uint64_t init_seed = 0;

  // Throws ConfigError naming the offending field.
  void validate() const;
  // w^M
  std::size_t block() const;
  std::size_t top_context() const { return context / block(); }
  std::size_t top_horizon() const { return horizon / block(); }
  cde::SolverConfig solver() const;
  // Irregular-capable resamplers skip missing rows; the others see forward-filled slots.
  data::MissingRepr input_repr() const;

  std::string to_json() const;
  static ModelConfig from_json(std::string_view text);
};

}  // namespace ufo::model
