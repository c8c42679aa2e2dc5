#include "ufo/config.hpp"

#include <cmath>
#include <string>

#include <json.hpp>

#include "ufo/error.hpp"

namespace ufo::model {

Resampler parse_resampler(std::string_view name) {
  if (name == "ncde") return Resampler::ncde;
  if (name == "rnn") return Resampler::rnn;
  if (name == "conv") return Resampler::conv;
  throw ConfigError("unknown resampler '" + std::string(name) + "' (expected ncde, rnn or conv)");
}

std::string_view resampler_name(Resampler r) {
  switch (r) {
    case Resampler::ncde: return "ncde";
    case Resampler::rnn: return "rnn";
    case Resampler::conv: return "conv";
  }
  return "?";
}

SkipSource parse_skip_source(std::string_view name) {
  if (name == "post_refiner") return SkipSource::post_refiner;
  if (name == "pre_refiner") return SkipSource::pre_refiner;
  throw ConfigError("unknown skip source '" + std::string(name) + "' (expected post_refiner or pre_refiner)");
}

std::string_view skip_source_name(SkipSource s) {
  return s == SkipSource::post_refiner ? "post_refiner" : "pre_refiner";
}

std::size_t ModelConfig::block() const {
  std::size_t b = 1;
  for (std::size_t m = 0; m < levels; ++m) b *= patch_len;
  return b;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) { throw ConfigError("model." + field + ": " + why); };
  if (levels < 1) fail("levels", "must be >= 1");
  if (patch_len < 2) fail("patch_len", "must be >= 2");
  if (dim == 0) fail("dim", "must be >= 1");
  if (channels == 0) fail("channels", "must be >= 1");
  if (dim < cov_dim) fail("dim", "must be >= cov_dim");
  if (heads == 0 || dim % heads != 0) fail("heads", "must divide dim");
  if (ff_hidden == 0) fail("ff_hidden", "must be >= 1");
  if (vf_hidden == 0) fail("vf_hidden", "must be >= 1");
  if (levels > 8 || block() > (std::size_t{1} << 20)) fail("levels", "patch_len^levels too large");
  if (context < block() || context % block() != 0)
    fail("context", "must be a positive multiple of patch_len^levels = " + std::to_string(block()));
  if (horizon < block() || horizon % block() != 0)
    fail("horizon", "must be a positive multiple of patch_len^levels = " + std::to_string(block()));
  if (steps_per_interval < 1) fail("steps_per_interval", "must be >= 1");
  if (!(max_step > 0.0)) fail("max_step", "must be > 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail("lambda", "must be finite and >= 0");
  if (!(kernel_scale > 0.0) || !std::isfinite(kernel_scale)) fail("kernel_scale", "must be finite and > 0");
  if (train_samples == 0) fail("train_samples", "must be >= 1");
  if (!(time_unit > 0.0)) fail("time_unit", "must be > 0");
  if (resampler == Resampler::rnn && cov_dim == 0) fail("cov_dim", "rnn resampler needs covariates");
}

cde::SolverConfig ModelConfig::solver() const {
  cde::SolverConfig s;
  s.steps_per_interval = steps_per_interval;
  s.max_step = max_step;
  s.kernel.lambda = lambda;
  s.kernel.kernel_scale = kernel_scale;
  return s;
}

data::MissingRepr ModelConfig::input_repr() const {
  return resampler == Resampler::ncde ? data::MissingRepr::nan : data::MissingRepr::ffill;
}

std::string ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["levels"] = levels;
  j["patch_len"] = patch_len;
  j["dim"] = dim;
  j["channels"] = channels;
  j["cov_dim"] = cov_dim;
  j["blocks"] = blocks;
  j["heads"] = heads;
  j["ff_hidden"] = ff_hidden;
  j["vf_hidden"] = vf_hidden;
  j["context"] = context;
  j["horizon"] = horizon;
  j["steps_per_interval"] = steps_per_interval;
  j["max_step"] = max_step;
  j["lambda"] = lambda;
  j["kernel_scale"] = kernel_scale;
  j["resampler"] = resampler_name(resampler);
  j["train_samples"] = train_samples;
  j["pre_resample_norm"] = pre_resample_norm;
  j["skip"] = skip_source_name(skip);
  j["time_unit"] = time_unit;
  j["init_seed"] = init_seed;
  return j.dump(1);
}

ModelConfig ModelConfig::from_json(std::string_view text) {
  ModelConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("levels", c.levels);
    get("patch_len", c.patch_len);
    get("dim", c.dim);
    get("channels", c.channels);
    get("cov_dim", c.cov_dim);
    get("blocks", c.blocks);
    get("heads", c.heads);
    get("ff_hidden", c.ff_hidden);
    get("vf_hidden", c.vf_hidden);
    get("context", c.context);
    get("horizon", c.horizon);
    get("steps_per_interval", c.steps_per_interval);
    get("max_step", c.max_step);
    get("lambda", c.lambda);
    get("kernel_scale", c.kernel_scale);
    if (j.contains("resampler")) c.resampler = parse_resampler(j.at("resampler").get<std::string>());
    get("train_samples", c.train_samples);
    get("pre_resample_norm", c.pre_resample_norm);
    if (j.contains("skip")) c.skip = parse_skip_source(j.at("skip").get<std::string>());
    get("time_unit", c.time_unit);
    get("init_seed", c.init_seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace ufo::model
