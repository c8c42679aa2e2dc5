#include "run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ufo/error.hpp"
#include "ufo/rng.hpp"

namespace ufo::cli {
namespace pt = boost::property_tree;
namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  template <class T>
  bool get(const std::string& key, T& out) {
    seen_.insert(key);
    last_ = key;
    const auto node = tree_.get_child_optional(pt::ptree::path_type(key, '.'));
    if (!node) return false;
    const std::string text = node->data();
    std::istringstream in(text);
    T value{};
    if constexpr (std::is_same_v<T, bool>) {
      if (text == "true" || text == "1" || text == "yes") value = true;
      else if (text == "false" || text == "0" || text == "no") value = false;
      else throw ConfigError(key + ": expected true or false, got '" + text + "'");
    } else if constexpr (std::is_same_v<T, std::string>) {
      value = text;
    } else {
      if constexpr (std::is_unsigned_v<T>)
        if (!text.empty() && text[0] == '-') throw ConfigError(key + ": must not be negative");
      in >> value;
      if (in.fail() || !(in >> std::ws).eof()) throw ConfigError(key + ": cannot parse '" + text + "'");
    }
    out = value;
    return true;
  }

  const std::string& last_key() const { return last_; }

  void reject_unknown() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty()) throw ConfigError(section + ": key outside any section");
      for (const auto& [key, _] : body) {
        const std::string full = section + "." + key;
        if (!seen_.count(full)) throw ConfigError(full + ": unknown field");
      }
    }
  }

 private:
  const pt::ptree& tree_;
  std::set<std::string> seen_;
  std::string last_;
};

void read_fields(Reader& r, RunConfig& c, const std::string& base_dir) {
  if (r.get("data.path", c.data.path) && !c.data.path.empty() && !base_dir.empty() &&
      std::filesystem::path(c.data.path).is_relative())
    c.data.path = (std::filesystem::path(base_dir) / c.data.path).lexically_normal().string();
  std::string text;
  if (r.get("data.synth", text)) c.data.synth.kind = data::parse_synth_kind(text);
  r.get("data.rows", c.data.synth.rows);
  r.get("data.channels", c.data.synth.channels);
  r.get("data.seed", c.data.synth.seed);
  r.get("data.noise", c.data.synth.noise);
  r.get("data.period", c.data.synth.period);
  r.get("data.start", c.data.synth.start);

  model::ModelConfig& m = c.model;
  r.get("model.levels", m.levels);
  r.get("model.patch_len", m.patch_len);
  r.get("model.dim", m.dim);
  c.channels_set = r.get("model.channels", m.channels);
  r.get("model.cov_dim", m.cov_dim);
  r.get("model.blocks", m.blocks);
  r.get("model.heads", m.heads);
  r.get("model.ff_hidden", m.ff_hidden);
  r.get("model.vf_hidden", m.vf_hidden);
  r.get("model.context", m.context);
  r.get("model.horizon", m.horizon);
  r.get("model.steps_per_interval", m.steps_per_interval);
  r.get("model.max_step", m.max_step);
  r.get("model.lambda", m.lambda);
  r.get("model.kernel_scale", m.kernel_scale);
  if (r.get("model.resampler", text)) m.resampler = model::parse_resampler(text);
  r.get("model.train_samples", m.train_samples);
  r.get("model.pre_resample_norm", m.pre_resample_norm);
  if (r.get("model.skip", text)) m.skip = model::parse_skip_source(text);
  r.get("model.time_unit", m.time_unit);
  r.get("model.init_seed", m.init_seed);

  r.get("train.epochs", c.train.epochs);
  r.get("train.batch_size", c.train.batch_size);
  r.get("train.patience", c.train.patience);
  r.get("train.seed", c.train.seed);
  r.get("train.stride", c.train.stride);
  r.get("train.val_stride", c.train.val_stride);
  r.get("train.val_samples", c.train.val_samples);
  r.get("train.learning_rate", c.train.learning_rate);
  r.get("train.clip_norm", c.train.clip_norm);

  r.get("eval.samples", c.eval.samples);
  if (r.get("eval.split", text)) c.eval.split = data::parse_split(text);
  r.get("eval.seed", c.eval.seed);
  r.get("eval.stride", c.eval.stride);

  r.get("irregular.fraction", c.irregular.fraction);
  r.get("irregular.seed", c.irregular.seed);

  r.get("run.out", c.out);
  r.get("run.threads", c.threads);
  r.reject_unknown();
}

std::string_view split_name(data::Split s) {
  switch (s) {
    case data::Split::train: return "train";
    case data::Split::val: return "val";
    case data::Split::test: return "test";
  }
  return "?";
}

}  // namespace

void RunConfig::validate() const {
  if (!data.path.empty() && !std::filesystem::is_regular_file(data.path))
    throw ConfigError("data.path: file not found: " + data.path);
  if (data.path.empty()) {
    if (data.synth.rows == 0) throw ConfigError("data.rows: must be >= 1");
    if (data.synth.channels == 0) throw ConfigError("data.channels: must be >= 1");
    if (!(data.synth.period > 0.0)) throw ConfigError("data.period: must be > 0");
  }
  model.validate();
  if (train.epochs == 0) throw ConfigError("train.epochs: must be >= 1");
  if (train.batch_size == 0) throw ConfigError("train.batch_size: must be >= 1");
  if (train.stride == 0) throw ConfigError("train.stride: must be >= 1");
  if (train.val_samples == 0) throw ConfigError("train.val_samples: must be >= 1");
  if (!(train.learning_rate > 0.0)) throw ConfigError("train.learning_rate: must be > 0");
  if (eval.samples == 0) throw ConfigError("eval.samples: must be >= 1");
  if (!(irregular.fraction >= 0.0 && irregular.fraction < 1.0))
    throw ConfigError("irregular.fraction: must be in [0, 1)");
}

std::string RunConfig::serialize(bool with_run) const {
  std::ostringstream o;
  o << "[data]\n"
    << "path = " << data.path << "\n"
    << "synth = " << data::synth_kind_name(data.synth.kind) << "\n"
    << "rows = " << data.synth.rows << "\n"
    << "channels = " << data.synth.channels << "\n"
    << "seed = " << data.synth.seed << "\n"
    << "noise = " << fmt(data.synth.noise) << "\n"
    << "period = " << fmt(data.synth.period) << "\n"
    << "start = " << fmt(data.synth.start) << "\n\n";
  o << "[model]\n"
    << "levels = " << model.levels << "\n"
    << "patch_len = " << model.patch_len << "\n"
    << "dim = " << model.dim << "\n"
    << "channels = " << model.channels << "\n"
    << "cov_dim = " << model.cov_dim << "\n"
    << "blocks = " << model.blocks << "\n"
    << "heads = " << model.heads << "\n"
    << "ff_hidden = " << model.ff_hidden << "\n"
    << "vf_hidden = " << model.vf_hidden << "\n"
    << "context = " << model.context << "\n"
    << "horizon = " << model.horizon << "\n"
    << "steps_per_interval = " << model.steps_per_interval << "\n"
    << "max_step = " << fmt(model.max_step) << "\n"
    << "lambda = " << fmt(model.lambda) << "\n"
    << "kernel_scale = " << fmt(model.kernel_scale) << "\n"
    << "resampler = " << model::resampler_name(model.resampler) << "\n"
    << "train_samples = " << model.train_samples << "\n"
    << "pre_resample_norm = " << (model.pre_resample_norm ? "true" : "false") << "\n"
    << "skip = " << model::skip_source_name(model.skip) << "\n"
    << "time_unit = " << fmt(model.time_unit) << "\n"
    << "init_seed = " << model.init_seed << "\n\n";
  o << "[train]\n"
    << "epochs = " << train.epochs << "\n"
    << "batch_size = " << train.batch_size << "\n"
    << "patience = " << train.patience << "\n"
    << "seed = " << train.seed << "\n"
    << "stride = " << train.stride << "\n"
    << "val_stride = " << train.val_stride << "\n"
    << "val_samples = " << train.val_samples << "\n"
    << "learning_rate = " << fmt(train.learning_rate) << "\n"
    << "clip_norm = " << fmt(train.clip_norm) << "\n\n";
  o << "[eval]\n"
    << "samples = " << eval.samples << "\n"
    << "split = " << split_name(eval.split) << "\n"
    << "seed = " << eval.seed << "\n"
    << "stride = " << eval.stride << "\n\n";
  o << "[irregular]\n"
    << "fraction = " << fmt(irregular.fraction) << "\n"
    << "seed = " << irregular.seed << "\n";
  if (!with_run) return o.str();
  o << "\n[run]\n"
    << "out = " << out << "\n"
    << "threads = " << threads << "\n";
  return o.str();
}

std::uint64_t RunConfig::hash() const { return fnv1a64(serialize(false)); }

RunConfig parse_run_config(std::istream& in, const std::vector<std::string>& overrides, const std::string& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    const std::string key = o.substr(0, eq);
    if (eq == std::string::npos || key.find('.') == std::string::npos)
      throw ConfigError("override '" + o + "': expected section.key=value");
    tree.put(pt::ptree::path_type(key, '.'), o.substr(eq + 1));
  }
  RunConfig cfg;
  Reader reader(tree);
  try {
    read_fields(reader, cfg, base_dir);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(reader.last_key() + ": " + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config: cannot open " + path);
  const std::string dir = std::filesystem::path(path).parent_path().string();
  return parse_run_config(in, overrides, dir.empty() ? "." : dir);
}

RunData prepare_data(RunConfig& cfg) {
  RunData d;
  d.clean = cfg.data.path.empty() ? data::synth_dataset(cfg.data.synth) : data::load_csv(cfg.data.path);
  if (!cfg.channels_set) cfg.model.channels = d.clean.dims();
  if (cfg.model.channels != d.clean.dims())
    throw ConfigError("model.channels: dataset has " + std::to_string(d.clean.dims()) + " channels, config says " +
                      std::to_string(cfg.model.channels));
  d.observed = cfg.irregular.fraction > 0.0
                   ? data::inject_block_missing(d.clean, cfg.irregular.fraction, cfg.irregular.seed).data
                   : d.clean;
  return d;
}

}  // namespace ufo::cli
