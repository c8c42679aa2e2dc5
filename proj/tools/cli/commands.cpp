#include "commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "manifest.hpp"
#include "run_config.hpp"
#include "ufo/analysis.hpp"
#include "ufo/checkpoint.hpp"
#include "ufo/error.hpp"
#include "ufo/kernels.hpp"
#include "ufo/train.hpp"

namespace ufo::cli {
namespace {

namespace fs = std::filesystem;

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Worker count: run.threads (or --threads), capped by UFO_THREADS.
void apply_threads(std::size_t requested) {
  std::size_t n = requested;
  if (const char* env = std::getenv("UFO_THREADS"); env && *env) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (*end != '\0' || cap < 1) throw ConfigError("UFO_THREADS: expected a positive integer, got '" + std::string(env) + "'");
    n = n == 0 ? static_cast<std::size_t>(cap) : std::min(n, static_cast<std::size_t>(cap));
  }
  if (n > 0) kernels::set_worker_count(static_cast<int>(n));
}

std::vector<std::pair<std::string, std::uint64_t>> run_seeds(const RunConfig& c) {
  return {{"data", c.data.synth.seed},
          {"model_init", c.model.init_seed},
          {"train", c.train.seed},
          {"latent", c.eval.seed},
          {"injection", c.irregular.seed}};
}

RunConfig resolve(const std::string& path, const std::vector<std::string>& overrides, RunData& data) {
  RunConfig cfg = load_run_config(path, overrides);
  cfg.validate();
  data = prepare_data(cfg);
  cfg.model.validate();
  return cfg;
}

model::Model load_for(const std::string& ckpt, const RunData& data) {
  model::Model m = model::load_checkpoint(ckpt);
  if (m.config().channels != data.clean.dims())
    throw ConfigError("checkpoint shape mismatch: model has " + std::to_string(m.config().channels) +
                      " channels, dataset has " + std::to_string(data.clean.dims()));
  return m;
}

std::string to_text(const auto& report) {
  std::ostringstream o;
  report.write(o);
  return o.str();
}

// --- synth -------------------------------------------------------------------

struct SynthArgs {
  std::string kind = "sine-mix";
  data::SynthSpec spec;
  double missing_fraction = 0.0;
  std::uint64_t missing_seed = 0;
  std::string missing_repr = "nan";
  std::string out, clean_out;
};

int cmd_synth(const SynthArgs& a) {
  data::SynthSpec spec = a.spec;
  spec.kind = data::parse_synth_kind(a.kind);
  if (spec.rows == 0 || spec.channels == 0) throw ConfigError("--rows/--channels: must be >= 1");
  if (!(a.missing_fraction >= 0.0 && a.missing_fraction < 1.0))
    throw ConfigError("--missing-fraction: must be in [0, 1)");
  const data::Dataset clean = data::synth_dataset(spec);
  Manifest man;
  man.command = "synth";
  man.seeds = {{"data", spec.seed}, {"injection", a.missing_seed}};
  man.outputs = {a.out};
  if (!a.clean_out.empty()) man.outputs.push_back(a.clean_out);
  const std::string man_path = a.out + ".manifest.json";
  man.write(man_path);
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream body;
  if (a.missing_fraction > 0.0) {
    const auto inj = data::inject_block_missing(clean, a.missing_fraction, a.missing_seed,
                                                data::parse_missing_repr(a.missing_repr));
    data::write_csv(inj.data, body);
    std::cerr << "removed " << inj.days.size() << " days\n";
  } else {
    data::write_csv(clean, body);
  }
  write_text_atomic(a.out, body.str());
  if (!a.clean_out.empty()) {
    std::ostringstream c;
    data::write_csv(clean, c);
    write_text_atomic(a.clean_out, c.str());
  }
  man.seconds = elapsed(t0);
  man.write(man_path);
  std::cout << "wrote " << a.out << " (" << clean.rows() << " rows, " << clean.dims() << " channels)\n";
  return kExitOk;
}

// --- train -------------------------------------------------------------------

struct RunArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  std::string ckpt;
  std::size_t samples = 0;
  std::int64_t seed = -1;
  std::size_t epochs = 0;
  std::string split;
  std::size_t threads = 0;
};

std::vector<std::string> collect_overrides(const RunArgs& a) {
  std::vector<std::string> o = a.overrides;
  if (a.epochs > 0) o.push_back("train.epochs=" + std::to_string(a.epochs));
  if (a.threads > 0) o.push_back("run.threads=" + std::to_string(a.threads));
  return o;
}

int cmd_train(const RunArgs& a) {
  std::vector<std::string> overrides = collect_overrides(a);
  if (a.seed >= 0) overrides.push_back("train.seed=" + std::to_string(a.seed));
  if (!a.out.empty()) overrides.push_back("run.out=" + a.out);
  RunData data;
  RunConfig cfg = resolve(a.config, overrides, data);
  apply_threads(cfg.threads);
  const fs::path dir(cfg.out);
  const std::string ckpt = (dir / "model.ckpt").string(), log_path = (dir / "train_log.csv").string(),
                    cfg_path = (dir / "config.ini").string(), man_path = (dir / "manifest.json").string();
  Manifest man;
  man.command = "train";
  man.config_hash = hex(cfg.hash());
  man.seeds = run_seeds(cfg);
  man.outputs = {ckpt, log_path, cfg_path};
  man.write(man_path);
  const auto t0 = std::chrono::steady_clock::now();
  write_text_atomic(cfg_path, cfg.serialize(false));

  const auto train_w = model::model_windows(cfg.model, data.observed, data.clean, data::Split::train, cfg.train.stride);
  const auto val_w = model::model_windows(cfg.model, data.observed, data.clean, data::Split::val,
                                          cfg.train.val_stride == 0 ? cfg.model.horizon : cfg.train.val_stride);
  if (train_w.empty()) throw ConfigError("data: no training windows for model.context/model.horizon");
  if (val_w.empty()) throw ConfigError("data: no validation windows for model.context/model.horizon");
  std::cerr << "training on " << train_w.size() << " windows, validating on " << val_w.size() << "\n";

  model::Model m(cfg.model);
  model::TrainConfig tc;
  tc.epochs = cfg.train.epochs;
  tc.batch_size = cfg.train.batch_size;
  tc.patience = cfg.train.patience;
  tc.seed = cfg.train.seed;
  tc.val_samples = cfg.train.val_samples;
  tc.adam.learning_rate = cfg.train.learning_rate;
  tc.adam.clip_norm = cfg.train.clip_norm;
  std::ostringstream log;
  log << "epoch,train_loss,val_ncrps\n";
  const auto result = model::train(m, train_w, val_w, tc, [&](const model::EpochLog& e) {
    log << e.epoch << "," << num(e.train_loss) << "," << num(e.val_ncrps) << "\n";
    std::cerr << "epoch " << e.epoch << " loss " << num(e.train_loss) << " val_ncrps " << num(e.val_ncrps) << "\n";
  });
  model::save_checkpoint(m, ckpt);
  write_text_atomic(log_path, log.str());
  man.seconds = elapsed(t0);
  man.write(man_path);
  std::cout << "best epoch " << result.best_epoch << " val_ncrps " << num(result.best_val) << "\n"
            << "checkpoint " << ckpt << "\n";
  return kExitOk;
}

// --- evaluate ----------------------------------------------------------------

int cmd_evaluate(const RunArgs& a) {
  std::vector<std::string> overrides = collect_overrides(a);
  if (a.samples > 0) overrides.push_back("eval.samples=" + std::to_string(a.samples));
  if (a.seed >= 0) overrides.push_back("eval.seed=" + std::to_string(a.seed));
  if (!a.split.empty()) overrides.push_back("eval.split=" + a.split);
  RunData data;
  RunConfig cfg = resolve(a.config, overrides, data);
  apply_threads(cfg.threads);
  model::Model m = load_for(a.ckpt, data);
  const std::string out = a.out.empty() ? (fs::path(cfg.out) / "score.csv").string() : a.out;
  Manifest man;
  man.command = "evaluate";
  man.config_hash = hex(cfg.hash());
  man.seeds = run_seeds(cfg);
  man.outputs = {out};
  man.write(out + ".manifest.json");
  const auto t0 = std::chrono::steady_clock::now();

  const std::size_t stride = cfg.eval.stride == 0 ? m.config().horizon : cfg.eval.stride;
  const auto windows = model::model_windows(m.config(), data.observed, data.clean, cfg.eval.split, stride);
  if (windows.empty()) throw ConfigError("eval.split: no windows to score");
  const auto report = model::evaluate(m, windows, cfg.eval.samples, cfg.eval.seed);
  const auto base = model::persistence_score(windows);
  write_text_atomic(out, to_text(report));
  man.seconds = elapsed(t0);
  man.write(out + ".manifest.json");
  std::cout << "windows " << windows.size() << "\n"
            << "ncrps " << num(report.aggregate) << "\n"
            << "persistence_ncrps " << num(base.aggregate) << "\n";
  return kExitOk;
}

// --- forecast ----------------------------------------------------------------

struct ForecastArgs {
  std::string ckpt, input, out;
  std::size_t samples = 100;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

int cmd_forecast(const ForecastArgs& a) {
  apply_threads(a.threads);
  model::Model m = model::load_checkpoint(a.ckpt);
  const model::ModelConfig& mc = m.config();
  data::Dataset ds = data::load_csv(a.input);
  if (ds.dims() != mc.channels)
    throw ConfigError("--input: checkpoint expects " + std::to_string(mc.channels) + " channels, file has " +
                      std::to_string(ds.dims()));
  if (a.samples == 0) throw ConfigError("--samples: must be >= 1");
  // Append an unobserved horizon after the last row.
  const std::size_t n = ds.rows(), L = mc.horizon;
  data::Dataset obs = ds;
  obs.values = Matrix(n + L, ds.dims(), std::nan(""));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < ds.dims(); ++c) obs.values(r, c) = ds.values(r, c);
  for (std::size_t i = 1; i <= L; ++i) obs.timestamps.push_back(ds.timestamps.back() + static_cast<double>(i) * ds.period);
  data::Dataset placeholder = obs;
  for (std::size_t r = n; r < n + L; ++r)
    for (std::size_t c = 0; c < ds.dims(); ++c) placeholder.values(r, c) = 0.0;
  data::WindowSpec spec;
  spec.context = mc.context;
  spec.horizon = L;
  spec.repr = mc.input_repr();
  const data::Window w = data::make_window(obs, placeholder, n, spec);

  Manifest man;
  man.command = "forecast";
  man.seeds = {{"latent", a.seed}};
  man.outputs = {a.out};
  man.write(a.out + ".manifest.json");
  const auto t0 = std::chrono::steady_clock::now();
  const auto ens = model::forecast(m, w, a.samples, a.seed);
  std::ostringstream o;
  o << "sample,step,channel,value,timestamp\n";
  char buf[64];
  for (std::size_t s = 0; s < ens.samples; ++s)
    for (std::size_t t = 0; t < L; ++t)
      for (std::size_t c = 0; c < mc.channels; ++c) {
        std::snprintf(buf, sizeof buf, "%.9g", ens.values(s * L + t, c));
        o << s << "," << t << "," << ds.channels[c] << "," << buf << ","
          << data::format_timestamp(ens.horizon_times[t]) << "\n";
      }
  write_text_atomic(a.out, o.str());
  man.seconds = elapsed(t0);
  man.write(a.out + ".manifest.json");
  std::cout << "wrote " << a.out << " (" << ens.samples << " samples x " << L << " steps x " << mc.channels
            << " channels)\n";
  return kExitOk;
}

// --- analyze -----------------------------------------------------------------

const std::vector<std::string> kAnalyses = {"sensitivity", "cv", "probe", "timing", "attention"};

struct AnalyzeArgs {
  std::string kind;
  std::string config, dataset, out, reference_out;
  std::vector<std::string> ckpts, overrides;
  std::size_t w = 4, levels = 2, windows = 16, batches = 6, batch_size = 32, window = 0;
  std::size_t threads = 0, length = 720;
  std::int64_t seed = -1;
};

int cmd_analyze(const AnalyzeArgs& a) {
  if (std::find(kAnalyses.begin(), kAnalyses.end(), a.kind) == kAnalyses.end())
    throw ConfigError("unknown analysis '" + a.kind + "' (expected sensitivity, cv, probe, timing or attention)");
  if (a.out.empty()) throw ConfigError("--out: required");

  Manifest man;
  man.command = "analyze " + a.kind;
  man.outputs = {a.out};
  if (!a.reference_out.empty()) man.outputs.push_back(a.reference_out);
  RunConfig cfg;
  RunData data;
  std::vector<std::string> overrides = a.overrides;
  if (a.threads > 0) overrides.push_back("run.threads=" + std::to_string(a.threads));
  const bool needs_config = a.kind != "cv" || a.dataset.empty();
  if (needs_config) {
    if (a.config.empty()) throw ConfigError("--config: required for analyze " + a.kind);
    cfg = resolve(a.config, overrides, data);
    man.config_hash = hex(cfg.hash());
    man.seeds = run_seeds(cfg);
  }
  apply_threads(cfg.threads);
  const bool needs_ckpt = a.kind != "cv";
  if (needs_ckpt && a.ckpts.empty()) throw ConfigError("--ckpt: required for analyze " + a.kind);
  if (a.kind != "probe" && a.ckpts.size() > 1) throw ConfigError("--ckpt: analyze " + a.kind + " takes one checkpoint");

  man.write(a.out + ".manifest.json");
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream o;

  auto eval_windows = [&](const model::Model& m) {
    const std::size_t stride = cfg.eval.stride == 0 ? m.config().horizon : cfg.eval.stride;
    auto w = model::model_windows(m.config(), data.observed, data.clean, cfg.eval.split, stride);
    if (w.empty()) throw ConfigError("eval.split: no windows");
    return w;
  };

  if (a.kind == "cv") {
    const data::Dataset ds = a.dataset.empty() ? data.observed : data::load_csv(a.dataset);
    if (a.w < 2) throw ConfigError("--w: must be >= 2");
    const auto cv = analysis::cv_study(ds, a.w, a.levels);
    o << "level,cv\n";
    for (std::size_t m = 0; m < cv.size(); ++m) o << m << "," << num(cv[m]) << "\n";
  } else if (a.kind == "sensitivity") {
    const model::Model m = load_for(a.ckpts[0], data);
    auto w = eval_windows(m);
    if (w.size() > a.windows) w.resize(a.windows);
    analysis::sensitivity(m, w).write(o);
  } else if (a.kind == "probe") {
    const std::uint64_t seed = a.seed >= 0 ? static_cast<std::uint64_t>(a.seed) : cfg.irregular.seed;
    o << "checkpoint,resampler,f1,positives,negatives,train,test\n";
    for (const std::string& path : a.ckpts) {
      const model::Model m = load_for(path, data);
      const auto windows = analysis::probe_windows(data.observed, data.clean, m.config().context, m.config().horizon);
      const auto r = analysis::irregularity_probe(m, data.observed, windows, seed);
      o << path << "," << model::resampler_name(m.config().resampler) << "," << num(r.f1) << "," << r.positives
        << "," << r.negatives << "," << r.train_count << "," << r.test_count << "\n";
      std::cout << path << " f1 " << num(r.f1) << "\n";
    }
  } else if (a.kind == "timing") {
    const model::Model m = load_for(a.ckpts[0], data);
    const auto w = eval_windows(m);
    analysis::timing(m, w, a.batches, a.batch_size).write(o);
    if (!a.reference_out.empty()) {
      analysis::SpeedupConfig sc;
      sc.length = a.length;
      sc.batch = a.batch_size;
      sc.patch_len = m.config().patch_len;
      sc.dim = m.config().dim;
      sc.threads = static_cast<std::size_t>(kernels::worker_count());
      sc.seed = cfg.model.init_seed;
      const auto r = analysis::speedup(sc);
      write_text_atomic(a.reference_out, to_text(r));
      std::cout << "speedup " << num(r.speedup) << "\n";
    }
  } else {
    const model::Model m = load_for(a.ckpts[0], data);
    const auto w = eval_windows(m);
    if (a.window >= w.size()) throw ConfigError("--window: only " + std::to_string(w.size()) + " windows");
    o << "level,block,head,group,cross,row,col,weight\n";
    for (const auto& r : model::export_attention(m, w[a.window]))
      for (std::size_t i = 0; i < r.rows; ++i)
        for (std::size_t j = 0; j < r.cols; ++j)
          o << r.level << "," << r.block << "," << r.head << "," << r.group << "," << (r.cross ? 1 : 0) << "," << i
            << "," << j << "," << num(r.weights[i * r.cols + j]) << "\n";
  }
  write_text_atomic(a.out, o.str());
  man.seconds = elapsed(t0);
  man.write(a.out + ".manifest.json");
  std::cout << "wrote " << a.out << "\n";
  return kExitOk;
}

void add_run_options(CLI::App* cmd, RunArgs& a) {
  cmd->add_option("--config", a.config, "Run config (INI)")->required();
  cmd->add_option("--set", a.overrides, "Override a config field, section.key=value (repeatable)");
  cmd->add_option("--threads", a.threads, "Worker threads (capped by UFO_THREADS)");
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"ufo: patched neural CDE forecaster"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset CSV");
  synth->add_option("--kind", sa.kind, "sine-mix, bimodal or ou");
  synth->add_option("--rows", sa.spec.rows);
  synth->add_option("--channels", sa.spec.channels);
  synth->add_option("--seed", sa.spec.seed);
  synth->add_option("--noise", sa.spec.noise);
  synth->add_option("--period", sa.spec.period, "Seconds between rows");
  synth->add_option("--start", sa.spec.start, "Epoch seconds of the first row");
  synth->add_option("--missing-fraction", sa.missing_fraction, "Share of calendar days to remove");
  synth->add_option("--missing-seed", sa.missing_seed);
  synth->add_option("--missing-repr", sa.missing_repr, "nan or ffill");
  synth->add_option("--out", sa.out)->required();
  synth->add_option("--clean-out", sa.clean_out, "Also write the series before removal");

  RunArgs ta;
  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  add_run_options(train, ta);
  train->add_option("--out", ta.out, "Run directory (overrides run.out)");
  train->add_option("--epochs", ta.epochs);
  train->add_option("--seed", ta.seed, "Training seed (overrides train.seed)");

  RunArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a split");
  add_run_options(evaluate, ea);
  evaluate->add_option("--ckpt", ea.ckpt)->required();
  evaluate->add_option("--samples", ea.samples);
  evaluate->add_option("--seed", ea.seed, "Latent seed (overrides eval.seed)");
  evaluate->add_option("--split", ea.split, "train, val or test");
  evaluate->add_option("--out", ea.out, "Score report CSV");

  ForecastArgs fa;
  auto* forecast = app.add_subcommand("forecast", "Sample forecasts after the end of a CSV");
  forecast->add_option("--ckpt", fa.ckpt)->required();
  forecast->add_option("--input", fa.input, "Context CSV")->required();
  forecast->add_option("--samples,-n", fa.samples);
  forecast->add_option("--seed", fa.seed);
  forecast->add_option("--out", fa.out)->required();
  forecast->add_option("--threads", fa.threads);

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze", "Diagnostic studies: sensitivity, cv, probe, timing, attention");
  analyze->add_option("kind", aa.kind, "sensitivity, cv, probe, timing or attention")->required();
  analyze->add_option("--config", aa.config);
  analyze->add_option("--set", aa.overrides);
  analyze->add_option("--ckpt", aa.ckpts, "Checkpoint (repeatable for probe)");
  analyze->add_option("--dataset", aa.dataset, "CSV for cv");
  analyze->add_option("--w", aa.w, "Patch length for cv");
  analyze->add_option("--levels", aa.levels, "Levels for cv");
  analyze->add_option("--windows", aa.windows, "Windows for sensitivity");
  analyze->add_option("--batches", aa.batches);
  analyze->add_option("--batch-size", aa.batch_size);
  analyze->add_option("--window", aa.window, "Window index for attention");
  analyze->add_option("--seed", aa.seed, "Probe split seed");
  analyze->add_option("--reference-out", aa.reference_out, "timing: also compare against the sequential reference");
  analyze->add_option("--length", aa.length, "Sequence length for the reference comparison");
  analyze->add_option("--threads", aa.threads);
  analyze->add_option("--out", aa.out);

  std::vector<std::string> argv{"ufo"};
  argv.insert(argv.end(), args.begin(), args.end());
  std::vector<const char*> ptrs;
  for (const auto& s : argv) ptrs.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(ptrs.size()), ptrs.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(sa);
    if (train->parsed()) return cmd_train(ta);
    if (evaluate->parsed()) return cmd_evaluate(ea);
    if (forecast->parsed()) return cmd_forecast(fa);
    return cmd_analyze(aa);
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DegenerateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace ufo::cli
