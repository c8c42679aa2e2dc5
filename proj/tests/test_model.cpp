#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ufo/checkpoint.hpp"
#include "ufo/error.hpp"
#include "ufo/gradcheck.hpp"
#include "ufo/model.hpp"
#include "ufo/train.hpp"

using namespace ufo;
using namespace ufo::model;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.levels = 2;
  c.patch_len = 2;
  c.dim = 8;
  c.channels = 2;
  c.blocks = 1;
  c.heads = 2;
  c.ff_hidden = 8;
  c.vf_hidden = 8;
  c.context = 8;
  c.horizon = 8;
  c.train_samples = 4;
  return c;
}

data::Dataset tiny_data(std::size_t rows = 256) {
  data::SynthSpec s;
  s.rows = rows;
  s.channels = 2;
  s.seed = 3;
  return data::synth_dataset(s);
}

std::vector<data::Window> tiny_windows(const ModelConfig& c, data::Split split = data::Split::train) {
  const auto ds = tiny_data();
  return model_windows(c, ds, ds, split, c.horizon);
}

// Fills every zero-initialized parameter so no path is trivially dead.
void perturb(Model& m, std::uint64_t seed) {
  CounterRng r("perturb", seed);
  for (std::size_t i = 0; i < m.store().size(); ++i)
    for (double& v : m.store().value(i).values())
      if (v == 0.0) v = r.uniform(-0.3, 0.3);
}

bool all_finite(const Matrix& m) {
  for (double v : m.values())
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

TEST_CASE("config validation and serialization") {
  ModelConfig c = tiny_config();
  CHECK_NOTHROW(c.validate());
  CHECK(c.block() == 4);
  CHECK(c.top_context() == 2);
  c.context = 10;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config();
  c.dim = 7;  // not divisible by heads
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config();
  c.resampler = Resampler::rnn;
  c.lambda = 0.25;
  const ModelConfig back = ModelConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.resampler == Resampler::rnn);
  CHECK(back.lambda == 0.25);
  CHECK_THROWS_AS(ModelConfig::from_json("{\"dim\": \"wide\"}"), ConfigError);
  CHECK_THROWS_AS(parse_resampler("lstm"), ConfigError);
}

TEST_CASE("batch and encoder shapes") {
  const ModelConfig c = tiny_config();
  const Model m(c);
  const auto wins = tiny_windows(c);
  REQUIRE(wins.size() >= 3);
  const Batch b = make_batch(c, std::span(wins).first(3));
  CHECK(b.windows == 3);
  CHECK(b.context_values.rows() == 24);
  CHECK(b.truth.rows() == 24);
  CHECK(b.keys.size() == 3);
  CHECK(b.enc.size() == 2);
  CHECK(b.enc[0].patches == 12);
  CHECK(b.enc[1].patches == 6);

  Tape t;
  ParamBinder pb(t, m.store(), false);
  const Encoded e = encode(pb, m, b, t.constant(b.context_values));
  REQUIRE(e.levels.size() == 3);
  CHECK(e.levels[0].rows() == 24);
  CHECK(e.levels[1].rows() == 12);
  CHECK(e.levels[2].rows() == 6);
  CHECK(e.mu.rows() == 6);
  CHECK(e.mu.cols() == 8);
  CHECK(e.mean.rows() == 3);

  ModelConfig wide = c;
  wide.channels = 3;
  CHECK_THROWS_AS(make_batch(wide, std::span(wins).first(1)), InvalidArgument);
}

TEST_CASE("zero head parameters give the prior") {
  const ModelConfig c = tiny_config();
  Model m(c);
  const auto& p = m.params();
  for (std::size_t i : {p.mu_weight, p.mu_bias, p.sigma_weight, p.sigma_bias}) m.store().value(i).fill(0.0);
  const auto wins = tiny_windows(c);
  const Batch b = make_batch(c, std::span(wins).first(2));
  Tape t;
  ParamBinder pb(t, m.store(), false);
  const Encoded e = encode(pb, m, b, t.constant(b.context_values));
  for (double v : e.mu.value().values()) CHECK(v == 0.0);
  for (double v : e.sigma.value().values()) CHECK(v == doctest::Approx(std::log(2.0) + 1e-6).epsilon(1e-14));

  // Zero noise collapses the sample onto the mean.
  const Matrix eps(2 * 2, c.dim);
  const Var z = sample_latent(m, b, e, eps, 1);
  CHECK(z.rows() == 4);
  for (double v : z.value().values()) CHECK(v == 0.0);
}

TEST_CASE("latent noise") {
  const ModelConfig c = tiny_config();
  const auto wins = tiny_windows(c);
  const Batch ab = make_batch(c, std::span(wins).first(2));
  const Batch b = make_batch(c, std::span(wins).subspan(1, 1));
  const Matrix e1 = latent_noise(ab, 2, 8, 0, 3, 5);
  CHECK(e1 == latent_noise(ab, 2, 8, 0, 3, 5));
  CHECK_FALSE(e1 == latent_noise(ab, 2, 8, 0, 3, 6));
  // Window 1's draws do not depend on its batch mates.
  const Matrix e2 = latent_noise(b, 2, 8, 0, 3, 5);
  for (std::size_t i = 0; i < e2.size(); ++i) CHECK(e2.values()[i] == e1.values()[e2.size() + i]);
  // A later sample range continues the same stream.
  const Matrix tail = latent_noise(b, 2, 8, 1, 3, 5);
  for (std::size_t i = 0; i < tail.size(); ++i) CHECK(tail.values()[i] == e2.values()[16 + i]);

  const Matrix big = latent_noise(b, 1, 1, 0, 10000, 1);
  double mean = 0, sq = 0;
  for (double v : big.values()) mean += v, sq += v * v;
  mean /= 1e4;
  CHECK(std::abs(mean) < 0.04);
  CHECK(std::abs(sq / 1e4 - mean * mean - 1.0) < 0.05);
}

TEST_CASE("forecast at initialization") {
  const ModelConfig c = tiny_config();
  const Model m(c);
  const auto wins = tiny_windows(c);
  const ForecastEnsemble f = forecast(m, wins[2], 5, 1);
  CHECK(f.values.rows() == 40);
  CHECK(f.values.cols() == 2);
  CHECK(all_finite(f.values));
  CHECK(f.values == forecast(m, wins[2], 5, 1).values);
  CHECK_FALSE(f.values == forecast(m, wins[2], 5, 2).values);

  // Batching does not change a window's ensemble.
  const Batch b = make_batch(c, std::span(wins).first(3));
  const Matrix batched = forecast_batch(m, b, 5, 1);
  for (std::size_t r = 0; r < 40; ++r)
    for (std::size_t k = 0; k < 2; ++k) CHECK(batched(80 + r, k) == doctest::Approx(f.values(r, k)).epsilon(1e-10));

  for (auto kind : {Resampler::rnn, Resampler::conv}) {
    ModelConfig alt = c;
    alt.resampler = kind;
    CHECK(all_finite(forecast(Model(alt), wins[2], 3, 1).values));
  }
}

TEST_CASE("distinct latents decode to distinct outputs") {
  const ModelConfig c = tiny_config();
  Model m(c);
  perturb(m, 1);
  const auto wins = tiny_windows(c);
  const Batch b = make_batch(c, std::span(wins).first(1));
  Tape t;
  ParamBinder pb(t, m.store(), false);
  const Encoded e = encode(pb, m, b, t.constant(b.context_values));
  Matrix eps = latent_noise(b, 2, c.dim, 0, 2, 3);
  const Var z = sample_latent(m, b, e, eps, 2);
  const Var emb = decode(pb, m, b, e, z, 2);
  CHECK(emb.rows() == 16);
  CHECK(emb.cols() == 8);
  const Matrix y = output_head(pb, m, b, e, emb, 2).value();
  bool differ = false;
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t k = 0; k < 2; ++k) differ = differ || y(r, k) != y(8 + r, k);
  CHECK(differ);
}

TEST_CASE("zero output projection returns the context mean") {
  const ModelConfig c = tiny_config();
  Model m(c);
  m.store().value(m.params().out_weight).fill(0.0);
  const auto wins = tiny_windows(c);
  const data::Window& w = wins[4];
  const ForecastEnsemble f = forecast(m, w, 3, 1);
  for (std::size_t k = 0; k < 2; ++k) {
    double mean = 0;
    for (std::size_t i = w.context_length() - c.context; i < w.context_length(); ++i) mean += w.context_values(i, k);
    mean /= static_cast<double>(c.context);
    for (std::size_t r = 0; r < f.values.rows(); ++r) CHECK(f.values(r, k) == doctest::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("irregular windows") {
  const ModelConfig c = tiny_config();
  const auto ds = tiny_data(480);
  const auto inj = data::inject_block_missing(ds, 0.3, 2);
  const auto wins = model_windows(c, inj.data, ds, data::Split::test, c.horizon);
  REQUIRE(!wins.empty());
  const Model m(c);
  for (const auto& w : wins) {
    for (std::size_t r : w.context_rows) CHECK(inj.data.row_visible(r));
    CHECK(all_finite(forecast(m, w, 2, 1).values));
  }
}

TEST_CASE("attention export") {
  const ModelConfig c = tiny_config();
  Model m(c);
  perturb(m, 2);
  const auto wins = tiny_windows(c);
  const auto recs = export_attention(m, wins[1]);
  // One encoder self, one decoder self and one decoder cross matrix per head.
  CHECK(recs.size() == 3 * c.heads);
  for (const auto& r : recs) {
    CHECK(r.level == 1);
    REQUIRE(r.weights.size() == r.rows * r.cols);
    for (std::size_t i = 0; i < r.rows; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < r.cols; ++j) s += r.weights[i * r.cols + j];
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  const auto again = export_attention(m, wins[1]);
  REQUIRE(again.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) CHECK(again[i].weights == recs[i].weights);
}

TEST_CASE("optimizer steps") {
  const ModelConfig c = tiny_config();
  const auto wins = tiny_windows(c);
  const Batch b = make_batch(c, std::span(wins).first(4));

  Model frozen(c);
  const auto before = frozen.store().zeros_like();
  std::vector<Matrix> saved;
  for (std::size_t i = 0; i < frozen.store().size(); ++i) saved.push_back(frozen.store().value(i));
  AdamState st = adam_init(frozen.store());
  AdamConfig zero;
  zero.learning_rate = 0.0;
  train_step(frozen, b, st, zero, 1);
  for (std::size_t i = 0; i < saved.size(); ++i) CHECK(frozen.store().value(i) == saved[i]);
  CHECK(st.step == 1);

  Model a(c), bb(c);
  AdamState sa = adam_init(a.store()), sb = adam_init(bb.store());
  AdamConfig cfg;
  cfg.learning_rate = 1e-2;
  for (int k = 0; k < 3; ++k) CHECK(train_step(a, b, sa, cfg, k) == train_step(bb, b, sb, cfg, k));
  for (std::size_t i = 0; i < a.store().size(); ++i) CHECK(a.store().value(i) == bb.store().value(i));

  // Plain descent on a fixed noise draw lowers the loss.
  Model d(c);
  AdamState sd = adam_init(d.store());
  const double first = loss_and_grad(d, b, 8, 9, nullptr);
  for (int k = 0; k < 30; ++k) train_step(d, b, sd, cfg, 9);
  CHECK(loss_and_grad(d, b, 8, 9, nullptr) < first);
}

TEST_CASE("gradient clipping") {
  ParamStore s;
  s.add("a", Matrix(1, 2));
  std::vector<Matrix> g{Matrix(1, 2, std::vector<double>{30.0, 40.0})};
  AdamState st = adam_init(s);
  AdamConfig cfg;
  cfg.clip_norm = 5.0;
  adam_update(s, g, st, cfg);
  // The first moment holds (1 - beta1) times the clipped gradient.
  CHECK(st.m[0](0, 0) == doctest::Approx(0.1 * 3.0).epsilon(1e-12));
  CHECK(st.m[0](0, 1) == doctest::Approx(0.1 * 4.0).epsilon(1e-12));
  std::vector<Matrix> bad{Matrix(1, 2, std::vector<double>{std::nan(""), 0.0})};
  CHECK_THROWS_AS(adam_update(s, bad, st, cfg), NumericError);
}

TEST_CASE("training loop") {
  ModelConfig c = tiny_config();
  const auto ds = tiny_data(400);
  const auto tr = model_windows(c, ds, ds, data::Split::train, 8);
  const auto va = model_windows(c, ds, ds, data::Split::val, 8);
  TrainConfig tc;
  tc.epochs = 3;
  tc.val_samples = 4;
  tc.adam.learning_rate = 1e-2;
  Model m(c);
  std::size_t calls = 0;
  const TrainResult r = train(m, tr, va, tc, [&](const EpochLog&) { ++calls; });
  CHECK(calls == r.log.size());
  CHECK(r.log.size() <= 3);
  CHECK(r.best_epoch >= 1);
  double best = r.log.front().val_ncrps;
  for (const auto& e : r.log) best = std::min(best, e.val_ncrps);
  CHECK(r.best_val == best);
  // The returned model holds the best epoch's parameters.
  CHECK(evaluate(m, va, tc.val_samples, tc.seed).aggregate == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("checkpoints") {
  ModelConfig c = tiny_config();
  c.resampler = Resampler::conv;
  Model m(c);
  perturb(m, 4);
  std::stringstream io;
  write_checkpoint(m, io);
  const Model back = read_checkpoint(io);
  CHECK(back.config().to_json() == c.to_json());
  REQUIRE(back.store().size() == m.store().size());
  for (std::size_t i = 0; i < m.store().size(); ++i) {
    CHECK(back.store().name(i) == m.store().name(i));
    const auto& x = m.store().value(i).values();
    const auto& y = back.store().value(i).values();
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(y[k] == static_cast<double>(static_cast<float>(x[k])));
  }
  std::stringstream again;
  write_checkpoint(back, again);
  std::stringstream first;
  write_checkpoint(m, first);
  CHECK(again.str() == first.str());

  std::stringstream bad("NOTACKPT........");
  CHECK_THROWS_AS(read_checkpoint(bad), ParseError);
  std::string cut = first.str();
  cut.resize(cut.size() / 2);
  std::stringstream trunc(cut);
  CHECK_THROWS_AS(read_checkpoint(trunc), ParseError);
}

TEST_CASE("loss gradients match finite differences") {
  ModelConfig c = tiny_config();
  c.heads = 1;
  c.ff_hidden = 4;
  c.vf_hidden = 4;
  Model m(c);
  perturb(m, 5);
  const auto ds = tiny_data();
  auto wins = model_windows(c, ds, ds, data::Split::train, 8);
  wins.resize(2);
  const Batch b = make_batch(c, wins);
  const std::size_t P = 3;
  const std::uint64_t seed = 7;
  auto loss = [&](ParamStore&) { return loss_and_grad(m, b, P, seed, nullptr); };
  auto signature = [&] {
    Tape t;
    ParamBinder pb(t, m.store(), false);
    const Matrix eps = latent_noise(b, b.horizon / c.block(), c.dim, 0, P, seed);
    const Var y = forecast_on_tape(pb, m, b, t.constant(b.context_values), eps, P);
    return scoring::kink_signature(y.value(), b.truth, b.windows, P);
  };
  auto g = m.store().zeros_like();
  loss_and_grad(m, b, P, seed, &g);
  const auto base = signature();
  // Shrink the step until both probes stay on the smooth piece containing the point.
  FiniteDifference fd = [&](ParamStore& st, std::size_t p, std::size_t i, double h) {
    for (int k = 0; k < 6; ++k, h *= 0.1) {
      double& v = st.value(p).values()[i];
      const double o = v;
      v = o + h;
      const bool up = signature() == base;
      v = o - h;
      const bool down = signature() == base;
      v = o;
      if (up && down) break;
    }
    return central_difference(st, loss, p, i, h);
  };
  const GradCheckReport rep = check_gradients(m.store(), loss, g, {}, fd);
  CHECK(rep.checked == m.store().scalar_count());
  CHECK(rep.max_error() < 1e-3);
}
