#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ufo/analysis.hpp"
#include "ufo/error.hpp"

using namespace ufo;
using namespace ufo::analysis;

namespace {

data::Dataset series(std::size_t rows, std::size_t channels = 2) {
  data::SynthSpec s;
  s.rows = rows;
  s.channels = channels;
  s.seed = 5;
  return data::synth_dataset(s);
}

model::ModelConfig small_config() {
  model::ModelConfig c;
  c.levels = 2;
  c.patch_len = 2;
  c.dim = 8;
  c.channels = 2;
  c.blocks = 1;
  c.heads = 2;
  c.ff_hidden = 8;
  c.vf_hidden = 8;
  c.context = 16;
  c.horizon = 8;
  return c;
}

}  // namespace

TEST_CASE("sensitivity of a hand-built linear forecaster") {
  const auto ds = series(300);
  data::WindowSpec ws;
  ws.context = 16;
  ws.horizon = 4;
  const auto wins = data::make_windows(ds, ds, data::Split::test, ws);
  REQUIRE(wins.size() >= 2);
  // output = sum over cells of c_i * x_ik with c_i = exp(0.25 (i - 15)), so
  // the gradient norm at row i is sqrt(2) c_i.
  Matrix coef(16, 2);
  for (std::size_t i = 0; i < 16; ++i) coef(i, 0) = coef(i, 1) = std::exp(0.25 * (static_cast<double>(i) - 15.0));
  const auto r = sensitivity(wins, [&](Tape& t, const data::Window&, Var x) { return ops::mul(x, t.constant(coef)); });
  REQUIRE(r.norms.size() == 16);
  for (std::size_t i = 0; i < 16; ++i) CHECK(r.norms[i] == doctest::Approx(std::sqrt(2.0) * coef(i, 0)).epsilon(1e-12));
  CHECK(r.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.zero_positions == 0);

  // A forecaster reading only the last row leaves every other row at zero.
  Matrix last(16, 2);
  last(15, 0) = 1.0;
  const auto copier = sensitivity(wins, [&](Tape& t, const data::Window&, Var x) { return ops::mul(x, t.constant(last)); });
  CHECK(copier.zero_positions == 15);
  CHECK(copier.norms[15] == 1.0);

  Matrix flat(16, 2, 1.0);
  const auto uniform = sensitivity(wins, [&](Tape& t, const data::Window&, Var x) { return ops::mul(x, t.constant(flat)); });
  CHECK(uniform.r_squared == 0.0);
}

TEST_CASE("sensitivity summary") {
  CHECK_THROWS_AS(summarize_sensitivity({0.0, 0.0}), DegenerateError);
  const auto r = summarize_sensitivity({1.0, 0.0, std::exp(2.0)});
  CHECK(r.zero_positions == 1);
  CHECK(r.r_squared == doctest::Approx(1.0));
  std::ostringstream out;
  r.write(out);
  std::istringstream in(out.str());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 6);
  CHECK(lines[0] == "position,norm");
  CHECK(lines[2] == "1,0");
  CHECK(lines[4].rfind("# r2,", 0) == 0);
  CHECK(lines[5] == "# zero_positions,1");
}

TEST_CASE("sensitivity of the forecaster at initialization") {
  const auto cfg = small_config();
  const model::Model m(cfg);
  const auto ds = series(400);
  const auto wins = model::model_windows(cfg, ds, ds, data::Split::test, 8);
  const auto r = sensitivity(m, std::span(wins).first(3));
  REQUIRE(r.norms.size() == 16);
  for (double v : r.norms) CHECK(std::isfinite(v));
  CHECK(r.zero_positions == 0);
}

TEST_CASE("coefficient of variation across levels") {
  const auto ds = series(24 * 40, 1);
  for (double v : cv_study(ds, 4, 2)) CHECK(v == 0.0);
  const auto inj = data::inject_block_missing(ds, 0.3, 1);
  const auto cv = cv_study(inj.data, 4, 2);
  REQUIRE(cv.size() == 3);
  CHECK(cv[0] > 0.0);
  CHECK(cv[1] < cv[0]);
  CHECK(cv[2] < cv[1]);
  CHECK_THROWS_AS(cv_study(series(20, 1), 4, 2), ConfigError);
}

TEST_CASE("logistic probe") {
  CounterRng rng("probe-test", 1);
  const std::size_t n = 400;
  Matrix informative(n, 3), noise(n, 3);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = i % 3 == 0;
    informative(i, 0) = labels[i] ? 2.0 : -2.0;
    for (std::size_t k = 0; k < 3; ++k) {
      if (k > 0) informative(i, k) = rng.normal();
      noise(i, k) = rng.normal();
    }
  }
  const auto good = probe_features(informative, labels, 3);
  CHECK(good.f1 == 1.0);
  CHECK(good.positives + good.negatives == n);
  CHECK(good.train_count + good.test_count == n);
  CHECK(good.test_count == doctest::Approx(0.3 * n).epsilon(0.02));

  // Balanced weighting puts a random guesser near F1 = 2p / (1 + 2p) with p = 1/3.
  const auto bad = probe_features(noise, labels, 3);
  CHECK(bad.f1 < 0.55);
  const auto again = probe_features(noise, labels, 3);
  CHECK(again.f1 == bad.f1);
  CHECK(again.weight_norm == bad.weight_norm);

  const LogisticModel lm = fit_logistic(informative, labels);
  CHECK(lm.probability(informative.row(0)) > 0.9);
  CHECK(lm.probability(informative.row(1)) < 0.1);

  std::vector<int> same(n, 1);
  CHECK_THROWS_AS(probe_features(noise, same, 3), DegenerateError);
}

TEST_CASE("probe windows and features") {
  const auto ds = series(24 * 30);
  const auto inj = data::inject_block_missing(ds, 0.3, 2);
  const auto wins = probe_windows(inj.data, ds, 16, 8);
  REQUIRE(wins.size() > 10);
  for (std::size_t i = 1; i < wins.size(); ++i) {
    if (wins[i].anchor > wins[i - 1].anchor) CHECK((wins[i].anchor - wins[i - 1].anchor) % 9 == 0);
    for (std::size_t r : wins[i].context_rows) CHECK(inj.data.row_visible(r));
  }
  const auto cfg = small_config();
  const model::Model m(cfg);
  const ProbeData pd = probe_data(m, inj.data, wins);
  CHECK(pd.features.rows() == wins.size() * cfg.context / cfg.patch_len);
  CHECK(pd.features.cols() == cfg.dim);
  std::size_t pos = 0;
  for (int l : pd.labels) {
    CHECK((l == 0 || l == 1));
    pos += l;
  }
  CHECK(pos > 0);
  CHECK(pos < pd.labels.size());
  const auto rep = irregularity_probe(m, inj.data, wins, 1);
  CHECK(rep.positives == pos);
  CHECK(rep.f1 >= 0.0);
  CHECK(rep.f1 <= 1.0);
}

TEST_CASE("timing harness") {
  const auto cfg = small_config();
  const model::Model m(cfg);
  const auto ds = series(400);
  const auto wins = model::model_windows(cfg, ds, ds, data::Split::train, 4);
  const auto t = timing(m, wins, 3, 4);
  CHECK(t.batch_seconds.size() == 3);
  CHECK(t.batch_size == 4);
  CHECK(t.seconds_per_sequence > 0.0);
  for (double s : t.batch_seconds) CHECK(s > 0.0);

  // Wall-clock sanity: repeat runs agree within 3x and batching amortizes overhead.
  const auto again = timing(m, wins, 3, 4);
  const double ratio = again.seconds_per_sequence / t.seconds_per_sequence;
  CHECK(ratio < 3.0);
  CHECK(ratio > 1.0 / 3.0);
  const auto single = timing(m, wins, 3, 1);
  const auto batched = timing(m, wins, 3, 16);
  CHECK(batched.seconds_per_sequence < single.seconds_per_sequence);

  SpeedupConfig sc;
  sc.length = 64;
  sc.batch = 4;
  sc.dim = 8;
  sc.threads = 1;
  sc.repeats = 1;
  const auto sp = speedup(sc);
  CHECK(sp.patched_steps == sp.sequential_steps);
  CHECK(sp.speedup > 0.0);
  CHECK(sp.speedup == doctest::Approx(sp.sequential_seconds / sp.patched_seconds));
}
