#include <doctest.h>

#include <cmath>

#include "ufo/error.hpp"
#include "ufo/gradcheck.hpp"
#include "ufo/refiner.hpp"

using namespace ufo;
using namespace ufo::refiner;

namespace {

void randomize(ParamStore& store, CounterRng& rng, double scale) {
  for (std::size_t i = 0; i < store.size(); ++i)
    for (double& v : store.value(i).values()) v = rng.uniform(-scale, scale);
}

Matrix run_encoder(const ParamStore& store, const RefinerParams& p, const Matrix& x, std::size_t groups,
                   std::vector<AttentionRecord>* records = nullptr) {
  Tape t;
  ParamBinder pb(t, store, false);
  return encoder_refine(pb, p, t.constant(x), groups, {1, records}).value();
}

Matrix run_decoder(const ParamStore& store, const RefinerParams& p, const Matrix& dec, const Matrix& enc,
                   std::vector<AttentionRecord>* records = nullptr) {
  Tape t;
  ParamBinder pb(t, store, false);
  return decoder_refine(pb, p, t.constant(dec), t.constant(enc), 1, 1, {1, records}).value();
}

void check_row_stochastic(const std::vector<AttentionRecord>& records) {
  for (const auto& r : records)
    for (std::size_t i = 0; i < r.rows; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < r.cols; ++j) {
        CHECK(r.weights[i * r.cols + j] >= 0.0);
        s += r.weights[i * r.cols + j];
      }
      CHECK(std::abs(s - 1.0) < 1e-5);
    }
}

}  // namespace

TEST_CASE("fresh refiners are the identity") {
  CounterRng rng("ident", 1);
  ParamStore store;
  const auto enc = add_refiner(store, "e", 8, 2, 2, 16, false, rng);
  const auto dec = add_refiner(store, "d", 8, 2, 2, 16, true, rng);
  const Matrix x = seeded_normal(6, 8, "x", 1), y = seeded_normal(5, 8, "y", 1);
  CHECK(run_encoder(store, enc, x, 1) == x);
  CHECK(run_decoder(store, dec, y, x) == y);
}

TEST_CASE("single-token and single-key attention") {
  CounterRng rng("one", 2);
  ParamStore store;
  const auto enc = add_refiner(store, "e", 8, 2, 1, 16, false, rng);
  const auto dec = add_refiner(store, "d", 8, 2, 1, 16, true, rng);
  randomize(store, rng, 0.4);
  std::vector<AttentionRecord> records;
  run_encoder(store, enc, seeded_normal(1, 8, "x", 2), 1, &records);
  REQUIRE(!records.empty());
  for (const auto& r : records) {
    CHECK(r.rows == 1);
    CHECK(r.cols == 1);
    CHECK(r.weights[0] == 1.0);
  }
  records.clear();
  run_decoder(store, dec, seeded_normal(4, 8, "y", 2), seeded_normal(1, 8, "x", 2), &records);
  std::size_t cross = 0;
  for (const auto& r : records)
    if (r.cross) {
      ++cross;
      CHECK(r.cols == 1);
      for (double w : r.weights) CHECK(w == 1.0);
    }
  CHECK(cross == 2);
  check_row_stochastic(records);
}

TEST_CASE("encoder is causal") {
  CounterRng rng("causal", 3);
  ParamStore store;
  const auto enc = add_refiner(store, "e", 8, 2, 2, 16, false, rng);
  randomize(store, rng, 0.4);
  const Matrix x = seeded_normal(7, 8, "x", 3);
  const Matrix base = run_encoder(store, enc, x, 1);
  for (std::size_t j = 0; j < 7; ++j) {
    Matrix xp = x;
    for (std::size_t c = 0; c < 8; ++c) xp(j, c) += 0.1 * static_cast<double>(c + 1);
    const Matrix out = run_encoder(store, enc, xp, 1);
    for (std::size_t i = 0; i < 7; ++i) {
      double diff = 0.0;
      for (std::size_t c = 0; c < 8; ++c) diff += std::abs(out(i, c) - base(i, c));
      if (i < j) CHECK(diff == 0.0);
      else CHECK(diff > 0.0);
    }
  }
  // Gradients of later outputs never reach earlier inputs' successors.
  Tape t;
  ParamBinder pb(t, store, false);
  const Var in = t.variable(x);
  const Var out = encoder_refine(pb, enc, in, 1);
  Matrix pick(7, 8);
  pick.row(2)[0] = 1.0;
  t.backward(ops::sum(ops::mul(out, t.constant(pick))));
  const Matrix g = t.grad(in);
  for (std::size_t j = 3; j < 7; ++j)
    for (std::size_t c = 0; c < 8; ++c) CHECK(g(j, c) == 0.0);
}

TEST_CASE("groups are refined independently") {
  CounterRng rng("groups", 4);
  ParamStore store;
  const auto enc = add_refiner(store, "e", 8, 4, 1, 16, false, rng);
  randomize(store, rng, 0.4);
  const Matrix x = seeded_normal(10, 8, "x", 4);
  const Matrix both = run_encoder(store, enc, x, 2);
  Matrix second(5, 8);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t c = 0; c < 8; ++c) second(i, c) = x(5 + i, c);
  const Matrix alone = run_encoder(store, enc, second, 1);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t c = 0; c < 8; ++c) CHECK(both(5 + i, c) == doctest::Approx(alone(i, c)).epsilon(1e-13));
}

TEST_CASE("permuting the input changes the output") {
  CounterRng rng("perm", 5);
  ParamStore store;
  const auto enc = add_refiner(store, "e", 8, 2, 2, 16, false, rng);
  randomize(store, rng, 0.4);
  const Matrix x = seeded_normal(6, 8, "x", 5);
  Matrix xp(6, 8);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t c = 0; c < 8; ++c) xp(i, c) = x(5 - i, c);
  const Matrix a = run_encoder(store, enc, x, 1), b = run_encoder(store, enc, xp, 1);
  double diff = 0.0;
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t c = 0; c < 8; ++c) diff += std::abs(a(i, c) - b(5 - i, c));
  CHECK(diff > 1e-6);
}

TEST_CASE("duplicating a key reweights cross attention as predicted") {
  CounterRng rng("dup", 6);
  ParamStore store;
  const auto dec = add_refiner(store, "d", 8, 2, 1, 16, true, rng);
  randomize(store, rng, 0.5);
  const Matrix y = seeded_normal(3, 8, "y", 6);
  const Matrix two = seeded_normal(2, 8, "kv", 6);
  Matrix three(3, 8);
  for (std::size_t c = 0; c < 8; ++c) three(0, c) = three(1, c) = two(0, c), three(2, c) = two(1, c);
  std::vector<AttentionRecord> ra, rb;
  run_decoder(store, dec, y, two, &ra);
  run_decoder(store, dec, y, three, &rb);
  std::size_t compared = 0;
  for (std::size_t k = 0; k < ra.size(); ++k) {
    if (!ra[k].cross) continue;
    for (std::size_t i = 0; i < ra[k].rows; ++i) {
      // With weights (p, 1 - p) on (a, b), doubling a gives a the mass 2p / (1 + p).
      const double p = ra[k].weights[i * 2];
      const double expect = 2.0 * p / (1.0 + p);
      const double got = rb[k].weights[i * 3] + rb[k].weights[i * 3 + 1];
      CHECK(got == doctest::Approx(expect).epsilon(1e-12));
      CHECK(rb[k].weights[i * 3] == doctest::Approx(rb[k].weights[i * 3 + 1]).epsilon(1e-14));
      ++compared;
    }
  }
  CHECK(compared == 2 * 3);
}

TEST_CASE("dimension mismatch is rejected") {
  CounterRng rng("dims", 7);
  ParamStore store;
  const auto dec = add_refiner(store, "d", 8, 2, 1, 16, true, rng);
  CHECK_THROWS_AS(run_decoder(store, dec, Matrix(3, 8), Matrix(2, 4)), InvalidArgument);
  CHECK_THROWS_AS(add_refiner(store, "bad", 6, 4, 1, 8, false, rng), InvalidArgument);
}

TEST_CASE("refiner gradients match central differences") {
  CounterRng rng("refgrad", 8);
  ParamStore store;
  const auto enc = add_refiner(store, "e", 8, 2, 2, 8, false, rng);
  const auto dec = add_refiner(store, "d", 8, 2, 2, 8, true, rng);
  randomize(store, rng, 0.4);
  const Matrix x = seeded_normal(4, 8, "x", 8), y = seeded_normal(3, 8, "y", 8);
  const Matrix target = seeded_normal(3, 8, "target", 8);
  auto forward = [&](Tape& t, ParamBinder& pb) {
    const Var e = encoder_refine(pb, enc, t.constant(x), 1);
    const Var d = decoder_refine(pb, dec, t.constant(y), e, 1);
    return ops::sum(ops::square(ops::sub(d, t.constant(target))));
  };
  Tape t;
  ParamBinder pb(t, store);
  t.backward(forward(t, pb));
  auto grads = store.zeros_like();
  pb.accumulate(grads);
  auto loss = [&](ParamStore& s) {
    Tape tt;
    ParamBinder b(tt, s, false);
    return forward(tt, b).value()(0, 0);
  };
  const auto report = check_gradients(store, loss, grads);
  CHECK(report.checked == store.scalar_count());
  CHECK(report.max_error() < 1e-3);
}
