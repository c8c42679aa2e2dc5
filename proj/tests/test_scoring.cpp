#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ufo/error.hpp"
#include "ufo/gradcheck.hpp"
#include "ufo/rng.hpp"
#include "ufo/scoring.hpp"

using namespace ufo;
using namespace ufo::scoring;

TEST_CASE("crps examples") {
  const double same[] = {1.5, 1.5, 1.5};
  CHECK(crps_samples(same, 1.5) == 0.0);
  CHECK(crps_brute(same, 1.5) == 0.0);
  const double one[] = {2.25};
  CHECK(crps_samples(one, -1.0) == doctest::Approx(3.25).epsilon(1e-15));
  CHECK(crps_brute(one, -1.0) == doctest::Approx(3.25).epsilon(1e-15));
  // MAE 0.5 minus half the mean pairwise distance 0.25.
  const double pair[] = {0.0, 1.0};
  CHECK(crps_samples(pair, 0.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(crps_brute(pair, 0.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(crps_samples({}, 0.0), InvalidArgument);
  CHECK_THROWS_AS(crps_brute({}, 0.0), InvalidArgument);
}

TEST_CASE("sorted-coefficient crps equals the energy form and the exact integral") {
  CounterRng rng("oracle", 1);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t P = 1 + rng.below(64);
    std::vector<double> x(P);
    for (double& v : x) v = rng.normal() * 3.0;
    if (trial % 10 == 0) x[P / 2] = x[0];  // ties
    const double y = rng.normal() * 3.0;
    double mae = 0.0, pairs = 0.0;
    for (double a : x) {
      mae += std::abs(a - y);
      for (double b : x) pairs += std::abs(a - b);
    }
    const double p = static_cast<double>(P);
    const double energy = mae / p - pairs / (2.0 * p * p);
    const double fast = crps_samples(x, y);
    CHECK(std::abs(fast - crps_brute(x, y)) < 1e-9);
    CHECK(std::abs(fast - energy) < 1e-9);
    CHECK(fast >= 0.0);
  }
}

TEST_CASE("crps is translation equivariant and positively homogeneous") {
  CounterRng rng("equiv", 2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(1 + rng.below(20));
    for (double& v : x) v = rng.normal();
    const double y = rng.normal();
    const double base = crps_samples(x, y);
    // Dyadic shift and scale keep the arithmetic exact.
    std::vector<double> shifted = x, scaled = x;
    for (double& v : shifted) v += 8.0;
    for (double& v : scaled) v *= 4.0;
    CHECK(crps_samples(shifted, y + 8.0) == doctest::Approx(base).epsilon(1e-12));
    CHECK(crps_samples(scaled, 4.0 * y) == doctest::Approx(4.0 * base).epsilon(1e-12));
  }
}

TEST_CASE("the true distribution scores lower than a shifted one") {
  CounterRng rng("proper", 3);
  const int trials = 20000;
  const std::size_t P = 8;
  double sum = 0.0, sum2 = 0.0;
  std::vector<double> a(P), b(P);
  for (int i = 0; i < trials; ++i) {
    const double y = rng.normal();
    for (std::size_t k = 0; k < P; ++k) a[k] = rng.normal(), b[k] = rng.normal() + 0.5;
    const double d = crps_samples(b, y) - crps_samples(a, y);
    sum += d;
    sum2 += d * d;
  }
  const double mean = sum / trials, se = std::sqrt((sum2 / trials - mean * mean) / trials);
  CHECK(mean > 3.0 * se);
}

TEST_CASE("ncrps examples") {
  // Two channels, P = 2, L = 2; sample-major rows s * L + t.
  const Matrix samples(4, 2, {1.0, 10.0, 2.0, 20.0, 3.0, 12.0, 0.0, 22.0});
  const Matrix truth(2, 2, {2.0, 11.0, 1.0, 19.0});
  const ScoreReport r = ncrps(samples, 2, truth);
  for (std::size_t c = 0; c < 2; ++c) {
    double crps = 0.0, denom = 0.0;
    for (std::size_t t = 0; t < 2; ++t) {
      const double cell[] = {samples(t, c), samples(2 + t, c)};
      crps += crps_brute(cell, truth(t, c));
      denom += std::abs(truth(t, c));
    }
    CHECK(r.channel_ncrps[c] == doctest::Approx(crps / denom).epsilon(1e-14));
    CHECK(r.denominators[c] == denom);
  }
  CHECK(r.aggregate == doctest::Approx(0.5 * (r.channel_ncrps[0] + r.channel_ncrps[1])).epsilon(1e-15));

  Matrix perfect(4, 2);
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t t = 0; t < 2; ++t)
      for (std::size_t c = 0; c < 2; ++c) perfect(s * 2 + t, c) = truth(t, c);
  for (double v : ncrps(perfect, 2, truth).channel_ncrps) CHECK(v == 0.0);

  Matrix s10 = samples, t10 = truth;
  for (std::size_t i = 0; i < 4; ++i) s10(i, 1) *= 10.0;
  for (std::size_t i = 0; i < 2; ++i) t10(i, 1) *= 10.0;
  CHECK(ncrps(s10, 2, t10).channel_ncrps[1] == doctest::Approx(r.channel_ncrps[1]).epsilon(1e-12));
}

TEST_CASE("zero denominators name the channels") {
  const Matrix truth(2, 3, {1.0, 0.0, 0.0, 2.0, 0.0, 0.0});
  try {
    ncrps(Matrix(4, 3, 1.0), 2, truth);
    FAIL("expected DegenerateError");
  } catch (const DegenerateError& e) {
    const std::string msg = e.what();
    CHECK(msg.find('1') != std::string::npos);
    CHECK(msg.find('2') != std::string::npos);
  }
}

TEST_CASE("pooled accumulator matches a single report over the concatenation") {
  const Matrix a(4, 1, {1.0, 2.0, 1.5, 2.5}), ta(2, 1, {1.2, 2.2});
  const Matrix b(4, 1, {4.0, 5.0, 3.0, 6.0}), tb(2, 1, {4.5, 5.5});
  NcrpsAccumulator acc(1);
  acc.add(a, 2, ta);
  acc.add(b, 2, tb);
  const auto r = acc.report();
  double crps = 0.0;
  for (std::size_t t = 0; t < 2; ++t) {
    const double ca[] = {a(t, 0), a(2 + t, 0)}, cb[] = {b(t, 0), b(2 + t, 0)};
    crps += crps_brute(ca, ta(t, 0)) + crps_brute(cb, tb(t, 0));
  }
  CHECK(r.aggregate == doctest::Approx(crps / (1.2 + 2.2 + 4.5 + 5.5)).epsilon(1e-14));
  std::ostringstream o;
  r.write(o);
  CHECK(o.str().rfind("channel,denominator,ncrps\n0,", 0) == 0);
  CHECK(o.str().find("\nmean,,") != std::string::npos);
}

TEST_CASE("loss value and gradient") {
  const std::size_t W = 2, P = 5, L = 3, C = 2;
  ParamStore store;
  store.add("x", seeded_normal(W * P * L, C, "samples", 4));
  Matrix truth = seeded_normal(W * L, C, "truth", 4);
  for (double& v : truth.values()) v += 3.0;
  auto loss = [&](ParamStore& s) {
    Tape t;
    return ncrps_loss(t.constant(s.value(0)), truth, W, P).value()(0, 0);
  };
  // Value: mean over windows of each window's NCRPS.
  double expect = 0.0;
  for (std::size_t w = 0; w < W; ++w) {
    Matrix part(P * L, C), tr(L, C);
    for (std::size_t r = 0; r < P * L; ++r)
      for (std::size_t c = 0; c < C; ++c) part(r, c) = store.value(0)(w * P * L + r, c);
    for (std::size_t r = 0; r < L; ++r)
      for (std::size_t c = 0; c < C; ++c) tr(r, c) = truth(w * L + r, c);
    expect += ncrps(part, P, tr).aggregate / W;
  }
  CHECK(loss(store) == doctest::Approx(expect).epsilon(1e-13));

  Tape t;
  const Var x = t.variable(store.value(0));
  t.backward(ncrps_loss(x, truth, W, P));
  const std::vector<Matrix> grads{t.grad(x)};
  // Piecewise linear: the step stays inside one piece for distinct samples.
  GradCheckOptions opt;
  opt.step = 1e-7;
  CHECK(check_gradients(store, loss, grads, opt).max_error() < 1e-3);
}

TEST_CASE("kink signature tracks sort order and error signs") {
  const Matrix truth(1, 1, {0.0});
  const Matrix a(2, 1, {-1.0, 2.0}), b(2, 1, {-0.5, 2.0}), c(2, 1, {3.0, 2.0});
  CHECK(kink_signature(a, truth, 1, 2) == kink_signature(b, truth, 1, 2));
  CHECK(kink_signature(a, truth, 1, 2) != kink_signature(c, truth, 1, 2));
}
