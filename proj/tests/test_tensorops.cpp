#include <doctest.h>

#include <cmath>
#include <limits>

#include "ufo/error.hpp"
#include "ufo/gradcheck.hpp"
#include "ufo/params.hpp"
#include "ufo/rng.hpp"
#include "ufo/tape.hpp"

using namespace ufo;

namespace {

Var softmax_rows(Var x) {
  Tape& t = *x.tape();
  const Var e = ops::exp(x);
  const Var sums = ops::matmul(e, t.constant(Matrix(x.cols(), x.cols(), 1.0)));
  return ops::div(e, sums);
}

}  // namespace

TEST_CASE("square at 3 has gradient 6") {
  Tape t;
  const Var x = t.variable(Matrix(1, 1, 3.0));
  t.backward(ops::sum(ops::square(x)));
  CHECK(t.grad(x)(0, 0) == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("sum of a row softmax has zero gradient") {
  Tape t;
  const Var x = t.variable(seeded_normal(3, 5, "softmax", 1));
  t.backward(ops::sum(softmax_rows(x)));
  const Matrix g = t.grad(x);
  for (double v : g.values()) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("unused variables get zero gradients") {
  Tape t;
  const Var x = t.variable(Matrix(2, 2, 1.0));
  const Var y = t.variable(Matrix(2, 2, 2.0));
  t.backward(ops::sum(y));
  const Matrix gx = t.grad(x), gy = t.grad(y);
  for (double g : gx.values()) CHECK(g == 0.0);
  for (double g : gy.values()) CHECK(g == 1.0);
}

TEST_CASE("random five-op compositions match central differences") {
  // Smooth unary and binary ops only, so finite differences are exact to O(h^2).
  CounterRng pick("compose", 5);
  for (int trial = 0; trial < 40; ++trial) {
    ParamStore store;
    store.add("a", seeded_normal(3, 4, "a", trial));
    store.add("b", seeded_normal(3, 4, "b", trial));
    store.add("m", seeded_normal(4, 4, "m", trial));
    std::vector<int> plan(5);
    for (int& p : plan) p = static_cast<int>(pick.below(10));
    auto forward = [&](Tape& t, ParamBinder& pb) {
      Var x = pb(0);
      const Var b = pb(1), m = pb(2);
      for (int p : plan) {
        switch (p) {
          case 0: x = ops::matmul(x, m); break;
          case 1: x = ops::mul(x, b); break;
          case 2: x = ops::tanh(x); break;
          case 3: x = ops::swish(x); break;
          case 4: x = ops::sigmoid(x); break;
          case 5: x = ops::softplus(x); break;
          case 6: x = ops::add(x, ops::scale(b, 0.5)); break;
          case 7: x = ops::normalize_rows(x); break;
          case 8: x = softmax_rows(x); break;
          default: x = ops::div(x, ops::add_scalar(ops::square(b), 1.0)); break;
        }
      }
      (void)t;
      return ops::sum(ops::square(x));
    };
    auto loss = [&](ParamStore& s) {
      Tape t;
      ParamBinder pb(t, s, false);
      return forward(t, pb).value()(0, 0);
    };
    Tape t;
    ParamBinder pb(t, store);
    t.backward(forward(t, pb));
    std::vector<Matrix> grads = store.zeros_like();
    pb.accumulate(grads);
    GradCheckOptions opt;
    opt.step = 1e-5;
    // Gradients far below the loss scale are compared absolutely: central
    // differences cannot resolve them relatively at this step.
    opt.tiny = 1e-4;
    opt.abs_tolerance = 1e-9;
    const auto report = check_gradients(store, loss, grads, opt);
    INFO("plan " << plan[0] << plan[1] << plan[2] << plan[3] << plan[4] << " a=" << report.worst.analytic
                 << " n=" << report.worst.numeric);
    CHECK(report.max_error() < 1e-5);
  }
}

TEST_CASE("seeded streams are deterministic and name-separated") {
  CHECK(seeded_normal(4, 4, "latent", 9) == seeded_normal(4, 4, "latent", 9));
  CHECK_FALSE(seeded_normal(4, 4, "latent", 9) == seeded_normal(4, 4, "init", 9));
  CHECK_FALSE(seeded_normal(4, 4, "latent", 9) == seeded_normal(4, 4, "latent", 10));
}

TEST_CASE("normal moments over a million draws") {
  const Matrix m = seeded_normal(1000, 1000, "moments", 3);
  double s = 0.0, s2 = 0.0;
  for (double v : m.values()) {
    s += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(m.size());
  const double mean = s / n, var = s2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.01);
}

TEST_CASE("overflow raises a numeric error") {
  Tape t;
  const Var x = t.variable(Matrix(1, 1, 1000.0));
  CHECK_THROWS_AS(ops::exp(x), NumericError);
}

TEST_CASE("counter rng draws are pure functions of the counter") {
  CounterRng a("s", 1), b("s", 1);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CounterRng u("u", 2);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK(v > 0.0);
    CHECK(v < 1.0);
    CHECK(u.below(7) < 7u);
  }
}
