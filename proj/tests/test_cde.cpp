#include <doctest.h>

#include <cmath>
#include <vector>

#include "ufo/cde.hpp"
#include "ufo/error.hpp"
#include "ufo/gradcheck.hpp"
#include "ufo/lipschitz.hpp"

using namespace ufo;
using namespace ufo::cde;

namespace {

double swish(double x) { return x / (1.0 + std::exp(-x)); }

PatchGeometry random_geometry(std::size_t patches, std::size_t w, std::size_t cov, CounterRng& rng) {
  PatchGeometry g;
  g.patches = patches;
  g.patch_len = w;
  g.fine_covariates = Matrix(patches * w, cov);
  double t = 0.0;
  for (std::size_t i = 0; i < patches * w; ++i) {
    t += rng.uniform(0.3, 1.7);
    g.fine_times.push_back(t);
    for (std::size_t c = 0; c < cov; ++c) g.fine_covariates(i, c) = std::sin(0.7 * t + c);
  }
  return g;
}

void randomize(ParamStore& store, CounterRng& rng, double scale) {
  for (std::size_t i = 0; i < store.size(); ++i)
    for (double& v : store.value(i).values()) v = rng.uniform(-scale, scale);
}

SwigluWeights weights_of(const ParamStore& s, const FieldParams& f) {
  return {s.value(f.gate), s.value(f.value), s.value(f.out)};
}

// Smoothed column of one patch at time q.
std::vector<double> smooth(const PatchGeometry& g, std::size_t p, const Matrix& cols, double q,
                           const interp::KernelConfig& k) {
  const std::size_t w = g.patch_len;
  std::vector<double> times(g.fine_times.begin() + p * w, g.fine_times.begin() + (p + 1) * w);
  Matrix part(w, cols.cols());
  for (std::size_t j = 0; j < w; ++j)
    for (std::size_t c = 0; c < cols.cols(); ++c) part(j, c) = cols(p * w + j, c);
  const double qs[] = {q};
  const Matrix m = interp::interpolate_columns(times, part, qs, k);
  return {m.row(0).begin(), m.row(0).end()};
}

}  // namespace

TEST_CASE("swiglu field examples") {
  SwigluWeights zero{Matrix(3, 4), Matrix(3, 4), Matrix(4, 1)};
  const double tau[] = {0.3}, ctrl[] = {-2.0}, state[] = {5.0};
  CHECK(swiglu_field(tau, ctrl, state, zero)[0] == 0.0);

  SwigluWeights ident{Matrix::identity(2), Matrix::identity(2), Matrix(2, 1, 1.0)};
  const double z2[] = {0.0};
  for (double v : swiglu_field({}, z2, z2, ident)) CHECK(v == 0.0);

  // u = (1, -1): gate^T u = (1, -1), value^T u = (2, 3), out = (1, 0.5).
  SwigluWeights w{Matrix(2, 2, {1, 0, 0, 1}), Matrix(2, 2, {2, 1, 0, -2}), Matrix(2, 1, {1, 0.5})};
  const double c1[] = {1.0}, s1[] = {-1.0};
  const double hand = swish(1.0) * 2.0 * 1.0 + swish(-1.0) * 3.0 * 0.5;
  CHECK(swiglu_field({}, c1, s1, w)[0] == doctest::Approx(hand).epsilon(1e-14));
  CHECK(hand == doctest::Approx(1.0587050252050172).epsilon(1e-14));

  const double bad[] = {1.0, 2.0};
  CHECK_THROWS_AS(swiglu_field({}, bad, s1, w), InvalidArgument);
}

TEST_CASE("integrate_patch examples") {
  const double times[] = {0.0, 0.5, 1.0};
  const double z0[] = {2.0, -1.0};
  const Trajectory still = integrate_patch([](double, auto, std::span<double> dz) { dz[0] = dz[1] = 0.0; }, z0, times, 2);
  REQUIRE(still.states.size() == 3);
  for (const auto& s : still.states) CHECK(s == std::vector<double>{2.0, -1.0});

  const double span[] = {0.0, 1.0};
  const double one[] = {1.0}, zero[] = {0.0};
  const auto growth = integrate_patch([](double, std::span<const double> z, std::span<double> dz) { dz[0] = z[0]; },
                                      one, span, 64);
  CHECK(std::abs(growth.states.back()[0] - std::exp(1.0)) < 1e-6);

  const auto relax = integrate_patch(
      [](double, std::span<const double> z, std::span<double> dz) { dz[0] = -z[0] + 1.0; }, zero, span, 64);
  CHECK(std::abs(relax.states.back()[0] - (1.0 - std::exp(-1.0))) < 1e-6);

  const auto ramp = integrate_patch([](double, auto, std::span<double> dz) { dz[0] = 1.0; }, zero, times, 2);
  CHECK(ramp.states[1][0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(ramp.states[2][0] == doctest::Approx(1.0).epsilon(1e-14));

  CHECK_THROWS_AS(integrate_patch([](double, auto, std::span<double> dz) { dz[0] = 0.0; }, zero, span, 0),
                  InvalidArgument);
  const double back[] = {1.0, 0.0};
  CHECK_THROWS_AS(integrate_patch([](double, auto, std::span<double> dz) { dz[0] = 0.0; }, zero, back, 1),
                  InvalidArgument);
  try {
    integrate_patch([](double, std::span<const double> z, std::span<double> dz) { dz[0] = z[0] * z[0] * 1e6; },
                    one, span, 4);
    FAIL("expected divergence");
  } catch (const IntegrationDiverged& e) {
    CHECK(e.time() > 0.0);
    CHECK(e.time() <= 1.0);
  }
}

TEST_CASE("long intervals get extra steps") {
  SolverConfig cfg;
  cfg.steps_per_interval = 2;
  cfg.max_step = 1.0;
  CHECK(substeps_for(1.0, cfg) == 2);
  CHECK(substeps_for(2.0, cfg) == 2);
  CHECK(substeps_for(2.5, cfg) == 4);
  CHECK(substeps_for(24.0, cfg) == 24);
}

TEST_CASE("ncde_downsample with a zero field emits the first-point embedding") {
  CounterRng rng("ds-zero", 1);
  const std::size_t d = 3;
  ParamStore store;
  const auto p = add_downsampler(store, "ds", d, 2, 5, rng);
  store.value(p.field.out).fill(0.0);
  store.value(p.init_weight) = Matrix::identity(d);
  store.value(p.init_bias).fill(0.0);
  const PatchGeometry g = random_geometry(4, 3, 2, rng);
  const Matrix x = seeded_normal(12, d, "x", 1);
  Tape t;
  ParamBinder pb(t, store, false);
  const SolverConfig cfg;
  const Matrix out = ncde_downsample(pb, p, t.constant(x), g, cfg).value();
  REQUIRE(out.rows() == 4);
  for (std::size_t r = 0; r < 4; ++r) {
    const auto first = smooth(g, r, x, g.fine_times[r * 3], cfg.kernel);
    for (std::size_t c = 0; c < d; ++c) CHECK(out(r, c) == doctest::Approx(swish(first[c])).epsilon(1e-12));
  }
}

TEST_CASE("ncde_downsample reduces to integrate_patch on one patch") {
  CounterRng rng("ds-reduce", 2);
  const std::size_t d = 2, cov = 1, w = 4;
  ParamStore store;
  const auto p = add_downsampler(store, "ds", d, cov, 6, rng);
  randomize(store, rng, 0.6);
  const PatchGeometry g = random_geometry(1, w, cov, rng);
  const Matrix x = seeded_normal(w, d, "x", 2);
  SolverConfig cfg;
  cfg.steps_per_interval = 3;
  Tape t;
  ParamBinder pb(t, store, false);
  const Matrix out = ncde_downsample(pb, p, t.constant(x), g, cfg).value();

  const SwigluWeights fw = weights_of(store, p.field);
  const auto x0 = smooth(g, 0, x, g.fine_times[0], cfg.kernel);
  std::vector<double> z0(d);
  for (std::size_t k = 0; k < d; ++k) {
    double a = store.value(p.init_bias)(0, k);
    for (std::size_t i = 0; i < d; ++i) a += x0[i] * store.value(p.init_weight)(i, k);
    z0[k] = swish(a);
  }
  const FieldFn field = [&](double q, std::span<const double> z, std::span<double> dz) {
    const auto tau = smooth(g, 0, g.fine_covariates, q, cfg.kernel);
    const auto ctrl = smooth(g, 0, x, q, cfg.kernel);
    const auto v = swiglu_field(tau, ctrl, z, fw);
    std::copy(v.begin(), v.end(), dz.begin());
  };
  const auto traj = integrate_patch(field, z0, g.fine_times, cfg.steps_per_interval, cfg.max_step);
  for (std::size_t k = 0; k < d; ++k) CHECK(out(0, k) == doctest::Approx(traj.states.back()[k]).epsilon(1e-12));
}

TEST_CASE("ncde_downsample: shifted identical patches agree and patches are independent") {
  CounterRng rng("ds-shift", 3);
  const std::size_t d = 3, w = 3;
  ParamStore store;
  const auto p = add_downsampler(store, "ds", d, 0, 4, rng);
  randomize(store, rng, 0.5);
  PatchGeometry g;
  g.patches = 3;
  g.patch_len = w;
  g.fine_times = {0.0, 0.7, 2.0, 5.0, 5.7, 7.0, 9.0, 9.5, 11.0};
  g.fine_covariates = Matrix(9, 0);
  Matrix x = seeded_normal(9, d, "x", 3);
  for (std::size_t j = 0; j < w; ++j)
    for (std::size_t c = 0; c < d; ++c) x(w + j, c) = x(j, c);
  const SolverConfig cfg;
  Tape t;
  ParamBinder pb(t, store, false);
  const Matrix out = ncde_downsample(pb, p, t.constant(x), g, cfg).value();
  for (std::size_t c = 0; c < d; ++c) CHECK(out(0, c) == doctest::Approx(out(1, c)).epsilon(1e-12));

  // Reverse the patch order.
  PatchGeometry r = g;
  Matrix xr(9, d);
  for (std::size_t q = 0; q < 3; ++q)
    for (std::size_t j = 0; j < w; ++j) {
      r.fine_times[q * w + j] = g.fine_times[(2 - q) * w + j];
      for (std::size_t c = 0; c < d; ++c) xr(q * w + j, c) = x((2 - q) * w + j, c);
    }
  Tape t2;
  ParamBinder pb2(t2, store, false);
  const Matrix outr = ncde_downsample(pb2, p, t2.constant(xr), r, cfg).value();
  for (std::size_t q = 0; q < 3; ++q)
    for (std::size_t c = 0; c < d; ++c) CHECK(outr(q, c) == out(2 - q, c));
}

TEST_CASE("ncde_downsample is bit-deterministic") {
  CounterRng rng("ds-det", 4);
  ParamStore store;
  const auto p = add_downsampler(store, "ds", 4, 2, 8, rng);
  randomize(store, rng, 0.5);
  const PatchGeometry g = random_geometry(6, 4, 2, rng);
  const Matrix x = seeded_normal(24, 4, "x", 4);
  auto run = [&] {
    Tape t;
    ParamBinder pb(t, store, false);
    return ncde_downsample(pb, p, t.constant(x), g, SolverConfig{}).value();
  };
  CHECK(run() == run());
}

TEST_CASE("ncde_upsample examples") {
  CounterRng rng("us", 5);
  const std::size_t d = 3, w = 4;
  ParamStore store;
  const auto p = add_upsampler(store, "us", d, 2, 5, rng);
  const PatchGeometry g = random_geometry(2, w, 2, rng);
  const Matrix seeds = seeded_normal(2, d, "seeds", 5);
  const SolverConfig cfg;

  store.value(p.field.out).fill(0.0);
  {
    Tape t;
    ParamBinder pb(t, store, false);
    const Matrix out = ncde_upsample(pb, p, t.constant(seeds), g, cfg).value();
    REQUIRE(out.rows() == 2 * w);
    for (std::size_t r = 0; r < 2 * w; ++r)
      for (std::size_t c = 0; c < d; ++c) CHECK(out(r, c) == seeds(r / w, c));
  }

  randomize(store, rng, 0.6);
  Tape t;
  ParamBinder pb(t, store, false);
  const Matrix out = ncde_upsample(pb, p, t.constant(seeds), g, cfg).value();
  const SwigluWeights fw = weights_of(store, p.field);
  for (std::size_t q = 0; q < 2; ++q) {
    const FieldFn field = [&](double tq, std::span<const double> z, std::span<double> dz) {
      const auto tau = smooth(g, q, g.fine_covariates, tq, cfg.kernel);
      const auto v = swiglu_field(tau, {}, z, fw);
      std::copy(v.begin(), v.end(), dz.begin());
    };
    const std::vector<double> times(g.fine_times.begin() + q * w, g.fine_times.begin() + (q + 1) * w);
    const auto traj = integrate_patch(field, seeds.row(q), times, cfg.steps_per_interval, cfg.max_step);
    for (std::size_t j = 0; j < w; ++j)
      for (std::size_t c = 0; c < d; ++c)
        CHECK(out(q * w + j, c) == doctest::Approx(traj.states[j][c]).epsilon(1e-12));
  }

  PatchGeometry single;
  single.patches = 2;
  single.patch_len = 1;
  single.fine_times = {0.0, 1.0};
  single.fine_covariates = Matrix(2, 2);
  Tape t1;
  ParamBinder pb1(t1, store, false);
  CHECK(ncde_upsample(pb1, p, t1.constant(seeds), single, cfg).value() == seeds);

  Tape t2;
  ParamBinder pb2(t2, store, false);
  CHECK_THROWS_AS(ncde_upsample(pb2, p, t2.constant(Matrix(3, d)), g, cfg), InvalidArgument);
}

TEST_CASE("resampler gradients match central differences") {
  CounterRng rng("ds-grad", 6);
  const std::size_t d = 3, cov = 2, w = 3;
  ParamStore store;
  const auto down = add_downsampler(store, "ds", d, cov, 4, rng);
  const auto up = add_upsampler(store, "us", d, cov, 4, rng);
  randomize(store, rng, 0.5);
  const PatchGeometry g = random_geometry(2, w, cov, rng);
  const Matrix x = seeded_normal(6, d, "x", 6);
  const Matrix target = seeded_normal(6, d, "target", 6);
  const SolverConfig cfg;
  auto forward = [&](Tape& t, ParamBinder& pb) {
    const Var coarse = ncde_downsample(pb, down, t.constant(x), g, cfg);
    const Var fine = ncde_upsample(pb, up, coarse, g, cfg);
    return ops::sum(ops::square(ops::sub(fine, t.constant(target))));
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

TEST_CASE("alt_resample examples") {
  CounterRng rng("alt", 7);
  PatchGeometry g;
  g.patches = 1;
  g.patch_len = 2;
  g.fine_times = {0.0, 1.0};
  g.fine_covariates = Matrix(2, 1);

  ParamStore store;
  const auto down = add_alt_resampler(store, "cd", AltKind::conv, Direction::down, 1, 1, 2, rng);
  const auto upc = add_alt_resampler(store, "cu", AltKind::conv, Direction::up, 1, 1, 2, rng);
  store.value(down.weight) = Matrix(2, 1, {0.5, 0.5});
  store.value(upc.weight) = Matrix(1, 2, {1.0, 1.0});
  Tape t;
  ParamBinder pb(t, store, false);
  const Var pooled = alt_resample(pb, down, t.constant(Matrix(2, 1, {1.0, 3.0})), g);
  CHECK(pooled.value()(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  const Matrix round = alt_resample(pb, upc, alt_resample(pb, down, t.constant(Matrix(2, 1, 4.5)), g), g).value();
  REQUIRE(round.rows() == 2);
  CHECK(round(0, 0) == doctest::Approx(4.5).epsilon(1e-15));
  CHECK(round(1, 0) == doctest::Approx(4.5).epsilon(1e-15));

  PatchGeometry one;
  one.patches = 2;
  one.patch_len = 1;
  one.fine_times = {0.0, 1.0};
  one.fine_covariates = Matrix(2, 2);
  ParamStore s2;
  const auto gru = add_alt_resampler(s2, "g", AltKind::rnn, Direction::down, 3, 2, 1, rng);
  randomize(s2, rng, 0.5);
  const Matrix x = seeded_normal(2, 3, "x", 7);
  Tape t2;
  ParamBinder pb2(t2, s2, false);
  const Matrix a = alt_resample(pb2, gru, t2.constant(x), one).value();
  const Matrix b = gru_cell(pb2, gru, t2.constant(x), t2.constant(Matrix(2, 3))).value();
  CHECK(a == b);

  CHECK_THROWS_AS(parse_alt_kind("lstm"), InvalidArgument);
}

TEST_CASE("alt resamplers match the ncde output lengths") {
  CounterRng rng("alt-len", 8);
  const std::size_t d = 4, cov = 2, w = 4;
  const PatchGeometry g = random_geometry(5, w, cov, rng);
  const Matrix x = seeded_normal(20, d, "x", 8);
  ParamStore store;
  const auto nd = add_downsampler(store, "nd", d, cov, 4, rng);
  const auto nu = add_upsampler(store, "nu", d, cov, 4, rng);
  Tape t;
  ParamBinder pb(t, store, false);
  const Var coarse = ncde_downsample(pb, nd, t.constant(x), g, SolverConfig{});
  const std::size_t fine_rows = ncde_upsample(pb, nu, coarse, g, SolverConfig{}).rows();
  for (AltKind k : {AltKind::conv, AltKind::rnn}) {
    const auto ad = add_alt_resampler(store, "ad" + std::to_string(int(k)), k, Direction::down, d, cov, w, rng);
    const auto au = add_alt_resampler(store, "au" + std::to_string(int(k)), k, Direction::up, d, cov, w, rng);
    Tape t2;
    ParamBinder pb2(t2, store, false);
    const Var c = alt_resample(pb2, ad, t2.constant(x), g);
    CHECK(c.rows() == coarse.rows());
    CHECK(alt_resample(pb2, au, c, g).rows() == fine_rows);
  }
}

TEST_CASE("rescaled trajectory respects the Lipschitz bound") {
  CounterRng rng("lipschitz-unit", 9);
  for (int k = 0; k < 3; ++k) {
    const auto f = random_tanh_field(3, 8, rng.uniform(0.3, 1.0), rng);
    const auto x = random_sine_control(3, rng);
    CHECK(f.lipschitz() == doctest::Approx(f.lipschitz()).epsilon(1e-12));
    double prev = 0.0;
    for (double w : {1.0, 0.5, 0.25, 0.125}) {
      const auto c = check_rescaled_lipschitz(f, x, w, 100, 10.0, rng);
      CHECK(c.max_ratio <= c.bound * (1.0 + 1e-6));
      if (prev > 0.0) CHECK(c.bound < prev);
      prev = c.bound;
    }
  }
  CHECK(rescaled_lipschitz_bound(2.0, 1.0, 1e-9) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(spectral_norm(Matrix(2, 2, {3, 0, 0, -4})) == doctest::Approx(4.0).epsilon(1e-12));
}
