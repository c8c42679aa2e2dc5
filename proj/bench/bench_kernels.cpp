// Parallel kernels against their serial references. The Arg on parallel
// cases is the worker count.
#include <benchmark/benchmark.h>

#include "ufo/cde.hpp"
#include "ufo/cde_kernels.hpp"
#include "ufo/data.hpp"
#include "ufo/kernels.hpp"
#include "ufo/rng.hpp"

using namespace ufo;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  CounterRng rng("bench.matrix", seed);
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

struct Threads {
  int previous = kernels::worker_count();
  explicit Threads(int n) { kernels::set_worker_count(n); }
  ~Threads() { kernels::set_worker_count(previous); }
};

// Level-0 downsampling workload: 32 hourly sequences of 720 steps, d = 16.
struct DownsampleCase {
  cde::fast::DownsamplerWeights weights;
  Matrix fine;
  cde::PatchGeometry geo;
  cde::SolverConfig solver;

  DownsampleCase() {
    const std::size_t d = 16, n = 32 * 720, w = 4;
    ParamStore store;
    CounterRng init("bench.init", 0);
    const auto p = cde::add_downsampler(store, "down", d, data::kCovariateDim, d, init);
    weights = cde::fast::extract(store, p);
    fine = random_matrix(n, d, 1);
    std::vector<double> stamps(n);
    for (std::size_t i = 0; i < n; ++i) {
      geo.fine_times.push_back(static_cast<double>(i % 720));
      stamps[i] = 1451606400.0 + 3600.0 * static_cast<double>(i);
    }
    geo.patches = n / w;
    geo.patch_len = w;
    geo.fine_covariates = data::time_covariates(stamps);
  }
};

const DownsampleCase& downsample_case() {
  static const DownsampleCase c;
  return c;
}

void BM_GemmParallel(benchmark::State& state) {
  const Threads t(static_cast<int>(state.range(0)));
  const Matrix a = random_matrix(1024, 64, 1), b = random_matrix(64, 64, 2);
  Matrix c;
  for (auto _ : state) {
    kernels::gemm(a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
}
BENCHMARK(BM_GemmParallel)->Arg(1)->Arg(2)->Arg(4);

void BM_GemmSerial(benchmark::State& state) {
  const Matrix a = random_matrix(1024, 64, 1), b = random_matrix(64, 64, 2);
  Matrix c;
  for (auto _ : state) {
    kernels::serial::gemm(a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
}
BENCHMARK(BM_GemmSerial);

void BM_GemmTnParallel(benchmark::State& state) {
  const Threads t(static_cast<int>(state.range(0)));
  const Matrix a = random_matrix(1024, 64, 1), b = random_matrix(1024, 64, 2);
  Matrix c;
  for (auto _ : state) {
    kernels::gemm_tn(a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
}
BENCHMARK(BM_GemmTnParallel)->Arg(1)->Arg(4);

void BM_GemmTnSerial(benchmark::State& state) {
  const Matrix a = random_matrix(1024, 64, 1), b = random_matrix(1024, 64, 2);
  Matrix c;
  for (auto _ : state) {
    kernels::serial::gemm_tn(a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
}
BENCHMARK(BM_GemmTnSerial);

void BM_DownsampleParallel(benchmark::State& state) {
  const Threads t(static_cast<int>(state.range(0)));
  const auto& c = downsample_case();
  for (auto _ : state) benchmark::DoNotOptimize(cde::fast::downsample(c.weights, c.fine, c.geo, c.solver));
}
BENCHMARK(BM_DownsampleParallel)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_DownsampleSerial(benchmark::State& state) {
  const auto& c = downsample_case();
  for (auto _ : state) benchmark::DoNotOptimize(cde::fast::serial::downsample(c.weights, c.fine, c.geo, c.solver));
}
BENCHMARK(BM_DownsampleSerial)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
