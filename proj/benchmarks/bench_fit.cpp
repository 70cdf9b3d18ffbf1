#include <benchmark/benchmark.h>

#include "communityfish/poisson_scaler.hpp"
#include "communityfish/synthbench.hpp"

namespace {

cfish::SyntheticMatrix task(benchmark::State& state) {
  cfish::SyntheticSpec spec;
  spec.n_docs = static_cast<std::size_t>(state.range(0));
  spec.n_features = static_cast<std::size_t>(state.range(1));
  spec.seed = 3;
  return cfish::generate_matrix(spec);
}

void BM_Fit(benchmark::State& state) {
  const auto data = task(state);
  for (auto _ : state) benchmark::DoNotOptimize(cfish::fit(data.matrix));
}
BENCHMARK(BM_Fit)->Args({25, 40})->Args({180, 50})->Args({180, 2000})->Unit(benchmark::kMillisecond);

void BM_Bootstrap(benchmark::State& state) {
  const auto data = task(state);
  const auto result = cfish::fit(data.matrix);
  cfish::BootstrapConfig config;
  config.replicates = 100;
  for (auto _ : state) benchmark::DoNotOptimize(cfish::bootstrap(data.matrix, result, config));
}
BENCHMARK(BM_Bootstrap)->Args({25, 40})->Args({180, 50})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
