#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "communityfish/community_graph.hpp"

namespace {

// Planted blocks of 20 nodes, dense inside and sparse across.
cfish::WordGraph block_graph(std::size_t nodes) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::string> words;
  for (std::size_t i = 0; i < nodes; ++i) words.push_back("w" + std::to_string(i));
  std::vector<cfish::WeightedEdge> edges;
  for (std::size_t i = 0; i < nodes; ++i) {
    for (std::size_t j = i + 1; j < nodes; ++j) {
      const double p = i / 20 == j / 20 ? 0.3 : 2.0 / static_cast<double>(nodes);
      if (u(rng) < p) edges.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), 1.0 + 30 * u(rng)});
    }
  }
  return cfish::WordGraph(words, edges);
}

void BM_Louvain(benchmark::State& state) {
  const auto graph = block_graph(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cfish::louvain(graph));
  state.counters["edges"] = static_cast<double>(graph.num_edges());
}
BENCHMARK(BM_Louvain)->Arg(200)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Leiden(benchmark::State& state) {
  if (!cfish::leiden_available()) {
    state.SkipWithError("built without Leiden");
    return;
  }
  const auto graph = block_graph(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cfish::leiden(graph));
}
BENCHMARK(BM_Leiden)->Arg(200)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace
