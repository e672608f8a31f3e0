#include <benchmark/benchmark.h>

#include <memory>

#include "topocf/characteristics.hpp"
#include "topocf/linalg.hpp"
#include "topocf/models.hpp"
#include "topocf/normalize.hpp"
#include "topocf/rng.hpp"
#include "topocf/sampling.hpp"

namespace {

using namespace topocf;

InteractionMatrix make_graph(Index users, Index items, double density,
                             std::uint64_t seed) {
  RngStream rng(seed, 0);
  std::vector<std::pair<Index, Index>> pairs;
  for (Index u = 0; u < users; ++u) {
    pairs.emplace_back(u, static_cast<Index>(rng.below(items)));
    for (Index i = 0; i < items; ++i) {
      if (rng.next_double() < density) pairs.emplace_back(u, i);
    }
  }
  for (Index i = 0; i < items; ++i) {
    pairs.emplace_back(static_cast<Index>(rng.below(users)), i);
  }
  return InteractionMatrix::from_edges(users, items, std::move(pairs));
}

void BM_Propagation(benchmark::State& state) {
  const Index n = static_cast<Index>(state.range(0));
  const InteractionMatrix m = make_graph(n, n, 0.02, 1);
  const auto adj = symmetric_normalize(std::make_shared<InteractionMatrix>(m));
  ModelConfig config = ModelConfig::defaults_for(ModelKind::kLightGcn);
  config.embed_dim = 64;
  const ModelState model = init_model(ModelKind::kLightGcn, config, adj,
                                      RngStream(2, 2));
  for (auto _ : state) {
    benchmark::DoNotOptimize(propagate(model, adj, RngStream(0, 0)));
  }
  state.SetItemsProcessed(state.iterations() * m.num_edges() * config.layers);
}
BENCHMARK(BM_Propagation)->Arg(500)->Arg(2000);

void BM_Clustering(benchmark::State& state) {
  const Index n = static_cast<Index>(state.range(0));
  const InteractionMatrix m = make_graph(n, n, 0.03, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(avg_clustering(m, Side::kUser));
  }
}
BENCHMARK(BM_Clustering)->Arg(200)->Arg(800);

void BM_TruncatedSvd(benchmark::State& state) {
  const Index n = static_cast<Index>(state.range(0));
  const InteractionMatrix m = make_graph(n, n, 0.02, 5);
  const auto adj = symmetric_normalize(std::make_shared<InteractionMatrix>(m));
  for (auto _ : state) {
    benchmark::DoNotOptimize(truncated_svd(adj, 32, 8, 4, RngStream(1, 1)));
  }
}
BENCHMARK(BM_TruncatedSvd)->Arg(500)->Arg(1500);

void BM_EdgeSampling(benchmark::State& state) {
  const InteractionMatrix m = make_graph(2000, 2000, 0.01, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        graph_sampling(m, 0.8, SamplingStrategy::kEdgeDropout, RngStream(3, 3)));
  }
  state.SetItemsProcessed(state.iterations() * m.num_edges());
}
BENCHMARK(BM_EdgeSampling);

void BM_Gini(benchmark::State& state) {
  RngStream rng(9, 0);
  std::vector<double> degrees;
  for (int k = 0; k < 100000; ++k) degrees.push_back(1.0 + rng.below(500));
  for (auto _ : state) {
    benchmark::DoNotOptimize(gini(degrees));
  }
}
BENCHMARK(BM_Gini);

}  // namespace

BENCHMARK_MAIN();
