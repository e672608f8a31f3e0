#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topocf/graph.hpp"
#include "topocf/rng.hpp"

namespace topocf {

enum class SamplingStrategy { kNodeDropout, kEdgeDropout };

const char* sampling_strategy_name(SamplingStrategy s);
SamplingStrategy sampling_strategy_from_name(const std::string& name);

// Fully determines one sample of the pool.
struct SampleSpec {
  double mu = 0.0;  // dropout rate in [0, 1)
  SamplingStrategy strategy = SamplingStrategy::kEdgeDropout;
  std::uint64_t seed = 0;
  std::uint32_t index = 0;
  std::uint32_t retries = 0;
};

// One round of graph sampling:
//  - node dropout keeps floor((U + I) * (1 - mu)) nodes drawn uniformly from
//    the union of both partitions and retains edges with both endpoints kept;
//  - edge dropout keeps exactly floor(E * (1 - mu)) uniformly chosen edges.
// Isolated nodes are pruned from the result either way. Throws EmptySample
// when either side ends up empty.
Subgraph graph_sampling(const InteractionMatrix& graph, double mu,
                        SamplingStrategy strategy, RngStream rng);

struct SamplePool {
  std::uint64_t source_hash = 0;
  std::vector<SampleSpec> specs;
  std::vector<InteractionMatrix> graphs;
};

// Sub-dataset pool generation: per sample, mu ~ Uniform[lo, hi] and a
// uniformly chosen strategy; empty samples are retried on a fresh stream,
// capped at 100 retries per index.
SamplePool generate_samples(const InteractionMatrix& graph, std::uint32_t count,
                            double mu_lo, double mu_hi, RngStream rng);

}  // namespace topocf
