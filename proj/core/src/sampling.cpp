#include "topocf/sampling.hpp"

#include <algorithm>
#include <numeric>

#include "topocf/error.hpp"

namespace topocf {

const char* sampling_strategy_name(SamplingStrategy s) {
  return s == SamplingStrategy::kNodeDropout ? "nodeDropout" : "edgeDropout";
}

SamplingStrategy sampling_strategy_from_name(const std::string& name) {
  if (name == "nodeDropout") return SamplingStrategy::kNodeDropout;
  if (name == "edgeDropout") return SamplingStrategy::kEdgeDropout;
  throw Error(ErrorCode::kConfig, "unknown sampling strategy: " + name);
}

namespace {

Subgraph sample_nodes(const InteractionMatrix& g, double mu, RngStream& rng) {
  const std::uint64_t total = static_cast<std::uint64_t>(g.num_users()) + g.num_items();
  // Nudge before flooring so representable rates keep the exact count.
  const std::uint64_t keep = static_cast<std::uint64_t>(
      static_cast<double>(total) * (1.0 - mu) + 1e-9);
  std::vector<Index> nodes(total);
  std::iota(nodes.begin(), nodes.end(), 0);
  rng.shuffle(nodes.data(), nodes.size());

  std::vector<Index> users;
  std::vector<Index> items;
  for (std::uint64_t k = 0; k < keep; ++k) {
    const Index v = nodes[k];
    if (v < g.num_users()) {
      users.push_back(v);
    } else {
      items.push_back(v - g.num_users());
    }
  }
  std::sort(users.begin(), users.end());
  std::sort(items.begin(), items.end());
  return induce_subgraph(g, users, items);
}

Subgraph sample_edges(const InteractionMatrix& g, double mu, RngStream& rng) {
  const EdgeId total = g.num_edges();
  const EdgeId keep = static_cast<EdgeId>(
      static_cast<double>(total) * (1.0 - mu) + 1e-9);
  std::vector<EdgeId> edge_ids(total);
  std::iota(edge_ids.begin(), edge_ids.end(), 0);
  rng.shuffle(edge_ids.data(), edge_ids.size());
  edge_ids.resize(keep);
  std::sort(edge_ids.begin(), edge_ids.end());

  const bool with_ts = g.has_timestamps();
  std::vector<std::pair<Index, Index>> edges;
  edges.reserve(keep);
  std::vector<std::int64_t> ts;
  if (with_ts) ts.reserve(keep);
  Index u = 0;
  for (EdgeId e : edge_ids) {
    while (g.row_ptr()[u + 1] <= e) ++u;
    edges.emplace_back(u, g.items()[e]);
    if (with_ts) ts.push_back(g.timestamps()[e]);
  }
  InteractionMatrix kept = InteractionMatrix::from_edges(
      g.num_users(), g.num_items(), std::move(edges), with_ts ? &ts : nullptr);
  return prune_isolates(kept);
}

}  // namespace

Subgraph graph_sampling(const InteractionMatrix& graph, double mu,
                        SamplingStrategy strategy, RngStream rng) {
  if (mu < 0.0 || mu >= 1.0) {
    throw Error(ErrorCode::kConfig, "dropout rate must be in [0, 1)");
  }
  Subgraph out;
  if (strategy == SamplingStrategy::kNodeDropout) {
    Subgraph masked = sample_nodes(graph, mu, rng);
    // Induce: prune isolates left by the node mask, composing the index maps.
    Subgraph pruned = prune_isolates(masked.matrix);
    out.matrix = std::move(pruned.matrix);
    out.kept_users.reserve(pruned.kept_users.size());
    for (Index v : pruned.kept_users) out.kept_users.push_back(masked.kept_users[v]);
    out.kept_items.reserve(pruned.kept_items.size());
    for (Index v : pruned.kept_items) out.kept_items.push_back(masked.kept_items[v]);
  } else {
    out = sample_edges(graph, mu, rng);
  }
  if (out.matrix.num_users() == 0 || out.matrix.num_items() == 0) {
    throw Error(ErrorCode::kEmptySample, "sampled graph has an empty side");
  }
  return out;
}

SamplePool generate_samples(const InteractionMatrix& graph, std::uint32_t count,
                            double mu_lo, double mu_hi, RngStream rng) {
  if (count < 1) throw Error(ErrorCode::kConfig, "sample count must be >= 1");
  if (mu_lo < 0.0 || mu_hi < mu_lo || mu_hi >= 1.0) {
    throw Error(ErrorCode::kConfig, "dropout range must satisfy 0 <= lo <= hi < 1");
  }
  constexpr std::uint32_t kMaxRetries = 100;

  SamplePool pool;
  pool.specs.reserve(count);
  pool.graphs.reserve(count);
  for (std::uint32_t m = 0; m < count; ++m) {
    for (std::uint32_t attempt = 0;; ++attempt) {
      if (attempt > kMaxRetries) {
        throw Error(ErrorCode::kRetryExhausted,
                    "sample " + std::to_string(m) + " exhausted retries");
      }
      // Stream id depends only on (index, attempt): the pool is identical
      // whether generated serially or in parallel.
      RngStream draw = rng.fork((static_cast<std::uint64_t>(attempt) << 32) | m);
      SampleSpec spec;
      spec.mu = draw.uniform(mu_lo, mu_hi);
      spec.strategy = draw.below(2) == 0 ? SamplingStrategy::kNodeDropout
                                         : SamplingStrategy::kEdgeDropout;
      spec.seed = rng.seed();
      spec.index = m;
      spec.retries = attempt;
      try {
        Subgraph sub = graph_sampling(graph, spec.mu, spec.strategy, draw);
        pool.specs.push_back(spec);
        pool.graphs.push_back(std::move(sub.matrix));
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kEmptySample) throw;
      }
    }
  }
  return pool;
}

}  // namespace topocf
