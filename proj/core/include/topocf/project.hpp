#pragma once

#include <cstdint>
#include <vector>

#include "topocf/graph.hpp"

namespace topocf {

// Same-side co-occurrence graph. c_vw = |N_v intersect N_w| computed in the
// bipartite graph; symmetric, diagonal (self co-occurrence = degree) stored
// separately and excluded from the edge lists.
struct ProjectedGraph {
  Side side = Side::kUser;
  Index num_nodes = 0;
  std::vector<EdgeId> row_ptr;           // num_nodes + 1
  std::vector<Index> neighbors;          // both directions stored
  std::vector<std::uint32_t> counts;     // co-occurrence counts, aligned
  std::vector<std::uint32_t> self_counts;  // diagonal c_vv

  Index projected_degree(Index v) const {
    return static_cast<Index>(row_ptr[v + 1] - row_ptr[v]);
  }
  EdgeId num_undirected_edges() const { return neighbors.size() / 2; }
  bool has_edge(Index v, Index w) const;
  std::uint32_t count(Index v, Index w) const;  // 0 when absent
};

ProjectedGraph project(const InteractionMatrix& matrix, Side side);

// Per-node top-k co-occurring neighbors (by count, ties by index) with the
// counts; computed without materializing the full projection.
struct TopCooccurrence {
  std::vector<std::vector<Index>> neighbors;
  std::vector<std::vector<std::uint32_t>> counts;
  std::vector<double> weighted_degree;  // row sums of the co-occurrence
                                        // matrix including the diagonal
};

TopCooccurrence top_cooccurrence(const InteractionMatrix& matrix, Side side,
                                 Index k);

}  // namespace topocf
