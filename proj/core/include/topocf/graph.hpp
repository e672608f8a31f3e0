#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "topocf/error.hpp"
#include "topocf/interactions.hpp"
#include "topocf/types.hpp"

namespace topocf {

// Sparse binary user-item interaction matrix with dual row/column traversal.
// Row adjacency (CSR over users) is the canonical edge order; the column
// adjacency mirrors the same edge set and stores, per slot, the id of the
// corresponding CSR edge so that edge attributes are shared.
class InteractionMatrix {
 public:
  InteractionMatrix() = default;

  // Edges as (user, item) pairs; duplicates are collapsed. Timestamps, when
  // given, must be aligned with `edges`.
  static InteractionMatrix from_edges(
      Index num_users, Index num_items,
      std::vector<std::pair<Index, Index>> edges,
      const std::vector<std::int64_t>* timestamps = nullptr);

  Index num_users() const { return num_users_; }
  Index num_items() const { return num_items_; }
  EdgeId num_edges() const { return static_cast<EdgeId>(col_idx_.size()); }

  bool has_timestamps() const { return !timestamps_.empty(); }

  // CSR over users: items of user u are items()[row_ptr()[u] .. row_ptr()[u+1]).
  const std::vector<EdgeId>& row_ptr() const { return row_ptr_; }
  const std::vector<Index>& items() const { return col_idx_; }

  // CSC over items: users of item i are users()[col_ptr()[i] .. col_ptr()[i+1]).
  const std::vector<EdgeId>& col_ptr() const { return col_ptr_; }
  const std::vector<Index>& users() const { return row_idx_; }
  // CSR edge id for each CSC slot.
  const std::vector<EdgeId>& csc_edge_ids() const { return csc_edge_; }

  const std::vector<std::int64_t>& timestamps() const { return timestamps_; }

  Index user_degree(Index u) const {
    return static_cast<Index>(row_ptr_[u + 1] - row_ptr_[u]);
  }
  Index item_degree(Index i) const {
    return static_cast<Index>(col_ptr_[i + 1] - col_ptr_[i]);
  }
  Index degree(Side side, Index v) const {
    return side == Side::kUser ? user_degree(v) : item_degree(v);
  }
  Index side_count(Side side) const {
    return side == Side::kUser ? num_users_ : num_items_;
  }

  bool has_edge(Index u, Index i) const;

  // All edges in canonical (CSR) order.
  std::vector<std::pair<Index, Index>> edge_list() const;

  bool operator==(const InteractionMatrix& other) const;

 private:
  Index num_users_ = 0;
  Index num_items_ = 0;
  std::vector<EdgeId> row_ptr_;
  std::vector<Index> col_idx_;
  std::vector<EdgeId> col_ptr_;
  std::vector<Index> row_idx_;
  std::vector<EdgeId> csc_edge_;
  std::vector<std::int64_t> timestamps_;
};

// Result of an operation that keeps a subset of nodes: the re-densified
// matrix plus, per side, the old index of each kept node in new order.
struct Subgraph {
  InteractionMatrix matrix;
  std::vector<Index> kept_users;
  std::vector<Index> kept_items;
};

InteractionMatrix build_matrix(const InteractionSet& set, IdMaps* maps);

// Iterative user-item k-core: simultaneously removes every user and item of
// degree < k per round until a fixed point. Nodes at exactly k survive. An
// empty result is valid and left to the caller to flag.
Subgraph kcore_filter(const InteractionMatrix& matrix, Index k);

// Drops zero-degree nodes and re-densifies indices.
Subgraph prune_isolates(const InteractionMatrix& matrix);

// Restriction to explicit node subsets (old indices, any order preserved).
Subgraph induce_subgraph(const InteractionMatrix& matrix,
                         const std::vector<Index>& users,
                         const std::vector<Index>& items);

// Order-1: opposite-partition neighbors. Order-2: same-partition nodes
// sharing at least one neighbor, excluding the node itself.
std::vector<Index> neighborhood(const InteractionMatrix& matrix, Side side,
                                Index node, int order);

}  // namespace topocf
