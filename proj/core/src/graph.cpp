#include "topocf/graph.hpp"

#include <algorithm>
#include <numeric>

namespace topocf {

InteractionMatrix InteractionMatrix::from_edges(
    Index num_users, Index num_items,
    std::vector<std::pair<Index, Index>> edges,
    const std::vector<std::int64_t>* timestamps) {
  InteractionMatrix m;
  m.num_users_ = num_users;
  m.num_items_ = num_items;

  const bool with_ts = timestamps != nullptr && !timestamps->empty();
  std::vector<std::size_t> order(edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (edges[a].first != edges[b].first) return edges[a].first < edges[b].first;
    return edges[a].second < edges[b].second;
  });

  m.row_ptr_.assign(num_users + 1, 0);
  m.col_idx_.reserve(edges.size());
  if (with_ts) m.timestamps_.reserve(edges.size());
  Index prev_u = 0;
  Index prev_i = 0;
  bool first = true;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto [u, i] = edges[order[k]];
    if (u >= num_users || i >= num_items) {
      throw Error(ErrorCode::kIndexOutOfRange, "edge index out of range");
    }
    if (!first && u == prev_u && i == prev_i) {
      // Collapse duplicate edge, keeping the earliest timestamp.
      if (with_ts && (*timestamps)[order[k]] < m.timestamps_.back()) {
        m.timestamps_.back() = (*timestamps)[order[k]];
      }
      continue;
    }
    m.col_idx_.push_back(i);
    if (with_ts) m.timestamps_.push_back((*timestamps)[order[k]]);
    ++m.row_ptr_[u + 1];
    prev_u = u;
    prev_i = i;
    first = false;
  }
  for (Index u = 0; u < num_users; ++u) m.row_ptr_[u + 1] += m.row_ptr_[u];

  // Column adjacency from the row adjacency.
  m.col_ptr_.assign(num_items + 1, 0);
  for (Index i : m.col_idx_) ++m.col_ptr_[i + 1];
  for (Index i = 0; i < num_items; ++i) m.col_ptr_[i + 1] += m.col_ptr_[i];
  m.row_idx_.resize(m.col_idx_.size());
  m.csc_edge_.resize(m.col_idx_.size());
  std::vector<EdgeId> cursor(m.col_ptr_.begin(), m.col_ptr_.end() - 1);
  for (Index u = 0; u < num_users; ++u) {
    for (EdgeId e = m.row_ptr_[u]; e < m.row_ptr_[u + 1]; ++e) {
      const Index i = m.col_idx_[e];
      const EdgeId slot = cursor[i]++;
      m.row_idx_[slot] = u;
      m.csc_edge_[slot] = e;
    }
  }
  return m;
}

bool InteractionMatrix::has_edge(Index u, Index i) const {
  const auto begin = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[u]);
  const auto end = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[u + 1]);
  return std::binary_search(begin, end, i);
}

std::vector<std::pair<Index, Index>> InteractionMatrix::edge_list() const {
  std::vector<std::pair<Index, Index>> edges;
  edges.reserve(col_idx_.size());
  for (Index u = 0; u < num_users_; ++u) {
    for (EdgeId e = row_ptr_[u]; e < row_ptr_[u + 1]; ++e) {
      edges.emplace_back(u, col_idx_[e]);
    }
  }
  return edges;
}

bool InteractionMatrix::operator==(const InteractionMatrix& other) const {
  return num_users_ == other.num_users_ && num_items_ == other.num_items_ &&
         row_ptr_ == other.row_ptr_ && col_idx_ == other.col_idx_ &&
         timestamps_ == other.timestamps_;
}

InteractionMatrix build_matrix(const InteractionSet& set, IdMaps* maps) {
  if (set.records.empty()) {
    throw Error(ErrorCode::kZeroRecords, "cannot build matrix from empty set");
  }
  IdMaps local;
  std::vector<std::pair<Index, Index>> edges;
  edges.reserve(set.records.size());
  const bool with_ts = set.has_timestamps();
  std::vector<std::int64_t> ts;
  if (with_ts) ts.reserve(set.records.size());
  for (const InteractionRecord& rec : set.records) {
    auto [uit, unew] = local.user_index.emplace(
        rec.user_key, static_cast<Index>(local.user_keys.size()));
    if (unew) local.user_keys.push_back(rec.user_key);
    auto [iit, inew] = local.item_index.emplace(
        rec.item_key, static_cast<Index>(local.item_keys.size()));
    if (inew) local.item_keys.push_back(rec.item_key);
    edges.emplace_back(uit->second, iit->second);
    if (with_ts) ts.push_back(*rec.timestamp);
  }
  InteractionMatrix m = InteractionMatrix::from_edges(
      static_cast<Index>(local.user_keys.size()),
      static_cast<Index>(local.item_keys.size()), std::move(edges),
      with_ts ? &ts : nullptr);
  if (maps) *maps = std::move(local);
  return m;
}

Subgraph induce_subgraph(const InteractionMatrix& matrix,
                         const std::vector<Index>& users,
                         const std::vector<Index>& items) {
  constexpr Index kDropped = static_cast<Index>(-1);
  std::vector<Index> user_new(matrix.num_users(), kDropped);
  std::vector<Index> item_new(matrix.num_items(), kDropped);
  for (std::size_t n = 0; n < users.size(); ++n) user_new[users[n]] = static_cast<Index>(n);
  for (std::size_t n = 0; n < items.size(); ++n) item_new[items[n]] = static_cast<Index>(n);

  const bool with_ts = matrix.has_timestamps();
  std::vector<std::pair<Index, Index>> edges;
  std::vector<std::int64_t> ts;
  for (Index u = 0; u < matrix.num_users(); ++u) {
    if (user_new[u] == kDropped) continue;
    for (EdgeId e = matrix.row_ptr()[u]; e < matrix.row_ptr()[u + 1]; ++e) {
      const Index i = matrix.items()[e];
      if (item_new[i] == kDropped) continue;
      edges.emplace_back(user_new[u], item_new[i]);
      if (with_ts) ts.push_back(matrix.timestamps()[e]);
    }
  }
  Subgraph out;
  out.matrix = InteractionMatrix::from_edges(
      static_cast<Index>(users.size()), static_cast<Index>(items.size()),
      std::move(edges), with_ts ? &ts : nullptr);
  out.kept_users = users;
  out.kept_items = items;
  return out;
}

Subgraph prune_isolates(const InteractionMatrix& matrix) {
  std::vector<Index> users;
  std::vector<Index> items;
  for (Index u = 0; u < matrix.num_users(); ++u) {
    if (matrix.user_degree(u) > 0) users.push_back(u);
  }
  for (Index i = 0; i < matrix.num_items(); ++i) {
    if (matrix.item_degree(i) > 0) items.push_back(i);
  }
  return induce_subgraph(matrix, users, items);
}

Subgraph kcore_filter(const InteractionMatrix& matrix, Index k) {
  if (k < 1) {
    throw Error(ErrorCode::kConfig, "k-core depth must be >= 1");
  }
  std::vector<std::int64_t> udeg(matrix.num_users());
  std::vector<std::int64_t> ideg(matrix.num_items());
  std::vector<bool> ualive(matrix.num_users(), true);
  std::vector<bool> ialive(matrix.num_items(), true);
  for (Index u = 0; u < matrix.num_users(); ++u) udeg[u] = matrix.user_degree(u);
  for (Index i = 0; i < matrix.num_items(); ++i) ideg[i] = matrix.item_degree(i);

  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<Index> drop_users;
    std::vector<Index> drop_items;
    for (Index u = 0; u < matrix.num_users(); ++u) {
      if (ualive[u] && udeg[u] < static_cast<std::int64_t>(k)) drop_users.push_back(u);
    }
    for (Index i = 0; i < matrix.num_items(); ++i) {
      if (ialive[i] && ideg[i] < static_cast<std::int64_t>(k)) drop_items.push_back(i);
    }
    // Simultaneous removal: degree updates land after the round's marks.
    for (Index u : drop_users) {
      ualive[u] = false;
      for (EdgeId e = matrix.row_ptr()[u]; e < matrix.row_ptr()[u + 1]; ++e) {
        const Index i = matrix.items()[e];
        if (ialive[i]) --ideg[i];
      }
      changed = true;
    }
    for (Index i : drop_items) {
      ialive[i] = false;
      for (EdgeId e = matrix.col_ptr()[i]; e < matrix.col_ptr()[i + 1]; ++e) {
        const Index u = matrix.users()[e];
        if (ualive[u]) --udeg[u];
      }
      changed = true;
    }
  }

  std::vector<Index> users;
  std::vector<Index> items;
  for (Index u = 0; u < matrix.num_users(); ++u) {
    if (ualive[u]) users.push_back(u);
  }
  for (Index i = 0; i < matrix.num_items(); ++i) {
    if (ialive[i]) items.push_back(i);
  }
  return induce_subgraph(matrix, users, items);
}

std::vector<Index> neighborhood(const InteractionMatrix& matrix, Side side,
                                Index node, int order) {
  if (node >= matrix.side_count(side)) {
    throw Error(ErrorCode::kIndexOutOfRange, "node index out of range");
  }
  std::vector<Index> out;
  if (order == 1) {
    if (side == Side::kUser) {
      for (EdgeId e = matrix.row_ptr()[node]; e < matrix.row_ptr()[node + 1]; ++e) {
        out.push_back(matrix.items()[e]);
      }
    } else {
      for (EdgeId e = matrix.col_ptr()[node]; e < matrix.col_ptr()[node + 1]; ++e) {
        out.push_back(matrix.users()[e]);
      }
    }
    return out;
  }
  if (order != 2) {
    throw Error(ErrorCode::kConfig, "neighborhood order must be 1 or 2");
  }
  std::vector<bool> seen(matrix.side_count(side), false);
  seen[node] = true;
  if (side == Side::kUser) {
    for (EdgeId e = matrix.row_ptr()[node]; e < matrix.row_ptr()[node + 1]; ++e) {
      const Index i = matrix.items()[e];
      for (EdgeId f = matrix.col_ptr()[i]; f < matrix.col_ptr()[i + 1]; ++f) {
        const Index w = matrix.users()[f];
        if (!seen[w]) {
          seen[w] = true;
          out.push_back(w);
        }
      }
    }
  } else {
    for (EdgeId e = matrix.col_ptr()[node]; e < matrix.col_ptr()[node + 1]; ++e) {
      const Index u = matrix.users()[e];
      for (EdgeId f = matrix.row_ptr()[u]; f < matrix.row_ptr()[u + 1]; ++f) {
        const Index w = matrix.items()[f];
        if (!seen[w]) {
          seen[w] = true;
          out.push_back(w);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace topocf
