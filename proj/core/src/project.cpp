#include "topocf/project.hpp"

#include <algorithm>

#include "topocf/error.hpp"

#include "cooccurrence_scan.hpp"

namespace topocf {



bool ProjectedGraph::has_edge(Index v, Index w) const {
  const auto begin = neighbors.begin() + static_cast<std::ptrdiff_t>(row_ptr[v]);
  const auto end = neighbors.begin() + static_cast<std::ptrdiff_t>(row_ptr[v + 1]);
  return std::binary_search(begin, end, w);
}

std::uint32_t ProjectedGraph::count(Index v, Index w) const {
  const auto begin = neighbors.begin() + static_cast<std::ptrdiff_t>(row_ptr[v]);
  const auto end = neighbors.begin() + static_cast<std::ptrdiff_t>(row_ptr[v + 1]);
  const auto it = std::lower_bound(begin, end, w);
  if (it == end || *it != w) return 0;
  return counts[static_cast<std::size_t>(it - neighbors.begin())];
}

ProjectedGraph project(const InteractionMatrix& matrix, Side side) {
  ProjectedGraph g;
  g.side = side;
  g.num_nodes = matrix.side_count(side);
  g.row_ptr.assign(g.num_nodes + 1, 0);
  g.self_counts.resize(g.num_nodes);

  std::vector<std::uint32_t> scratch(g.num_nodes, 0);
  std::vector<Index> touched;
  // First pass sizes the rows, second fills them.
  for (Index v = 0; v < g.num_nodes; ++v) {
    g.self_counts[v] = matrix.degree(side, v);
    std::uint64_t row = 0;
    detail::scan_cooccurrence(matrix, side, v, scratch, touched,
                          [&](Index, std::uint32_t) { ++row; });
    g.row_ptr[v + 1] = g.row_ptr[v] + row;
  }
  g.neighbors.resize(g.row_ptr[g.num_nodes]);
  g.counts.resize(g.row_ptr[g.num_nodes]);
  for (Index v = 0; v < g.num_nodes; ++v) {
    EdgeId slot = g.row_ptr[v];
    detail::scan_cooccurrence(matrix, side, v, scratch, touched,
                          [&](Index w, std::uint32_t c) {
                            g.neighbors[slot] = w;
                            g.counts[slot] = c;
                            ++slot;
                          });
  }
  return g;
}

TopCooccurrence top_cooccurrence(const InteractionMatrix& matrix, Side side,
                                 Index k) {
  const Index n = matrix.side_count(side);
  TopCooccurrence top;
  top.neighbors.resize(n);
  top.counts.resize(n);
  top.weighted_degree.assign(n, 0.0);

  std::vector<std::uint32_t> scratch(n, 0);
  std::vector<Index> touched;
  std::vector<std::pair<std::uint32_t, Index>> row;
  for (Index v = 0; v < n; ++v) {
    row.clear();
    double wdeg = static_cast<double>(matrix.degree(side, v));  // diagonal
    detail::scan_cooccurrence(matrix, side, v, scratch, touched,
                          [&](Index w, std::uint32_t c) {
                            wdeg += c;
                            row.emplace_back(c, w);
                          });
    top.weighted_degree[v] = wdeg;
    const std::size_t keep = std::min<std::size_t>(k, row.size());
    std::partial_sort(row.begin(), row.begin() + keep, row.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return a.second < b.second;
                      });
    top.neighbors[v].reserve(keep);
    top.counts[v].reserve(keep);
    for (std::size_t j = 0; j < keep; ++j) {
      top.neighbors[v].push_back(row[j].second);
      top.counts[v].push_back(row[j].first);
    }
  }
  return top;
}

}  // namespace topocf
