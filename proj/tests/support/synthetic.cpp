#include "support/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace topocf::testing {

InteractionMatrix from_pairs(Index users, Index items,
                             std::vector<std::pair<Index, Index>> pairs) {
  return InteractionMatrix::from_edges(users, items, std::move(pairs));
}

InteractionMatrix random_bipartite(Index users, Index items, double density,
                                   RngStream& rng) {
  std::vector<std::pair<Index, Index>> pairs;
  for (Index u = 0; u < users; ++u) {
    for (Index i = 0; i < items; ++i) {
      if (rng.next_double() < density) pairs.emplace_back(u, i);
    }
  }
  return from_pairs(users, items, std::move(pairs));
}

InteractionMatrix random_bipartite_connected(Index users, Index items,
                                             double density, RngStream& rng) {
  std::set<std::pair<Index, Index>> pairs;
  for (Index u = 0; u < users; ++u) {
    for (Index i = 0; i < items; ++i) {
      if (rng.next_double() < density) pairs.emplace(u, i);
    }
  }
  std::vector<Index> udeg(users, 0), ideg(items, 0);
  for (const auto& [u, i] : pairs) {
    ++udeg[u];
    ++ideg[i];
  }
  for (Index u = 0; u < users; ++u) {
    if (udeg[u] == 0) {
      const Index i = static_cast<Index>(rng.below(items));
      if (pairs.emplace(u, i).second) ++ideg[i];
    }
  }
  for (Index i = 0; i < items; ++i) {
    if (ideg[i] == 0) {
      pairs.emplace(static_cast<Index>(rng.below(users)), i);
    }
  }
  return from_pairs(users, items, {pairs.begin(), pairs.end()});
}

InteractionMatrix scale_free_bipartite(Index users, Index items, EdgeId edges,
                                       RngStream& rng) {
  std::vector<double> iweight(items, 1.0);
  double itotal = items;
  std::set<std::pair<Index, Index>> pairs;
  EdgeId placed = 0;
  std::uint64_t guard = 0;
  while (placed < edges && guard < edges * 50ULL) {
    ++guard;
    const Index u = static_cast<Index>(rng.below(users));
    // Item drawn proportionally to degree + 1.
    double pick = rng.next_double() * itotal;
    Index i = 0;
    for (; i + 1 < items; ++i) {
      pick -= iweight[i];
      if (pick <= 0.0) break;
    }
    if (pairs.emplace(u, i).second) {
      iweight[i] += 1.0;
      itotal += 1.0;
      ++placed;
    }
  }
  // Every node gets at least one edge so normalization stays defined.
  std::vector<Index> udeg(users, 0), ideg(items, 0);
  for (const auto& [u, i] : pairs) {
    ++udeg[u];
    ++ideg[i];
  }
  for (Index u = 0; u < users; ++u) {
    if (udeg[u] == 0) {
      const Index i = static_cast<Index>(rng.below(items));
      if (pairs.emplace(u, i).second) ++ideg[i];
    }
  }
  for (Index i = 0; i < items; ++i) {
    if (ideg[i] == 0) pairs.emplace(static_cast<Index>(rng.below(users)), i);
  }
  return from_pairs(users, items, {pairs.begin(), pairs.end()});
}

InteractionMatrix planted_two_block(Index users, Index items, double p_in,
                                    double p_out, RngStream& rng) {
  std::vector<std::pair<Index, Index>> pairs;
  const Index uh = users / 2;
  const Index ih = items / 2;
  for (Index u = 0; u < users; ++u) {
    for (Index i = 0; i < items; ++i) {
      const bool same_block = (u < uh) == (i < ih);
      if (rng.next_double() < (same_block ? p_in : p_out)) pairs.emplace_back(u, i);
    }
  }
  return from_pairs(users, items, std::move(pairs));
}

std::vector<Index> power_law_degrees(double theta, Index d_min, std::size_t n,
                                     RngStream& rng) {
  std::vector<Index> out;
  out.reserve(n);
  const double shift = static_cast<double>(d_min) - 0.5;
  for (std::size_t k = 0; k < n; ++k) {
    double u = rng.next_double();
    while (u >= 1.0) u = rng.next_double();
    const double d = shift * std::pow(1.0 - u, -1.0 / (theta - 1.0)) + 0.5;
    out.push_back(static_cast<Index>(std::min(d, 1e9)));
  }
  return out;
}

Mat random_mat(Index rows, Index cols, RngStream& rng, double scale) {
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = scale * rng.normal();
  }
  return m;
}

}  // namespace topocf::testing
