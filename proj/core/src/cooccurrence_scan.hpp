#pragma once

#include <algorithm>
#include <vector>

#include "topocf/graph.hpp"

namespace topocf::detail {

// Visits every same-side co-occurring node of v exactly once, in increasing
// index order, calling fn(w, |N_v intersect N_w|). `scratch` must be a
// zero-filled vector of side size; it is restored before returning.
template <typename Fn>
void scan_cooccurrence(const InteractionMatrix& m, Side side, Index v,
                       std::vector<std::uint32_t>& scratch,
                       std::vector<Index>& touched, Fn&& fn) {
  touched.clear();
  if (side == Side::kUser) {
    for (EdgeId e = m.row_ptr()[v]; e < m.row_ptr()[v + 1]; ++e) {
      const Index i = m.items()[e];
      for (EdgeId f = m.col_ptr()[i]; f < m.col_ptr()[i + 1]; ++f) {
        const Index w = m.users()[f];
        if (w == v) continue;
        if (scratch[w]++ == 0) touched.push_back(w);
      }
    }
  } else {
    for (EdgeId e = m.col_ptr()[v]; e < m.col_ptr()[v + 1]; ++e) {
      const Index u = m.users()[e];
      for (EdgeId f = m.row_ptr()[u]; f < m.row_ptr()[u + 1]; ++f) {
        const Index w = m.items()[f];
        if (w == v) continue;
        if (scratch[w]++ == 0) touched.push_back(w);
      }
    }
  }
  std::sort(touched.begin(), touched.end());
  for (Index w : touched) {
    fn(w, scratch[w]);
    scratch[w] = 0;
  }
}

}  // namespace topocf::detail
