#include "topocf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "topocf/error.hpp"

namespace topocf {

Metrics evaluate_ranking(const ScoreFn& score, const InteractionMatrix& relevant,
                         const InteractionMatrix& mask,
                         const InteractionMatrix* extra_mask, int k) {
  if (k < 1) throw Error(ErrorCode::kConfig, "eval K must be >= 1");
  const Index num_users = relevant.num_users();
  const Index num_items = relevant.num_items();

  Metrics out;
  std::vector<Index> order(num_items);
  for (Index u = 0; u < num_users; ++u) {
    const EdgeId rel_begin = relevant.row_ptr()[u];
    const EdgeId rel_end = relevant.row_ptr()[u + 1];
    if (rel_begin == rel_end) continue;  // no relevant items, not evaluable

    Vec scores = score(u);
    if (scores.size() != static_cast<Eigen::Index>(num_items)) {
      throw Error(ErrorCode::kDimensionMismatch, "score vector size mismatch");
    }
    for (EdgeId e = mask.row_ptr()[u]; e < mask.row_ptr()[u + 1]; ++e) {
      scores[mask.items()[e]] = -std::numeric_limits<double>::infinity();
    }
    if (extra_mask) {
      for (EdgeId e = extra_mask->row_ptr()[u]; e < extra_mask->row_ptr()[u + 1]; ++e) {
        scores[extra_mask->items()[e]] = -std::numeric_limits<double>::infinity();
      }
    }

    const int top = std::min<int>(k, static_cast<int>(num_items));
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + top, order.end(),
                      [&](Index a, Index b) {
                        if (scores[a] != scores[b]) return scores[a] > scores[b];
                        return a < b;
                      });

    const std::size_t num_relevant = static_cast<std::size_t>(rel_end - rel_begin);
    std::size_t hits = 0;
    double dcg = 0.0;
    for (int r = 0; r < top; ++r) {
      if (relevant.has_edge(u, order[r])) {
        ++hits;
        dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
      }
    }
    double idcg = 0.0;
    const std::size_t ideal = std::min<std::size_t>(num_relevant, top);
    for (std::size_t r = 0; r < ideal; ++r) {
      idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }

    out.users.push_back(u);
    out.per_user_recall.push_back(static_cast<double>(hits) /
                                  static_cast<double>(num_relevant));
    out.per_user_ndcg.push_back(idcg > 0.0 ? dcg / idcg : 0.0);
  }

  if (!out.users.empty()) {
    out.recall = std::accumulate(out.per_user_recall.begin(),
                                 out.per_user_recall.end(), 0.0) /
                 static_cast<double>(out.users.size());
    out.ndcg = std::accumulate(out.per_user_ndcg.begin(),
                               out.per_user_ndcg.end(), 0.0) /
               static_cast<double>(out.users.size());
  }
  return out;
}

Metrics evaluate_test(const ScoreFn& score, const SplitDataset& splits, int k,
                      bool mask_validation) {
  return evaluate_ranking(score, splits.test, splits.train,
                          mask_validation ? &splits.validation : nullptr, k);
}

Vec popularity_scores(const InteractionMatrix& train) {
  Vec scores(train.num_items());
  for (Index i = 0; i < train.num_items(); ++i) {
    scores[i] = static_cast<double>(train.item_degree(i));
  }
  return scores;
}

}  // namespace topocf
