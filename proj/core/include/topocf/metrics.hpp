#pragma once

#include <functional>
#include <vector>

#include "topocf/graph.hpp"
#include "topocf/split.hpp"
#include "topocf/types.hpp"

namespace topocf {

struct Metrics {
  double recall = 0.0;  // mean over evaluable users
  double ndcg = 0.0;
  std::vector<Index> users;  // evaluated users (>= 1 relevant item)
  std::vector<double> per_user_recall;
  std::vector<double> per_user_ndcg;
};

// Full item-score vector for one user; masked items are handled here.
using ScoreFn = std::function<Vec(Index user)>;

// Ranks all items per user with the masked sets forced below every candidate,
// then computes Recall@K = hits / |relevant| and binary-gain NDCG@K with
// log2 discounts. Ties break by item index for determinism.
Metrics evaluate_ranking(const ScoreFn& score, const InteractionMatrix& relevant,
                         const InteractionMatrix& mask,
                         const InteractionMatrix* extra_mask, int k);

// Convenience wrapper: test evaluation with train (+ validation) masked.
Metrics evaluate_test(const ScoreFn& score, const SplitDataset& splits, int k,
                      bool mask_validation = true);

// Item popularity scores (train degrees); the non-personalized baseline.
Vec popularity_scores(const InteractionMatrix& train);

}  // namespace topocf
