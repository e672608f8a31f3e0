#pragma once

#include <utility>
#include <vector>

#include "topocf/types.hpp"

namespace topocf {

// Loss functions used by the trainers. Every function returns the scalar
// loss and, when gradient buffers are given, accumulates (+=) the analytic
// gradient with respect to its inputs. All gradients are checked against
// central finite differences in the test suite.

// Mean over triples of -ln sigmoid(pos - neg).
double loss_bpr(const Vec& pos_scores, const Vec& neg_scores,
                Vec* d_pos = nullptr, Vec* d_neg = nullptr);

// Same pairwise logistic form over projected same-side pairs (SVD-GCN UL/IL,
// minimization sign convention).
double loss_pairwise_logistic(const Vec& pos_scores, const Vec& neg_scores,
                              Vec* d_pos = nullptr, Vec* d_neg = nullptr);

// InfoNCE between two views of the same node set (rows aligned). The
// positive pair is included in the denominator; cosine similarities are
// rescaled by the temperature.
double loss_infonce(const Mat& view_a, const Mat& view_b, double temperature,
                    Mat* d_a = nullptr, Mat* d_b = nullptr);

// ln E[exp(-2 ||x_u / |x_u| - x_v / |x_v|||^2)] over the given row pairs.
double loss_uniformity(const Mat& rows,
                       const std::vector<std::pair<int, int>>& pairs,
                       Mat* d_rows = nullptr);

// Layer-weighted symmetric alignment, mean over pairs:
//   sum_l (w^l / 2) (||u0 - i_l||^2 + ||i0 - u_l||^2),  w^0 := 1.
// user_layer_rows[l] holds the pair's user row at layer l (same shape per
// layer); gradients accumulate into matching per-layer buffers.
double loss_alignment_graphau(const std::vector<Mat>& user_layer_rows,
                              const std::vector<Mat>& item_layer_rows,
                              double layer_weight,
                              std::vector<Mat>* d_user = nullptr,
                              std::vector<Mat>* d_item = nullptr);

// UltraGCN constraint + item losses over a gathered batch.
struct UltraBatch {
  Vec pos_scores;            // s(u, i) per positive pair
  Vec neg_scores;            // s(u, j) per sampled negative
  Vec pos_coef;              // beta(u, i)
  Vec neg_coef;              // beta(u, j)
  std::vector<Vec> item_scores;  // per positive: s(u, j') over topK(i)
  std::vector<Vec> item_coef;    // matching omega(i, j') weights
};

double loss_ultragcn(const UltraBatch& batch, double pos_weight,
                     double neg_weight, double item_weight,
                     UltraBatch* grads = nullptr);

// Mean positive-part margin on positive scores: max(0, margin - s).
double loss_hinge(const Vec& pos_scores, double margin = 1.0,
                  Vec* d = nullptr);

// Sample distance correlation (double-centered estimator). Degenerate
// (zero distance variance) inputs yield 0.
double distance_correlation(const Mat& x, const Mat& y, Mat* dx = nullptr,
                            Mat* dy = nullptr);

// Sum of dCor over all distinct intent-chunk pairs.
double loss_independence_dcor(const std::vector<Mat>& chunks,
                              std::vector<Mat>* grads = nullptr);

}  // namespace topocf
