#include "topocf/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "topocf/error.hpp"

namespace topocf {

namespace {

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) {
    throw Error(ErrorCode::kNonFiniteValue, std::string(what) + ": non-finite input");
  }
}

double pairwise_logistic(const Vec& pos, const Vec& neg, Vec* d_pos, Vec* d_neg,
                         const char* what) {
  if (pos.size() != neg.size()) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(what) + ": size mismatch");
  }
  if (pos.size() == 0) return 0.0;
  check_finite(pos, what);
  check_finite(neg, what);
  const double inv_n = 1.0 / static_cast<double>(pos.size());
  double loss = 0.0;
  for (Eigen::Index k = 0; k < pos.size(); ++k) {
    const double diff = pos[k] - neg[k];
    loss += softplus(-diff);
    if (d_pos || d_neg) {
      const double g = -sigmoid(-diff) * inv_n;
      if (d_pos) (*d_pos)[k] += g;
      if (d_neg) (*d_neg)[k] -= g;
    }
  }
  return loss * inv_n;
}

}  // namespace

double loss_bpr(const Vec& pos_scores, const Vec& neg_scores, Vec* d_pos,
                Vec* d_neg) {
  return pairwise_logistic(pos_scores, neg_scores, d_pos, d_neg, "bpr");
}

double loss_pairwise_logistic(const Vec& pos_scores, const Vec& neg_scores,
                              Vec* d_pos, Vec* d_neg) {
  return pairwise_logistic(pos_scores, neg_scores, d_pos, d_neg, "pairwise");
}

double loss_infonce(const Mat& view_a, const Mat& view_b, double temperature,
                    Mat* d_a, Mat* d_b) {
  if (view_a.rows() != view_b.rows() || view_a.cols() != view_b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "infonce: view shape mismatch");
  }
  if (temperature <= 0.0) {
    throw Error(ErrorCode::kConfig, "infonce: temperature must be > 0");
  }
  const Eigen::Index n = view_a.rows();
  if (n < 2) throw Error(ErrorCode::kTooFewSamples, "infonce needs >= 2 nodes");

  Vec norm_a(n), norm_b(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    norm_a[r] = view_a.row(r).norm();
    norm_b[r] = view_b.row(r).norm();
    if (norm_a[r] == 0.0 || norm_b[r] == 0.0) {
      throw Error(ErrorCode::kNonFiniteValue, "infonce: zero-norm row");
    }
  }

  // s(u, v) = cos(a_u, b_v) / tau.
  Mat dots = view_a * view_b.transpose();
  Mat s(n, n);
  for (Eigen::Index u = 0; u < n; ++u) {
    for (Eigen::Index v = 0; v < n; ++v) {
      s(u, v) = dots(u, v) / (norm_a[u] * norm_b[v] * temperature);
    }
  }

  double loss = 0.0;
  Mat ds;  // dL/ds
  if (d_a || d_b) ds = Mat::Zero(n, n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Eigen::Index u = 0; u < n; ++u) {
    const double row_max = s.row(u).maxCoeff();
    double denom = 0.0;
    for (Eigen::Index v = 0; v < n; ++v) denom += std::exp(s(u, v) - row_max);
    loss += (std::log(denom) + row_max - s(u, u)) * inv_n;
    if (d_a || d_b) {
      for (Eigen::Index v = 0; v < n; ++v) {
        ds(u, v) = (std::exp(s(u, v) - row_max) / denom -
                    (u == v ? 1.0 : 0.0)) * inv_n;
      }
    }
  }

  if (d_a || d_b) {
    // d cos(a_u, b_v) / d a_u = b_v / (|a||b|) - cos * a_u / |a|^2.
    for (Eigen::Index u = 0; u < n; ++u) {
      for (Eigen::Index v = 0; v < n; ++v) {
        const double g = ds(u, v) / temperature;
        if (g == 0.0) continue;
        const double cos_uv = dots(u, v) / (norm_a[u] * norm_b[v]);
        if (d_a) {
          d_a->row(u) += g * (view_b.row(v) / (norm_a[u] * norm_b[v]) -
                              cos_uv * view_a.row(u) / (norm_a[u] * norm_a[u]));
        }
        if (d_b) {
          d_b->row(v) += g * (view_a.row(u) / (norm_a[u] * norm_b[v]) -
                              cos_uv * view_b.row(v) / (norm_b[v] * norm_b[v]));
        }
      }
    }
  }
  return loss;
}

double loss_uniformity(const Mat& rows,
                       const std::vector<std::pair<int, int>>& pairs,
                       Mat* d_rows) {
  if (pairs.empty()) {
    throw Error(ErrorCode::kTooFewSamples, "uniformity needs >= 1 pair");
  }
  const Eigen::Index n = rows.rows();
  Vec norms(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    norms[r] = rows.row(r).norm();
    if (norms[r] == 0.0) {
      throw Error(ErrorCode::kNonFiniteValue, "uniformity: zero-norm row");
    }
  }
  Mat unit = rows;
  for (Eigen::Index r = 0; r < n; ++r) unit.row(r) /= norms[r];

  const std::size_t p = pairs.size();
  std::vector<double> neg2d2(p);
  double max_term = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < p; ++k) {
    const double d2 =
        (unit.row(pairs[k].first) - unit.row(pairs[k].second)).squaredNorm();
    neg2d2[k] = -2.0 * d2;
    max_term = std::max(max_term, neg2d2[k]);
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < p; ++k) sum += std::exp(neg2d2[k] - max_term);
  const double loss = max_term + std::log(sum / static_cast<double>(p));

  if (d_rows) {
    Mat d_unit = Mat::Zero(n, rows.cols());
    for (std::size_t k = 0; k < p; ++k) {
      // dL/d(d2) = -2 softmax weight of the pair.
      const double w = std::exp(neg2d2[k] - max_term) / sum;
      const auto diff = unit.row(pairs[k].first) - unit.row(pairs[k].second);
      d_unit.row(pairs[k].first) += -4.0 * w * diff;
      d_unit.row(pairs[k].second) += 4.0 * w * diff;
    }
    // Through the row normalization: (g - (g . u) u) / |x|.
    for (Eigen::Index r = 0; r < n; ++r) {
      const double proj = d_unit.row(r).dot(unit.row(r));
      d_rows->row(r) += (d_unit.row(r) - proj * unit.row(r)) / norms[r];
    }
  }
  return loss;
}

double loss_alignment_graphau(const std::vector<Mat>& user_layer_rows,
                              const std::vector<Mat>& item_layer_rows,
                              double layer_weight, std::vector<Mat>* d_user,
                              std::vector<Mat>* d_item) {
  if (user_layer_rows.empty() || user_layer_rows.size() != item_layer_rows.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "alignment: layer list mismatch");
  }
  const Eigen::Index pairs = user_layer_rows[0].rows();
  if (pairs == 0) return 0.0;
  const double inv_p = 1.0 / static_cast<double>(pairs);

  double loss = 0.0;
  double w = 1.0;  // layer_weight^0 := 1 by convention, including weight 0
  for (std::size_t l = 0; l < user_layer_rows.size(); ++l) {
    const Mat& ul = user_layer_rows[l];
    const Mat& il = item_layer_rows[l];
    const Mat& u0 = user_layer_rows[0];
    const Mat& i0 = item_layer_rows[0];
    const Mat du = u0 - il;  // per-pair u^(0) - i^(l)
    const Mat di = i0 - ul;
    loss += 0.5 * w * inv_p * (du.squaredNorm() + di.squaredNorm());
    if (d_user && d_item) {
      (*d_user)[0] += w * inv_p * du;
      (*d_item)[l] -= w * inv_p * du;
      (*d_item)[0] += w * inv_p * di;
      (*d_user)[l] -= w * inv_p * di;
    }
    w *= layer_weight;
  }
  return loss;
}

double loss_ultragcn(const UltraBatch& batch, double pos_weight,
                     double neg_weight, double item_weight, UltraBatch* grads) {
  const Eigen::Index n_pos = batch.pos_scores.size();
  const Eigen::Index n_neg = batch.neg_scores.size();
  double loss = 0.0;
  if (n_pos > 0) {
    const double inv = 1.0 / static_cast<double>(n_pos);
    for (Eigen::Index k = 0; k < n_pos; ++k) {
      loss += pos_weight * batch.pos_coef[k] * softplus(-batch.pos_scores[k]) * inv;
      if (grads) {
        grads->pos_scores[k] +=
            pos_weight * batch.pos_coef[k] * (sigmoid(batch.pos_scores[k]) - 1.0) * inv;
      }
    }
  }
  if (n_neg > 0) {
    const double inv = 1.0 / static_cast<double>(n_neg);
    for (Eigen::Index k = 0; k < n_neg; ++k) {
      loss += neg_weight * batch.neg_coef[k] * softplus(batch.neg_scores[k]) * inv;
      if (grads) {
        grads->neg_scores[k] +=
            neg_weight * batch.neg_coef[k] * sigmoid(batch.neg_scores[k]) * inv;
      }
    }
  }
  if (item_weight != 0.0 && n_pos > 0) {
    const double inv = 1.0 / static_cast<double>(n_pos);
    for (std::size_t k = 0; k < batch.item_scores.size(); ++k) {
      const Vec& s = batch.item_scores[k];
      const Vec& c = batch.item_coef[k];
      for (Eigen::Index j = 0; j < s.size(); ++j) {
        loss += item_weight * c[j] * softplus(-s[j]) * inv;
        if (grads) {
          grads->item_scores[k][j] +=
              item_weight * c[j] * (sigmoid(s[j]) - 1.0) * inv;
        }
      }
    }
  }
  return loss;
}

double loss_hinge(const Vec& pos_scores, double margin, Vec* d) {
  if (pos_scores.size() == 0) return 0.0;
  check_finite(pos_scores, "hinge");
  const double inv_n = 1.0 / static_cast<double>(pos_scores.size());
  double loss = 0.0;
  for (Eigen::Index k = 0; k < pos_scores.size(); ++k) {
    const double v = margin - pos_scores[k];
    if (v > 0.0) {
      loss += v * inv_n;
      if (d) (*d)[k] -= inv_n;
    }
  }
  return loss;
}

namespace {

// Double-centered distance matrix and raw distances for one sample matrix.
struct CenteredDistances {
  Mat raw;       // a_jk = ||x_j - x_k||
  Mat centered;  // A
};

CenteredDistances center_distances(const Mat& x) {
  const Eigen::Index n = x.rows();
  CenteredDistances out;
  out.raw = Mat::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = j + 1; k < n; ++k) {
      const double d = (x.row(j) - x.row(k)).norm();
      out.raw(j, k) = d;
      out.raw(k, j) = d;
    }
  }
  const Vec row_mean = out.raw.rowwise().mean();
  const double grand = out.raw.mean();
  out.centered = out.raw;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      out.centered(j, k) -= row_mean[j] + row_mean[k] - grand;
    }
  }
  return out;
}

// Maps dL/d(raw distances) back to sample gradients.
void distance_backward(const Mat& x, const Mat& raw, const Mat& d_raw, Mat* dx) {
  const Eigen::Index n = x.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      if (j == k || raw(j, k) == 0.0) continue;
      // a(j, k) and a(k, j) carry the same distance; both entries' cograds
      // flow into x_j through (x_j - x_k) / a.
      const double g = d_raw(j, k) + d_raw(k, j);
      dx->row(j) += g * (x.row(j) - x.row(k)) / raw(j, k);
    }
  }
}

}  // namespace

double distance_correlation(const Mat& x, const Mat& y, Mat* dx, Mat* dy) {
  if (x.rows() != y.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "dcor: row count mismatch");
  }
  if (x.rows() < 4) {
    throw Error(ErrorCode::kTooFewSamples, "dcor needs >= 4 rows");
  }
  const Eigen::Index n = x.rows();
  const double n2 = static_cast<double>(n) * static_cast<double>(n);

  const CenteredDistances cx = center_distances(x);
  const CenteredDistances cy = center_distances(y);

  const double dcov2 = cx.centered.cwiseProduct(cy.centered).sum() / n2;
  const double dvar_x = cx.centered.cwiseProduct(cx.centered).sum() / n2;
  const double dvar_y = cy.centered.cwiseProduct(cy.centered).sum() / n2;

  if (dvar_x <= 0.0 || dvar_y <= 0.0) return 0.0;  // degenerate chunk
  const double denom = std::sqrt(dvar_x * dvar_y);
  const double r2 = dcov2 / denom;
  if (r2 <= 0.0) return 0.0;
  const double dcor = std::sqrt(r2);

  if (dx || dy) {
    // dL/d(dcov2), dL/d(dvar_x), dL/d(dvar_y) for L = dcor.
    const double d_r2 = 1.0 / (2.0 * dcor);
    const double d_dcov2 = d_r2 / denom;
    const double d_dvar_x = -d_r2 * r2 / (2.0 * dvar_x);
    const double d_dvar_y = -d_r2 * r2 / (2.0 * dvar_y);
    // Double centering is a self-adjoint projection and B, A are already
    // centered, so the cograd w.r.t. raw distances keeps the same form.
    if (dx) {
      const Mat d_raw_x = (d_dcov2 * cy.centered + 2.0 * d_dvar_x * cx.centered) / n2;
      distance_backward(x, cx.raw, d_raw_x, dx);
    }
    if (dy) {
      const Mat d_raw_y = (d_dcov2 * cx.centered + 2.0 * d_dvar_y * cy.centered) / n2;
      distance_backward(y, cy.raw, d_raw_y, dy);
    }
  }
  return dcor;
}

double loss_independence_dcor(const std::vector<Mat>& chunks,
                              std::vector<Mat>* grads) {
  if (chunks.size() < 2) {
    throw Error(ErrorCode::kTooFewSamples, "independence needs >= 2 intents");
  }
  double loss = 0.0;
  for (std::size_t t = 0; t < chunks.size(); ++t) {
    for (std::size_t s = t + 1; s < chunks.size(); ++s) {
      Mat* dt = grads ? &(*grads)[t] : nullptr;
      Mat* ds = grads ? &(*grads)[s] : nullptr;
      loss += distance_correlation(chunks[t], chunks[s], dt, ds);
    }
  }
  return loss;
}

}  // namespace topocf
