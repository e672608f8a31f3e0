#include "topocf/linalg.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "topocf/error.hpp"

namespace topocf {

Mat spmm(const NormalizedAdjacency& adj, const Mat& x, Orientation orientation,
         const std::vector<std::uint8_t>* edge_mask) {
  const InteractionMatrix& m = adj.pattern();
  if (orientation == Orientation::kUserRows) {
    if (x.rows() != static_cast<Eigen::Index>(m.num_items())) {
      throw Error(ErrorCode::kDimensionMismatch, "spmm: expected item-indexed x");
    }
    Mat y = Mat::Zero(m.num_users(), x.cols());
    for (Index u = 0; u < m.num_users(); ++u) {
      const double su = adj.user_scale(u);
      for (EdgeId e = m.row_ptr()[u]; e < m.row_ptr()[u + 1]; ++e) {
        if (edge_mask && !(*edge_mask)[e]) continue;
        const Index i = m.items()[e];
        y.row(u) += (su * adj.item_scale(i)) * x.row(i);
      }
    }
    return y;
  }
  if (x.rows() != static_cast<Eigen::Index>(m.num_users())) {
    throw Error(ErrorCode::kDimensionMismatch, "spmm: expected user-indexed x");
  }
  Mat y = Mat::Zero(m.num_items(), x.cols());
  for (Index i = 0; i < m.num_items(); ++i) {
    const double si = adj.item_scale(i);
    for (EdgeId f = m.col_ptr()[i]; f < m.col_ptr()[i + 1]; ++f) {
      if (edge_mask && !(*edge_mask)[m.csc_edge_ids()[f]]) continue;
      const Index u = m.users()[f];
      y.row(i) += (si * adj.user_scale(u)) * x.row(u);
    }
  }
  return y;
}

Mat spmm(const ProjectedGraph& graph, const Mat& x) {
  if (x.rows() != static_cast<Eigen::Index>(graph.num_nodes)) {
    throw Error(ErrorCode::kDimensionMismatch, "spmm: projection size mismatch");
  }
  Mat y = Mat::Zero(graph.num_nodes, x.cols());
  for (Index v = 0; v < graph.num_nodes; ++v) {
    for (EdgeId e = graph.row_ptr[v]; e < graph.row_ptr[v + 1]; ++e) {
      y.row(v) += static_cast<double>(graph.counts[e]) * x.row(graph.neighbors[e]);
    }
  }
  return y;
}

namespace {

Mat apply_adjacency(const void* ctx, const Mat& x, bool transpose) {
  const auto* adj = static_cast<const NormalizedAdjacency*>(ctx);
  return spmm(*adj, x, transpose ? Orientation::kItemRows : Orientation::kUserRows);
}

Mat apply_dense(const void* ctx, const Mat& x, bool transpose) {
  const auto* a = static_cast<const Mat*>(ctx);
  if (transpose) return a->transpose() * x;
  return (*a) * x;
}

}  // namespace

LinearOperator adjacency_operator(const NormalizedAdjacency& adj) {
  LinearOperator op;
  op.rows = adj.pattern().num_users();
  op.cols = adj.pattern().num_items();
  op.apply = &apply_adjacency;
  op.ctx = &adj;
  return op;
}

SvdFactors truncated_svd(const LinearOperator& op, Index k, Index oversample,
                         Index power_iters, RngStream rng) {
  const Index min_dim = std::min(op.rows, op.cols);
  if (k < 1 || k > min_dim) {
    throw Error(ErrorCode::kRankOutOfRange,
                "svd rank " + std::to_string(k) + " out of range");
  }
  const Index sketch = std::min<Index>(k + oversample, min_dim);

  Mat omega(op.cols, sketch);
  for (Eigen::Index r = 0; r < omega.rows(); ++r) {
    for (Eigen::Index c = 0; c < omega.cols(); ++c) omega(r, c) = rng.normal();
  }

  Mat y = op.apply(op.ctx, omega, false);
  auto orthonormalize = [](Mat& m) {
    Eigen::HouseholderQR<Mat> qr(m);
    const Eigen::Index cols = m.cols();
    m = qr.householderQ() * Mat::Identity(m.rows(), cols);
  };
  orthonormalize(y);
  for (Index it = 0; it < power_iters; ++it) {
    Mat z = op.apply(op.ctx, y, true);
    orthonormalize(z);
    y = op.apply(op.ctx, z, false);
    orthonormalize(y);
  }

  // B = Q^T A computed as (A^T Q)^T, then a dense SVD of the small B.
  Mat bt = op.apply(op.ctx, y, true);  // cols x sketch
  Eigen::JacobiSVD<Mat> svd(bt, Eigen::ComputeThinU | Eigen::ComputeThinV);

  SvdFactors out;
  out.u = y * svd.matrixV().leftCols(k);
  out.singular = svd.singularValues().head(k);
  out.v = svd.matrixU().leftCols(k);
  return out;
}

SvdFactors truncated_svd(const NormalizedAdjacency& adj, Index k,
                         Index oversample, Index power_iters, RngStream rng) {
  return truncated_svd(adjacency_operator(adj), k, oversample, power_iters, rng);
}

SvdFactors truncated_svd(const Mat& dense, Index k, Index oversample,
                         Index power_iters, RngStream rng) {
  LinearOperator op;
  op.rows = static_cast<Index>(dense.rows());
  op.cols = static_cast<Index>(dense.cols());
  op.apply = &apply_dense;
  op.ctx = &dense;
  return truncated_svd(op, k, oversample, power_iters, rng);
}

double spectral_norm(const LinearOperator& op, int iters) {
  Mat x = Mat::Ones(op.cols, 1);
  x /= x.norm();
  double sigma = 0.0;
  for (int it = 0; it < iters; ++it) {
    Mat y = op.apply(op.ctx, x, false);
    Mat z = op.apply(op.ctx, y, true);
    const double n = z.norm();
    if (n == 0.0) return 0.0;
    x = z / n;
    sigma = std::sqrt(n);
  }
  return sigma;
}

}  // namespace topocf
