#pragma once

#include <cstdint>
#include <vector>

#include "topocf/normalize.hpp"
#include "topocf/project.hpp"
#include "topocf/rng.hpp"
#include "topocf/types.hpp"

namespace topocf {

enum class Orientation { kUserRows, kItemRows };

// Sparse-dense product against a normalized bipartite adjacency.
// kUserRows: Y = A_tilde * X      (X is item-indexed,  Y is user-indexed)
// kItemRows: Y = A_tilde^T * X    (X is user-indexed,  Y is item-indexed)
// `edge_mask`, when given, is aligned with canonical edge ids and zeroes out
// dropped edges without renormalizing.
Mat spmm(const NormalizedAdjacency& adj, const Mat& x, Orientation orientation,
         const std::vector<std::uint8_t>* edge_mask = nullptr);

// Product against the weighted co-occurrence counts of a projection.
Mat spmm(const ProjectedGraph& graph, const Mat& x);

struct SvdFactors {
  Mat u;        // rows x k, orthonormal columns
  Vec singular; // k, descending
  Mat v;        // cols x k, orthonormal columns

  Index rank() const { return static_cast<Index>(singular.size()); }
};

// Callback view of the operand: y = A x and y = A^T x.
struct LinearOperator {
  Index rows = 0;
  Index cols = 0;
  // Applies A to each column of X.
  Mat (*apply)(const void* ctx, const Mat& x, bool transpose) = nullptr;
  const void* ctx = nullptr;
};

LinearOperator adjacency_operator(const NormalizedAdjacency& adj);

// Randomized truncated SVD (Gaussian sketch, power iterations with QR
// re-orthonormalization). Exact to ~1e-6 Frobenius when rank(A) <= k.
SvdFactors truncated_svd(const LinearOperator& op, Index k,
                         Index oversample, Index power_iters, RngStream rng);

SvdFactors truncated_svd(const NormalizedAdjacency& adj, Index k,
                         Index oversample, Index power_iters, RngStream rng);

SvdFactors truncated_svd(const Mat& dense, Index k, Index oversample,
                         Index power_iters, RngStream rng);

// Largest singular value via power iteration on A^T A.
double spectral_norm(const LinearOperator& op, int iters = 200);

}  // namespace topocf
