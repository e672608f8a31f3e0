#pragma once

#include <memory>
#include <vector>

#include "topocf/graph.hpp"

namespace topocf {

// Symmetrically normalized adjacency over the sparsity pattern of an
// InteractionMatrix: w_ui = 1 / (sqrt(deg u) * sqrt(deg i)) per stored edge.
// Weights are derived from the endpoint degree scalings, so the structure
// shares the pattern with its source matrix.
class NormalizedAdjacency {
 public:
  NormalizedAdjacency() = default;

  const InteractionMatrix& pattern() const { return *pattern_; }
  std::shared_ptr<const InteractionMatrix> pattern_ptr() const { return pattern_; }

  double user_scale(Index u) const { return inv_sqrt_user_[u]; }
  double item_scale(Index i) const { return inv_sqrt_item_[i]; }
  double weight(Index u, Index i) const {
    return inv_sqrt_user_[u] * inv_sqrt_item_[i];
  }

  const std::vector<double>& user_scales() const { return inv_sqrt_user_; }
  const std::vector<double>& item_scales() const { return inv_sqrt_item_; }

  friend NormalizedAdjacency symmetric_normalize(
      std::shared_ptr<const InteractionMatrix> matrix, bool allow_isolates);
  friend NormalizedAdjacency shifted_normalize(
      std::shared_ptr<const InteractionMatrix> matrix, double shift);

 private:
  std::shared_ptr<const InteractionMatrix> pattern_;
  std::vector<double> inv_sqrt_user_;
  std::vector<double> inv_sqrt_item_;
};

// Throws ZeroDegreeNode when an isolate survives, unless `allow_isolates`
// (isolated nodes then carry scale 0 and touch no stored edge).
NormalizedAdjacency symmetric_normalize(
    std::shared_ptr<const InteractionMatrix> matrix,
    bool allow_isolates = false);

NormalizedAdjacency symmetric_normalize(const InteractionMatrix& matrix,
                                        bool allow_isolates = false);

// Degree-shifted variant w_ui = 1 / (sqrt(deg u + shift) * sqrt(deg i + shift)),
// defined for every node when shift > 0.
NormalizedAdjacency shifted_normalize(
    std::shared_ptr<const InteractionMatrix> matrix, double shift);

}  // namespace topocf
