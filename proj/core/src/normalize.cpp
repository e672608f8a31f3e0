#include "topocf/normalize.hpp"

#include <cmath>

namespace topocf {

NormalizedAdjacency symmetric_normalize(
    std::shared_ptr<const InteractionMatrix> matrix, bool allow_isolates) {
  NormalizedAdjacency adj;
  adj.pattern_ = std::move(matrix);
  const InteractionMatrix& m = *adj.pattern_;
  adj.inv_sqrt_user_.resize(m.num_users());
  adj.inv_sqrt_item_.resize(m.num_items());
  for (Index u = 0; u < m.num_users(); ++u) {
    const Index d = m.user_degree(u);
    if (d == 0) {
      if (!allow_isolates) {
        throw Error(ErrorCode::kZeroDegreeNode,
                    "zero-degree user " + std::to_string(u));
      }
      adj.inv_sqrt_user_[u] = 0.0;
    } else {
      adj.inv_sqrt_user_[u] = 1.0 / std::sqrt(static_cast<double>(d));
    }
  }
  for (Index i = 0; i < m.num_items(); ++i) {
    const Index d = m.item_degree(i);
    if (d == 0) {
      if (!allow_isolates) {
        throw Error(ErrorCode::kZeroDegreeNode,
                    "zero-degree item " + std::to_string(i));
      }
      adj.inv_sqrt_item_[i] = 0.0;
    } else {
      adj.inv_sqrt_item_[i] = 1.0 / std::sqrt(static_cast<double>(d));
    }
  }
  return adj;
}

NormalizedAdjacency symmetric_normalize(const InteractionMatrix& matrix,
                                        bool allow_isolates) {
  return symmetric_normalize(
      std::make_shared<InteractionMatrix>(matrix), allow_isolates);
}

NormalizedAdjacency shifted_normalize(
    std::shared_ptr<const InteractionMatrix> matrix, double shift) {
  if (shift <= 0.0) {
    throw Error(ErrorCode::kConfig, "degree shift must be positive");
  }
  NormalizedAdjacency adj;
  adj.pattern_ = std::move(matrix);
  const InteractionMatrix& m = *adj.pattern_;
  adj.inv_sqrt_user_.resize(m.num_users());
  adj.inv_sqrt_item_.resize(m.num_items());
  for (Index u = 0; u < m.num_users(); ++u) {
    adj.inv_sqrt_user_[u] = 1.0 / std::sqrt(m.user_degree(u) + shift);
  }
  for (Index i = 0; i < m.num_items(); ++i) {
    adj.inv_sqrt_item_[i] = 1.0 / std::sqrt(m.item_degree(i) + shift);
  }
  return adj;
}

}  // namespace topocf
