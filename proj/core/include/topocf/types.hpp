#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace topocf {

using Index = std::uint32_t;
using EdgeId = std::uint64_t;

// Node embeddings are stored one row per node, hence row-major.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

enum class Side { kUser, kItem };

inline Side other_side(Side s) {
  return s == Side::kUser ? Side::kItem : Side::kUser;
}

}  // namespace topocf
