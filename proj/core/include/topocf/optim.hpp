#pragma once

#include <cstdint>
#include <vector>

#include "topocf/types.hpp"

namespace topocf {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a list of parameter tensors.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(const std::vector<const Mat*>& params);

  std::uint64_t step_count() const { return t_; }

  // One update; params and grads must match the construction shapes.
  // Throws NonFiniteGradient on NaN/Inf gradients.
  void step(const std::vector<Mat*>& params, const std::vector<const Mat*>& grads,
            const AdamConfig& config);

 private:
  std::vector<Mat> m_;
  std::vector<Mat> v_;
  std::uint64_t t_ = 0;
};

}  // namespace topocf
