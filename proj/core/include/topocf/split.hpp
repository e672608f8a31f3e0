#pragma once

#include <cstdint>
#include <string>

#include "topocf/graph.hpp"
#include "topocf/rng.hpp"

namespace topocf {

enum class SplitStrategy { kRandom, kTemporal };

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

// Train/validation/test matrices over identical index spaces. The three edge
// sets are pairwise disjoint and their union is the source edge set; every
// user keeps at least one training interaction, and users with fewer than 3
// interactions contribute nothing to validation/test.
struct SplitDataset {
  InteractionMatrix train;
  InteractionMatrix validation;
  InteractionMatrix test;
  SplitStrategy strategy = SplitStrategy::kRandom;
  std::uint64_t seed = 0;
};

SplitDataset split(const InteractionMatrix& matrix, SplitStrategy strategy,
                   SplitRatios ratios, std::uint64_t seed);

const char* split_strategy_name(SplitStrategy s);

}  // namespace topocf
