#include "topocf/split.hpp"

#include <algorithm>
#include <numeric>

#include "topocf/error.hpp"

namespace topocf {

const char* split_strategy_name(SplitStrategy s) {
  return s == SplitStrategy::kRandom ? "random" : "temporal";
}

SplitDataset split(const InteractionMatrix& matrix, SplitStrategy strategy,
                   SplitRatios ratios, std::uint64_t seed) {
  if (ratios.train <= 0 || ratios.validation <= 0 || ratios.test <= 0) {
    throw Error(ErrorCode::kConfig, "split ratios must be positive");
  }
  const double total = ratios.train + ratios.validation + ratios.test;
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::kConfig, "split ratios must sum to 1");
  }
  if (strategy == SplitStrategy::kTemporal && !matrix.has_timestamps()) {
    throw Error(ErrorCode::kMissingTimestamps,
                "temporal split requires timestamps on all edges");
  }

  RngStream rng(seed, 0x51C7u);
  const bool with_ts = matrix.has_timestamps();

  std::vector<std::pair<Index, Index>> train_edges, val_edges, test_edges;
  std::vector<std::int64_t> train_ts, val_ts, test_ts;

  std::vector<EdgeId> order;
  for (Index u = 0; u < matrix.num_users(); ++u) {
    const EdgeId begin = matrix.row_ptr()[u];
    const EdgeId end = matrix.row_ptr()[u + 1];
    const std::size_t n = static_cast<std::size_t>(end - begin);
    if (n == 0) continue;

    order.resize(n);
    std::iota(order.begin(), order.end(), begin);
    if (strategy == SplitStrategy::kTemporal) {
      // Earliest first; latest interactions land in test.
      std::stable_sort(order.begin(), order.end(), [&](EdgeId a, EdgeId b) {
        return matrix.timestamps()[a] < matrix.timestamps()[b];
      });
    } else {
      RngStream user_rng = rng.fork(u);
      user_rng.shuffle(order.data(), order.size());
    }

    // Floor rounding with the remainder absorbed by train; users with fewer
    // than 3 interactions keep everything in train.
    std::size_t n_test = static_cast<std::size_t>(
        static_cast<double>(n) * ratios.test);
    std::size_t n_val = static_cast<std::size_t>(
        static_cast<double>(n) * ratios.validation);
    if (n < 3) {
      n_test = 0;
      n_val = 0;
    }
    if (n_test + n_val >= n) {  // min-train guarantee
      const std::size_t spare = n - 1;
      n_test = std::min(n_test, spare);
      n_val = std::min(n_val, spare - n_test);
    }
    const std::size_t n_train = n - n_val - n_test;

    for (std::size_t p = 0; p < n; ++p) {
      const EdgeId e = order[p];
      const Index i = matrix.items()[e];
      auto push = [&](std::vector<std::pair<Index, Index>>& edges,
                      std::vector<std::int64_t>& ts) {
        edges.emplace_back(u, i);
        if (with_ts) ts.push_back(matrix.timestamps()[e]);
      };
      if (p < n_train) {
        push(train_edges, train_ts);
      } else if (p < n_train + n_val) {
        push(val_edges, val_ts);
      } else {
        push(test_edges, test_ts);
      }
    }
  }

  SplitDataset out;
  out.strategy = strategy;
  out.seed = seed;
  out.train = InteractionMatrix::from_edges(
      matrix.num_users(), matrix.num_items(), std::move(train_edges),
      with_ts ? &train_ts : nullptr);
  out.validation = InteractionMatrix::from_edges(
      matrix.num_users(), matrix.num_items(), std::move(val_edges),
      with_ts ? &val_ts : nullptr);
  out.test = InteractionMatrix::from_edges(
      matrix.num_users(), matrix.num_items(), std::move(test_edges),
      with_ts ? &test_ts : nullptr);
  return out;
}

}  // namespace topocf
