#include "topocf/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "cooccurrence_scan.hpp"
#include "topocf/error.hpp"

namespace topocf {

namespace {

std::vector<double> side_degrees(const InteractionMatrix& m, Side side) {
  const Index n = m.side_count(side);
  std::vector<double> deg(n);
  for (Index v = 0; v < n; ++v) deg[v] = m.degree(side, v);
  return deg;
}

struct PearsonAccumulator {
  // Exact integer sums over the doubled endpoint list; excess degrees are
  // integers, so the zero-variance check is exact.
  __int128 n = 0;
  __int128 sum_x = 0;
  __int128 sum_xx = 0;
  __int128 sum_xy = 0;

  void add(std::int64_t x, std::int64_t y) {
    // The doubled list contains both (x, y) and (y, x); callers add each
    // undirected edge from both endpoints, so feed one orientation here.
    n += 1;
    sum_x += x;
    sum_xx += static_cast<__int128>(x) * x;
    sum_xy += static_cast<__int128>(x) * y;
  }

  std::optional<double> correlation() const {
    if (n == 0) {
      throw Error(ErrorCode::kEmptyProjection,
                  "assortativity on empty projection");
    }
    const __int128 var_num = n * sum_xx - sum_x * sum_x;   // n^2 * variance
    if (var_num == 0) return std::nullopt;
    const __int128 cov_num = n * sum_xy - sum_x * sum_x;   // symmetric means
    return static_cast<double>(cov_num) / static_cast<double>(var_num);
  }
};

}  // namespace

const std::array<std::string, CharacteristicsRecord::kNumFeatures>&
CharacteristicsRecord::feature_names() {
  static const std::array<std::string, kNumFeatures> names = {
      "space_size",      "shape",
      "density",         "gini_user",
      "gini_item",       "avg_degree_user",
      "avg_degree_item", "avg_clustering_user",
      "avg_clustering_item", "assortativity_user",
      "assortativity_item"};
  return names;
}

TransformSpec TransformSpec::none() { return TransformSpec{}; }

TransformSpec TransformSpec::standard() {
  TransformSpec t;
  t.log10[0] = true;  // space_size
  t.log10[5] = true;  // avg_degree_user
  t.log10[6] = true;  // avg_degree_item
  return t;
}

ClassicalStats classical_stats(const InteractionMatrix& matrix) {
  if (matrix.num_users() == 0 || matrix.num_items() == 0) {
    throw Error(ErrorCode::kConfig, "classical stats on empty matrix");
  }
  ClassicalStats s;
  s.space_size = static_cast<std::uint64_t>(matrix.num_users()) *
                 static_cast<std::uint64_t>(matrix.num_items());
  s.shape = static_cast<double>(matrix.num_users()) /
            static_cast<double>(matrix.num_items());
  s.density = static_cast<double>(matrix.num_edges()) /
              static_cast<double>(s.space_size);
  s.sparsity = 1.0 - s.density;
  s.gini_user = gini(side_degrees(matrix, Side::kUser));
  s.gini_item = gini(side_degrees(matrix, Side::kItem));
  return s;
}

double gini(const std::vector<double>& values) {
  if (values.size() < 2) {
    throw Error(ErrorCode::kTooFewSamples, "gini needs >= 2 entries");
  }
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double total = 0.0;
  double pair_sum = 0.0;  // sum over distinct pairs of |x_i - x_j|
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    total += sorted[j];
    pair_sum += (2.0 * static_cast<double>(j) - n + 1.0) * sorted[j];
  }
  if (total <= 0.0) {
    throw Error(ErrorCode::kNonPositiveValue, "gini needs positive total");
  }
  return pair_sum / (n * total);
}

double avg_degree(const InteractionMatrix& matrix, Side side) {
  const Index n = matrix.side_count(side);
  if (n == 0) throw Error(ErrorCode::kConfig, "avg_degree on empty side");
  return static_cast<double>(matrix.num_edges()) / static_cast<double>(n);
}

double pair_clustering(const InteractionMatrix& matrix, Side side, Index v,
                       Index w) {
  if (v == w) {
    throw Error(ErrorCode::kConfig, "pair_clustering requires distinct nodes");
  }
  const Index n = matrix.side_count(side);
  if (v >= n || w >= n) {
    throw Error(ErrorCode::kIndexOutOfRange, "pair_clustering index");
  }
  const std::vector<Index> nv = neighborhood(matrix, side, v, 1);
  const std::vector<Index> nw = neighborhood(matrix, side, w, 1);
  std::size_t inter = 0;
  std::size_t a = 0, b = 0;
  while (a < nv.size() && b < nw.size()) {
    if (nv[a] < nw[b]) {
      ++a;
    } else if (nv[a] > nw[b]) {
      ++b;
    } else {
      ++inter;
      ++a;
      ++b;
    }
  }
  const std::size_t uni = nv.size() + nw.size() - inter;
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

double node_clustering_scanned(const InteractionMatrix& m, Side side, Index v,
                               std::vector<std::uint32_t>& scratch,
                               std::vector<Index>& touched) {
  const double deg_v = m.degree(side, v);
  double sum = 0.0;
  std::size_t count = 0;
  detail::scan_cooccurrence(m, side, v, scratch, touched,
                            [&](Index w, std::uint32_t inter) {
                              const double deg_w = m.degree(side, w);
                              const double uni = deg_v + deg_w - inter;
                              sum += static_cast<double>(inter) / uni;
                              ++count;
                            });
  if (count == 0) return 0.0;
  return sum / static_cast<double>(count);
}

}  // namespace

double node_clustering(const InteractionMatrix& matrix, Side side, Index v) {
  if (v >= matrix.side_count(side)) {
    throw Error(ErrorCode::kIndexOutOfRange, "node_clustering index");
  }
  std::vector<std::uint32_t> scratch(matrix.side_count(side), 0);
  std::vector<Index> touched;
  return node_clustering_scanned(matrix, side, v, scratch, touched);
}

double avg_clustering(const InteractionMatrix& matrix, Side side, int jobs,
                      std::size_t* empty_two_hop) {
  const Index n = matrix.side_count(side);
  if (n == 0) throw Error(ErrorCode::kConfig, "avg_clustering on empty side");
  std::vector<double> per_node(n, 0.0);
  std::vector<std::uint8_t> empty(n, 0);

  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  auto run = [&](Index begin, Index end) {
    std::vector<std::uint32_t> scratch(n, 0);
    std::vector<Index> touched;
    for (Index v = begin; v < end; ++v) {
      per_node[v] = node_clustering_scanned(matrix, side, v, scratch, touched);
      // Co-occurring nodes share >= 1 neighbor, so each IoU term is strictly
      // positive; a zero mean means the 2-hop neighborhood is empty.
      if (per_node[v] == 0.0) empty[v] = 1;
    }
  };
  if (workers == 1) {
    run(0, n);
  } else {
    std::vector<std::thread> pool;
    const Index chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const Index begin = static_cast<Index>(w) * chunk;
      const Index end = std::min<Index>(n, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(run, begin, end);
    }
    for (auto& t : pool) t.join();
  }

  // Indexed sum: identical result for any worker count.
  double total = 0.0;
  std::size_t empties = 0;
  for (Index v = 0; v < n; ++v) {
    total += per_node[v];
    empties += empty[v];
  }
  if (empty_two_hop) *empty_two_hop = empties;
  return total / static_cast<double>(n);
}

std::optional<double> degree_assortativity(const ProjectedGraph& graph) {
  PearsonAccumulator acc;
  for (Index v = 0; v < graph.num_nodes; ++v) {
    const std::int64_t xv = static_cast<std::int64_t>(graph.projected_degree(v)) - 1;
    for (EdgeId e = graph.row_ptr[v]; e < graph.row_ptr[v + 1]; ++e) {
      const Index w = graph.neighbors[e];
      const std::int64_t xw = static_cast<std::int64_t>(graph.projected_degree(w)) - 1;
      acc.add(xv, xw);
    }
  }
  return acc.correlation();
}

std::optional<double> degree_assortativity(const InteractionMatrix& matrix,
                                           Side side) {
  const Index n = matrix.side_count(side);
  std::vector<Index> pdeg(n, 0);
  std::vector<std::uint32_t> scratch(n, 0);
  std::vector<Index> touched;
  for (Index v = 0; v < n; ++v) {
    Index d = 0;
    detail::scan_cooccurrence(matrix, side, v, scratch, touched,
                              [&](Index, std::uint32_t) { ++d; });
    pdeg[v] = d;
  }
  PearsonAccumulator acc;
  for (Index v = 0; v < n; ++v) {
    const std::int64_t xv = static_cast<std::int64_t>(pdeg[v]) - 1;
    detail::scan_cooccurrence(matrix, side, v, scratch, touched,
                              [&](Index w, std::uint32_t) {
                                acc.add(xv, static_cast<std::int64_t>(pdeg[w]) - 1);
                              });
  }
  return acc.correlation();
}

std::map<Index, double> degree_distribution(const InteractionMatrix& matrix) {
  std::map<Index, double> dist;
  const double total =
      static_cast<double>(matrix.num_users()) + matrix.num_items();
  std::map<Index, std::size_t> hist;
  for (Index u = 0; u < matrix.num_users(); ++u) ++hist[matrix.user_degree(u)];
  for (Index i = 0; i < matrix.num_items(); ++i) ++hist[matrix.item_degree(i)];
  for (const auto& [d, n] : hist) dist[d] = static_cast<double>(n) / total;
  return dist;
}

PowerLawFit fit_power_law(const std::vector<Index>& degrees, Index d_min) {
  if (d_min < 1) throw Error(ErrorCode::kConfig, "power-law d_min must be >= 1");
  std::vector<Index> tail;
  for (Index d : degrees) {
    if (d >= d_min) tail.push_back(d);
  }
  if (tail.size() < 50) {
    throw Error(ErrorCode::kTooFewSamples,
                "power-law fit needs >= 50 degrees >= d_min");
  }
  PowerLawFit fit;
  fit.tail_size = tail.size();
  const bool all_equal =
      std::all_of(tail.begin(), tail.end(), [&](Index d) { return d == tail[0]; });
  if (all_equal) {
    fit.theta = std::numeric_limits<double>::infinity();
    fit.unfit = true;
    return fit;
  }
  const double shift = static_cast<double>(d_min) - 0.5;
  double log_sum = 0.0;
  for (Index d : tail) log_sum += std::log(static_cast<double>(d) / shift);
  fit.theta = 1.0 + static_cast<double>(tail.size()) / log_sum;
  fit.unfit = !std::isfinite(fit.theta);
  return fit;
}

TopologyStats compute_topology(const InteractionMatrix& matrix,
                               Index power_law_d_min, int jobs) {
  TopologyStats t;
  t.avg_degree_user = avg_degree(matrix, Side::kUser);
  t.avg_degree_item = avg_degree(matrix, Side::kItem);
  t.avg_clustering_user =
      avg_clustering(matrix, Side::kUser, jobs, &t.empty_two_hop_users);
  t.avg_clustering_item =
      avg_clustering(matrix, Side::kItem, jobs, &t.empty_two_hop_items);
  try {
    t.assortativity_user = degree_assortativity(matrix, Side::kUser);
  } catch (const Error&) {
    t.assortativity_user = std::nullopt;
  }
  try {
    t.assortativity_item = degree_assortativity(matrix, Side::kItem);
  } catch (const Error&) {
    t.assortativity_item = std::nullopt;
  }

  for (Index u = 0; u < matrix.num_users(); ++u) {
    ++t.user_degree_histogram[matrix.user_degree(u)];
    ++t.degree_histogram[matrix.user_degree(u)];
  }
  for (Index i = 0; i < matrix.num_items(); ++i) {
    ++t.item_degree_histogram[matrix.item_degree(i)];
    ++t.degree_histogram[matrix.item_degree(i)];
  }

  std::vector<Index> pooled;
  pooled.reserve(matrix.num_users() + matrix.num_items());
  for (Index u = 0; u < matrix.num_users(); ++u) pooled.push_back(matrix.user_degree(u));
  for (Index i = 0; i < matrix.num_items(); ++i) pooled.push_back(matrix.item_degree(i));
  try {
    t.power_law = fit_power_law(pooled, power_law_d_min);
  } catch (const Error&) {
    t.power_law = std::nullopt;
  }
  return t;
}

CharacteristicsRecord feature_vector(const ClassicalStats& classical,
                                     const TopologyStats& topology,
                                     const TransformSpec& transforms) {
  CharacteristicsRecord rec;
  rec.raw = {static_cast<double>(classical.space_size),
             classical.shape,
             classical.density,
             classical.gini_user,
             classical.gini_item,
             topology.avg_degree_user,
             topology.avg_degree_item,
             topology.avg_clustering_user,
             topology.avg_clustering_item,
             topology.assortativity_user.value_or(0.0),
             topology.assortativity_item.value_or(0.0)};
  rec.assortativity_user_degenerate = !topology.assortativity_user.has_value();
  rec.assortativity_item_degenerate = !topology.assortativity_item.has_value();
  for (int f = 0; f < CharacteristicsRecord::kNumFeatures; ++f) {
    double v = rec.raw[f];
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFiniteValue,
                  "non-finite characteristic " + CharacteristicsRecord::feature_names()[f]);
    }
    if (transforms.log10[f]) {
      if (!(v > 0.0)) {
        throw Error(ErrorCode::kNonPositiveValue,
                    "log10 transform on non-positive " +
                        CharacteristicsRecord::feature_names()[f]);
      }
      v = std::log10(v);
      rec.log10_applied[f] = true;
    }
    rec.values[f] = v;
  }
  return rec;
}

}  // namespace topocf
