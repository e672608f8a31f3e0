#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "topocf/graph.hpp"
#include "topocf/project.hpp"

namespace topocf {

// Classical characteristics: interaction-count statistics of the matrix.
struct ClassicalStats {
  std::uint64_t space_size = 0;  // U * I
  double shape = 0.0;            // U / I
  double density = 0.0;          // E / (U * I)
  double sparsity = 0.0;         // 1 - density
  double gini_user = 0.0;
  double gini_item = 0.0;
};

struct PowerLawFit {
  double theta = 0.0;
  std::size_t tail_size = 0;
  bool unfit = false;
};

// Topological characteristics of the bipartite graph and its projections.
struct TopologyStats {
  double avg_degree_user = 0.0;
  double avg_degree_item = 0.0;
  double avg_clustering_user = 0.0;
  double avg_clustering_item = 0.0;
  std::optional<double> assortativity_user;  // nullopt = degenerate
  std::optional<double> assortativity_item;
  std::map<Index, std::size_t> degree_histogram;  // pooled over both sides
  std::map<Index, std::size_t> user_degree_histogram;
  std::map<Index, std::size_t> item_degree_histogram;
  std::optional<PowerLawFit> power_law;  // nullopt = too few tail samples
  std::size_t empty_two_hop_users = 0;   // nodes contributing gamma = 0
  std::size_t empty_two_hop_items = 0;
};

// The ordered 11-entry predictor vector. Entry order is fixed and matches
// the correlation-plot axis convention:
//   SpaceSize, Shape, Density, Gini-U, Gini-I, AvgDegree-U, AvgDegree-I,
//   AvgClustC-U, AvgClustC-I, Assort-U, Assort-I.
struct CharacteristicsRecord {
  static constexpr int kNumFeatures = 11;

  std::array<double, kNumFeatures> values{};  // after per-entry transforms
  std::array<double, kNumFeatures> raw{};     // untransformed
  std::array<bool, kNumFeatures> log10_applied{};
  bool assortativity_user_degenerate = false;
  bool assortativity_item_degenerate = false;

  static const std::array<std::string, kNumFeatures>& feature_names();
};

// Per-entry transform plan. Defaults follow the skewed-count convention:
// log10 on SpaceSize and the two average degrees.
struct TransformSpec {
  std::array<bool, CharacteristicsRecord::kNumFeatures> log10{};

  static TransformSpec none();
  static TransformSpec standard();
};

ClassicalStats classical_stats(const InteractionMatrix& matrix);

// Normalized mean absolute difference: distinct-pair double sum divided by
// n * sum. Requires >= 2 entries with positive total.
double gini(const std::vector<double>& values);

double avg_degree(const InteractionMatrix& matrix, Side side);

// Intersection-over-union of the 1-hop neighborhoods of two same-side nodes.
double pair_clustering(const InteractionMatrix& matrix, Side side, Index v,
                       Index w);

// Mean pairwise IoU over the 2-hop neighborhood; 0 when the 2-hop
// neighborhood is empty.
double node_clustering(const InteractionMatrix& matrix, Side side, Index v);

double avg_clustering(const InteractionMatrix& matrix, Side side,
                      int jobs = 1, std::size_t* empty_two_hop = nullptr);

// Newman degree assortativity over the binarized projected edges, computed
// as the Pearson correlation of excess degrees over the doubled
// edge-endpoint list. nullopt when the endpoint-degree variance is zero.
std::optional<double> degree_assortativity(const ProjectedGraph& graph);

// Same statistic computed by streaming over co-occurrences, without
// materializing the projection.
std::optional<double> degree_assortativity(const InteractionMatrix& matrix,
                                           Side side);

// P(d) = n_d / (U + I), pooled over both partitions.
std::map<Index, double> degree_distribution(const InteractionMatrix& matrix);

// Discrete power-law MLE over degrees >= d_min:
//   theta = 1 + n / sum(ln(d_i / (d_min - 0.5))).
// Requires >= 50 tail samples; an all-equal tail is flagged unfit.
PowerLawFit fit_power_law(const std::vector<Index>& degrees, Index d_min);

TopologyStats compute_topology(const InteractionMatrix& matrix,
                               Index power_law_d_min = 1, int jobs = 1);

CharacteristicsRecord feature_vector(const ClassicalStats& classical,
                                     const TopologyStats& topology,
                                     const TransformSpec& transforms);

}  // namespace topocf
