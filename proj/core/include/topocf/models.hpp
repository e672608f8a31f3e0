#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "topocf/linalg.hpp"
#include "topocf/normalize.hpp"
#include "topocf/project.hpp"
#include "topocf/rng.hpp"
#include "topocf/types.hpp"

namespace topocf {

enum class ModelKind {
  kNgcf,
  kDgcf,
  kLightGcn,
  kSgl,
  kUltraGcn,
  kGfcf,
  kSvdGcn,
  kSimGcl,
  kLightGcl,
  kGraphAu,
  kXSimGcl,
};

const char* model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);
const std::vector<ModelKind>& all_model_kinds();

bool is_message_passing(ModelKind kind);
bool is_trainable(ModelKind kind);  // all but GFCF

enum class PoolKind { kSum, kWeightedSum, kMean, kConcat, kLast };

enum class AugmentKind { kNodeDropout, kEdgeDropout, kRandomWalk };

struct ModelConfig {
  int layers = 3;
  int embed_dim = 64;
  int svd_rank = 64;           // clipped to min(U, I) at init
  int intents = 4;             // DGCF chunk count T
  int routing_rounds = 2;      // DGCF
  double noise_eps = 0.1;      // SimGCL / XSimGCL
  int contrast_layer = 1;      // XSimGCL l* < L
  double temperature = 0.2;    // InfoNCE tau
  double gfcf_ideal_weight = 0.3;     // GFCF t
  double svd_exp_scale = 1.0;         // SVD-GCN t1
  double svd_degree_shift = 0.0;      // SVD-GCN t2; 0 = plain normalization
  double align_layer_weight = 1.0;    // GraphAU t2
  double align_uniform_tradeoff = 1.0;  // GraphAU t1
  double ultra_pos_weight = 1.0;      // UltraGCN t+
  double ultra_neg_weight = 1.0;      // UltraGCN t-
  double ultra_item_weight = 0.1;     // UltraGCN lambda_I
  int ultra_topk = 10;
  AugmentKind sgl_augment = AugmentKind::kEdgeDropout;
  double dropout_rate = 0.1;   // SGL views, LightGCL local edge dropout
  PoolKind pooling = PoolKind::kWeightedSum;

  static ModelConfig defaults_for(ModelKind kind);
  void validate(ModelKind kind) const;
};

// UltraGCN precomputed tables: the one-pass aggregation coefficients and the
// per-item top-k co-occurrence lists with their loss weights.
struct UltraTables {
  std::vector<double> user_coef;  // sqrt(du + 1) / du, per user
  std::vector<double> item_coef;  // sqrt(di + 1) / di, per item
  std::vector<std::vector<Index>> item_topk;
  std::vector<std::vector<double>> item_topk_weight;
};

struct ModelState {
  ModelKind kind = ModelKind::kLightGcn;
  ModelConfig config;
  Mat user_embed;  // E^(0), U x F (empty for SVD-GCN and GFCF)
  Mat item_embed;  // I x F

  // NGCF per-layer transforms.
  std::vector<Mat> w_neigh;
  std::vector<Mat> w_inter;
  std::vector<Mat> bias;  // 1 x F rows

  // SVD-backed kinds.
  std::optional<SvdFactors> svd;
  Mat svd_base_user;  // U_K * exp(t1 * S), U x K
  Mat svd_base_item;  // V_K * exp(t1 * S), I x K
  Mat svd_weight;     // trainable K x F

  std::optional<UltraTables> ultra;

  // Populated when the degree-shifted normalization is enabled: the top
  // singular value against its max-degree bound max(D) / (max(D) + t2).
  double svd_max_singular = 0.0;
  double svd_degree_bound = 0.0;
  std::vector<std::string> notes;

  std::uint64_t graph_hash = 0;
  RngStream rng{0, 0};
};

// Forward result of the propagation: layer embeddings E^(0)..E^(L) per side,
// plus the realized stochastic inputs so callers (and equivalence oracles)
// can reproduce the pass exactly.
struct PropagateResult {
  std::vector<Mat> user_layers;
  std::vector<Mat> item_layers;
  std::vector<Mat> user_noise;  // per layer l=1..L (SimGCL/XSimGCL), else empty
  std::vector<Mat> item_noise;
  std::vector<std::vector<std::uint8_t>> edge_masks;  // LightGCL local, per layer
  std::vector<std::vector<double>> dgcf_weights;  // per layer, edge_id * T + t
};

ModelState init_model(ModelKind kind, const ModelConfig& config,
                      const NormalizedAdjacency& graph, RngStream rng);

// Message-passing forward in matrix form. Noise (when applicable) is drawn
// from `noise`, so a fixed stream reproduces the pass bit-for-bit.
// Throws UnsupportedForKind for GFCF, UltraGCN and SVD-GCN.
PropagateResult propagate(const ModelState& state,
                          const NormalizedAdjacency& graph,
                          RngStream noise);

// Propagation over explicit per-layer adjacencies (SGL views; one entry is
// broadcast over all layers).
PropagateResult propagate_chain(const std::vector<const NormalizedAdjacency*>& adj,
                                const Mat& user0, const Mat& item0, int layers);

// DGCF intent routing: returns the final per-intent symmetric-normalized
// edge weights (indexed edge_id * T + t) for one layer given its input
// chunks. Exposed for the trainer's backward pass and equivalence checks.
std::vector<double> dgcf_routed_weights(const ModelState& state,
                                        const NormalizedAdjacency& graph,
                                        const Mat& user_chunks,
                                        const Mat& item_chunks,
                                        std::vector<double>* out_logits = nullptr);

Mat pool_layers(const std::vector<Mat>& layers, PoolKind kind);

// Two augmented graph views for SGL. ND/ED return one matrix per view;
// RW returns `layers` independently dropped matrices per view.
struct SglViews {
  std::vector<NormalizedAdjacency> view_a;
  std::vector<NormalizedAdjacency> view_b;
};

SglViews sgl_make_views(const InteractionMatrix& graph, AugmentKind strategy,
                        double rate, int layers, RngStream rng);

// GFCF closed-form score row:
//   R_hat(u, *) = R(u, *) (A~^T A~ + t D_I^{-1/2} V_K V_K^T D_I^{1/2}).
Vec gfcf_score(const ModelState& state, const NormalizedAdjacency& graph,
               Index user);

// SVD-GCN base embeddings (U_K exp(t1 S), V_K exp(t1 S)).
void svdgcn_compute_base(ModelState& state);

// UltraGCN one-pass aggregation.
void ultragcn_forward(const ModelState& state, const InteractionMatrix& graph,
                      Mat* user_out, Mat* item_out);

// LightGCL global-view layers: G^(l) = LeakyReLU(U_K S_K V_K^T E^(l-1)),
// computed factor-by-factor (the dense reconstruction is never formed).
std::vector<Mat> lightgcl_global_view(const ModelState& state,
                                      const std::vector<Mat>& user_layers,
                                      const std::vector<Mat>& item_layers);

// Dot-product decoder over pooled embeddings; masked items get -inf.
Vec score_all(const Mat& pooled_user, const Mat& pooled_item, Index user,
              const std::vector<Index>* masked_items = nullptr);

double leaky_relu_slope();

}  // namespace topocf
