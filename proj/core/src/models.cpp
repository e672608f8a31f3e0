#include "topocf/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "topocf/error.hpp"

namespace topocf {

namespace {

constexpr double kLeakySlope = 0.2;
constexpr double kEmbedInitStd = 0.1;

Mat leaky_relu(const Mat& x) {
  return x.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
}

Mat random_normal(Index rows, Index cols, double std, RngStream& rng) {
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = std * rng.normal();
  }
  return m;
}

Mat xavier_normal(Index rows, Index cols, RngStream& rng) {
  const double std = std::sqrt(2.0 / static_cast<double>(rows + cols));
  return random_normal(rows, cols, std, rng);
}

double sign_of(double v) { return v >= 0.0 ? 1.0 : -1.0; }

Mat draw_noise(const Mat& reference, double eps, RngStream& rng) {
  Mat noise(reference.rows(), reference.cols());
  for (Eigen::Index r = 0; r < noise.rows(); ++r) {
    double norm_sq = 0.0;
    for (Eigen::Index c = 0; c < noise.cols(); ++c) {
      noise(r, c) = rng.next_double();
      norm_sq += noise(r, c) * noise(r, c);
    }
    const double inv = norm_sq > 0.0 ? 1.0 / std::sqrt(norm_sq) : 0.0;
    for (Eigen::Index c = 0; c < noise.cols(); ++c) {
      noise(r, c) *= eps * inv * sign_of(reference(r, c));
    }
  }
  return noise;
}

std::vector<std::uint8_t> draw_edge_mask(EdgeId num_edges, double rate,
                                         RngStream& rng) {
  const EdgeId keep = static_cast<EdgeId>(
      static_cast<double>(num_edges) * (1.0 - rate) + 1e-9);
  std::vector<EdgeId> ids(num_edges);
  std::iota(ids.begin(), ids.end(), 0);
  rng.shuffle(ids.data(), ids.size());
  std::vector<std::uint8_t> mask(num_edges, 0);
  for (EdgeId k = 0; k < keep; ++k) mask[ids[k]] = 1;
  return mask;
}

}  // namespace

double leaky_relu_slope() { return kLeakySlope; }

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kNgcf: return "NGCF";
    case ModelKind::kDgcf: return "DGCF";
    case ModelKind::kLightGcn: return "LightGCN";
    case ModelKind::kSgl: return "SGL";
    case ModelKind::kUltraGcn: return "UltraGCN";
    case ModelKind::kGfcf: return "GFCF";
    case ModelKind::kSvdGcn: return "SVDGCN";
    case ModelKind::kSimGcl: return "SimGCL";
    case ModelKind::kLightGcl: return "LightGCL";
    case ModelKind::kGraphAu: return "GraphAU";
    case ModelKind::kXSimGcl: return "XSimGCL";
  }
  return "?";
}

const std::vector<ModelKind>& all_model_kinds() {
  static const std::vector<ModelKind> kinds = {
      ModelKind::kNgcf,    ModelKind::kDgcf,     ModelKind::kLightGcn,
      ModelKind::kSgl,     ModelKind::kUltraGcn, ModelKind::kGfcf,
      ModelKind::kSvdGcn,  ModelKind::kSimGcl,   ModelKind::kLightGcl,
      ModelKind::kGraphAu, ModelKind::kXSimGcl};
  return kinds;
}

ModelKind model_kind_from_name(const std::string& name) {
  for (ModelKind kind : all_model_kinds()) {
    if (name == model_kind_name(kind)) return kind;
  }
  throw Error(ErrorCode::kConfig, "unknown model kind: " + name);
}

bool is_message_passing(ModelKind kind) {
  switch (kind) {
    case ModelKind::kGfcf:
    case ModelKind::kUltraGcn:
    case ModelKind::kSvdGcn:
      return false;
    default:
      return true;
  }
}

bool is_trainable(ModelKind kind) { return kind != ModelKind::kGfcf; }

ModelConfig ModelConfig::defaults_for(ModelKind kind) {
  ModelConfig c;
  switch (kind) {
    case ModelKind::kNgcf:
      c.layers = 3;
      c.pooling = PoolKind::kConcat;
      break;
    case ModelKind::kDgcf:
      c.layers = 1;
      c.pooling = PoolKind::kSum;
      break;
    case ModelKind::kLightGcn:
      c.layers = 3;
      c.pooling = PoolKind::kWeightedSum;
      break;
    case ModelKind::kSgl:
      c.layers = 3;
      c.pooling = PoolKind::kWeightedSum;
      break;
    case ModelKind::kUltraGcn:
      c.layers = 1;  // single-pass proxy, no iterative propagation
      c.pooling = PoolKind::kLast;
      break;
    case ModelKind::kGfcf:
      c.layers = 1;
      c.pooling = PoolKind::kLast;
      break;
    case ModelKind::kSvdGcn:
      c.layers = 1;
      c.pooling = PoolKind::kLast;
      break;
    case ModelKind::kSimGcl:
      c.layers = 3;
      c.pooling = PoolKind::kMean;
      break;
    case ModelKind::kLightGcl:
      c.layers = 2;
      c.pooling = PoolKind::kSum;
      break;
    case ModelKind::kGraphAu:
      c.layers = 4;
      c.pooling = PoolKind::kWeightedSum;
      break;
    case ModelKind::kXSimGcl:
      c.layers = 5;
      c.contrast_layer = 1;
      c.pooling = PoolKind::kWeightedSum;
      break;
  }
  return c;
}

void ModelConfig::validate(ModelKind kind) const {
  if (embed_dim < 1) throw Error(ErrorCode::kConfig, "embed_dim must be >= 1");
  if (is_message_passing(kind) && layers < 1) {
    throw Error(ErrorCode::kConfig, "layers must be >= 1 for message passing");
  }
  if (temperature <= 0.0) throw Error(ErrorCode::kConfig, "temperature must be > 0");
  if (kind == ModelKind::kDgcf) {
    if (intents < 2) throw Error(ErrorCode::kConfig, "DGCF needs >= 2 intents");
    if (embed_dim % intents != 0) {
      throw Error(ErrorCode::kConfig,
                  "DGCF embed_dim must be divisible by the intent count");
    }
    if (routing_rounds < 1) throw Error(ErrorCode::kConfig, "routing_rounds >= 1");
  }
  if (kind == ModelKind::kXSimGcl) {
    if (contrast_layer < 0 || contrast_layer >= layers) {
      throw Error(ErrorCode::kConfig, "XSimGCL contrast layer must be < layers");
    }
  }
  if (kind == ModelKind::kSimGcl || kind == ModelKind::kXSimGcl) {
    if (noise_eps < 0.0) throw Error(ErrorCode::kConfig, "noise_eps must be >= 0");
  }
  if (kind == ModelKind::kSgl || kind == ModelKind::kLightGcl) {
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
      throw Error(ErrorCode::kConfig, "dropout_rate must be in [0, 1)");
    }
  }
  if (kind == ModelKind::kUltraGcn && ultra_topk < 0) {
    throw Error(ErrorCode::kConfig, "ultra_topk must be >= 0");
  }
}

namespace {

void build_ultra_tables(ModelState& state, const InteractionMatrix& m) {
  UltraTables tables;
  tables.user_coef.resize(m.num_users());
  tables.item_coef.resize(m.num_items());
  // Zero-degree nodes take coefficient 0; no stored edge references them,
  // so the one-pass aggregation never reads the value.
  for (Index u = 0; u < m.num_users(); ++u) {
    const double d = m.user_degree(u);
    tables.user_coef[u] = d > 0 ? std::sqrt(d + 1.0) / d : 0.0;
  }
  for (Index i = 0; i < m.num_items(); ++i) {
    const double d = m.item_degree(i);
    tables.item_coef[i] = d > 0 ? std::sqrt(d + 1.0) / d : 0.0;
  }

  const TopCooccurrence top = top_cooccurrence(
      m, Side::kItem, static_cast<Index>(state.config.ultra_topk));
  tables.item_topk.resize(m.num_items());
  tables.item_topk_weight.resize(m.num_items());
  for (Index i = 0; i < m.num_items(); ++i) {
    const double diag = m.item_degree(i);
    const double off_sum = top.weighted_degree[i] - diag;
    if (off_sum <= 0.0) continue;
    for (std::size_t k = 0; k < top.neighbors[i].size(); ++k) {
      const Index j = top.neighbors[i][k];
      const double c = top.counts[i][k];
      const double w = c / off_sum *
                       std::sqrt(top.weighted_degree[i] / top.weighted_degree[j]);
      tables.item_topk[i].push_back(j);
      tables.item_topk_weight[i].push_back(w);
    }
  }
  state.ultra = std::move(tables);
}

SvdFactors cache_svd(const NormalizedAdjacency& graph, const ModelConfig& config,
                     RngStream rng) {
  const Index min_dim = std::min(graph.pattern().num_users(),
                                 graph.pattern().num_items());
  const Index k = std::min<Index>(static_cast<Index>(config.svd_rank), min_dim);
  return truncated_svd(graph, k, 8, 4, rng);
}

}  // namespace

ModelState init_model(ModelKind kind, const ModelConfig& config,
                      const NormalizedAdjacency& graph, RngStream rng) {
  config.validate(kind);
  const InteractionMatrix& m = graph.pattern();

  ModelState state;
  state.kind = kind;
  state.config = config;
  state.rng = rng;

  const Index f = static_cast<Index>(config.embed_dim);
  RngStream init_rng = rng.fork(0xE0);

  if (kind != ModelKind::kGfcf && kind != ModelKind::kSvdGcn) {
    state.user_embed = random_normal(m.num_users(), f, kEmbedInitStd, init_rng);
    state.item_embed = random_normal(m.num_items(), f, kEmbedInitStd, init_rng);
  }

  if (kind == ModelKind::kNgcf) {
    RngStream w_rng = rng.fork(0xF1);
    for (int l = 0; l < config.layers; ++l) {
      state.w_neigh.push_back(xavier_normal(f, f, w_rng));
      state.w_inter.push_back(xavier_normal(f, f, w_rng));
      state.bias.push_back(Mat::Zero(1, f));
    }
  }

  if (kind == ModelKind::kGfcf || kind == ModelKind::kLightGcl) {
    state.svd = cache_svd(graph, config, rng.fork(0x5D));
  }

  if (kind == ModelKind::kSvdGcn) {
    if (config.svd_degree_shift > 0.0) {
      NormalizedAdjacency shifted =
          shifted_normalize(graph.pattern_ptr(), config.svd_degree_shift);
      state.svd = cache_svd(shifted, config, rng.fork(0x5D));
      // Spectral check: the largest singular value of the shifted
      // normalization is bounded by max(D) / (max(D) + shift).
      Index max_degree = 0;
      for (Index u = 0; u < m.num_users(); ++u) {
        max_degree = std::max(max_degree, m.user_degree(u));
      }
      for (Index i = 0; i < m.num_items(); ++i) {
        max_degree = std::max(max_degree, m.item_degree(i));
      }
      state.svd_max_singular = state.svd->singular[0];
      state.svd_degree_bound = static_cast<double>(max_degree) /
                               (max_degree + config.svd_degree_shift);
      if (state.svd_max_singular > state.svd_degree_bound + 1e-6) {
        state.notes.push_back(
            "shifted-normalization spectral bound exceeded: sigma_1 = " +
            std::to_string(state.svd_max_singular) + " > " +
            std::to_string(state.svd_degree_bound));
      }
    } else {
      state.svd = cache_svd(graph, config, rng.fork(0x5D));
    }
    svdgcn_compute_base(state);
    RngStream w_rng = rng.fork(0xF2);
    state.svd_weight = xavier_normal(state.svd->rank(), f, w_rng);
  }

  if (kind == ModelKind::kUltraGcn) {
    build_ultra_tables(state, m);
  }
  return state;
}

void svdgcn_compute_base(ModelState& state) {
  if (!state.svd) {
    throw Error(ErrorCode::kRankOutOfRange, "SVD factors not cached");
  }
  const SvdFactors& svd = *state.svd;
  Vec scale(svd.rank());
  for (Index k = 0; k < svd.rank(); ++k) {
    scale[k] = std::exp(state.config.svd_exp_scale * svd.singular[k]);
  }
  state.svd_base_user = svd.u * scale.asDiagonal();
  state.svd_base_item = svd.v * scale.asDiagonal();
}

PropagateResult propagate_chain(
    const std::vector<const NormalizedAdjacency*>& adj, const Mat& user0,
    const Mat& item0, int layers) {
  PropagateResult out;
  out.user_layers.push_back(user0);
  out.item_layers.push_back(item0);
  for (int l = 1; l <= layers; ++l) {
    const NormalizedAdjacency& a =
        adj.size() == 1 ? *adj[0] : *adj[static_cast<std::size_t>(l - 1)];
    out.user_layers.push_back(spmm(a, out.item_layers.back(), Orientation::kUserRows));
    out.item_layers.push_back(spmm(a, out.user_layers[out.user_layers.size() - 2],
                                   Orientation::kItemRows));
  }
  return out;
}

namespace {

PropagateResult propagate_plain(const ModelState& state,
                                const NormalizedAdjacency& graph) {
  return propagate_chain({&graph}, state.user_embed, state.item_embed,
                         state.config.layers);
}

PropagateResult propagate_noisy(const ModelState& state,
                                const NormalizedAdjacency& graph,
                                RngStream& noise_rng) {
  PropagateResult out;
  out.user_layers.push_back(state.user_embed);
  out.item_layers.push_back(state.item_embed);
  for (int l = 1; l <= state.config.layers; ++l) {
    const Mat& prev_u = out.user_layers.back();
    const Mat& prev_i = out.item_layers.back();
    Mat next_u = spmm(graph, prev_i, Orientation::kUserRows);
    Mat next_i = spmm(graph, prev_u, Orientation::kItemRows);
    Mat noise_u = draw_noise(prev_u, state.config.noise_eps, noise_rng);
    Mat noise_i = draw_noise(prev_i, state.config.noise_eps, noise_rng);
    next_u += noise_u;
    next_i += noise_i;
    out.user_noise.push_back(std::move(noise_u));
    out.item_noise.push_back(std::move(noise_i));
    out.user_layers.push_back(std::move(next_u));
    out.item_layers.push_back(std::move(next_i));
  }
  return out;
}

PropagateResult propagate_ngcf(const ModelState& state,
                               const NormalizedAdjacency& graph) {
  PropagateResult out;
  out.user_layers.push_back(state.user_embed);
  out.item_layers.push_back(state.item_embed);
  for (int l = 1; l <= state.config.layers; ++l) {
    const Mat& prev_u = out.user_layers.back();
    const Mat& prev_i = out.item_layers.back();
    const Mat msg_u = spmm(graph, prev_i, Orientation::kUserRows);
    const Mat msg_i = spmm(graph, prev_u, Orientation::kItemRows);
    const Mat& wn = state.w_neigh[static_cast<std::size_t>(l - 1)];
    const Mat& wi = state.w_inter[static_cast<std::size_t>(l - 1)];
    const Mat& b = state.bias[static_cast<std::size_t>(l - 1)];
    Mat zu = msg_u * wn + msg_u.cwiseProduct(prev_u) * wi;
    zu.rowwise() += b.row(0);
    Mat zi = msg_i * wn + msg_i.cwiseProduct(prev_i) * wi;
    zi.rowwise() += b.row(0);
    out.user_layers.push_back(leaky_relu(zu));
    out.item_layers.push_back(leaky_relu(zi));
  }
  return out;
}

PropagateResult propagate_lightgcl_local(const ModelState& state,
                                         const NormalizedAdjacency& graph,
                                         RngStream& noise_rng) {
  PropagateResult out;
  out.user_layers.push_back(state.user_embed);
  out.item_layers.push_back(state.item_embed);
  const EdgeId num_edges = graph.pattern().num_edges();
  for (int l = 1; l <= state.config.layers; ++l) {
    std::vector<std::uint8_t> mask =
        draw_edge_mask(num_edges, state.config.dropout_rate, noise_rng);
    const Mat& prev_u = out.user_layers.back();
    const Mat& prev_i = out.item_layers.back();
    Mat zu = spmm(graph, prev_i, Orientation::kUserRows, &mask);
    Mat zi = spmm(graph, prev_u, Orientation::kItemRows, &mask);
    out.user_layers.push_back(leaky_relu(zu) + prev_u);
    out.item_layers.push_back(leaky_relu(zi) + prev_i);
    out.edge_masks.push_back(std::move(mask));
  }
  return out;
}

}  // namespace

PropagateResult propagate(const ModelState& state,
                          const NormalizedAdjacency& graph, RngStream noise) {
  switch (state.kind) {
    case ModelKind::kLightGcn:
    case ModelKind::kSgl:
    case ModelKind::kGraphAu:
      return propagate_plain(state, graph);
    case ModelKind::kSimGcl:
    case ModelKind::kXSimGcl:
      return propagate_noisy(state, graph, noise);
    case ModelKind::kNgcf:
      return propagate_ngcf(state, graph);
    case ModelKind::kLightGcl:
      return propagate_lightgcl_local(state, graph, noise);
    case ModelKind::kDgcf: {
      PropagateResult out;
      out.user_layers.push_back(state.user_embed);
      out.item_layers.push_back(state.item_embed);
      const int T = state.config.intents;
      const Index chunk = static_cast<Index>(state.config.embed_dim / T);
      const InteractionMatrix& m = graph.pattern();
      for (int l = 1; l <= state.config.layers; ++l) {
        const Mat& prev_u = out.user_layers.back();
        const Mat& prev_i = out.item_layers.back();
        const std::vector<double> weights =
            dgcf_routed_weights(state, graph, prev_u, prev_i, nullptr);
        Mat next_u = Mat::Zero(prev_u.rows(), prev_u.cols());
        Mat next_i = Mat::Zero(prev_i.rows(), prev_i.cols());
        for (int t = 0; t < T; ++t) {
          const Index c0 = static_cast<Index>(t) * chunk;
          for (Index u = 0; u < m.num_users(); ++u) {
            for (EdgeId e = m.row_ptr()[u]; e < m.row_ptr()[u + 1]; ++e) {
              const double w = weights[e * T + t];
              const Index i = m.items()[e];
              next_u.row(u).segment(c0, chunk) +=
                  w * prev_i.row(i).segment(c0, chunk);
              next_i.row(i).segment(c0, chunk) +=
                  w * prev_u.row(u).segment(c0, chunk);
            }
          }
        }
        out.dgcf_weights.push_back(weights);
        out.user_layers.push_back(std::move(next_u));
        out.item_layers.push_back(std::move(next_i));
      }
      return out;
    }
    case ModelKind::kGfcf:
    case ModelKind::kUltraGcn:
    case ModelKind::kSvdGcn:
      throw Error(ErrorCode::kUnsupportedForKind,
                  std::string(model_kind_name(state.kind)) +
                      " has no message-passing propagation");
  }
  throw Error(ErrorCode::kConfig, "unreachable model kind");
}

// Iterative intent routing. Edge-intent logits start at 0; each round takes
// the softmax over intents, normalizes each intent's adjacency by its own
// degrees, propagates the chunks, and (between rounds) increments the logits
// by <tanh(updated user chunk), input item chunk>. The final round's weights
// drive the output propagation.
std::vector<double> dgcf_routed_weights(const ModelState& state,
                                        const NormalizedAdjacency& graph,
                                        const Mat& user_chunks,
                                        const Mat& item_chunks,
                                        std::vector<double>* out_logits) {
  const InteractionMatrix& m = graph.pattern();
  const int T = state.config.intents;
  const Index chunk = static_cast<Index>(state.config.embed_dim / T);
  const EdgeId num_edges = m.num_edges();

  std::vector<double> logits(num_edges * static_cast<std::size_t>(T), 0.0);
  std::vector<double> weights(num_edges * static_cast<std::size_t>(T), 0.0);

  for (int round = 0; round < state.config.routing_rounds; ++round) {
    // Softmax over intents per edge.
    for (EdgeId e = 0; e < num_edges; ++e) {
      double max_logit = logits[e * T];
      for (int t = 1; t < T; ++t) max_logit = std::max(max_logit, logits[e * T + t]);
      double denom = 0.0;
      for (int t = 0; t < T; ++t) {
        weights[e * T + t] = std::exp(logits[e * T + t] - max_logit);
        denom += weights[e * T + t];
      }
      for (int t = 0; t < T; ++t) weights[e * T + t] /= denom;
    }
    // Per-intent symmetric degree normalization.
    std::vector<double> du(static_cast<std::size_t>(m.num_users()) * T, 0.0);
    std::vector<double> di(static_cast<std::size_t>(m.num_items()) * T, 0.0);
    for (Index u = 0; u < m.num_users(); ++u) {
      for (EdgeId e = m.row_ptr()[u]; e < m.row_ptr()[u + 1]; ++e) {
        const Index i = m.items()[e];
        for (int t = 0; t < T; ++t) {
          du[static_cast<std::size_t>(u) * T + t] += weights[e * T + t];
          di[static_cast<std::size_t>(i) * T + t] += weights[e * T + t];
        }
      }
    }
    for (Index u = 0; u < m.num_users(); ++u) {
      for (EdgeId e = m.row_ptr()[u]; e < m.row_ptr()[u + 1]; ++e) {
        const Index i = m.items()[e];
        for (int t = 0; t < T; ++t) {
          const double d = du[static_cast<std::size_t>(u) * T + t] *
                           di[static_cast<std::size_t>(i) * T + t];
          weights[e * T + t] = d > 0.0 ? weights[e * T + t] / std::sqrt(d) : 0.0;
        }
      }
    }
    if (round + 1 == state.config.routing_rounds) break;

    // Propagate user chunks and update logits from the affinities.
    Mat next_u = Mat::Zero(user_chunks.rows(), user_chunks.cols());
    for (Index u = 0; u < m.num_users(); ++u) {
      for (EdgeId e = m.row_ptr()[u]; e < m.row_ptr()[u + 1]; ++e) {
        const Index i = m.items()[e];
        for (int t = 0; t < T; ++t) {
          next_u.row(u).segment(static_cast<Index>(t) * chunk, chunk) +=
              weights[e * T + t] *
              item_chunks.row(i).segment(static_cast<Index>(t) * chunk, chunk);
        }
      }
    }
    for (Index u = 0; u < m.num_users(); ++u) {
      for (EdgeId e = m.row_ptr()[u]; e < m.row_ptr()[u + 1]; ++e) {
        const Index i = m.items()[e];
        for (int t = 0; t < T; ++t) {
          const Index c0 = static_cast<Index>(t) * chunk;
          double affinity = 0.0;
          for (Index c = 0; c < chunk; ++c) {
            affinity += std::tanh(next_u(u, c0 + c)) * item_chunks(i, c0 + c);
          }
          logits[e * T + t] += affinity;
        }
      }
    }
  }
  if (out_logits) *out_logits = std::move(logits);
  return weights;
}

Mat pool_layers(const std::vector<Mat>& layers, PoolKind kind) {
  if (layers.empty()) {
    throw Error(ErrorCode::kConfig, "pool_layers needs >= 1 layer");
  }
  switch (kind) {
    case PoolKind::kSum: {
      Mat out = layers[0];
      for (std::size_t l = 1; l < layers.size(); ++l) out += layers[l];
      return out;
    }
    case PoolKind::kWeightedSum:
    case PoolKind::kMean: {
      // Uniform weights 1/(L+1).
      Mat out = layers[0];
      for (std::size_t l = 1; l < layers.size(); ++l) out += layers[l];
      return out / static_cast<double>(layers.size());
    }
    case PoolKind::kConcat: {
      const Eigen::Index f = layers[0].cols();
      Mat out(layers[0].rows(), f * static_cast<Eigen::Index>(layers.size()));
      for (std::size_t l = 0; l < layers.size(); ++l) {
        out.middleCols(static_cast<Eigen::Index>(l) * f, f) = layers[l];
      }
      return out;
    }
    case PoolKind::kLast:
      return layers.back();
  }
  throw Error(ErrorCode::kConfig, "unreachable pooling kind");
}

SglViews sgl_make_views(const InteractionMatrix& graph, AugmentKind strategy,
                        double rate, int layers, RngStream rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw Error(ErrorCode::kConfig, "augmentation rate must be in [0, 1)");
  }

  auto edge_dropped = [&](RngStream& r) {
    std::vector<std::uint8_t> mask = draw_edge_mask(graph.num_edges(), rate, r);
    std::vector<std::pair<Index, Index>> edges;
    Index u = 0;
    for (EdgeId e = 0; e < graph.num_edges(); ++e) {
      while (graph.row_ptr()[u + 1] <= e) ++u;
      if (mask[e]) edges.emplace_back(u, graph.items()[e]);
    }
    if (edges.empty()) throw Error(ErrorCode::kEmptyView, "augmented view empty");
    // Same index space as the source; dropped nodes become isolates.
    return symmetric_normalize(
        std::make_shared<InteractionMatrix>(InteractionMatrix::from_edges(
            graph.num_users(), graph.num_items(), std::move(edges))),
        /*allow_isolates=*/true);
  };

  auto node_dropped = [&](RngStream& r) {
    const std::uint64_t total =
        static_cast<std::uint64_t>(graph.num_users()) + graph.num_items();
    const std::uint64_t keep =
        static_cast<std::uint64_t>(static_cast<double>(total) * (1.0 - rate));
    std::vector<Index> nodes(total);
    std::iota(nodes.begin(), nodes.end(), 0);
    r.shuffle(nodes.data(), nodes.size());
    std::vector<std::uint8_t> user_kept(graph.num_users(), 0);
    std::vector<std::uint8_t> item_kept(graph.num_items(), 0);
    for (std::uint64_t k = 0; k < keep; ++k) {
      const Index v = nodes[k];
      if (v < graph.num_users()) {
        user_kept[v] = 1;
      } else {
        item_kept[v - graph.num_users()] = 1;
      }
    }
    std::vector<std::pair<Index, Index>> edges;
    for (Index u = 0; u < graph.num_users(); ++u) {
      if (!user_kept[u]) continue;
      for (EdgeId e = graph.row_ptr()[u]; e < graph.row_ptr()[u + 1]; ++e) {
        const Index i = graph.items()[e];
        if (item_kept[i]) edges.emplace_back(u, i);
      }
    }
    if (edges.empty()) throw Error(ErrorCode::kEmptyView, "augmented view empty");
    return symmetric_normalize(
        std::make_shared<InteractionMatrix>(InteractionMatrix::from_edges(
            graph.num_users(), graph.num_items(), std::move(edges))),
        /*allow_isolates=*/true);
  };

  SglViews views;
  RngStream ra = rng.fork(1);
  RngStream rb = rng.fork(2);
  switch (strategy) {
    case AugmentKind::kEdgeDropout:
      views.view_a.push_back(edge_dropped(ra));
      views.view_b.push_back(edge_dropped(rb));
      break;
    case AugmentKind::kNodeDropout:
      views.view_a.push_back(node_dropped(ra));
      views.view_b.push_back(node_dropped(rb));
      break;
    case AugmentKind::kRandomWalk:
      // Layer-wise independent edge dropout.
      for (int l = 0; l < layers; ++l) views.view_a.push_back(edge_dropped(ra));
      for (int l = 0; l < layers; ++l) views.view_b.push_back(edge_dropped(rb));
      break;
  }
  return views;
}

Vec gfcf_score(const ModelState& state, const NormalizedAdjacency& graph,
               Index user) {
  if (!state.svd) {
    throw Error(ErrorCode::kRankOutOfRange, "GFCF requires cached SVD factors");
  }
  const InteractionMatrix& m = graph.pattern();
  if (user >= m.num_users()) {
    throw Error(ErrorCode::kIndexOutOfRange, "gfcf_score user index");
  }
  const Index num_items = m.num_items();

  // Linear-filter term: r_u (A~^T A~) = ((r_u A~^T) A~), evaluated sparsely.
  Vec user_scores = Vec::Zero(m.num_users());
  for (EdgeId e = m.row_ptr()[user]; e < m.row_ptr()[user + 1]; ++e) {
    const Index i = m.items()[e];
    const double wi = graph.item_scale(i);
    for (EdgeId f = m.col_ptr()[i]; f < m.col_ptr()[i + 1]; ++f) {
      user_scores[m.users()[f]] += wi * graph.user_scale(m.users()[f]);
    }
  }
  Vec scores = Vec::Zero(num_items);
  for (Index v = 0; v < m.num_users(); ++v) {
    if (user_scores[v] == 0.0) continue;
    const double sv = graph.user_scale(v) * user_scores[v];
    for (EdgeId e = m.row_ptr()[v]; e < m.row_ptr()[v + 1]; ++e) {
      scores[m.items()[e]] += sv * graph.item_scale(m.items()[e]);
    }
  }

  // Ideal low-pass term: t * (r_u D^-1/2 V_K) V_K^T D^+1/2.
  const double t = state.config.gfcf_ideal_weight;
  if (t != 0.0) {
    const SvdFactors& svd = *state.svd;
    Vec projected = Vec::Zero(svd.rank());
    for (EdgeId e = m.row_ptr()[user]; e < m.row_ptr()[user + 1]; ++e) {
      const Index i = m.items()[e];
      projected += graph.item_scale(i) * svd.v.row(i).transpose();
    }
    for (Index i = 0; i < num_items; ++i) {
      const double d = m.item_degree(i);
      if (d == 0) continue;
      scores[i] += t * std::sqrt(d) * svd.v.row(i).dot(projected);
    }
  }
  return scores;
}

void ultragcn_forward(const ModelState& state, const InteractionMatrix& graph,
                      Mat* user_out, Mat* item_out) {
  if (!state.ultra) {
    throw Error(ErrorCode::kConfig, "UltraGCN tables not initialized");
  }
  const UltraTables& tbl = *state.ultra;
  Mat eu = Mat::Zero(graph.num_users(), state.user_embed.cols());
  Mat ei = Mat::Zero(graph.num_items(), state.item_embed.cols());
  for (Index u = 0; u < graph.num_users(); ++u) {
    for (EdgeId e = graph.row_ptr()[u]; e < graph.row_ptr()[u + 1]; ++e) {
      const Index i = graph.items()[e];
      const double beta =
          tbl.user_coef[u] / std::sqrt(static_cast<double>(graph.item_degree(i)) + 1.0);
      eu.row(u) += beta * state.item_embed.row(i);
      const double beta_i =
          tbl.item_coef[i] / std::sqrt(static_cast<double>(graph.user_degree(u)) + 1.0);
      ei.row(i) += beta_i * state.user_embed.row(u);
    }
  }
  *user_out = std::move(eu);
  *item_out = std::move(ei);
}

std::vector<Mat> lightgcl_global_view(const ModelState& state,
                                      const std::vector<Mat>& user_layers,
                                      const std::vector<Mat>& item_layers) {
  if (!state.svd) {
    throw Error(ErrorCode::kRankOutOfRange, "LightGCL requires cached SVD");
  }
  const SvdFactors& svd = *state.svd;
  std::vector<Mat> global;  // per layer l=1..L: [users; items] stacked pairs
  for (std::size_t l = 1; l < user_layers.size(); ++l) {
    // Right-to-left association keeps every factor K-dimensional.
    Mat vt_e = svd.v.transpose() * item_layers[l - 1];        // K x F
    Mat gu = svd.u * (svd.singular.asDiagonal() * vt_e);      // U x F
    Mat ut_e = svd.u.transpose() * user_layers[l - 1];        // K x F
    Mat gi = svd.v * (svd.singular.asDiagonal() * ut_e);      // I x F
    global.push_back(leaky_relu(gu));
    global.push_back(leaky_relu(gi));
  }
  return global;
}

Vec score_all(const Mat& pooled_user, const Mat& pooled_item, Index user,
              const std::vector<Index>* masked_items) {
  Vec scores = pooled_item * pooled_user.row(user).transpose();
  if (masked_items) {
    for (Index i : *masked_items) {
      scores[i] = -std::numeric_limits<double>::infinity();
    }
  }
  return scores;
}

}  // namespace topocf
