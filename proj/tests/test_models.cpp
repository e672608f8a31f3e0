#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "topocf/models.hpp"

using namespace topocf;
using namespace topocf::testing;

namespace {

NormalizedAdjacency make_adj(const InteractionMatrix& m) {
  return symmetric_normalize(std::make_shared<InteractionMatrix>(m));
}

ModelState make_state(ModelKind kind, const NormalizedAdjacency& adj, int dim,
                      std::uint64_t seed = 7) {
  ModelConfig config = ModelConfig::defaults_for(kind);
  config.embed_dim = dim;
  config.svd_rank = std::min<int>(
      dim, static_cast<int>(std::min(adj.pattern().num_users(),
                                     adj.pattern().num_items())));
  return init_model(kind, config, adj, RngStream(seed, 1));
}

}  // namespace

TEST_CASE("init shapes and determinism") {
  RngStream rng(1, 0);
  const InteractionMatrix m = random_bipartite_connected(4, 4, 0.5, rng);
  const NormalizedAdjacency adj = make_adj(m);

  SUBCASE("LightGCN embedding tables") {
    const ModelState s = make_state(ModelKind::kLightGcn, adj, 8);
    CHECK(s.user_embed.rows() == 4);
    CHECK(s.user_embed.cols() == 8);
    CHECK(s.item_embed.rows() == 4);
    CHECK(s.w_neigh.empty());
  }
  SUBCASE("DGCF chunk partition") {
    ModelConfig config = ModelConfig::defaults_for(ModelKind::kDgcf);
    config.embed_dim = 8;
    config.intents = 4;
    CHECK_NOTHROW(init_model(ModelKind::kDgcf, config, adj, RngStream(1, 1)));
    config.embed_dim = 6;  // not divisible by 4
    CHECK_THROWS_AS(init_model(ModelKind::kDgcf, config, adj, RngStream(1, 1)),
                    Error);
  }
  SUBCASE("same seed gives identical states") {
    const ModelState a = make_state(ModelKind::kNgcf, adj, 8, 99);
    const ModelState b = make_state(ModelKind::kNgcf, adj, 8, 99);
    CHECK((a.user_embed - b.user_embed).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.w_neigh[0] - b.w_neigh[0]).cwiseAbs().maxCoeff() == 0.0);
    const ModelState c = make_state(ModelKind::kNgcf, adj, 8, 100);
    CHECK((a.user_embed - c.user_embed).cwiseAbs().maxCoeff() > 0.0);
  }
  SUBCASE("XSimGCL contrast layer bound") {
    ModelConfig config = ModelConfig::defaults_for(ModelKind::kXSimGcl);
    config.layers = 2;
    config.contrast_layer = 2;
    CHECK_THROWS_AS(init_model(ModelKind::kXSimGcl, config, adj, RngStream(1, 1)),
                    Error);
  }
}

TEST_CASE("single-edge LightGCN step copies the item embedding") {
  const InteractionMatrix m = from_pairs(1, 1, {{0, 0}});
  const NormalizedAdjacency adj = make_adj(m);
  ModelState state = make_state(ModelKind::kLightGcn, adj, 2);
  state.item_embed << 0.0, 1.0;
  state.user_embed << 0.5, 0.5;
  const PropagateResult res = propagate(state, adj, RngStream(0, 0));
  CHECK(res.user_layers[1](0, 0) == doctest::Approx(0.0));
  CHECK(res.user_layers[1](0, 1) == doctest::Approx(1.0));
}

TEST_CASE("matrix-form propagation equals the node-form oracle") {
  RngStream rng(3, 0);
  const std::vector<ModelKind> kinds = {
      ModelKind::kLightGcn, ModelKind::kNgcf,   ModelKind::kDgcf,
      ModelKind::kSimGcl,   ModelKind::kXSimGcl, ModelKind::kLightGcl,
      ModelKind::kGraphAu,  ModelKind::kSgl};
  for (int trial = 0; trial < 10; ++trial) {
    const Index users = 3 + static_cast<Index>(rng.below(7));
    const Index items = 3 + static_cast<Index>(rng.below(7));
    const InteractionMatrix m =
        random_bipartite_connected(users, items, 0.4, rng);
    const NormalizedAdjacency adj = make_adj(m);
    for (ModelKind kind : kinds) {
      ModelConfig config = ModelConfig::defaults_for(kind);
      config.embed_dim = 8;
      config.layers = 2;
      config.contrast_layer = 1;
      config.svd_rank = static_cast<int>(std::min(users, items));
      const ModelState state = init_model(kind, config, adj,
                                          RngStream(100 + trial, 2));
      const PropagateResult res = propagate(state, adj, RngStream(55, trial));

      NodeFormLayers expected;
      switch (kind) {
        case ModelKind::kLightGcn:
        case ModelKind::kSgl:
        case ModelKind::kGraphAu:
          expected = node_form_lightgcn(adj, state.user_embed, state.item_embed,
                                        config.layers);
          break;
        case ModelKind::kSimGcl:
        case ModelKind::kXSimGcl:
          expected = node_form_lightgcn(adj, state.user_embed, state.item_embed,
                                        config.layers, &res.user_noise,
                                        &res.item_noise);
          break;
        case ModelKind::kNgcf:
          expected = node_form_ngcf(state, adj);
          break;
        case ModelKind::kDgcf:
          expected = node_form_dgcf(state, adj, res.dgcf_weights);
          break;
        case ModelKind::kLightGcl:
          expected = node_form_lightgcl_local(state, adj, res.edge_masks);
          break;
        default:
          continue;
      }
      for (std::size_t l = 0; l < expected.user_layers.size(); ++l) {
        CHECK((res.user_layers[l] - expected.user_layers[l]).cwiseAbs().maxCoeff() <
              1e-10);
        CHECK((res.item_layers[l] - expected.item_layers[l]).cwiseAbs().maxCoeff() <
              1e-10);
      }
    }
  }
}

TEST_CASE("propagation is linear in the input embeddings") {
  RngStream rng(4, 0);
  const InteractionMatrix m = random_bipartite_connected(8, 9, 0.35, rng);
  const NormalizedAdjacency adj = make_adj(m);
  ModelState state = make_state(ModelKind::kLightGcn, adj, 6);

  const Mat xu = state.user_embed, xi = state.item_embed;
  const Mat yu = random_mat(8, 6, rng), yi = random_mat(9, 6, rng);
  const double a = 1.7, b = -0.4;

  ModelState sx = state;
  const PropagateResult rx = propagate(sx, adj, RngStream(0, 0));
  ModelState sy = state;
  sy.user_embed = yu;
  sy.item_embed = yi;
  const PropagateResult ry = propagate(sy, adj, RngStream(0, 0));
  ModelState sz = state;
  sz.user_embed = a * xu + b * yu;
  sz.item_embed = a * xi + b * yi;
  const PropagateResult rz = propagate(sz, adj, RngStream(0, 0));

  for (std::size_t l = 0; l < rz.user_layers.size(); ++l) {
    const Mat expect = a * rx.user_layers[l] + b * ry.user_layers[l];
    CHECK((rz.user_layers[l] - expect).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("zero noise reduces SimGCL and XSimGCL to LightGCN") {
  RngStream rng(5, 0);
  const InteractionMatrix m = random_bipartite_connected(7, 6, 0.4, rng);
  const NormalizedAdjacency adj = make_adj(m);
  for (ModelKind kind : {ModelKind::kSimGcl, ModelKind::kXSimGcl}) {
    ModelConfig config = ModelConfig::defaults_for(kind);
    config.embed_dim = 5;
    config.layers = 3;
    config.contrast_layer = 1;
    config.noise_eps = 0.0;
    const ModelState state = init_model(kind, config, adj, RngStream(6, 6));
    const PropagateResult noisy = propagate(state, adj, RngStream(9, 9));
    // Same code path as LightGCN, so the reduction is exact.
    const PropagateResult plain = propagate_chain({&adj}, state.user_embed,
                                                  state.item_embed, 3);
    for (std::size_t l = 0; l < plain.user_layers.size(); ++l) {
      CHECK((noisy.user_layers[l] - plain.user_layers[l]).cwiseAbs().maxCoeff() ==
            0.0);
    }
  }
}

TEST_CASE("noise rows have norm eps and agree in sign with the input") {
  RngStream rng(6, 0);
  const InteractionMatrix m = random_bipartite_connected(6, 6, 0.5, rng);
  const NormalizedAdjacency adj = make_adj(m);
  ModelConfig config = ModelConfig::defaults_for(ModelKind::kSimGcl);
  config.embed_dim = 7;
  config.noise_eps = 0.25;
  const ModelState state = init_model(ModelKind::kSimGcl, config, adj,
                                      RngStream(7, 7));
  const PropagateResult res = propagate(state, adj, RngStream(8, 8));
  REQUIRE(res.user_noise.size() == 3);
  for (std::size_t l = 0; l < res.user_noise.size(); ++l) {
    const Mat& reference = res.user_layers[l];  // noise uses E^(l-1)
    for (Eigen::Index r = 0; r < res.user_noise[l].rows(); ++r) {
      CHECK(res.user_noise[l].row(r).norm() == doctest::Approx(0.25).epsilon(1e-9));
      for (Eigen::Index c = 0; c < res.user_noise[l].cols(); ++c) {
        CHECK(res.user_noise[l](r, c) * reference(r, c) >= 0.0);
      }
    }
  }
}

TEST_CASE("propagate rejects closed-form kinds") {
  RngStream rng(7, 0);
  const InteractionMatrix m = random_bipartite_connected(5, 5, 0.5, rng);
  const NormalizedAdjacency adj = make_adj(m);
  for (ModelKind kind :
       {ModelKind::kGfcf, ModelKind::kUltraGcn, ModelKind::kSvdGcn}) {
    const ModelState state = make_state(kind, adj, 4);
    CHECK_THROWS_AS(propagate(state, adj, RngStream(0, 0)), Error);
  }
}

TEST_CASE("pooling kinds") {
  std::vector<Mat> layers;
  for (double v : {1.0, 2.0, 3.0}) {
    layers.push_back(Mat::Constant(1, 1, v));
  }
  CHECK(pool_layers(layers, PoolKind::kSum)(0, 0) == doctest::Approx(6.0));
  CHECK(pool_layers(layers, PoolKind::kWeightedSum)(0, 0) == doctest::Approx(2.0));
  CHECK(pool_layers(layers, PoolKind::kMean)(0, 0) == doctest::Approx(2.0));
  CHECK(pool_layers(layers, PoolKind::kLast)(0, 0) == doctest::Approx(3.0));
  const Mat concat = pool_layers({Mat::Zero(2, 4), Mat::Ones(2, 4)}, PoolKind::kConcat);
  CHECK(concat.cols() == 8);

  SUBCASE("all kinds agree on a single layer") {
    RngStream rng(8, 0);
    const std::vector<Mat> single = {random_mat(3, 4, rng)};
    for (PoolKind kind : {PoolKind::kSum, PoolKind::kWeightedSum, PoolKind::kMean,
                          PoolKind::kConcat, PoolKind::kLast}) {
      CHECK((pool_layers(single, kind) - single[0]).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("sgl views") {
  RngStream rng(9, 0);
  const InteractionMatrix m = random_bipartite_connected(20, 20, 0.25, rng);

  SUBCASE("rate 0 keeps the source graph") {
    const SglViews views = sgl_make_views(m, AugmentKind::kEdgeDropout, 0.0, 3,
                                          RngStream(1, 1));
    CHECK(views.view_a[0].pattern().num_edges() == m.num_edges());
    CHECK(views.view_b[0].pattern().num_edges() == m.num_edges());
  }
  SUBCASE("edge dropout halves the edge count exactly") {
    const InteractionMatrix even =
        random_bipartite_connected(25, 20, 0.2, rng);
    const EdgeId half = even.num_edges() / 2;
    const SglViews views = sgl_make_views(even, AugmentKind::kEdgeDropout, 0.5,
                                          3, RngStream(2, 2));
    CHECK(views.view_a[0].pattern().num_edges() ==
          even.num_edges() - (even.num_edges() - half) + (even.num_edges() % 2 == 0 ? 0 : 0));
    CHECK(views.view_a[0].pattern().num_edges() ==
          static_cast<EdgeId>(static_cast<double>(even.num_edges()) * 0.5));
  }
  SUBCASE("random walk yields one view per layer") {
    const SglViews views = sgl_make_views(m, AugmentKind::kRandomWalk, 0.2, 3,
                                          RngStream(3, 3));
    CHECK(views.view_a.size() == 3);
    CHECK(views.view_b.size() == 3);
  }
  SUBCASE("fixed seed reproduces the view pair") {
    const SglViews a = sgl_make_views(m, AugmentKind::kNodeDropout, 0.3, 2,
                                      RngStream(4, 4));
    const SglViews b = sgl_make_views(m, AugmentKind::kNodeDropout, 0.3, 2,
                                      RngStream(4, 4));
    CHECK(a.view_a[0].pattern() == b.view_a[0].pattern());
    CHECK(a.view_b[0].pattern() == b.view_b[0].pattern());
  }
}

TEST_CASE("gfcf closed form") {
  SUBCASE("identity pattern ranks own items first at t = 0") {
    std::vector<std::pair<Index, Index>> pairs;
    for (Index k = 0; k < 4; ++k) pairs.emplace_back(k, k);
    const InteractionMatrix m = from_pairs(4, 4, pairs);
    const NormalizedAdjacency adj = make_adj(m);
    ModelConfig config = ModelConfig::defaults_for(ModelKind::kGfcf);
    config.gfcf_ideal_weight = 0.0;
    config.svd_rank = 4;
    const ModelState state = init_model(ModelKind::kGfcf, config, adj,
                                        RngStream(1, 2));
    for (Index u = 0; u < 4; ++u) {
      const Vec scores = gfcf_score(state, adj, u);
      for (Index i = 0; i < 4; ++i) {
        if (i != u) CHECK(scores[u] > scores[i]);
      }
    }
  }
  SUBCASE("matches the dense closed-form oracle") {
    RngStream rng(10, 0);
    for (int trial = 0; trial < 6; ++trial) {
      const InteractionMatrix m = random_bipartite_connected(6, 5, 0.45, rng);
      const NormalizedAdjacency adj = make_adj(m);
      ModelConfig config = ModelConfig::defaults_for(ModelKind::kGfcf);
      config.svd_rank = 3;
      config.gfcf_ideal_weight = trial % 2 == 0 ? 0.0 : 0.4;
      const ModelState state = init_model(ModelKind::kGfcf, config, adj,
                                          RngStream(trial, 3));
      // Dense evaluation of R (A~^T A~ + t D^-1/2 V V^T D^1/2).
      const Mat r = dense_matrix(m);
      const Mat an = dense_normalized(adj);
      Mat filter = an.transpose() * an;
      if (config.gfcf_ideal_weight != 0.0) {
        const Mat v = state.svd->v;
        Vec dinv(m.num_items()), dpos(m.num_items());
        for (Index i = 0; i < m.num_items(); ++i) {
          dinv[i] = 1.0 / std::sqrt(static_cast<double>(m.item_degree(i)));
          dpos[i] = std::sqrt(static_cast<double>(m.item_degree(i)));
        }
        filter += config.gfcf_ideal_weight *
                  (dinv.asDiagonal() * v * v.transpose() * dpos.asDiagonal());
      }
      const Mat expected = r * filter;
      for (Index u = 0; u < m.num_users(); ++u) {
        const Vec scores = gfcf_score(state, adj, u);
        for (Index i = 0; i < m.num_items(); ++i) {
          CHECK(scores[i] == doctest::Approx(expected(u, i)).epsilon(1e-9));
        }
      }
    }
  }
}

TEST_CASE("svdgcn base embeddings") {
  RngStream rng(11, 0);
  const InteractionMatrix m = random_bipartite_connected(6, 6, 0.4, rng);
  const NormalizedAdjacency adj = make_adj(m);

  SUBCASE("t1 = 0 reproduces the raw singular vectors") {
    ModelConfig config = ModelConfig::defaults_for(ModelKind::kSvdGcn);
    config.svd_exp_scale = 0.0;
    config.svd_rank = 4;
    config.embed_dim = 4;
    const ModelState state = init_model(ModelKind::kSvdGcn, config, adj,
                                        RngStream(2, 2));
    CHECK((state.svd_base_user - state.svd->u).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((state.svd_base_item - state.svd->v).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("rank-1 graph scales by exp(t1 sigma1)") {
    // Complete bipartite one-item graph is rank 1.
    const InteractionMatrix one =
        from_pairs(3, 1, {{0, 0}, {1, 0}, {2, 0}});
    const NormalizedAdjacency a1 = make_adj(one);
    ModelConfig config = ModelConfig::defaults_for(ModelKind::kSvdGcn);
    config.svd_exp_scale = 1.5;
    config.svd_rank = 1;
    config.embed_dim = 2;
    const ModelState state = init_model(ModelKind::kSvdGcn, config, a1,
                                        RngStream(3, 3));
    const double sigma = state.svd->singular[0];
    CHECK((state.svd_base_user.col(0) - std::exp(1.5 * sigma) * state.svd->u.col(0))
              .cwiseAbs()
              .maxCoeff() < 1e-9);
  }
}

TEST_CASE("ultragcn one-pass aggregation") {
  SUBCASE("single edge with unit degrees copies the embedding") {
    const InteractionMatrix m = from_pairs(1, 1, {{0, 0}});
    const NormalizedAdjacency adj = make_adj(m);
    ModelState state = make_state(ModelKind::kUltraGcn, adj, 3);
    Mat eu, ei;
    ultragcn_forward(state, m, &eu, &ei);
    // Coefficient sqrt(2) / (1 * sqrt(2)) = 1.
    CHECK((eu.row(0) - state.item_embed.row(0)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("degree (3, 1) coefficient") {
    const double coef = std::sqrt(3.0 + 1.0) / (3.0 * std::sqrt(1.0 + 1.0));
    CHECK(coef == doctest::Approx(0.4714).epsilon(1e-3));
  }
  SUBCASE("matches the per-node oracle") {
    RngStream rng(12, 0);
    const InteractionMatrix m = random_bipartite_connected(5, 5, 0.5, rng);
    const NormalizedAdjacency adj = make_adj(m);
    const ModelState state = make_state(ModelKind::kUltraGcn, adj, 4);
    Mat eu, ei;
    ultragcn_forward(state, m, &eu, &ei);
    const Mat expected = node_form_ultragcn_users(state, m);
    CHECK((eu - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("lightgcl global view") {
  RngStream rng(13, 0);
  const InteractionMatrix m = random_bipartite_connected(6, 6, 0.5, rng);
  const NormalizedAdjacency adj = make_adj(m);

  SUBCASE("full rank matches the undropped local step") {
    ModelConfig config = ModelConfig::defaults_for(ModelKind::kLightGcl);
    config.embed_dim = 4;
    config.svd_rank = 6;
    config.dropout_rate = 0.0;
    const ModelState state = init_model(ModelKind::kLightGcl, config, adj,
                                        RngStream(4, 4));
    const PropagateResult local = propagate(state, adj, RngStream(5, 5));
    const std::vector<Mat> global =
        lightgcl_global_view(state, local.user_layers, local.item_layers);
    // With no dropout, G^(l) = lrelu(A~ E^(l-1)) = X^(l) - E^(l-1).
    for (int l = 1; l <= config.layers; ++l) {
      const Mat expected_u =
          local.user_layers[static_cast<std::size_t>(l)] -
          local.user_layers[static_cast<std::size_t>(l - 1)];
      CHECK((global[static_cast<std::size_t>(2 * (l - 1))] - expected_u)
                .cwiseAbs()
                .maxCoeff() < 1e-9);
    }
  }
  SUBCASE("zero embeddings give a zero view") {
    ModelConfig config = ModelConfig::defaults_for(ModelKind::kLightGcl);
    config.embed_dim = 4;
    config.svd_rank = 3;
    ModelState state = init_model(ModelKind::kLightGcl, config, adj,
                                  RngStream(6, 6));
    state.user_embed.setZero();
    state.item_embed.setZero();
    const PropagateResult local = propagate(state, adj, RngStream(7, 7));
    const std::vector<Mat> global =
        lightgcl_global_view(state, local.user_layers, local.item_layers);
    for (const Mat& g : global) CHECK(g.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("factorized association matches the dense oracle") {
    ModelConfig config = ModelConfig::defaults_for(ModelKind::kLightGcl);
    config.embed_dim = 3;
    config.svd_rank = 4;
    const ModelState state = init_model(ModelKind::kLightGcl, config, adj,
                                        RngStream(8, 8));
    const PropagateResult local = propagate(state, adj, RngStream(9, 9));
    const std::vector<Mat> global =
        lightgcl_global_view(state, local.user_layers, local.item_layers);
    const Mat approx = state.svd->u * state.svd->singular.asDiagonal() *
                       state.svd->v.transpose();
    for (int l = 1; l <= config.layers; ++l) {
      Mat expected = approx * local.item_layers[static_cast<std::size_t>(l - 1)];
      expected = expected.unaryExpr([](double v) {
        return v > 0.0 ? v : leaky_relu_slope() * v;
      });
      CHECK((global[static_cast<std::size_t>(2 * (l - 1))] - expected)
                .cwiseAbs()
                .maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("score_all is the dot-product decoder") {
  Mat pu(1, 2), pi(2, 2);
  pu << 1.0, 0.0;
  pi << 1.0, 0.0, 0.0, 1.0;
  const Vec scores = score_all(pu, pi, 0);
  CHECK(scores[0] == doctest::Approx(1.0));
  CHECK(scores[1] == doctest::Approx(0.0));

  SUBCASE("zero user vector scores zero everywhere") {
    Mat zu = Mat::Zero(1, 2);
    const Vec z = score_all(zu, pi, 0);
    CHECK(z.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("masked items sink to -inf") {
    const std::vector<Index> mask = {0};
    const Vec masked = score_all(pu, pi, 0, &mask);
    CHECK(std::isinf(masked[0]));
    CHECK(masked[0] < 0);
  }
  SUBCASE("matches the dense product on random state") {
    RngStream rng(14, 0);
    const Mat u = random_mat(3, 5, rng);
    const Mat i = random_mat(4, 5, rng);
    for (Index r = 0; r < 3; ++r) {
      const Vec scores_r = score_all(u, i, r);
      const Vec expected = i * u.row(r).transpose();
      CHECK((scores_r - expected).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("dgcf routing weights stay on the simplex") {
  RngStream rng(15, 0);
  const InteractionMatrix m = random_bipartite_connected(6, 6, 0.45, rng);
  const NormalizedAdjacency adj = make_adj(m);
  ModelConfig config = ModelConfig::defaults_for(ModelKind::kDgcf);
  config.embed_dim = 8;
  config.intents = 4;
  config.routing_rounds = 3;
  const ModelState state = init_model(ModelKind::kDgcf, config, adj,
                                      RngStream(9, 9));

  // Pre-normalization softmax weights over intents must sum to 1 per edge;
  // verify through the routing entry point by re-deriving the softmax from
  // the final logits.
  std::vector<double> logits;
  dgcf_routed_weights(state, adj, state.user_embed, state.item_embed, &logits);
  const int T = config.intents;
  for (EdgeId e = 0; e < m.num_edges(); ++e) {
    double max_logit = logits[e * T];
    for (int t = 1; t < T; ++t) {
      max_logit = std::max(max_logit, logits[e * T + t]);
    }
    double total = 0.0;
    for (int t = 0; t < T; ++t) total += std::exp(logits[e * T + t] - max_logit);
    double simplex_sum = 0.0;
    for (int t = 0; t < T; ++t) {
      simplex_sum += std::exp(logits[e * T + t] - max_logit) / total;
    }
    CHECK(simplex_sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("gfcf scores are training-free and deterministic") {
  RngStream rng(16, 0);
  const InteractionMatrix m = random_bipartite_connected(8, 7, 0.4, rng);
  const NormalizedAdjacency adj = make_adj(m);
  ModelConfig config = ModelConfig::defaults_for(ModelKind::kGfcf);
  config.svd_rank = 4;
  const ModelState a = init_model(ModelKind::kGfcf, config, adj, RngStream(1, 1));
  const ModelState b = init_model(ModelKind::kGfcf, config, adj, RngStream(1, 1));
  for (Index u = 0; u < m.num_users(); ++u) {
    CHECK((gfcf_score(a, adj, u) - gfcf_score(b, adj, u)).cwiseAbs().maxCoeff() ==
          0.0);
  }
}

TEST_CASE("svdgcn shifted normalization respects the degree spectral bound") {
  RngStream rng(17, 0);
  for (int trial = 0; trial < 8; ++trial) {
    const InteractionMatrix m = random_bipartite_connected(9, 8, 0.4, rng);
    const NormalizedAdjacency adj = make_adj(m);
    ModelConfig config = ModelConfig::defaults_for(ModelKind::kSvdGcn);
    config.embed_dim = 4;
    config.svd_rank = 4;
    config.svd_degree_shift = 1.5;
    const ModelState state = init_model(ModelKind::kSvdGcn, config, adj,
                                        RngStream(trial, 1));
    CHECK(state.svd_degree_bound > 0.0);
    CHECK(state.svd_max_singular <= state.svd_degree_bound + 1e-6);
    CHECK(state.notes.empty());
  }
}
