#include "topocf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "topocf/error.hpp"
#include "topocf/losses.hpp"
#include "topocf/metrics.hpp"
#include "topocf/optim.hpp"

namespace topocf {

namespace {

double lrelu_grad(double pre) {
  return pre > 0.0 ? 1.0 : leaky_relu_slope();
}

Mat lrelu(const Mat& x) {
  const double slope = leaky_relu_slope();
  return x.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
}

// Direct per-layer gradients of a plain propagation chain, pushed back to
// layer 0. E_U^(l) = A~ E_I^(l-1) and E_I^(l) = A~^T E_U^(l-1), so cograds
// travel through the transposed steps.
void backward_chain(const std::vector<const NormalizedAdjacency*>& adj,
                    const std::vector<const std::vector<std::uint8_t>*>& masks,
                    std::vector<Mat>& du, std::vector<Mat>& di) {
  const int layers = static_cast<int>(du.size()) - 1;
  for (int l = layers; l >= 1; --l) {
    const NormalizedAdjacency& a =
        adj.size() == 1 ? *adj[0] : *adj[static_cast<std::size_t>(l - 1)];
    const std::vector<std::uint8_t>* mask =
        masks.empty() ? nullptr : masks[static_cast<std::size_t>(l - 1)];
    du[l - 1] += spmm(a, di[l], Orientation::kUserRows, mask);
    di[l - 1] += spmm(a, du[l], Orientation::kItemRows, mask);
  }
}

// Distributes a pooled-embedding gradient onto per-layer direct gradients.
void scatter_pool_grad(PoolKind kind, const Mat& d_pooled,
                       std::vector<Mat>& d_layers) {
  const std::size_t count = d_layers.size();
  switch (kind) {
    case PoolKind::kSum:
      for (auto& d : d_layers) d += d_pooled;
      return;
    case PoolKind::kWeightedSum:
    case PoolKind::kMean: {
      const double w = 1.0 / static_cast<double>(count);
      for (auto& d : d_layers) d += w * d_pooled;
      return;
    }
    case PoolKind::kConcat: {
      const Eigen::Index f = d_layers[0].cols();
      for (std::size_t l = 0; l < count; ++l) {
        d_layers[l] += d_pooled.middleCols(static_cast<Eigen::Index>(l) * f, f);
      }
      return;
    }
    case PoolKind::kLast:
      d_layers.back() += d_pooled;
      return;
  }
}

std::vector<Index> dedup_sorted(std::vector<Index> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

Mat gather_rows(const Mat& m, const std::vector<Index>& rows) {
  Mat out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(r) = m.row(rows[r]);
  return out;
}

void scatter_rows(const Mat& grad, const std::vector<Index>& rows, Mat& into) {
  for (std::size_t r = 0; r < rows.size(); ++r) into.row(rows[r]) += grad.row(r);
}

struct LossAccumulator {
  std::map<std::string, double> sums;
  void add(const std::string& name, double value) { sums[name] += value; }
};

class Trainer {
 public:
  Trainer(ModelKind kind, const ModelConfig& mc, const TrainConfig& tc,
          const SplitDataset& splits)
      : kind_(kind),
        tconfig_(tc),
        splits_(splits),
        train_ptr_(std::make_shared<InteractionMatrix>(splits.train)),
        adj_(symmetric_normalize(train_ptr_, /*allow_isolates=*/true)),
        rng_(tc.seed, 0x7EA1) {
    tconfig_.validate();
    state_ = init_model(kind, mc, adj_, RngStream(tc.seed, 0x1017));
    if (kind == ModelKind::kSvdGcn) {
      user_projection_ = project(splits.train, Side::kUser);
      item_projection_ = project(splits.train, Side::kItem);
    }
    collect_params();
    adam_ = AdamState(const_params());
  }

  TrainResult run();

 private:
  void collect_params() {
    params_.clear();
    if (kind_ == ModelKind::kSvdGcn) {
      params_.push_back(&state_.svd_weight);
    } else {
      params_.push_back(&state_.user_embed);
      params_.push_back(&state_.item_embed);
      if (kind_ == ModelKind::kNgcf) {
        for (auto& w : state_.w_neigh) params_.push_back(&w);
        for (auto& w : state_.w_inter) params_.push_back(&w);
        for (auto& b : state_.bias) params_.push_back(&b);
      }
    }
    grads_.clear();
    for (Mat* p : params_) grads_.push_back(Mat::Zero(p->rows(), p->cols()));
  }

  std::vector<const Mat*> const_params() const {
    std::vector<const Mat*> out;
    for (const Mat* p : params_) out.push_back(p);
    return out;
  }

  void zero_grads() {
    for (Mat& g : grads_) g.setZero();
  }

  Mat& grad_user() { return grads_[0]; }
  Mat& grad_item() { return grads_[1]; }

  // Applies L2 on the batch-touched embedding rows plus any weight tensors.
  double apply_l2(const std::vector<Triple>& triples) {
    const double l2 = tconfig_.l2_reg;
    if (l2 == 0.0) return 0.0;
    double loss = 0.0;
    if (kind_ == ModelKind::kSvdGcn) {
      loss += l2 * state_.svd_weight.squaredNorm();
      grads_[0] += 2.0 * l2 * state_.svd_weight;
      return loss;
    }
    const double inv_n = 1.0 / static_cast<double>(std::max<std::size_t>(1, triples.size()));
    for (const Triple& t : triples) {
      loss += l2 * inv_n * (state_.user_embed.row(t.user).squaredNorm() +
                            state_.item_embed.row(t.pos).squaredNorm() +
                            state_.item_embed.row(t.neg).squaredNorm());
      grad_user().row(t.user) += 2.0 * l2 * inv_n * state_.user_embed.row(t.user);
      grad_item().row(t.pos) += 2.0 * l2 * inv_n * state_.item_embed.row(t.pos);
      grad_item().row(t.neg) += 2.0 * l2 * inv_n * state_.item_embed.row(t.neg);
    }
    std::size_t w = 2;
    for (; w < params_.size(); ++w) {
      loss += l2 * params_[w]->squaredNorm();
      grads_[w] += 2.0 * l2 * (*params_[w]);
    }
    return loss;
  }

  // Adds the BPR term on pooled embeddings; returns loss and fills pooled
  // gradient buffers.
  double bpr_on_pooled(const std::vector<Triple>& triples, const Mat& pu,
                       const Mat& pi, Mat& dpu, Mat& dpi) {
    const std::size_t n = triples.size();
    Vec pos(n), neg(n);
    for (std::size_t k = 0; k < n; ++k) {
      pos[k] = pu.row(triples[k].user).dot(pi.row(triples[k].pos));
      neg[k] = pu.row(triples[k].user).dot(pi.row(triples[k].neg));
    }
    Vec dpos = Vec::Zero(n), dneg = Vec::Zero(n);
    const double loss = loss_bpr(pos, neg, &dpos, &dneg);
    for (std::size_t k = 0; k < n; ++k) {
      const Triple& t = triples[k];
      dpu.row(t.user) += tconfig_.w_bpr * (dpos[k] * pi.row(t.pos) + dneg[k] * pi.row(t.neg));
      dpi.row(t.pos) += tconfig_.w_bpr * dpos[k] * pu.row(t.user);
      dpi.row(t.neg) += tconfig_.w_bpr * dneg[k] * pu.row(t.user);
    }
    return loss;
  }

  // InfoNCE on a node subset between two pooled views; fills both pooled
  // gradient buffers.
  double infonce_on_rows(const std::vector<Index>& rows, const Mat& pa,
                         const Mat& pb, double weight, Mat& dpa, Mat& dpb) {
    if (rows.size() < 2) return 0.0;
    const Mat a = gather_rows(pa, rows);
    const Mat b = gather_rows(pb, rows);
    Mat da = Mat::Zero(a.rows(), a.cols());
    Mat db = Mat::Zero(b.rows(), b.cols());
    const double loss =
        loss_infonce(a, b, state_.config.temperature, &da, &db);
    da *= weight;
    db *= weight;
    scatter_rows(da, rows, dpa);
    scatter_rows(db, rows, dpb);
    return loss;
  }

  std::vector<std::pair<int, int>> sample_pairs(std::size_t set_size,
                                                std::size_t count,
                                                RngStream& rng) {
    std::vector<std::pair<int, int>> pairs;
    if (set_size < 2) return pairs;
    pairs.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
      const int a = static_cast<int>(rng.below(set_size));
      int b = static_cast<int>(rng.below(set_size));
      if (b == a) b = (b + 1) % static_cast<int>(set_size);
      pairs.emplace_back(a, b);
    }
    return pairs;
  }

  // Most-popular slice (top 10% by train degree) of the batch's items.
  std::vector<Index> popular_items(const std::vector<Triple>& triples) {
    std::vector<Index> items;
    items.reserve(triples.size());
    for (const Triple& t : triples) items.push_back(t.pos);
    items = dedup_sorted(std::move(items));
    std::sort(items.begin(), items.end(), [&](Index a, Index b) {
      const Index da = splits_.train.item_degree(a);
      const Index db = splits_.train.item_degree(b);
      if (da != db) return da > db;
      return a < b;
    });
    std::size_t keep = std::max<std::size_t>(2, items.size() / 10);
    keep = std::min(keep, items.size());
    items.resize(keep);
    return items;
  }

  double step_lightgcn_family(const std::vector<Triple>& triples,
                              LossAccumulator& acc, RngStream& batch_rng);
  double step_ngcf(const std::vector<Triple>& triples, LossAccumulator& acc);
  double step_dgcf(const std::vector<Triple>& triples, LossAccumulator& acc,
                   RngStream& batch_rng);
  double step_ultragcn(const std::vector<Triple>& triples, LossAccumulator& acc);
  double step_svdgcn(const std::vector<Triple>& triples, LossAccumulator& acc,
                     RngStream& batch_rng);
  double step_lightgcl(const std::vector<Triple>& triples, LossAccumulator& acc,
                       RngStream& batch_rng);

  double batch_step(const std::vector<Triple>& triples, LossAccumulator& acc,
                    RngStream batch_rng);

  ModelKind kind_;
  TrainConfig tconfig_;
  const SplitDataset& splits_;
  std::shared_ptr<const InteractionMatrix> train_ptr_;
  NormalizedAdjacency adj_;
  ModelState state_;
  AdamState adam_;
  std::vector<Mat*> params_;
  std::vector<Mat> grads_;
  RngStream rng_;
  ProjectedGraph user_projection_;
  ProjectedGraph item_projection_;
  SglViews epoch_views_;  // SGL, regenerated per epoch
};

double Trainer::step_lightgcn_family(const std::vector<Triple>& triples,
                                     LossAccumulator& acc,
                                     RngStream& batch_rng) {
  const ModelConfig& mc = state_.config;
  const PoolKind pooling = mc.pooling;
  double total = 0.0;

  // Clean chain: the recommendation task (and uniformity) for every kind
  // except XSimGCL, which recommends from its perturbed view.
  const bool noisy_bpr = kind_ == ModelKind::kXSimGcl;
  PropagateResult clean, noisy_a, noisy_b;
  if (!noisy_bpr) {
    clean = propagate_chain({&adj_}, state_.user_embed, state_.item_embed,
                            mc.layers);
  }
  if (kind_ == ModelKind::kSimGcl) {
    noisy_a = propagate(state_, adj_, batch_rng.fork(1));
    noisy_b = propagate(state_, adj_, batch_rng.fork(2));
  } else if (kind_ == ModelKind::kXSimGcl) {
    noisy_a = propagate(state_, adj_, batch_rng.fork(1));
  }

  const PropagateResult& rec_chain = noisy_bpr ? noisy_a : clean;
  const Mat pu = pool_layers(rec_chain.user_layers, pooling);
  const Mat pi = pool_layers(rec_chain.item_layers, pooling);
  Mat dpu = Mat::Zero(pu.rows(), pu.cols());
  Mat dpi = Mat::Zero(pi.rows(), pi.cols());

  std::vector<Index> batch_users, batch_items;
  for (const Triple& t : triples) {
    batch_users.push_back(t.user);
    batch_items.push_back(t.pos);
  }
  batch_users = dedup_sorted(std::move(batch_users));
  batch_items = dedup_sorted(std::move(batch_items));

  if (kind_ != ModelKind::kGraphAu) {
    const double bpr = bpr_on_pooled(triples, pu, pi, dpu, dpi);
    acc.add("bpr", bpr);
    total += tconfig_.w_bpr * bpr;
  }

  // Direct per-layer gradients for the recommendation chain.
  std::vector<Mat> du(rec_chain.user_layers.size(),
                      Mat::Zero(pu.rows(), state_.user_embed.cols()));
  std::vector<Mat> di(rec_chain.item_layers.size(),
                      Mat::Zero(pi.rows(), state_.item_embed.cols()));

  if (kind_ == ModelKind::kGraphAu) {
    // Alignment over the batch's positive pairs, layer by layer.
    std::vector<Index> pair_users, pair_items;
    for (const Triple& t : triples) {
      pair_users.push_back(t.user);
      pair_items.push_back(t.pos);
    }
    std::vector<Mat> u_rows, i_rows, du_rows, di_rows;
    for (std::size_t l = 0; l < clean.user_layers.size(); ++l) {
      u_rows.push_back(gather_rows(clean.user_layers[l], pair_users));
      i_rows.push_back(gather_rows(clean.item_layers[l], pair_items));
      du_rows.push_back(Mat::Zero(u_rows[l].rows(), u_rows[l].cols()));
      di_rows.push_back(Mat::Zero(i_rows[l].rows(), i_rows[l].cols()));
    }
    const double align = loss_alignment_graphau(u_rows, i_rows,
                                                mc.align_layer_weight,
                                                &du_rows, &di_rows);
    acc.add("alignment", align);
    total += tconfig_.w_align * align;
    for (std::size_t l = 0; l < du_rows.size(); ++l) {
      du_rows[l] *= tconfig_.w_align;
      di_rows[l] *= tconfig_.w_align;
      scatter_rows(du_rows[l], pair_users, du[l]);
      scatter_rows(di_rows[l], pair_items, di[l]);
    }

    // Uniformity trade-off on the pooled user and item embeddings.
    const double unl_weight = mc.align_uniform_tradeoff / 2.0;
    if (unl_weight != 0.0) {
      double unl = 0.0;
      for (int side = 0; side < 2; ++side) {
        const std::vector<Index>& rows = side == 0 ? batch_users : batch_items;
        const Mat& pooled = side == 0 ? pu : pi;
        Mat& dpool = side == 0 ? dpu : dpi;
        if (rows.size() < 2) continue;
        const Mat sub = gather_rows(pooled, rows);
        const auto pairs = sample_pairs(rows.size(), triples.size(), batch_rng);
        Mat dsub = Mat::Zero(sub.rows(), sub.cols());
        const double value = loss_uniformity(sub, pairs, &dsub);
        unl += 0.5 * value;
        dsub *= unl_weight * 0.5;
        scatter_rows(dsub, rows, dpool);
      }
      acc.add("uniformity", unl);
      total += unl_weight * unl;
    }
  }

  if (kind_ == ModelKind::kSimGcl) {
    // Contrast the two perturbed views on users and items.
    const Mat pa_u = pool_layers(noisy_a.user_layers, pooling);
    const Mat pa_i = pool_layers(noisy_a.item_layers, pooling);
    const Mat pb_u = pool_layers(noisy_b.user_layers, pooling);
    const Mat pb_i = pool_layers(noisy_b.item_layers, pooling);
    Mat dpa_u = Mat::Zero(pa_u.rows(), pa_u.cols());
    Mat dpa_i = Mat::Zero(pa_i.rows(), pa_i.cols());
    Mat dpb_u = Mat::Zero(pb_u.rows(), pb_u.cols());
    Mat dpb_i = Mat::Zero(pb_i.rows(), pb_i.cols());
    double cl = 0.0;
    cl += infonce_on_rows(batch_users, pa_u, pb_u, tconfig_.w_contrast, dpa_u, dpb_u);
    cl += infonce_on_rows(batch_items, pa_i, pb_i, tconfig_.w_contrast, dpa_i, dpb_i);
    acc.add("contrastive", cl);
    total += tconfig_.w_contrast * cl;

    // Uniformity over the most popular items (clean view).
    const std::vector<Index> pop = popular_items(triples);
    if (pop.size() >= 2) {
      const Mat sub = gather_rows(pi, pop);
      const auto pairs = sample_pairs(pop.size(), triples.size(), batch_rng);
      Mat dsub = Mat::Zero(sub.rows(), sub.cols());
      const double unl = loss_uniformity(sub, pairs, &dsub);
      acc.add("uniformity", unl);
      total += tconfig_.w_uniform * unl;
      dsub *= tconfig_.w_uniform;
      scatter_rows(dsub, pop, dpi);
    }

    // Backward through both noisy chains (noise is constant).
    std::vector<Mat> dau(noisy_a.user_layers.size(), Mat::Zero(pu.rows(), pu.cols()));
    std::vector<Mat> dai(noisy_a.item_layers.size(), Mat::Zero(pi.rows(), pi.cols()));
    std::vector<Mat> dbu(noisy_b.user_layers.size(), Mat::Zero(pu.rows(), pu.cols()));
    std::vector<Mat> dbi(noisy_b.item_layers.size(), Mat::Zero(pi.rows(), pi.cols()));
    scatter_pool_grad(pooling, dpa_u, dau);
    scatter_pool_grad(pooling, dpa_i, dai);
    scatter_pool_grad(pooling, dpb_u, dbu);
    scatter_pool_grad(pooling, dpb_i, dbi);
    backward_chain({&adj_}, {}, dau, dai);
    backward_chain({&adj_}, {}, dbu, dbi);
    grad_user() += dau[0] + dbu[0];
    grad_item() += dai[0] + dbi[0];
  }

  if (kind_ == ModelKind::kXSimGcl) {
    // Cross-layer contrast between the pooled view and layer l*.
    const int cl_layer = mc.contrast_layer;
    Mat d_layer_i = Mat::Zero(pi.rows(), pi.cols());
    const double cl = [&] {
      if (batch_items.size() < 2) return 0.0;
      const Mat a = gather_rows(pi, batch_items);
      const Mat b = gather_rows(noisy_a.item_layers[static_cast<std::size_t>(cl_layer)],
                                batch_items);
      Mat da = Mat::Zero(a.rows(), a.cols());
      Mat db = Mat::Zero(b.rows(), b.cols());
      const double v = loss_infonce(a, b, mc.temperature, &da, &db);
      da *= tconfig_.w_contrast;
      db *= tconfig_.w_contrast;
      scatter_rows(da, batch_items, dpi);
      scatter_rows(db, batch_items, d_layer_i);
      return v;
    }();
    acc.add("contrastive", cl);
    total += tconfig_.w_contrast * cl;
    di[static_cast<std::size_t>(cl_layer)] += d_layer_i;
  }

  if (kind_ == ModelKind::kSgl) {
    // Contrast the two augmented views.
    std::vector<const NormalizedAdjacency*> adj_a, adj_b;
    for (const auto& a : epoch_views_.view_a) adj_a.push_back(&a);
    for (const auto& b : epoch_views_.view_b) adj_b.push_back(&b);
    PropagateResult va = propagate_chain(adj_a, state_.user_embed,
                                         state_.item_embed, mc.layers);
    PropagateResult vb = propagate_chain(adj_b, state_.user_embed,
                                         state_.item_embed, mc.layers);
    const Mat va_u = pool_layers(va.user_layers, pooling);
    const Mat va_i = pool_layers(va.item_layers, pooling);
    const Mat vb_u = pool_layers(vb.user_layers, pooling);
    const Mat vb_i = pool_layers(vb.item_layers, pooling);
    Mat dva_u = Mat::Zero(va_u.rows(), va_u.cols());
    Mat dva_i = Mat::Zero(va_i.rows(), va_i.cols());
    Mat dvb_u = Mat::Zero(vb_u.rows(), vb_u.cols());
    Mat dvb_i = Mat::Zero(vb_i.rows(), vb_i.cols());
    double ssl = 0.0;
    ssl += infonce_on_rows(batch_users, va_u, vb_u, tconfig_.w_contrast, dva_u, dvb_u);
    ssl += infonce_on_rows(batch_items, va_i, vb_i, tconfig_.w_contrast, dva_i, dvb_i);
    acc.add("contrastive", ssl);
    total += tconfig_.w_contrast * ssl;

    std::vector<Mat> dau(va.user_layers.size(), Mat::Zero(pu.rows(), pu.cols()));
    std::vector<Mat> dai(va.item_layers.size(), Mat::Zero(pi.rows(), pi.cols()));
    std::vector<Mat> dbu(vb.user_layers.size(), Mat::Zero(pu.rows(), pu.cols()));
    std::vector<Mat> dbi(vb.item_layers.size(), Mat::Zero(pi.rows(), pi.cols()));
    scatter_pool_grad(pooling, dva_u, dau);
    scatter_pool_grad(pooling, dva_i, dai);
    scatter_pool_grad(pooling, dvb_u, dbu);
    scatter_pool_grad(pooling, dvb_i, dbi);
    backward_chain(adj_a, {}, dau, dai);
    backward_chain(adj_b, {}, dbu, dbi);
    grad_user() += dau[0] + dbu[0];
    grad_item() += dai[0] + dbi[0];
  }

  // Backward through the recommendation chain.
  scatter_pool_grad(pooling, dpu, du);
  scatter_pool_grad(pooling, dpi, di);
  backward_chain({&adj_}, {}, du, di);
  grad_user() += du[0];
  grad_item() += di[0];
  return total;
}

double Trainer::step_ngcf(const std::vector<Triple>& triples,
                          LossAccumulator& acc) {
  const ModelConfig& mc = state_.config;
  const int layers = mc.layers;

  // Forward with caches.
  std::vector<Mat> xu{state_.user_embed}, xi{state_.item_embed};
  std::vector<Mat> msg_u, msg_i, zu, zi;
  for (int l = 1; l <= layers; ++l) {
    const Mat& prev_u = xu.back();
    const Mat& prev_i = xi.back();
    msg_u.push_back(spmm(adj_, prev_i, Orientation::kUserRows));
    msg_i.push_back(spmm(adj_, prev_u, Orientation::kItemRows));
    const Mat& wn = state_.w_neigh[static_cast<std::size_t>(l - 1)];
    const Mat& wi = state_.w_inter[static_cast<std::size_t>(l - 1)];
    const Mat& b = state_.bias[static_cast<std::size_t>(l - 1)];
    Mat pre_u = msg_u.back() * wn + msg_u.back().cwiseProduct(prev_u) * wi;
    pre_u.rowwise() += b.row(0);
    Mat pre_i = msg_i.back() * wn + msg_i.back().cwiseProduct(prev_i) * wi;
    pre_i.rowwise() += b.row(0);
    zu.push_back(pre_u);
    zi.push_back(pre_i);
    xu.push_back(lrelu(pre_u));
    xi.push_back(lrelu(pre_i));
  }
  const Mat pu = pool_layers(xu, mc.pooling);
  const Mat pi = pool_layers(xi, mc.pooling);
  Mat dpu = Mat::Zero(pu.rows(), pu.cols());
  Mat dpi = Mat::Zero(pi.rows(), pi.cols());
  const double bpr = bpr_on_pooled(triples, pu, pi, dpu, dpi);
  acc.add("bpr", bpr);

  std::vector<Mat> du(xu.size(), Mat::Zero(xu[0].rows(), xu[0].cols()));
  std::vector<Mat> di(xi.size(), Mat::Zero(xi[0].rows(), xi[0].cols()));
  scatter_pool_grad(mc.pooling, dpu, du);
  scatter_pool_grad(mc.pooling, dpi, di);

  const std::size_t w_neigh_base = 2;
  const std::size_t w_inter_base = w_neigh_base + static_cast<std::size_t>(layers);
  const std::size_t bias_base = w_inter_base + static_cast<std::size_t>(layers);

  for (int l = layers; l >= 1; --l) {
    const std::size_t li = static_cast<std::size_t>(l - 1);
    const Mat& wn = state_.w_neigh[li];
    const Mat& wi = state_.w_inter[li];
    const Mat dzu = du[static_cast<std::size_t>(l)].cwiseProduct(
        zu[li].unaryExpr([](double v) { return lrelu_grad(v); }));
    const Mat dzi = di[static_cast<std::size_t>(l)].cwiseProduct(
        zi[li].unaryExpr([](double v) { return lrelu_grad(v); }));

    grads_[w_neigh_base + li] += msg_u[li].transpose() * dzu +
                                 msg_i[li].transpose() * dzi;
    grads_[w_inter_base + li] +=
        msg_u[li].cwiseProduct(xu[li]).transpose() * dzu +
        msg_i[li].cwiseProduct(xi[li]).transpose() * dzi;
    grads_[bias_base + li] += dzu.colwise().sum() + dzi.colwise().sum();

    const Mat dmsg_u = dzu * wn.transpose() + (dzu * wi.transpose()).cwiseProduct(xu[li]);
    const Mat dmsg_i = dzi * wn.transpose() + (dzi * wi.transpose()).cwiseProduct(xi[li]);
    du[li] += (dzu * wi.transpose()).cwiseProduct(msg_u[li]);
    di[li] += (dzi * wi.transpose()).cwiseProduct(msg_i[li]);
    // msg_u = A~ x_i and msg_i = A~^T x_u.
    di[li] += spmm(adj_, dmsg_u, Orientation::kItemRows);
    du[li] += spmm(adj_, dmsg_i, Orientation::kUserRows);
  }
  grad_user() += du[0];
  grad_item() += di[0];
  return tconfig_.w_bpr * bpr;
}

double Trainer::step_dgcf(const std::vector<Triple>& triples,
                          LossAccumulator& acc, RngStream& batch_rng) {
  const ModelConfig& mc = state_.config;
  const int T = mc.intents;
  const Index chunk = static_cast<Index>(mc.embed_dim / T);
  const InteractionMatrix& m = adj_.pattern();

  PropagateResult res = propagate(state_, adj_, batch_rng.fork(9));
  const Mat pu = pool_layers(res.user_layers, mc.pooling);
  const Mat pi = pool_layers(res.item_layers, mc.pooling);
  Mat dpu = Mat::Zero(pu.rows(), pu.cols());
  Mat dpi = Mat::Zero(pi.rows(), pi.cols());

  double total = 0.0;
  const double bpr = bpr_on_pooled(triples, pu, pi, dpu, dpi);
  acc.add("bpr", bpr);
  total += tconfig_.w_bpr * bpr;

  // Independence between intent chunks over a subsample of batch nodes.
  if (tconfig_.w_independence != 0.0 && T >= 2) {
    std::vector<Index> users, items;
    for (const Triple& t : triples) {
      users.push_back(t.user);
      items.push_back(t.pos);
    }
    users = dedup_sorted(std::move(users));
    items = dedup_sorted(std::move(items));
    constexpr std::size_t kCorSample = 64;
    if (users.size() > kCorSample) {
      batch_rng.shuffle(users.data(), users.size());
      users.resize(kCorSample);
      std::sort(users.begin(), users.end());
    }
    if (items.size() > kCorSample) {
      batch_rng.shuffle(items.data(), items.size());
      items.resize(kCorSample);
      std::sort(items.begin(), items.end());
    }
    const std::size_t rows = users.size() + items.size();
    if (rows >= 4) {
      Mat stacked(rows, pu.cols());
      for (std::size_t r = 0; r < users.size(); ++r) stacked.row(r) = pu.row(users[r]);
      for (std::size_t r = 0; r < items.size(); ++r) {
        stacked.row(users.size() + r) = pi.row(items[r]);
      }
      std::vector<Mat> chunks, chunk_grads;
      for (int t = 0; t < T; ++t) {
        chunks.push_back(stacked.middleCols(static_cast<Index>(t) * chunk, chunk));
        chunk_grads.push_back(Mat::Zero(rows, chunk));
      }
      const double idl = loss_independence_dcor(chunks, &chunk_grads);
      acc.add("independence", idl);
      total += tconfig_.w_independence * idl;
      Mat dstacked = Mat::Zero(rows, pu.cols());
      for (int t = 0; t < T; ++t) {
        dstacked.middleCols(static_cast<Index>(t) * chunk, chunk) =
            tconfig_.w_independence * chunk_grads[static_cast<std::size_t>(t)];
      }
      for (std::size_t r = 0; r < users.size(); ++r) dpu.row(users[r]) += dstacked.row(r);
      for (std::size_t r = 0; r < items.size(); ++r) {
        dpi.row(items[r]) += dstacked.row(users.size() + r);
      }
    }
  }

  // Backward with the routing weights frozen at their forward values.
  std::vector<Mat> du(res.user_layers.size(), Mat::Zero(pu.rows(), pu.cols()));
  std::vector<Mat> di(res.item_layers.size(), Mat::Zero(pi.rows(), pi.cols()));
  scatter_pool_grad(mc.pooling, dpu, du);
  scatter_pool_grad(mc.pooling, dpi, di);
  for (int l = static_cast<int>(res.user_layers.size()) - 1; l >= 1; --l) {
    const std::vector<double>& w = res.dgcf_weights[static_cast<std::size_t>(l - 1)];
    Mat& du_prev = du[static_cast<std::size_t>(l - 1)];
    Mat& di_prev = di[static_cast<std::size_t>(l - 1)];
    const Mat& du_cur = du[static_cast<std::size_t>(l)];
    const Mat& di_cur = di[static_cast<std::size_t>(l)];
    for (Index u = 0; u < m.num_users(); ++u) {
      for (EdgeId e = m.row_ptr()[u]; e < m.row_ptr()[u + 1]; ++e) {
        const Index i = m.items()[e];
        for (int t = 0; t < T; ++t) {
          const double wt = w[e * static_cast<std::size_t>(T) + static_cast<std::size_t>(t)];
          if (wt == 0.0) continue;
          const Index c0 = static_cast<Index>(t) * chunk;
          di_prev.row(i).segment(c0, chunk) += wt * du_cur.row(u).segment(c0, chunk);
          du_prev.row(u).segment(c0, chunk) += wt * di_cur.row(i).segment(c0, chunk);
        }
      }
    }
  }
  grad_user() += du[0];
  grad_item() += di[0];
  return total;
}

double Trainer::step_ultragcn(const std::vector<Triple>& triples,
                              LossAccumulator& acc) {
  const UltraTables& tbl = *state_.ultra;
  const InteractionMatrix& m = splits_.train;
  Mat eu, ei;
  ultragcn_forward(state_, m, &eu, &ei);
  Mat deu = Mat::Zero(eu.rows(), eu.cols());
  Mat dei = Mat::Zero(ei.rows(), ei.cols());

  double total = 0.0;
  const double bpr = bpr_on_pooled(triples, eu, ei, deu, dei);
  acc.add("bpr", bpr);
  total += tconfig_.w_bpr * bpr;

  const std::size_t n = triples.size();
  UltraBatch batch;
  batch.pos_scores.resize(n);
  batch.neg_scores.resize(n);
  batch.pos_coef.resize(n);
  batch.neg_coef.resize(n);
  batch.item_scores.resize(n);
  batch.item_coef.resize(n);
  auto beta = [&](Index u, Index i) {
    return tbl.user_coef[u] /
           std::sqrt(static_cast<double>(m.item_degree(i)) + 1.0);
  };
  for (std::size_t k = 0; k < n; ++k) {
    const Triple& t = triples[k];
    batch.pos_scores[k] = eu.row(t.user).dot(ei.row(t.pos));
    batch.neg_scores[k] = eu.row(t.user).dot(ei.row(t.neg));
    batch.pos_coef[k] = beta(t.user, t.pos);
    batch.neg_coef[k] = beta(t.user, t.neg);
    const auto& topk = tbl.item_topk[t.pos];
    const auto& topw = tbl.item_topk_weight[t.pos];
    Vec s(topk.size()), c(topk.size());
    for (std::size_t j = 0; j < topk.size(); ++j) {
      s[j] = eu.row(t.user).dot(ei.row(topk[j]));
      c[j] = topw[j];
    }
    batch.item_scores[k] = std::move(s);
    batch.item_coef[k] = std::move(c);
  }
  UltraBatch g;
  g.pos_scores = Vec::Zero(n);
  g.neg_scores = Vec::Zero(n);
  g.item_scores.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    g.item_scores[k] = Vec::Zero(batch.item_scores[k].size());
  }
  const ModelConfig& mc = state_.config;
  const double ultra = loss_ultragcn(batch, mc.ultra_pos_weight,
                                     mc.ultra_neg_weight, mc.ultra_item_weight, &g);
  acc.add("ultra", ultra);
  total += tconfig_.w_ultra * ultra;
  for (std::size_t k = 0; k < n; ++k) {
    const Triple& t = triples[k];
    const double wp = tconfig_.w_ultra * g.pos_scores[k];
    const double wn = tconfig_.w_ultra * g.neg_scores[k];
    deu.row(t.user) += wp * ei.row(t.pos) + wn * ei.row(t.neg);
    dei.row(t.pos) += wp * eu.row(t.user);
    dei.row(t.neg) += wn * eu.row(t.user);
    const auto& topk = tbl.item_topk[t.pos];
    for (std::size_t j = 0; j < topk.size(); ++j) {
      const double wj = tconfig_.w_ultra * g.item_scores[k][j];
      deu.row(t.user) += wj * ei.row(topk[j]);
      dei.row(topk[j]) += wj * eu.row(t.user);
    }
  }

  // Backward through the one-pass aggregation.
  for (Index u = 0; u < m.num_users(); ++u) {
    for (EdgeId e = m.row_ptr()[u]; e < m.row_ptr()[u + 1]; ++e) {
      const Index i = m.items()[e];
      const double b_ui = beta(u, i);
      const double b_iu = tbl.item_coef[i] /
          std::sqrt(static_cast<double>(m.user_degree(u)) + 1.0);
      grad_item().row(i) += b_ui * deu.row(u);
      grad_user().row(u) += b_iu * dei.row(i);
    }
  }
  return total;
}

double Trainer::step_svdgcn(const std::vector<Triple>& triples,
                            LossAccumulator& acc, RngStream& batch_rng) {
  const Mat eu = state_.svd_base_user * state_.svd_weight;
  const Mat ei = state_.svd_base_item * state_.svd_weight;
  Mat deu = Mat::Zero(eu.rows(), eu.cols());
  Mat dei = Mat::Zero(ei.rows(), ei.cols());

  double total = 0.0;
  const double bpr = bpr_on_pooled(triples, eu, ei, deu, dei);
  acc.add("bpr", bpr);
  total += tconfig_.w_bpr * bpr;

  // Same-side pairwise terms over the projected co-occurrence graphs.
  auto side_pairs = [&](const ProjectedGraph& proj, const Mat& emb, Mat& demb,
                        const std::vector<Index>& anchors) {
    double loss = 0.0;
    std::vector<Index> a_ok, v_ok, w_ok;
    for (Index a : anchors) {
      if (proj.projected_degree(a) == 0) continue;
      const EdgeId begin = proj.row_ptr[a];
      const Index v = proj.neighbors[begin + batch_rng.below(
          proj.projected_degree(a))];
      Index w = 0;
      bool found = false;
      for (int attempt = 0; attempt < 50; ++attempt) {
        w = static_cast<Index>(batch_rng.below(proj.num_nodes));
        if (w != a && !proj.has_edge(a, w)) {
          found = true;
          break;
        }
      }
      if (!found) continue;
      a_ok.push_back(a);
      v_ok.push_back(v);
      w_ok.push_back(w);
    }
    if (a_ok.empty()) return 0.0;
    const std::size_t n = a_ok.size();
    Vec pos(n), neg(n);
    for (std::size_t k = 0; k < n; ++k) {
      pos[k] = emb.row(a_ok[k]).dot(emb.row(v_ok[k]));
      neg[k] = emb.row(a_ok[k]).dot(emb.row(w_ok[k]));
    }
    Vec dpos = Vec::Zero(n), dneg = Vec::Zero(n);
    loss = loss_pairwise_logistic(pos, neg, &dpos, &dneg);
    for (std::size_t k = 0; k < n; ++k) {
      const double gp = tconfig_.w_pairwise * dpos[k];
      const double gn = tconfig_.w_pairwise * dneg[k];
      demb.row(a_ok[k]) += gp * emb.row(v_ok[k]) + gn * emb.row(w_ok[k]);
      demb.row(v_ok[k]) += gp * emb.row(a_ok[k]);
      demb.row(w_ok[k]) += gn * emb.row(a_ok[k]);
    }
    return loss;
  };

  std::vector<Index> users, items;
  for (const Triple& t : triples) {
    users.push_back(t.user);
    items.push_back(t.pos);
  }
  double pair_loss = 0.0;
  if (user_projection_.num_undirected_edges() > 0) {
    pair_loss += side_pairs(user_projection_, eu, deu, users);
  }
  if (item_projection_.num_undirected_edges() > 0) {
    pair_loss += side_pairs(item_projection_, ei, dei, items);
  }
  acc.add("pairwise", pair_loss);
  total += tconfig_.w_pairwise * pair_loss;

  grads_[0] += state_.svd_base_user.transpose() * deu +
               state_.svd_base_item.transpose() * dei;
  return total;
}

double Trainer::step_lightgcl(const std::vector<Triple>& triples,
                              LossAccumulator& acc, RngStream& batch_rng) {
  const ModelConfig& mc = state_.config;
  const int layers = mc.layers;
  const SvdFactors& svd = *state_.svd;

  // Local chain with per-layer edge dropout, caching pre-activations.
  RngStream drop_rng = batch_rng.fork(3);
  PropagateResult local = propagate(state_, adj_, drop_rng);
  // Recompute pre-activations from the recorded masks.
  std::vector<Mat> zu, zi;
  for (int l = 1; l <= layers; ++l) {
    const auto& mask = local.edge_masks[static_cast<std::size_t>(l - 1)];
    zu.push_back(spmm(adj_, local.item_layers[static_cast<std::size_t>(l - 1)],
                      Orientation::kUserRows, &mask));
    zi.push_back(spmm(adj_, local.user_layers[static_cast<std::size_t>(l - 1)],
                      Orientation::kItemRows, &mask));
  }
  // Global view from the same chain inputs.
  std::vector<Mat> gu_pre, gi_pre, gu, gi;
  for (int l = 1; l <= layers; ++l) {
    const Mat& prev_i = local.item_layers[static_cast<std::size_t>(l - 1)];
    const Mat& prev_u = local.user_layers[static_cast<std::size_t>(l - 1)];
    Mat pu_pre = svd.u * (svd.singular.asDiagonal() * (svd.v.transpose() * prev_i));
    Mat pi_pre = svd.v * (svd.singular.asDiagonal() * (svd.u.transpose() * prev_u));
    gu.push_back(lrelu(pu_pre));
    gi.push_back(lrelu(pi_pre));
    gu_pre.push_back(std::move(pu_pre));
    gi_pre.push_back(std::move(pi_pre));
  }

  const Mat pu = pool_layers(local.user_layers, mc.pooling);
  const Mat pi = pool_layers(local.item_layers, mc.pooling);
  Mat dpu = Mat::Zero(pu.rows(), pu.cols());
  Mat dpi = Mat::Zero(pi.rows(), pi.cols());

  double total = 0.0;
  // Hinge recommendation loss on positive pairs.
  {
    const std::size_t n = triples.size();
    Vec pos(n);
    for (std::size_t k = 0; k < n; ++k) {
      pos[k] = pu.row(triples[k].user).dot(pi.row(triples[k].pos));
    }
    Vec dpos = Vec::Zero(n);
    const double hinge = loss_hinge(pos, 1.0, &dpos);
    acc.add("hinge", hinge);
    total += tconfig_.w_hinge * hinge;
    for (std::size_t k = 0; k < n; ++k) {
      const Triple& t = triples[k];
      dpu.row(t.user) += tconfig_.w_hinge * dpos[k] * pi.row(t.pos);
      dpi.row(t.pos) += tconfig_.w_hinge * dpos[k] * pu.row(t.user);
    }
  }

  std::vector<Index> batch_users, batch_items;
  for (const Triple& t : triples) {
    batch_users.push_back(t.user);
    batch_items.push_back(t.pos);
  }
  batch_users = dedup_sorted(std::move(batch_users));
  batch_items = dedup_sorted(std::move(batch_items));

  // Layer-wise contrast between local and global views (layers 1..L; the
  // global recurrence does not define a layer-0 view).
  std::vector<Mat> du(local.user_layers.size(), Mat::Zero(pu.rows(), pu.cols()));
  std::vector<Mat> di(local.item_layers.size(), Mat::Zero(pi.rows(), pi.cols()));
  std::vector<Mat> dgu(static_cast<std::size_t>(layers), Mat::Zero(pu.rows(), pu.cols()));
  std::vector<Mat> dgi(static_cast<std::size_t>(layers), Mat::Zero(pi.rows(), pi.cols()));
  double cl = 0.0;
  for (int l = 1; l <= layers; ++l) {
    const std::size_t li = static_cast<std::size_t>(l - 1);
    if (batch_users.size() >= 2) {
      const Mat a = gather_rows(local.user_layers[static_cast<std::size_t>(l)], batch_users);
      const Mat b = gather_rows(gu[li], batch_users);
      Mat da = Mat::Zero(a.rows(), a.cols());
      Mat db = Mat::Zero(b.rows(), b.cols());
      cl += loss_infonce(a, b, mc.temperature, &da, &db);
      da *= tconfig_.w_contrast;
      db *= tconfig_.w_contrast;
      scatter_rows(da, batch_users, du[static_cast<std::size_t>(l)]);
      scatter_rows(db, batch_users, dgu[li]);
    }
    if (batch_items.size() >= 2) {
      const Mat a = gather_rows(local.item_layers[static_cast<std::size_t>(l)], batch_items);
      const Mat b = gather_rows(gi[li], batch_items);
      Mat da = Mat::Zero(a.rows(), a.cols());
      Mat db = Mat::Zero(b.rows(), b.cols());
      cl += loss_infonce(a, b, mc.temperature, &da, &db);
      da *= tconfig_.w_contrast;
      db *= tconfig_.w_contrast;
      scatter_rows(da, batch_items, di[static_cast<std::size_t>(l)]);
      scatter_rows(db, batch_items, dgi[li]);
    }
  }
  acc.add("contrastive", cl);
  total += tconfig_.w_contrast * cl;

  scatter_pool_grad(mc.pooling, dpu, du);
  scatter_pool_grad(mc.pooling, dpi, di);

  // Backward: residual + LeakyReLU local steps and the factorized global.
  for (int l = layers; l >= 1; --l) {
    const std::size_t li = static_cast<std::size_t>(l - 1);
    // Global view contribution: G_u^(l) = lrelu(U S V^T X_i^(l-1)).
    const Mat dgu_pre = dgu[li].cwiseProduct(
        gu_pre[li].unaryExpr([](double v) { return lrelu_grad(v); }));
    const Mat dgi_pre = dgi[li].cwiseProduct(
        gi_pre[li].unaryExpr([](double v) { return lrelu_grad(v); }));
    di[li] += svd.v * (svd.singular.asDiagonal() * (svd.u.transpose() * dgu_pre));
    du[li] += svd.u * (svd.singular.asDiagonal() * (svd.v.transpose() * dgi_pre));

    // Local step: X^(l) = lrelu(Z) + X^(l-1).
    const auto& mask = local.edge_masks[li];
    const Mat dzu = du[static_cast<std::size_t>(l)].cwiseProduct(
        zu[li].unaryExpr([](double v) { return lrelu_grad(v); }));
    const Mat dzi = di[static_cast<std::size_t>(l)].cwiseProduct(
        zi[li].unaryExpr([](double v) { return lrelu_grad(v); }));
    du[li] += du[static_cast<std::size_t>(l)];  // residual
    di[li] += di[static_cast<std::size_t>(l)];
    di[li] += spmm(adj_, dzu, Orientation::kItemRows, &mask);
    du[li] += spmm(adj_, dzi, Orientation::kUserRows, &mask);
  }
  grad_user() += du[0];
  grad_item() += di[0];
  return total;
}

double Trainer::batch_step(const std::vector<Triple>& triples,
                           LossAccumulator& acc, RngStream batch_rng) {
  zero_grads();
  double total = 0.0;
  switch (kind_) {
    case ModelKind::kLightGcn:
    case ModelKind::kSgl:
    case ModelKind::kSimGcl:
    case ModelKind::kXSimGcl:
    case ModelKind::kGraphAu:
      total = step_lightgcn_family(triples, acc, batch_rng);
      break;
    case ModelKind::kNgcf:
      total = step_ngcf(triples, acc);
      break;
    case ModelKind::kDgcf:
      total = step_dgcf(triples, acc, batch_rng);
      break;
    case ModelKind::kUltraGcn:
      total = step_ultragcn(triples, acc);
      break;
    case ModelKind::kSvdGcn:
      total = step_svdgcn(triples, acc, batch_rng);
      break;
    case ModelKind::kLightGcl:
      total = step_lightgcl(triples, acc, batch_rng);
      break;
    case ModelKind::kGfcf:
      throw Error(ErrorCode::kUnsupportedForKind, "GFCF is not trainable");
  }
  const double l2 = apply_l2(triples);
  acc.add("l2", l2);
  total += l2;

  AdamConfig adam_config;
  adam_config.lr = tconfig_.lr;
  adam_config.beta1 = tconfig_.beta1;
  adam_config.beta2 = tconfig_.beta2;
  adam_config.eps = tconfig_.adam_eps;
  std::vector<const Mat*> g;
  for (const Mat& m : grads_) g.push_back(&m);
  adam_.step(params_, g, adam_config);
  return total;
}

TrainResult Trainer::run() {
  TrainResult result;
  const EdgeId train_edges = splits_.train.num_edges();
  const int batches_per_epoch = std::max<int>(
      1, static_cast<int>((train_edges + tconfig_.batch_size - 1) /
                          static_cast<EdgeId>(tconfig_.batch_size)));

  double best = -1.0;
  int since_best = 0;
  ModelState best_state = state_;
  RngStream triple_rng = rng_.fork(0x7121);

  for (int epoch = 0; epoch < tconfig_.max_epochs; ++epoch) {
    if (kind_ == ModelKind::kSgl) {
      RngStream view_rng = rng_.fork(0x5610u + static_cast<std::uint64_t>(epoch));
      for (int attempt = 0;; ++attempt) {
        try {
          epoch_views_ = sgl_make_views(splits_.train, state_.config.sgl_augment,
                                        state_.config.dropout_rate,
                                        state_.config.layers,
                                        view_rng.fork(attempt));
          break;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kEmptyView || attempt >= 20) throw;
        }
      }
    }

    LossAccumulator acc;
    double epoch_loss = 0.0;
    std::size_t skipped = 0;
    for (int b = 0; b < batches_per_epoch; ++b) {
      std::vector<Triple> triples = sample_triples(
          splits_.train, static_cast<std::size_t>(tconfig_.batch_size),
          triple_rng, &skipped);
      if (triples.empty()) continue;
      const double loss = batch_step(
          triples, acc,
          rng_.fork((1ULL << 40) | (static_cast<std::uint64_t>(epoch) << 20) |
                    static_cast<std::uint64_t>(b)));
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::kDivergedTraining,
                    "non-finite loss at epoch " + std::to_string(epoch));
      }
      epoch_loss += loss;
    }
    result.skipped_users = skipped;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.total_loss = epoch_loss / static_cast<double>(batches_per_epoch);
    for (auto& [name, sum] : acc.sums) {
      rec.components[name] = sum / static_cast<double>(batches_per_epoch);
    }

    // Validation Recall@K with train masked.
    const auto [pu, pi] = inference_embeddings(state_, adj_);
    Metrics val = evaluate_ranking(
        [&](Index u) { return score_all(pu, pi, u); }, splits_.validation,
        splits_.train, nullptr, tconfig_.eval_k);
    rec.val_recall = val.recall;
    result.history.push_back(rec);

    if (val.recall > best) {
      best = val.recall;
      result.best_epoch = epoch;
      since_best = 0;
      best_state = state_;
    } else {
      ++since_best;
      if (since_best > tconfig_.patience) break;
    }
  }

  result.best_val_recall = best;
  result.state = std::move(best_state);
  return result;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error(ErrorCode::kConfig, "batch_size must be >= 1");
  if (max_epochs < 1) throw Error(ErrorCode::kConfig, "max_epochs must be >= 1");
  if (patience >= max_epochs) {
    throw Error(ErrorCode::kConfig, "patience must be < max_epochs");
  }
  if (eval_k < 1) throw Error(ErrorCode::kConfig, "eval_k must be >= 1");
  if (lr < 0.0) throw Error(ErrorCode::kConfig, "lr must be >= 0");
}

std::vector<Triple> sample_triples(const InteractionMatrix& train,
                                   std::size_t count, RngStream& rng,
                                   std::size_t* skipped_users) {
  std::vector<Index> eligible;
  std::size_t skipped = 0;
  for (Index u = 0; u < train.num_users(); ++u) {
    const Index deg = train.user_degree(u);
    if (deg == 0 || deg >= train.num_items()) {
      if (deg > 0) ++skipped;  // full coverage: no negative exists
      continue;
    }
    eligible.push_back(u);
  }
  if (skipped_users) *skipped_users = skipped;
  std::vector<Triple> triples;
  if (eligible.empty()) return triples;
  triples.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const Index u = eligible[rng.below(eligible.size())];
    const EdgeId begin = train.row_ptr()[u];
    const Index pos = train.items()[begin + rng.below(train.user_degree(u))];
    Index neg = 0;
    do {
      neg = static_cast<Index>(rng.below(train.num_items()));
    } while (train.has_edge(u, neg));
    triples.push_back(Triple{u, pos, neg});
  }
  return triples;
}

std::pair<Mat, Mat> inference_embeddings(const ModelState& state,
                                         const NormalizedAdjacency& adj) {
  switch (state.kind) {
    case ModelKind::kLightGcn:
    case ModelKind::kSgl:
    case ModelKind::kSimGcl:
    case ModelKind::kXSimGcl:
    case ModelKind::kGraphAu: {
      PropagateResult res = propagate_chain({&adj}, state.user_embed,
                                            state.item_embed, state.config.layers);
      return {pool_layers(res.user_layers, state.config.pooling),
              pool_layers(res.item_layers, state.config.pooling)};
    }
    case ModelKind::kNgcf:
    case ModelKind::kDgcf: {
      PropagateResult res = propagate(state, adj, RngStream(0, 0));
      return {pool_layers(res.user_layers, state.config.pooling),
              pool_layers(res.item_layers, state.config.pooling)};
    }
    case ModelKind::kLightGcl: {
      // Dropout off at inference: plain chain with LeakyReLU + residual.
      std::vector<Mat> xu{state.user_embed}, xi{state.item_embed};
      const double slope = leaky_relu_slope();
      for (int l = 1; l <= state.config.layers; ++l) {
        Mat zu = spmm(adj, xi.back(), Orientation::kUserRows);
        Mat zi = spmm(adj, xu.back(), Orientation::kItemRows);
        xu.push_back(zu.unaryExpr([slope](double v) {
          return v > 0.0 ? v : slope * v;
        }) + xu.back());
        xi.push_back(zi.unaryExpr([slope](double v) {
          return v > 0.0 ? v : slope * v;
        }) + xi.back());
      }
      return {pool_layers(xu, state.config.pooling),
              pool_layers(xi, state.config.pooling)};
    }
    case ModelKind::kUltraGcn: {
      Mat eu, ei;
      ultragcn_forward(state, adj.pattern(), &eu, &ei);
      return {std::move(eu), std::move(ei)};
    }
    case ModelKind::kSvdGcn:
      return {state.svd_base_user * state.svd_weight,
              state.svd_base_item * state.svd_weight};
    case ModelKind::kGfcf:
      throw Error(ErrorCode::kUnsupportedForKind,
                  "GFCF scores in closed form; use gfcf_score");
  }
  throw Error(ErrorCode::kConfig, "unreachable model kind");
}

TrainResult train(ModelKind kind, const ModelConfig& model_config,
                  const TrainConfig& train_config, const SplitDataset& splits) {
  if (!is_trainable(kind)) {
    throw Error(ErrorCode::kUnsupportedForKind,
                std::string(model_kind_name(kind)) + " is not trainable");
  }
  Trainer trainer(kind, model_config, train_config, splits);
  return trainer.run();
}

}  // namespace topocf
