#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "topocf/models.hpp"
#include "topocf/split.hpp"
#include "topocf/types.hpp"

namespace topocf {

struct TrainConfig {
  double lr = 1e-3;
  double l2_reg = 1e-4;
  int batch_size = 1024;
  int max_epochs = 200;
  int patience = 20;
  int eval_k = 20;
  // Loss-component weights; components a model does not use are ignored.
  double w_bpr = 1.0;
  double w_contrast = 0.1;
  double w_uniform = 0.5;
  double w_independence = 0.01;
  double w_align = 1.0;
  double w_pairwise = 0.1;  // SVD-GCN UL/IL
  double w_ultra = 1.0;
  double w_hinge = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Triple {
  Index user;
  Index pos;
  Index neg;
};

// Uniform user draw, uniform positive, rejection-sampled negative. Users
// with no positives or with full item coverage are skipped (counted).
std::vector<Triple> sample_triples(const InteractionMatrix& train,
                                   std::size_t count, RngStream& rng,
                                   std::size_t* skipped_users = nullptr);

struct EpochRecord {
  int epoch = 0;
  std::map<std::string, double> components;  // per-component epoch means
  double total_loss = 0.0;
  double val_recall = 0.0;
};

struct TrainResult {
  ModelState state;  // best-validation checkpoint
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_val_recall = 0.0;
  std::size_t skipped_users = 0;
};

// Full training loop with early stopping on validation Recall@K.
// Throws UnsupportedForKind for GFCF (closed form, nothing to train) and
// DivergedTraining when the loss goes non-finite.
TrainResult train(ModelKind kind, const ModelConfig& model_config,
                  const TrainConfig& train_config, const SplitDataset& splits);

// Deterministic evaluation-time embeddings (augmentations and noise off).
// Not defined for GFCF, which scores in closed form.
std::pair<Mat, Mat> inference_embeddings(const ModelState& state,
                                         const NormalizedAdjacency& adj);

}  // namespace topocf
