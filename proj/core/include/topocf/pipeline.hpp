#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "topocf/characteristics.hpp"
#include "topocf/interactions.hpp"
#include "topocf/models.hpp"
#include "topocf/sampling.hpp"
#include "topocf/split.hpp"
#include "topocf/trainer.hpp"

namespace topocf {

struct PipelineConfig {
  std::string data_path;
  FileFormat format = FileFormat::kAuto;
  Index kcore_depth = 0;  // 0 = no filtering
  SplitStrategy split_strategy = SplitStrategy::kRandom;
  SplitRatios ratios;
  std::uint32_t sample_count = 0;  // 0 = evaluate the source dataset directly
  double mu_lo = 0.7;
  double mu_hi = 0.9;
  std::vector<ModelKind> models;
  std::map<std::string, ModelConfig> model_overrides;  // keyed by kind name
  TrainConfig train;
  TransformSpec transforms = TransformSpec::standard();
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  int jobs = 1;
  bool resume = false;
  bool save_checkpoints = false;

  ModelConfig config_for(ModelKind kind) const;
  void validate() const;
  std::uint64_t config_hash() const;
  std::string to_json_text() const;

  static PipelineConfig from_json_file(const std::string& path);
  static PipelineConfig from_json_text(const std::string& text);
};

// Per-(sample, model) outcome of the run stage.
struct CellResult {
  std::uint32_t sample_index = 0;
  std::string model;
  bool ok = false;
  double recall = 0.0;
  double ndcg = 0.0;
  int epochs_run = 0;
  int best_epoch = -1;
  std::string error;
};

struct RunSummary {
  int completed = 0;
  int failed = 0;
};

// Pipeline stages; each persists its artifacts under out_dir and updates the
// run manifest. Errors surface as topocf::Error with the failing path.
void cmd_profile(const PipelineConfig& config);
void cmd_kcore(const PipelineConfig& config);
void cmd_sample(const PipelineConfig& config);
RunSummary cmd_run(const PipelineConfig& config);
void cmd_explain(const PipelineConfig& config);
RunSummary cmd_pipeline(const PipelineConfig& config);

// Prints a human-readable summary of an output directory.
void cmd_report(const PipelineConfig& config, std::ostream& out);

// Model checkpoint container (.tcc).
void save_checkpoint(const std::string& path, const ModelState& state,
                     std::uint64_t config_hash);
ModelState load_checkpoint(const std::string& path,
                           std::uint64_t* config_hash = nullptr);
void dump_embeddings_csv(const std::string& checkpoint_path,
                         const std::string& csv_path);

// Atomic write-then-rename; partial failures never corrupt artifacts.
void atomic_write(const std::string& path, const std::string& content);

}  // namespace topocf
