#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "topocf/error.hpp"
#include "topocf/pipeline.hpp"
#include "topocf/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitPartial = 4;

int exit_code_for(const topocf::Error& e) {
  switch (e.code()) {
    case topocf::ErrorCode::kConfig:
    case topocf::ErrorCode::kRankOutOfRange:
      return kExitConfig;
    default:
      return kExitData;
  }
}

struct CliOptions {
  std::string config_file;
  std::string data;
  std::string format = "auto";
  long kcore = -1;
  long samples = -1;
  double mu_lo = -1.0;
  double mu_hi = -1.0;
  std::string models;
  long eval_k = -1;
  long seed = -1;
  long jobs = -1;
  std::string out;
  bool resume = false;
  bool save_models = false;
  std::string split;
  long epochs = -1;
  long patience = -1;
  long batch = -1;
  double lr = -1.0;
  long embed_dim = -1;
  std::string checkpoint;
  std::string dump_embeddings;
};

void add_common_flags(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--config", opt.config_file, "JSON configuration file");
  cmd->add_option("--data", opt.data, "interaction file (TSV/CSV)");
  cmd->add_option("--format", opt.format, "input format: auto|tsv|csv");
  cmd->add_option("--kcore", opt.kcore, "iterative k-core depth (0 = off)");
  cmd->add_option("--samples", opt.samples, "number of sub-dataset samples M");
  cmd->add_option("--mu-lo", opt.mu_lo, "dropout rate lower bound");
  cmd->add_option("--mu-hi", opt.mu_hi, "dropout rate upper bound");
  cmd->add_option("--models", opt.models, "comma-separated model list");
  cmd->add_option("--K", opt.eval_k, "ranking cutoff for Recall/NDCG");
  cmd->add_option("--seed", opt.seed, "master seed");
  cmd->add_option("--jobs", opt.jobs, "parallel workers");
  cmd->add_option("--out", opt.out, "output directory");
  cmd->add_flag("--resume", opt.resume, "skip finished cells in `run`");
  cmd->add_flag("--save-models", opt.save_models, "write model checkpoints");
  cmd->add_option("--split", opt.split, "split strategy: random|temporal");
  cmd->add_option("--epochs", opt.epochs, "max training epochs");
  cmd->add_option("--patience", opt.patience, "early-stopping patience");
  cmd->add_option("--batch", opt.batch, "training batch size");
  cmd->add_option("--lr", opt.lr, "learning rate");
  cmd->add_option("--embed-dim", opt.embed_dim, "embedding dimension");
}

// Configuration file first, command-line flags win.
topocf::PipelineConfig build_config(const CliOptions& opt) {
  topocf::PipelineConfig config;
  if (!opt.config_file.empty()) {
    config = topocf::PipelineConfig::from_json_file(opt.config_file);
  }
  if (!opt.data.empty()) config.data_path = opt.data;
  if (opt.format == "tsv") {
    config.format = topocf::FileFormat::kTsv;
  } else if (opt.format == "csv") {
    config.format = topocf::FileFormat::kCsv;
  } else if (opt.format != "auto") {
    throw topocf::Error(topocf::ErrorCode::kConfig,
                        "unknown --format: " + opt.format);
  }
  if (opt.kcore >= 0) config.kcore_depth = static_cast<topocf::Index>(opt.kcore);
  if (opt.samples >= 0) config.sample_count = static_cast<std::uint32_t>(opt.samples);
  if (opt.mu_lo >= 0.0) config.mu_lo = opt.mu_lo;
  if (opt.mu_hi >= 0.0) config.mu_hi = opt.mu_hi;
  if (!opt.models.empty()) {
    config.models.clear();
    std::size_t start = 0;
    while (start <= opt.models.size()) {
      std::size_t comma = opt.models.find(',', start);
      if (comma == std::string::npos) comma = opt.models.size();
      const std::string name = opt.models.substr(start, comma - start);
      if (!name.empty()) config.models.push_back(topocf::model_kind_from_name(name));
      start = comma + 1;
    }
  }
  if (opt.eval_k > 0) config.train.eval_k = static_cast<int>(opt.eval_k);
  if (opt.seed >= 0) config.seed = static_cast<std::uint64_t>(opt.seed);
  if (opt.jobs > 0) config.jobs = static_cast<int>(opt.jobs);
  if (!opt.out.empty()) config.out_dir = opt.out;
  if (opt.resume) config.resume = true;
  if (opt.save_models) config.save_checkpoints = true;
  if (!opt.split.empty()) {
    if (opt.split == "random") {
      config.split_strategy = topocf::SplitStrategy::kRandom;
    } else if (opt.split == "temporal") {
      config.split_strategy = topocf::SplitStrategy::kTemporal;
    } else {
      throw topocf::Error(topocf::ErrorCode::kConfig,
                          "unknown --split: " + opt.split);
    }
  }
  if (opt.epochs > 0) config.train.max_epochs = static_cast<int>(opt.epochs);
  if (opt.patience >= 0) config.train.patience = static_cast<int>(opt.patience);
  if (opt.batch > 0) config.train.batch_size = static_cast<int>(opt.batch);
  if (opt.lr >= 0.0) config.train.lr = opt.lr;
  if (opt.embed_dim > 0) {
    // Apply the embedding dimension to every selected model.
    for (topocf::ModelKind kind : config.models) {
      const std::string name = topocf::model_kind_name(kind);
      auto it = config.model_overrides.find(name);
      if (it == config.model_overrides.end()) {
        it = config.model_overrides
                 .emplace(name, topocf::ModelConfig::defaults_for(kind))
                 .first;
      }
      it->second.embed_dim = static_cast<int>(opt.embed_dim);
    }
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"topocf: bipartite-graph topology profiling and graph "
               "collaborative filtering analysis"};
  app.set_version_flag("--version", topocf::kVersion);
  app.require_subcommand(1);

  CliOptions opt;
  CLI::App* profile = app.add_subcommand(
      "profile", "compute classical and topological dataset characteristics");
  CLI::App* kcore = app.add_subcommand(
      "kcore", "apply iterative k-core filtering and save the graph");
  CLI::App* sample = app.add_subcommand(
      "sample", "generate the sub-dataset pool via graph sampling");
  CLI::App* run = app.add_subcommand(
      "run", "train and evaluate the selected models on every sample");
  CLI::App* explain = app.add_subcommand(
      "explain", "fit the explanatory regression per model");
  CLI::App* pipeline = app.add_subcommand(
      "pipeline", "profile, sample, run and explain in one pass");
  CLI::App* report = app.add_subcommand(
      "report", "summarize an output directory or dump a checkpoint");
  for (CLI::App* cmd : {profile, kcore, sample, run, explain, pipeline, report}) {
    add_common_flags(cmd, opt);
  }
  report->add_option("--checkpoint", opt.checkpoint, "checkpoint to inspect");
  report->add_option("--dump-embeddings", opt.dump_embeddings,
                     "write checkpoint embeddings to this CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (report->parsed() && !opt.checkpoint.empty()) {
      if (opt.dump_embeddings.empty()) {
        throw topocf::Error(topocf::ErrorCode::kConfig,
                            "--checkpoint requires --dump-embeddings");
      }
      topocf::dump_embeddings_csv(opt.checkpoint, opt.dump_embeddings);
      std::cout << "wrote " << opt.dump_embeddings << "\n";
      return kExitOk;
    }

    topocf::PipelineConfig config = build_config(opt);
    if (report->parsed()) {
      topocf::cmd_report(config, std::cout);
      return kExitOk;
    }
    if (profile->parsed()) {
      topocf::cmd_profile(config);
      std::cout << "profile artifacts in " << config.out_dir << "/profile\n";
    } else if (kcore->parsed()) {
      topocf::cmd_kcore(config);
      std::cout << "filtered graph in " << config.out_dir << "/kcore\n";
    } else if (sample->parsed()) {
      topocf::cmd_sample(config);
      std::cout << "sample pool in " << config.out_dir << "/samples\n";
    } else if (run->parsed()) {
      const topocf::RunSummary s = topocf::cmd_run(config);
      std::cout << "run finished: " << s.completed << " ok, " << s.failed
                << " failed\n";
      if (s.failed > 0) return kExitPartial;
    } else if (explain->parsed()) {
      topocf::cmd_explain(config);
      std::cout << "regression reports in " << config.out_dir << "/explain\n";
    } else if (pipeline->parsed()) {
      const topocf::RunSummary s = topocf::cmd_pipeline(config);
      std::cout << "pipeline finished: " << s.completed << " ok, " << s.failed
                << " failed\n";
      if (s.failed > 0) return kExitPartial;
    }
  } catch (const topocf::Error& e) {
    std::cerr << "error [" << topocf::error_code_name(e.code()) << "]: "
              << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
