#include "topocf/pipeline.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "topocf/error.hpp"
#include "topocf/graph_io.hpp"
#include "topocf/metrics.hpp"
#include "topocf/regression.hpp"
#include "topocf/svg.hpp"
#include "topocf/transforms.hpp"
#include "topocf/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace topocf {

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const char* pool_kind_name(PoolKind kind) {
  switch (kind) {
    case PoolKind::kSum: return "sum";
    case PoolKind::kWeightedSum: return "w-sum";
    case PoolKind::kMean: return "mean";
    case PoolKind::kConcat: return "concat";
    case PoolKind::kLast: return "last";
  }
  return "?";
}

PoolKind pool_kind_from_name(const std::string& name) {
  if (name == "sum") return PoolKind::kSum;
  if (name == "w-sum") return PoolKind::kWeightedSum;
  if (name == "mean") return PoolKind::kMean;
  if (name == "concat") return PoolKind::kConcat;
  if (name == "last") return PoolKind::kLast;
  throw Error(ErrorCode::kConfig, "unknown pooling kind: " + name);
}

const char* augment_kind_name(AugmentKind kind) {
  switch (kind) {
    case AugmentKind::kNodeDropout: return "ND";
    case AugmentKind::kEdgeDropout: return "ED";
    case AugmentKind::kRandomWalk: return "RW";
  }
  return "?";
}

AugmentKind augment_kind_from_name(const std::string& name) {
  if (name == "ND") return AugmentKind::kNodeDropout;
  if (name == "ED") return AugmentKind::kEdgeDropout;
  if (name == "RW") return AugmentKind::kRandomWalk;
  throw Error(ErrorCode::kConfig, "unknown augmentation: " + name);
}

json model_config_to_json(const ModelConfig& c) {
  json j;
  j["layers"] = c.layers;
  j["embed_dim"] = c.embed_dim;
  j["svd_rank"] = c.svd_rank;
  j["intents"] = c.intents;
  j["routing_rounds"] = c.routing_rounds;
  j["noise_eps"] = c.noise_eps;
  j["contrast_layer"] = c.contrast_layer;
  j["temperature"] = c.temperature;
  j["gfcf_ideal_weight"] = c.gfcf_ideal_weight;
  j["svd_exp_scale"] = c.svd_exp_scale;
  j["svd_degree_shift"] = c.svd_degree_shift;
  j["align_layer_weight"] = c.align_layer_weight;
  j["align_uniform_tradeoff"] = c.align_uniform_tradeoff;
  j["ultra_pos_weight"] = c.ultra_pos_weight;
  j["ultra_neg_weight"] = c.ultra_neg_weight;
  j["ultra_item_weight"] = c.ultra_item_weight;
  j["ultra_topk"] = c.ultra_topk;
  j["sgl_augment"] = augment_kind_name(c.sgl_augment);
  j["dropout_rate"] = c.dropout_rate;
  j["pooling"] = pool_kind_name(c.pooling);
  return j;
}

void model_config_from_json(const json& j, ModelConfig& c) {
  if (j.contains("layers")) c.layers = j["layers"].get<int>();
  if (j.contains("embed_dim")) c.embed_dim = j["embed_dim"].get<int>();
  if (j.contains("svd_rank")) c.svd_rank = j["svd_rank"].get<int>();
  if (j.contains("intents")) c.intents = j["intents"].get<int>();
  if (j.contains("routing_rounds")) c.routing_rounds = j["routing_rounds"].get<int>();
  if (j.contains("noise_eps")) c.noise_eps = j["noise_eps"].get<double>();
  if (j.contains("contrast_layer")) c.contrast_layer = j["contrast_layer"].get<int>();
  if (j.contains("temperature")) c.temperature = j["temperature"].get<double>();
  if (j.contains("gfcf_ideal_weight")) c.gfcf_ideal_weight = j["gfcf_ideal_weight"].get<double>();
  if (j.contains("svd_exp_scale")) c.svd_exp_scale = j["svd_exp_scale"].get<double>();
  if (j.contains("svd_degree_shift")) c.svd_degree_shift = j["svd_degree_shift"].get<double>();
  if (j.contains("align_layer_weight")) c.align_layer_weight = j["align_layer_weight"].get<double>();
  if (j.contains("align_uniform_tradeoff")) {
    c.align_uniform_tradeoff = j["align_uniform_tradeoff"].get<double>();
  }
  if (j.contains("ultra_pos_weight")) c.ultra_pos_weight = j["ultra_pos_weight"].get<double>();
  if (j.contains("ultra_neg_weight")) c.ultra_neg_weight = j["ultra_neg_weight"].get<double>();
  if (j.contains("ultra_item_weight")) c.ultra_item_weight = j["ultra_item_weight"].get<double>();
  if (j.contains("ultra_topk")) c.ultra_topk = j["ultra_topk"].get<int>();
  if (j.contains("sgl_augment")) {
    c.sgl_augment = augment_kind_from_name(j["sgl_augment"].get<std::string>());
  }
  if (j.contains("dropout_rate")) c.dropout_rate = j["dropout_rate"].get<double>();
  if (j.contains("pooling")) c.pooling = pool_kind_from_name(j["pooling"].get<std::string>());
}

json train_config_to_json(const TrainConfig& t) {
  json j;
  j["lr"] = t.lr;
  j["l2_reg"] = t.l2_reg;
  j["batch_size"] = t.batch_size;
  j["max_epochs"] = t.max_epochs;
  j["patience"] = t.patience;
  j["eval_k"] = t.eval_k;
  j["w_bpr"] = t.w_bpr;
  j["w_contrast"] = t.w_contrast;
  j["w_uniform"] = t.w_uniform;
  j["w_independence"] = t.w_independence;
  j["w_align"] = t.w_align;
  j["w_pairwise"] = t.w_pairwise;
  j["w_ultra"] = t.w_ultra;
  j["w_hinge"] = t.w_hinge;
  return j;
}

void train_config_from_json(const json& j, TrainConfig& t) {
  if (j.contains("lr")) t.lr = j["lr"].get<double>();
  if (j.contains("l2_reg")) t.l2_reg = j["l2_reg"].get<double>();
  if (j.contains("batch_size")) t.batch_size = j["batch_size"].get<int>();
  if (j.contains("max_epochs")) t.max_epochs = j["max_epochs"].get<int>();
  if (j.contains("patience")) t.patience = j["patience"].get<int>();
  if (j.contains("eval_k")) t.eval_k = j["eval_k"].get<int>();
  if (j.contains("w_bpr")) t.w_bpr = j["w_bpr"].get<double>();
  if (j.contains("w_contrast")) t.w_contrast = j["w_contrast"].get<double>();
  if (j.contains("w_uniform")) t.w_uniform = j["w_uniform"].get<double>();
  if (j.contains("w_independence")) t.w_independence = j["w_independence"].get<double>();
  if (j.contains("w_align")) t.w_align = j["w_align"].get<double>();
  if (j.contains("w_pairwise")) t.w_pairwise = j["w_pairwise"].get<double>();
  if (j.contains("w_ultra")) t.w_ultra = j["w_ultra"].get<double>();
  if (j.contains("w_hinge")) t.w_hinge = j["w_hinge"].get<double>();
}

json config_to_json(const PipelineConfig& c) {
  json j;
  j["data"] = c.data_path;
  j["format"] = c.format == FileFormat::kTsv ? "tsv"
               : c.format == FileFormat::kCsv ? "csv" : "auto";
  j["kcore"] = c.kcore_depth;
  j["split"] = {{"strategy", split_strategy_name(c.split_strategy)},
                {"ratios", {c.ratios.train, c.ratios.validation, c.ratios.test}}};
  j["samples"] = c.sample_count;
  j["mu"] = {c.mu_lo, c.mu_hi};
  json models = json::array();
  for (ModelKind kind : c.models) models.push_back(model_kind_name(kind));
  j["models"] = models;
  json overrides = json::object();
  for (const auto& [name, mc] : c.model_overrides) {
    overrides[name] = model_config_to_json(mc);
  }
  j["model_configs"] = overrides;
  j["train"] = train_config_to_json(c.train);
  json log_cols = json::array();
  const auto& names = CharacteristicsRecord::feature_names();
  for (int f = 0; f < CharacteristicsRecord::kNumFeatures; ++f) {
    if (c.transforms.log10[f]) log_cols.push_back(names[static_cast<std::size_t>(f)]);
  }
  j["transforms"] = {{"log10", log_cols}};
  j["out"] = c.out_dir;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["save_checkpoints"] = c.save_checkpoints;
  return j;
}

int feature_index(const std::string& name) {
  const auto& names = CharacteristicsRecord::feature_names();
  for (int f = 0; f < CharacteristicsRecord::kNumFeatures; ++f) {
    if (names[static_cast<std::size_t>(f)] == name) return f;
  }
  throw Error(ErrorCode::kConfig, "unknown characteristic: " + name);
}

}  // namespace

ModelConfig PipelineConfig::config_for(ModelKind kind) const {
  ModelConfig mc = ModelConfig::defaults_for(kind);
  const auto it = model_overrides.find(model_kind_name(kind));
  if (it != model_overrides.end()) {
    // Re-apply the stored override on top of kind defaults.
    mc = it->second;
  }
  return mc;
}

void PipelineConfig::validate() const {
  if (data_path.empty()) throw Error(ErrorCode::kConfig, "data path is required");
  if (!fs::exists(data_path)) {
    throw Error(ErrorCode::kConfig, "data path does not exist: " + data_path);
  }
  if (mu_lo < 0.0 || mu_hi < mu_lo || mu_hi >= 1.0) {
    throw Error(ErrorCode::kConfig, "mu range must satisfy 0 <= lo <= hi < 1");
  }
  if (jobs < 1) throw Error(ErrorCode::kConfig, "jobs must be >= 1");
  if (out_dir.empty()) throw Error(ErrorCode::kConfig, "out dir is required");
  train.validate();
  for (ModelKind kind : models) config_for(kind).validate(kind);
}

std::string PipelineConfig::to_json_text() const {
  return config_to_json(*this).dump(2) + "\n";
}

std::uint64_t PipelineConfig::config_hash() const {
  // Out dir and jobs do not affect results; hash the rest.
  json j = config_to_json(*this);
  j.erase("out");
  j.erase("jobs");
  return fnv1a(j.dump());
}

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, std::string("config parse error: ") + e.what());
  }
  PipelineConfig c;
  if (j.contains("data")) c.data_path = j["data"].get<std::string>();
  if (j.contains("format")) {
    const std::string f = j["format"].get<std::string>();
    if (f == "tsv") c.format = FileFormat::kTsv;
    else if (f == "csv") c.format = FileFormat::kCsv;
    else if (f == "auto") c.format = FileFormat::kAuto;
    else throw Error(ErrorCode::kConfig, "unknown format: " + f);
  }
  if (j.contains("kcore")) c.kcore_depth = j["kcore"].get<Index>();
  if (j.contains("split")) {
    const json& s = j["split"];
    if (s.contains("strategy")) {
      const std::string name = s["strategy"].get<std::string>();
      if (name == "random") c.split_strategy = SplitStrategy::kRandom;
      else if (name == "temporal") c.split_strategy = SplitStrategy::kTemporal;
      else throw Error(ErrorCode::kConfig, "unknown split strategy: " + name);
    }
    if (s.contains("ratios")) {
      const auto r = s["ratios"].get<std::vector<double>>();
      if (r.size() != 3) throw Error(ErrorCode::kConfig, "ratios must have 3 entries");
      c.ratios = SplitRatios{r[0], r[1], r[2]};
    }
  }
  if (j.contains("samples")) c.sample_count = j["samples"].get<std::uint32_t>();
  if (j.contains("mu")) {
    const auto mu = j["mu"].get<std::vector<double>>();
    if (mu.size() != 2) throw Error(ErrorCode::kConfig, "mu must be [lo, hi]");
    c.mu_lo = mu[0];
    c.mu_hi = mu[1];
  }
  if (j.contains("models")) {
    for (const auto& name : j["models"]) {
      c.models.push_back(model_kind_from_name(name.get<std::string>()));
    }
  }
  if (j.contains("model_configs")) {
    for (const auto& [name, obj] : j["model_configs"].items()) {
      ModelConfig mc = ModelConfig::defaults_for(model_kind_from_name(name));
      model_config_from_json(obj, mc);
      c.model_overrides[name] = mc;
    }
  }
  if (j.contains("train")) train_config_from_json(j["train"], c.train);
  if (j.contains("transforms") && j["transforms"].contains("log10")) {
    c.transforms = TransformSpec::none();
    for (const auto& name : j["transforms"]["log10"]) {
      c.transforms.log10[static_cast<std::size_t>(
          feature_index(name.get<std::string>()))] = true;
    }
  }
  if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("jobs")) c.jobs = j["jobs"].get<int>();
  if (j.contains("save_checkpoints")) c.save_checkpoints = j["save_checkpoints"].get<bool>();
  return c;
}

PipelineConfig PipelineConfig::from_json_file(const std::string& path) {
  return from_json_text(read_file(path));
}

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::kIo, "short write to " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot rename " + tmp + ": " + ec.message());
}

namespace {

json artifact_header(const PipelineConfig& config) {
  json j;
  j["version"] = kVersion;
  j["config_hash"] = hex64(config.config_hash());
  j["seed"] = config.seed;
  return j;
}

void update_manifest(const PipelineConfig& config, const std::string& stage,
                     const std::string& status) {
  static std::mutex manifest_mutex;
  std::lock_guard<std::mutex> lock(manifest_mutex);
  const std::string path = config.out_dir + "/manifest.json";
  json j;
  if (fs::exists(path)) {
    try {
      j = json::parse(read_file(path));
    } catch (...) {
      j = json::object();
    }
  }
  j["version"] = kVersion;
  j["config_hash"] = hex64(config.config_hash());
  j["seed"] = config.seed;
  j["config"] = json::parse(config.to_json_text());
  j["stages"][stage] = status;
  atomic_write(path, j.dump(2) + "\n");
}

struct SourceData {
  InteractionMatrix matrix;
  IdMaps maps;
  std::size_t malformed = 0;
  std::size_t kcore_dropped_users = 0;
  std::size_t kcore_dropped_items = 0;
};

SourceData load_source(const PipelineConfig& config) {
  InteractionSet set = load_interactions(config.data_path, config.format);
  SourceData src;
  src.malformed = set.malformed_lines;
  src.matrix = build_matrix(set, &src.maps);
  if (config.kcore_depth > 0) {
    Subgraph filtered = kcore_filter(src.matrix, config.kcore_depth);
    if (filtered.matrix.num_users() == 0 || filtered.matrix.num_items() == 0) {
      throw Error(ErrorCode::kEmptyAfterFiltering,
                  "k-core depth " + std::to_string(config.kcore_depth) +
                      " removed every node");
    }
    src.kcore_dropped_users = src.matrix.num_users() - filtered.matrix.num_users();
    src.kcore_dropped_items = src.matrix.num_items() - filtered.matrix.num_items();
    src.maps = src.maps.restrict(filtered.kept_users, filtered.kept_items);
    src.matrix = std::move(filtered.matrix);
  }
  return src;
}

json characteristics_to_json(const InteractionMatrix& m,
                             const ClassicalStats& cs, const TopologyStats& ts,
                             const CharacteristicsRecord& rec) {
  json j;
  j["users"] = m.num_users();
  j["items"] = m.num_items();
  j["edges"] = m.num_edges();
  const auto& names = CharacteristicsRecord::feature_names();
  json raw = json::object();
  json transformed = json::object();
  json log_applied = json::object();
  for (int f = 0; f < CharacteristicsRecord::kNumFeatures; ++f) {
    const auto& n = names[static_cast<std::size_t>(f)];
    raw[n] = rec.raw[static_cast<std::size_t>(f)];
    transformed[n] = rec.values[static_cast<std::size_t>(f)];
    log_applied[n] = rec.log10_applied[static_cast<std::size_t>(f)];
  }
  j["characteristics"] = raw;
  j["transformed"] = transformed;
  j["log10_applied"] = log_applied;
  j["sparsity"] = cs.sparsity;
  j["flags"] = {{"assortativity_user_degenerate", rec.assortativity_user_degenerate},
                {"assortativity_item_degenerate", rec.assortativity_item_degenerate},
                {"empty_two_hop_users", ts.empty_two_hop_users},
                {"empty_two_hop_items", ts.empty_two_hop_items}};
  if (ts.power_law) {
    j["power_law"] = {{"theta", ts.power_law->unfit ? json() : json(ts.power_law->theta)},
                      {"tail_size", ts.power_law->tail_size},
                      {"unfit", ts.power_law->unfit}};
  } else {
    j["power_law"] = {{"theta", nullptr}, {"tail_size", 0}, {"unfit", true}};
  }
  json hist = json::object();
  for (const auto& [d, n] : ts.degree_histogram) hist[std::to_string(d)] = n;
  j["degree_histogram"] = hist;
  json uhist = json::object(), ihist = json::object();
  for (const auto& [d, n] : ts.user_degree_histogram) uhist[std::to_string(d)] = n;
  for (const auto& [d, n] : ts.item_degree_histogram) ihist[std::to_string(d)] = n;
  j["user_degree_histogram"] = uhist;
  j["item_degree_histogram"] = ihist;
  return j;
}

std::string characteristics_csv_header() {
  std::ostringstream os;
  os << "index,users,items,edges";
  for (const auto& n : CharacteristicsRecord::feature_names()) os << ',' << n;
  os << ",assortativity_user_degenerate,assortativity_item_degenerate"
     << ",power_law_theta,power_law_unfit\n";
  return os.str();
}

void characteristics_csv_row(std::ostringstream& os, std::int64_t index,
                             const InteractionMatrix& m,
                             const CharacteristicsRecord& rec,
                             const TopologyStats& ts) {
  os << index << ',' << m.num_users() << ',' << m.num_items() << ','
     << m.num_edges();
  os << std::setprecision(17);
  for (int f = 0; f < CharacteristicsRecord::kNumFeatures; ++f) {
    os << ',' << rec.raw[static_cast<std::size_t>(f)];
  }
  os << ',' << (rec.assortativity_user_degenerate ? 1 : 0) << ','
     << (rec.assortativity_item_degenerate ? 1 : 0);
  if (ts.power_law && !ts.power_law->unfit) {
    os << ',' << ts.power_law->theta << ",0";
  } else {
    os << ",,1";
  }
  os << '\n';
}

std::string cell_key(std::uint32_t sample, const std::string& model) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%05u", sample);
  return std::string(buf) + ":" + model;
}

std::string sample_file_name(std::uint32_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample_%05u.tcg", index);
  return buf;
}

std::uint64_t cell_seed(const PipelineConfig& config, std::uint32_t sample,
                        ModelKind kind) {
  return mix64(config.seed ^ mix64(0xC0DE + sample) ^
               mix64(0xAB1E + static_cast<std::uint64_t>(kind)));
}

std::uint64_t split_seed(const PipelineConfig& config, std::uint32_t sample) {
  return mix64(config.seed ^ mix64(0x5117 + sample));
}

// Evaluates one (sample, model) cell; exceptions are caught by the caller.
CellResult run_cell(const PipelineConfig& config, std::uint32_t sample_index,
                    const InteractionMatrix& graph, ModelKind kind) {
  CellResult cell;
  cell.sample_index = sample_index;
  cell.model = model_kind_name(kind);

  SplitDataset splits = split(graph, config.split_strategy, config.ratios,
                              split_seed(config, sample_index));
  const int k = config.train.eval_k;

  if (kind == ModelKind::kGfcf) {
    auto train_ptr = std::make_shared<InteractionMatrix>(splits.train);
    NormalizedAdjacency adj = symmetric_normalize(train_ptr, true);
    ModelConfig mc = config.config_for(kind);
    ModelState state = init_model(kind, mc, adj,
                                  RngStream(cell_seed(config, sample_index, kind), 0));
    Metrics metrics = evaluate_test(
        [&](Index u) { return gfcf_score(state, adj, u); }, splits, k);
    cell.ok = true;
    cell.recall = metrics.recall;
    cell.ndcg = metrics.ndcg;
    if (config.save_checkpoints) {
      const std::string dir = config.out_dir + "/runs/checkpoints";
      fs::create_directories(dir);
      save_checkpoint(dir + "/" + cell_key(sample_index, cell.model) + ".tcc",
                      state, config.config_hash());
    }
    return cell;
  }

  TrainConfig tc = config.train;
  tc.seed = cell_seed(config, sample_index, kind);
  TrainResult result = train(kind, config.config_for(kind), tc, splits);

  auto train_ptr = std::make_shared<InteractionMatrix>(splits.train);
  NormalizedAdjacency adj = symmetric_normalize(train_ptr, true);
  const auto [pu, pi] = inference_embeddings(result.state, adj);
  Metrics metrics = evaluate_test(
      [&](Index u) { return score_all(pu, pi, u); }, splits, k);

  cell.ok = true;
  cell.recall = metrics.recall;
  cell.ndcg = metrics.ndcg;
  cell.epochs_run = static_cast<int>(result.history.size());
  cell.best_epoch = result.best_epoch;

  // Training history CSV.
  const std::string dir = config.out_dir + "/runs/history";
  fs::create_directories(dir);
  std::ostringstream os;
  std::vector<std::string> components;
  if (!result.history.empty()) {
    for (const auto& [name, value] : result.history.front().components) {
      components.push_back(name);
    }
  }
  os << "epoch";
  for (const auto& n : components) os << ',' << n;
  os << ",total_loss,val_recall\n";
  for (const EpochRecord& rec : result.history) {
    os << rec.epoch;
    for (const auto& n : components) {
      const auto it = rec.components.find(n);
      os << ',' << (it == rec.components.end() ? 0.0 : it->second);
    }
    os << ',' << rec.total_loss << ',' << rec.val_recall << '\n';
  }
  atomic_write(dir + "/" + cell_key(sample_index, cell.model) + ".csv", os.str());

  if (config.save_checkpoints) {
    const std::string ck_dir = config.out_dir + "/runs/checkpoints";
    fs::create_directories(ck_dir);
    save_checkpoint(ck_dir + "/" + cell_key(sample_index, cell.model) + ".tcc",
                    result.state, config.config_hash());
  }
  return cell;
}

json metrics_file_read(const std::string& path) {
  if (!fs::exists(path)) return json::object();
  try {
    return json::parse(read_file(path));
  } catch (...) {
    return json::object();
  }
}

}  // namespace

void cmd_profile(const PipelineConfig& config) {
  config.validate();
  fs::create_directories(config.out_dir + "/profile");
  update_manifest(config, "profile", "running");

  SourceData src = load_source(config);
  const ClassicalStats cs = classical_stats(src.matrix);
  const TopologyStats ts = compute_topology(
      src.matrix, std::max<Index>(1, config.kcore_depth), config.jobs);
  const CharacteristicsRecord rec = feature_vector(cs, ts, config.transforms);

  json j = artifact_header(config);
  j.update(characteristics_to_json(src.matrix, cs, ts, rec));
  j["malformed_lines"] = src.malformed;
  j["kcore_depth"] = config.kcore_depth;
  atomic_write(config.out_dir + "/profile/characteristics.json", j.dump(2) + "\n");

  std::ostringstream csv;
  csv << characteristics_csv_header();
  characteristics_csv_row(csv, -1, src.matrix, rec, ts);
  atomic_write(config.out_dir + "/profile/characteristics.csv", csv.str());

  atomic_write(config.out_dir + "/profile/degree_distribution.svg",
               svg_degree_distribution(degree_distribution(src.matrix),
                                       "Degree distribution"));
  update_manifest(config, "profile", "ok");
}

void cmd_kcore(const PipelineConfig& config) {
  config.validate();
  if (config.kcore_depth < 1) {
    throw Error(ErrorCode::kConfig, "kcore command requires --kcore >= 1");
  }
  fs::create_directories(config.out_dir + "/kcore");
  update_manifest(config, "kcore", "running");
  SourceData src = load_source(config);

  save_graph(config.out_dir + "/kcore/graph.tcg", src.matrix, src.maps);
  export_tsv(config.out_dir + "/kcore/graph.tsv", src.matrix, src.maps);
  json j = artifact_header(config);
  j["users"] = src.matrix.num_users();
  j["items"] = src.matrix.num_items();
  j["edges"] = src.matrix.num_edges();
  j["dropped_users"] = src.kcore_dropped_users;
  j["dropped_items"] = src.kcore_dropped_items;
  j["content_hash"] = hex64(content_hash(src.matrix, src.maps));
  atomic_write(config.out_dir + "/kcore/stats.json", j.dump(2) + "\n");
  update_manifest(config, "kcore", "ok");
}

void cmd_sample(const PipelineConfig& config) {
  config.validate();
  if (config.sample_count < 1) {
    throw Error(ErrorCode::kConfig, "sample command requires --samples >= 1");
  }
  fs::create_directories(config.out_dir + "/samples");
  update_manifest(config, "sample", "running");

  SourceData src = load_source(config);
  RngStream rng(config.seed, 0x5A3F);
  SamplePool pool = generate_samples(src.matrix, config.sample_count,
                                     config.mu_lo, config.mu_hi, rng);

  json samples = json::array();
  std::ostringstream csv;
  csv << characteristics_csv_header();
  for (std::uint32_t m = 0; m < config.sample_count; ++m) {
    const InteractionMatrix& g = pool.graphs[m];
    const SampleSpec& spec = pool.specs[m];
    // Synthetic keys: samples are index spaces of their own.
    std::vector<std::string> ukeys(g.num_users()), ikeys(g.num_items());
    for (Index u = 0; u < g.num_users(); ++u) ukeys[u] = "u" + std::to_string(u);
    for (Index i = 0; i < g.num_items(); ++i) ikeys[i] = "i" + std::to_string(i);
    const IdMaps maps = IdMaps::from_keys(std::move(ukeys), std::move(ikeys));
    const std::string file = sample_file_name(m);
    save_graph(config.out_dir + "/samples/" + file, g, maps);

    json s;
    s["index"] = spec.index;
    s["mu"] = spec.mu;
    s["strategy"] = sampling_strategy_name(spec.strategy);
    s["seed"] = spec.seed;
    s["retries"] = spec.retries;
    s["file"] = file;
    s["content_hash"] = hex64(content_hash(g, maps));
    s["users"] = g.num_users();
    s["items"] = g.num_items();
    s["edges"] = g.num_edges();
    samples.push_back(s);

    const ClassicalStats cs = classical_stats(g);
    const TopologyStats ts = compute_topology(
        g, std::max<Index>(1, config.kcore_depth), config.jobs);
    const CharacteristicsRecord rec = feature_vector(cs, ts, TransformSpec::none());
    characteristics_csv_row(csv, spec.index, g, rec, ts);
  }

  json j = artifact_header(config);
  j["count"] = config.sample_count;
  j["source_hash"] = hex64(content_hash(src.matrix, src.maps));
  j["mu"] = {config.mu_lo, config.mu_hi};
  j["samples"] = samples;
  atomic_write(config.out_dir + "/samples/manifest.json", j.dump(2) + "\n");
  atomic_write(config.out_dir + "/samples/characteristics.csv", csv.str());
  update_manifest(config, "sample", "ok");
}

RunSummary cmd_run(const PipelineConfig& config) {
  config.validate();
  if (config.models.empty()) {
    throw Error(ErrorCode::kConfig, "run command requires --models");
  }
  fs::create_directories(config.out_dir + "/runs");
  update_manifest(config, "run", "running");

  // Load sample graphs (or fall back to the source dataset as one cell row).
  std::vector<InteractionMatrix> graphs;
  const std::string samples_manifest = config.out_dir + "/samples/manifest.json";
  if (config.sample_count > 0 && fs::exists(samples_manifest)) {
    const json manifest = json::parse(read_file(samples_manifest));
    for (const auto& s : manifest["samples"]) {
      LoadedGraph lg =
          load_graph(config.out_dir + "/samples/" + s["file"].get<std::string>());
      graphs.push_back(std::move(lg.matrix));
    }
  } else {
    graphs.push_back(load_source(config).matrix);
  }

  const std::string metrics_path = config.out_dir + "/runs/metrics.json";
  json previous = config.resume ? metrics_file_read(metrics_path) : json::object();
  json cells = previous.contains("cells") ? previous["cells"] : json::object();

  struct CellTask {
    std::uint32_t sample;
    ModelKind kind;
  };
  std::vector<CellTask> tasks;
  for (std::uint32_t s = 0; s < graphs.size(); ++s) {
    for (ModelKind kind : config.models) {
      const std::string key = cell_key(s, model_kind_name(kind));
      if (config.resume && cells.contains(key) && cells[key]["ok"].get<bool>()) {
        continue;  // finished cell, do not recompute
      }
      tasks.push_back(CellTask{s, kind});
    }
  }

  std::mutex io_mutex;
  std::atomic<std::size_t> next{0};
  RunSummary summary;
  auto flush = [&]() {
    json out = artifact_header(config);
    out["eval_k"] = config.train.eval_k;
    out["cells"] = cells;
    atomic_write(metrics_path, out.dump(2) + "\n");
  };

  auto worker = [&]() {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      const CellTask& task = tasks[t];
      json cell_json;
      bool ok = false;
      try {
        CellResult cell = run_cell(config, task.sample, graphs[task.sample], task.kind);
        cell_json["ok"] = true;
        cell_json["recall"] = cell.recall;
        cell_json["ndcg"] = cell.ndcg;
        cell_json["epochs"] = cell.epochs_run;
        cell_json["best_epoch"] = cell.best_epoch;
        ok = true;
      } catch (const Error& e) {
        cell_json["ok"] = false;
        cell_json["error"] = std::string(error_code_name(e.code())) + ": " + e.what();
      } catch (const std::exception& e) {
        cell_json["ok"] = false;
        cell_json["error"] = e.what();
      }
      std::lock_guard<std::mutex> lock(io_mutex);
      cells[cell_key(task.sample, model_kind_name(task.kind))] = cell_json;
      if (ok) {
        ++summary.completed;
      } else {
        ++summary.failed;
      }
      flush();
    }
  };

  const int workers = std::max(1, std::min<int>(config.jobs,
                                                static_cast<int>(tasks.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  flush();
  update_manifest(config, "run", summary.failed == 0 ? "ok" : "partial");
  return summary;
}

void cmd_explain(const PipelineConfig& config) {
  config.validate();
  fs::create_directories(config.out_dir + "/explain");
  update_manifest(config, "explain", "running");

  // Per-sample characteristics from the sampling stage.
  const std::string csv_path = config.out_dir + "/samples/characteristics.csv";
  if (!fs::exists(csv_path)) {
    throw Error(ErrorCode::kIo, "missing " + csv_path + " (run `sample` first)");
  }
  std::ifstream in(csv_path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::uint32_t> sample_ids;
  std::vector<std::array<double, CharacteristicsRecord::kNumFeatures>> raw_rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() < 4 + CharacteristicsRecord::kNumFeatures) continue;
    sample_ids.push_back(static_cast<std::uint32_t>(std::stoul(fields[0])));
    std::array<double, CharacteristicsRecord::kNumFeatures> row{};
    for (int f = 0; f < CharacteristicsRecord::kNumFeatures; ++f) {
      row[static_cast<std::size_t>(f)] = std::stod(fields[4 + static_cast<std::size_t>(f)]);
    }
    raw_rows.push_back(row);
  }
  if (raw_rows.empty()) {
    throw Error(ErrorCode::kTooFewSamples, "no characteristics rows found");
  }

  const json metrics = metrics_file_read(config.out_dir + "/runs/metrics.json");
  if (!metrics.contains("cells")) {
    throw Error(ErrorCode::kIo, "missing runs/metrics.json (run `run` first)");
  }
  const json& cells = metrics["cells"];

  // Transformed (pre-standardization) predictor matrix.
  Mat raw(static_cast<Eigen::Index>(raw_rows.size()),
          CharacteristicsRecord::kNumFeatures);
  const auto& names = CharacteristicsRecord::feature_names();
  for (std::size_t r = 0; r < raw_rows.size(); ++r) {
    for (int f = 0; f < CharacteristicsRecord::kNumFeatures; ++f) {
      double v = raw_rows[r][static_cast<std::size_t>(f)];
      if (config.transforms.log10[static_cast<std::size_t>(f)]) {
        if (!(v > 0.0)) {
          throw Error(ErrorCode::kNonPositiveValue,
                      "log10 transform on non-positive " +
                          names[static_cast<std::size_t>(f)]);
        }
        v = std::log10(v);
      }
      raw(static_cast<Eigen::Index>(r), f) = v;
    }
  }

  for (ModelKind kind : config.models) {
    const std::string model = model_kind_name(kind);
    std::vector<double> y;
    std::vector<Eigen::Index> rows;
    for (std::size_t r = 0; r < sample_ids.size(); ++r) {
      const std::string key = cell_key(sample_ids[r], model);
      if (cells.contains(key) && cells[key]["ok"].get<bool>()) {
        y.push_back(cells[key]["recall"].get<double>());
        rows.push_back(static_cast<Eigen::Index>(r));
      }
    }
    if (y.size() < CharacteristicsRecord::kNumFeatures + 2) {
      throw Error(ErrorCode::kTooFewSamples,
                  model + ": need at least C+2 completed cells, have " +
                      std::to_string(y.size()));
    }
    Mat x(static_cast<Eigen::Index>(rows.size()), raw.cols());
    Vec response(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      x.row(static_cast<Eigen::Index>(r)) = raw.row(rows[r]);
      response[static_cast<Eigen::Index>(r)] = y[r];
    }
    std::vector<std::string> colnames(names.begin(), names.end());
    const DesignMatrix design = make_design_matrix(x, colnames);
    const RegressionReport report = ols_fit(design, response);
    const std::vector<SignificanceRow> table = significance_format(report);

    const std::string dir = config.out_dir + "/explain/" + model;
    fs::create_directories(dir);

    json j = artifact_header(config);
    j["model"] = model;
    j["response"] = "recall@" + std::to_string(config.train.eval_k);
    j["num_samples"] = y.size();
    j["intercept"] = {{"coefficient", report.intercept},
                      {"se", report.intercept_se},
                      {"t", report.intercept_t},
                      {"p", report.intercept_p}};
    json coef = json::array();
    for (const auto& row : table) {
      coef.push_back({{"name", row.name},
                      {"coefficient", row.coefficient},
                      {"se", row.standard_error},
                      {"t", row.t_statistic},
                      {"p", row.p_value},
                      {"stars", row.stars},
                      {"sign", row.sign},
                      {"rank_by_magnitude", row.rank_by_magnitude}});
    }
    j["coefficients"] = coef;
    j["r_squared"] = report.r_squared;
    j["adjusted_r_squared"] = report.adjusted_r_squared;
    j["residual_std"] = report.residual_std;
    j["degrees_of_freedom"] = report.degrees_of_freedom;
    j["condition_number"] = report.condition_number;
    j["warnings"] = report.warnings;
    j["dropped_columns"] = report.dropped_columns;

    // Soft qualitative reading: observed signs on density, item Gini and
    // shape, logged without pass/fail force.
    json tendencies = json::object();
    auto log_sign = [&](const std::string& name, const std::string& stated) {
      for (const auto& row : table) {
        if (row.name == name) {
          tendencies[name] = {{"observed_sign", row.sign},
                              {"p", row.p_value},
                              {"stated_tendency", stated}};
        }
      }
    };
    log_sign("density", "positive");
    log_sign("gini_item", "positive");
    log_sign("shape", "negative");
    j["qualitative_tendencies"] = tendencies;
    atomic_write(dir + "/report.json", j.dump(2) + "\n");

    std::ostringstream csv;
    csv << "name,coefficient,se,t,p,stars,sign,rank_by_magnitude\n";
    csv << std::setprecision(17);
    for (const auto& row : table) {
      csv << row.name << ',' << row.coefficient << ',' << row.standard_error
          << ',' << row.t_statistic << ',' << row.p_value << ',' << row.stars
          << ',' << row.sign << ',' << row.rank_by_magnitude << '\n';
    }
    atomic_write(dir + "/report.csv", csv.str());
    atomic_write(dir + "/coefficients.svg",
                 svg_coefficient_bars(table, model + " coefficients"));

    // Shared correlation matrix of the standardized predictors.
    if (kind == config.models.front()) {
      const Mat corr = pearson_corr(design);
      json cj = artifact_header(config);
      cj["columns"] = design.column_names;
      json mat = json::array();
      for (Eigen::Index r = 0; r < corr.rows(); ++r) {
        json rowj = json::array();
        for (Eigen::Index c = 0; c < corr.cols(); ++c) rowj.push_back(corr(r, c));
        mat.push_back(rowj);
      }
      cj["matrix"] = mat;
      atomic_write(config.out_dir + "/explain/correlation.json", cj.dump(2) + "\n");
    }
  }
  update_manifest(config, "explain", "ok");
}

RunSummary cmd_pipeline(const PipelineConfig& config) {
  config.validate();
  fs::create_directories(config.out_dir);
  try {
    cmd_profile(config);
  } catch (const Error& e) {
    update_manifest(config, "profile", std::string("failed: ") + e.what());
    throw Error(e.code(), std::string("[profile] ") + e.what());
  }
  try {
    cmd_sample(config);
  } catch (const Error& e) {
    update_manifest(config, "sample", std::string("failed: ") + e.what());
    throw Error(e.code(), std::string("[sample] ") + e.what());
  }
  RunSummary summary;
  try {
    summary = cmd_run(config);
  } catch (const Error& e) {
    update_manifest(config, "run", std::string("failed: ") + e.what());
    throw Error(e.code(), std::string("[run] ") + e.what());
  }
  try {
    cmd_explain(config);
  } catch (const Error& e) {
    update_manifest(config, "explain", std::string("failed: ") + e.what());
    throw Error(e.code(), std::string("[explain] ") + e.what());
  }
  return summary;
}

void cmd_report(const PipelineConfig& config, std::ostream& out) {
  const std::string manifest_path = config.out_dir + "/manifest.json";
  if (!fs::exists(manifest_path)) {
    throw Error(ErrorCode::kIo, "no manifest at " + manifest_path);
  }
  const json manifest = json::parse(read_file(manifest_path));
  out << "run manifest: " << manifest_path << "\n";
  out << "  version:     " << manifest.value("version", std::string("?")) << "\n";
  out << "  config hash: " << manifest.value("config_hash", std::string("?")) << "\n";
  out << "  seed:        " << manifest.value("seed", 0ULL) << "\n";
  if (manifest.contains("stages")) {
    out << "  stages:\n";
    for (const auto& [stage, status] : manifest["stages"].items()) {
      out << "    " << stage << ": " << status.get<std::string>() << "\n";
    }
  }

  const json metrics = metrics_file_read(config.out_dir + "/runs/metrics.json");
  if (metrics.contains("cells")) {
    std::map<std::string, std::pair<double, int>> by_model;  // sum, count
    int failed = 0;
    for (const auto& [key, cell] : metrics["cells"].items()) {
      const std::string model = key.substr(key.find(':') + 1);
      if (cell["ok"].get<bool>()) {
        by_model[model].first += cell["recall"].get<double>();
        by_model[model].second += 1;
      } else {
        ++failed;
      }
    }
    out << "metrics (mean recall@" << metrics.value("eval_k", 0) << "):\n";
    for (const auto& [model, agg] : by_model) {
      out << "  " << model << ": "
          << (agg.second > 0 ? agg.first / agg.second : 0.0) << "  (" << agg.second
          << " cells)\n";
    }
    if (failed > 0) out << "  failed cells: " << failed << "\n";
  }

  for (const auto& entry : fs::directory_iterator(
           fs::exists(config.out_dir + "/explain") ? config.out_dir + "/explain"
                                                   : config.out_dir)) {
    if (!entry.is_directory()) continue;
    const std::string report_path = entry.path().string() + "/report.json";
    if (!fs::exists(report_path)) continue;
    const json report = json::parse(read_file(report_path));
    out << "regression " << report.value("model", std::string("?"))
        << ": R^2 = " << report.value("r_squared", 0.0) << "\n";
    int shown = 0;
    for (const auto& c : report["coefficients"]) {
      if (shown++ >= 3) break;
      out << "  " << c["name"].get<std::string>() << " = "
          << c["coefficient"].get<double>() << c["stars"].get<std::string>()
          << "\n";
    }
  }
}

namespace {

void write_mat(std::ostringstream& os, const std::string& name, const Mat& m) {
  const std::uint32_t len = static_cast<std::uint32_t>(name.size());
  os.write(reinterpret_cast<const char*>(&len), sizeof len);
  os.write(name.data(), len);
  const std::uint64_t rows = static_cast<std::uint64_t>(m.rows());
  const std::uint64_t cols = static_cast<std::uint64_t>(m.cols());
  os.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  os.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(sizeof(double) * m.size()));
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelState& state,
                     std::uint64_t config_hash) {
  std::ostringstream os(std::ios::binary);
  os.write("TCFCKPT1", 8);
  os.write(reinterpret_cast<const char*>(&config_hash), sizeof config_hash);
  const std::string kind = model_kind_name(state.kind);
  const std::uint32_t kind_len = static_cast<std::uint32_t>(kind.size());
  os.write(reinterpret_cast<const char*>(&kind_len), sizeof kind_len);
  os.write(kind.data(), kind_len);

  std::vector<std::pair<std::string, const Mat*>> tensors;
  tensors.emplace_back("user_embed", &state.user_embed);
  tensors.emplace_back("item_embed", &state.item_embed);
  for (std::size_t l = 0; l < state.w_neigh.size(); ++l) {
    tensors.emplace_back("w_neigh." + std::to_string(l), &state.w_neigh[l]);
    tensors.emplace_back("w_inter." + std::to_string(l), &state.w_inter[l]);
    tensors.emplace_back("bias." + std::to_string(l), &state.bias[l]);
  }
  if (state.svd_weight.size() > 0) {
    tensors.emplace_back("svd_weight", &state.svd_weight);
    tensors.emplace_back("svd_base_user", &state.svd_base_user);
    tensors.emplace_back("svd_base_item", &state.svd_base_item);
  }
  const std::uint32_t count = static_cast<std::uint32_t>(tensors.size());
  os.write(reinterpret_cast<const char*>(&count), sizeof count);
  for (const auto& [name, mat] : tensors) write_mat(os, name, *mat);
  atomic_write(path, os.str());
}

ModelState load_checkpoint(const std::string& path, std::uint64_t* config_hash) {
  const std::string bytes = read_file(path);
  std::size_t pos = 0;
  auto read_raw = [&](void* p, std::size_t n) {
    if (pos + n > bytes.size()) throw Error(ErrorCode::kIo, "truncated checkpoint");
    std::memcpy(p, bytes.data() + pos, n);
    pos += n;
  };
  char magic[8];
  read_raw(magic, 8);
  if (std::memcmp(magic, "TCFCKPT1", 8) != 0) {
    throw Error(ErrorCode::kIo, "not a checkpoint: " + path);
  }
  std::uint64_t hash = 0;
  read_raw(&hash, sizeof hash);
  if (config_hash) *config_hash = hash;
  std::uint32_t kind_len = 0;
  read_raw(&kind_len, sizeof kind_len);
  std::string kind(kind_len, '\0');
  read_raw(kind.data(), kind_len);

  ModelState state;
  state.kind = model_kind_from_name(kind);
  std::uint32_t count = 0;
  read_raw(&count, sizeof count);
  for (std::uint32_t t = 0; t < count; ++t) {
    std::uint32_t name_len = 0;
    read_raw(&name_len, sizeof name_len);
    std::string name(name_len, '\0');
    read_raw(name.data(), name_len);
    std::uint64_t rows = 0, cols = 0;
    read_raw(&rows, sizeof rows);
    read_raw(&cols, sizeof cols);
    Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    read_raw(m.data(), sizeof(double) * rows * cols);
    if (name == "user_embed") {
      state.user_embed = std::move(m);
    } else if (name == "item_embed") {
      state.item_embed = std::move(m);
    } else if (name == "svd_weight") {
      state.svd_weight = std::move(m);
    } else if (name == "svd_base_user") {
      state.svd_base_user = std::move(m);
    } else if (name == "svd_base_item") {
      state.svd_base_item = std::move(m);
    } else if (name.rfind("w_neigh.", 0) == 0) {
      state.w_neigh.push_back(std::move(m));
    } else if (name.rfind("w_inter.", 0) == 0) {
      state.w_inter.push_back(std::move(m));
    } else if (name.rfind("bias.", 0) == 0) {
      state.bias.push_back(std::move(m));
    }
  }
  return state;
}

void dump_embeddings_csv(const std::string& checkpoint_path,
                         const std::string& csv_path) {
  const ModelState state = load_checkpoint(checkpoint_path);
  std::ostringstream os;
  os << std::setprecision(17);
  const Mat& eu = state.svd_weight.size() > 0 && state.user_embed.size() == 0
                      ? state.svd_base_user
                      : state.user_embed;
  const Mat& ei = state.svd_weight.size() > 0 && state.item_embed.size() == 0
                      ? state.svd_base_item
                      : state.item_embed;
  os << "side,index";
  const Eigen::Index dim = std::max(eu.cols(), ei.cols());
  for (Eigen::Index c = 0; c < dim; ++c) os << ",f" << c;
  os << '\n';
  for (Eigen::Index r = 0; r < eu.rows(); ++r) {
    os << "user," << r;
    for (Eigen::Index c = 0; c < eu.cols(); ++c) os << ',' << eu(r, c);
    os << '\n';
  }
  for (Eigen::Index r = 0; r < ei.rows(); ++r) {
    os << "item," << r;
    for (Eigen::Index c = 0; c < ei.cols(); ++c) os << ',' << ei(r, c);
    os << '\n';
  }
  atomic_write(csv_path, os.str());
}

}  // namespace topocf
