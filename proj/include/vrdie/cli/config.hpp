#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vrdie/evalkit/harness.hpp"
#include "vrdie/extractor/model.hpp"
#include "vrdie/extractor/train.hpp"
#include "vrdie/pretrain/pretrain.hpp"
#include "vrdie/synthcorpus/split.hpp"

namespace vrdie::cli {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct ConfigError : std::runtime_error {
  ConfigError(const std::string& key, const std::string& what) : std::runtime_error(key + ": " + what), key(key) {}
  std::string key;
};

// Flat run configuration. Every key has a type and a default from the preset;
// a config file may set any subset of keys.
struct RunConfig {
  int schema_version = kSchemaVersion;
  std::string preset = "desk";
  std::string corpus = "invoice";  // invoice | resume
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  // paths; empty means "the output directory"
  std::string corpus_dir;
  std::string init_checkpoint;
  std::string model_checkpoint;

  // corpus generation
  std::size_t num_docs = 1000;
  std::size_t ambiguity = 3;
  std::size_t few_shot_docs = 60;
  double labeled_fraction = 0.2;
  double unlabeled_fraction = 0.8;
  std::vector<std::string> unseen_templates{"T10", "T11"};
  double train_fraction = 0.7;
  double val_fraction = 0.1;

  // document model and graph
  std::size_t min_freq = 2;
  double eps_align = 1.0;
  double merge_eps = 1.0;
  std::size_t max_nodes = 100;
  int max_ranks = 16;

  // encoder and graph module
  std::size_t hidden_dim = 64;
  std::size_t num_layers = 2;
  std::size_t num_heads = 4;
  std::size_t ffn_dim = 128;
  std::size_t max_seq_len = 50;
  double dropout = 0.1;
  std::size_t gcn_hidden = 64;
  std::size_t gcn_layers = 2;
  bool use_gcn = true;
  bool section_title_edges = true;
  bool font_feats = true;
  bool skip_connections = true;

  // supervised training
  double lr_encoder = 1e-3;
  double lr_rest = 1e-3;
  std::size_t max_epochs = 30;
  std::size_t patience = 5;

  // pretraining
  std::string stages = "mlm,sprc";
  std::size_t mlm_epochs = 30;
  std::size_t sprc_epochs = 15;
  std::size_t sprc_epochs_after_mlm = 18;
  double mask_ratio = 0.15;
  double pretrain_lr = 1e-3;
  std::size_t pretrain_batch = 16;
  double pretrain_val_fraction = 0.1;
  double balance_ratio = 0.0;         // 0 keeps every pair
  std::size_t sprc_max_train = 0;     // 0 keeps every training pair

  // evaluation harnesses
  bool span_scoring = false;
  std::vector<std::size_t> fewshot_sizes{0, 1, 10, 20, 50};
  std::size_t fewshot_seeds = 3;
  std::size_t fewshot_epochs = 5;
  std::vector<std::string> ablate_switches{"section_title_edges", "font_feats", "skip_connections"};
  std::size_t ablate_seeds = 1;
};

// Calls f(key, member) for every key, in file order.
template <class C, class F>
void visit_config(C& c, F&& f) {
  f("schema_version", c.schema_version);
  f("preset", c.preset);
  f("corpus", c.corpus);
  f("seed", c.seed);
  f("workers", c.workers);
  f("corpus_dir", c.corpus_dir);
  f("init_checkpoint", c.init_checkpoint);
  f("model_checkpoint", c.model_checkpoint);
  f("num_docs", c.num_docs);
  f("ambiguity", c.ambiguity);
  f("few_shot_docs", c.few_shot_docs);
  f("labeled_fraction", c.labeled_fraction);
  f("unlabeled_fraction", c.unlabeled_fraction);
  f("unseen_templates", c.unseen_templates);
  f("train_fraction", c.train_fraction);
  f("val_fraction", c.val_fraction);
  f("min_freq", c.min_freq);
  f("eps_align", c.eps_align);
  f("merge_eps", c.merge_eps);
  f("max_nodes", c.max_nodes);
  f("max_ranks", c.max_ranks);
  f("hidden_dim", c.hidden_dim);
  f("num_layers", c.num_layers);
  f("num_heads", c.num_heads);
  f("ffn_dim", c.ffn_dim);
  f("max_seq_len", c.max_seq_len);
  f("dropout", c.dropout);
  f("gcn_hidden", c.gcn_hidden);
  f("gcn_layers", c.gcn_layers);
  f("use_gcn", c.use_gcn);
  f("section_title_edges", c.section_title_edges);
  f("font_feats", c.font_feats);
  f("skip_connections", c.skip_connections);
  f("lr_encoder", c.lr_encoder);
  f("lr_rest", c.lr_rest);
  f("max_epochs", c.max_epochs);
  f("patience", c.patience);
  f("stages", c.stages);
  f("mlm_epochs", c.mlm_epochs);
  f("sprc_epochs", c.sprc_epochs);
  f("sprc_epochs_after_mlm", c.sprc_epochs_after_mlm);
  f("mask_ratio", c.mask_ratio);
  f("pretrain_lr", c.pretrain_lr);
  f("pretrain_batch", c.pretrain_batch);
  f("pretrain_val_fraction", c.pretrain_val_fraction);
  f("balance_ratio", c.balance_ratio);
  f("sprc_max_train", c.sprc_max_train);
  f("span_scoring", c.span_scoring);
  f("fewshot_sizes", c.fewshot_sizes);
  f("fewshot_seeds", c.fewshot_seeds);
  f("fewshot_epochs", c.fewshot_epochs);
  f("ablate_switches", c.ablate_switches);
  f("ablate_seeds", c.ablate_seeds);
}

namespace detail {

template <class T>
void read_value(const std::string& key, const json& j, T& out) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) throw ConfigError(key, "expected a boolean");
    out = j.get<bool>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) throw ConfigError(key, "expected a string");
    out = j.get<std::string>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!j.is_number()) throw ConfigError(key, "expected a number");
    out = j.get<double>();
  } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
    if (!j.is_number_integer() || (!j.is_number_unsigned() && j.get<std::int64_t>() < 0))
      throw ConfigError(key, "expected a non-negative integer");
    out = j.get<T>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) throw ConfigError(key, "expected an integer");
    out = j.get<T>();
  } else {
    if (!j.is_array()) throw ConfigError(key, "expected a list");
    T v;
    for (const auto& item : j) {
      typename T::value_type x{};
      read_value(key, item, x);
      v.push_back(std::move(x));
    }
    out = std::move(v);
  }
}

}  // namespace detail

// Preset defaults. The paper preset documents the large configuration; the
// resume corpus uses the larger graph module and node cap.
inline RunConfig preset_defaults(const std::string& preset, const std::string& corpus) {
  if (preset != "desk" && preset != "paper") throw ConfigError("preset", "must be desk or paper, got '" + preset + "'");
  if (corpus != "invoice" && corpus != "resume") throw ConfigError("corpus", "must be invoice or resume, got '" + corpus + "'");
  RunConfig c;
  c.preset = preset;
  c.corpus = corpus;
  const bool resume = corpus == "resume";
  if (resume) {
    c.num_docs = 400;
    c.labeled_fraction = 0.5;
    c.unlabeled_fraction = 0.5;
    c.max_nodes = 150;
    c.balance_ratio = 0.1;
    c.unseen_templates.clear();
    c.few_shot_docs = 0;
    c.ablate_seeds = 5;
  }
  if (preset == "paper") {
    c.hidden_dim = 768;
    c.num_layers = 12;
    c.num_heads = 12;
    c.ffn_dim = 3072;
    c.gcn_hidden = resume ? 512 : 256;
    c.lr_encoder = 1e-5;
    c.lr_rest = 5e-5;
    c.pretrain_lr = 1e-5;
    c.fewshot_sizes = {0, 1, 10, 50, 300, 500};
    c.few_shot_docs = resume ? 0 : 500;
  }
  return c;
}

inline void validate(const RunConfig& c) {
  if (c.schema_version != kSchemaVersion)
    throw ConfigError("schema_version", "unsupported version " + std::to_string(c.schema_version) + " (expected " +
                                            std::to_string(kSchemaVersion) + ")");
  preset_defaults(c.preset, c.corpus);
  auto fraction = [](const char* key, double v) {
    if (!(v >= 0 && v <= 1)) throw ConfigError(key, "must be in [0,1]");
  };
  fraction("labeled_fraction", c.labeled_fraction);
  fraction("unlabeled_fraction", c.unlabeled_fraction);
  fraction("train_fraction", c.train_fraction);
  fraction("val_fraction", c.val_fraction);
  fraction("mask_ratio", c.mask_ratio);
  fraction("pretrain_val_fraction", c.pretrain_val_fraction);
  fraction("balance_ratio", c.balance_ratio);
  fraction("dropout", c.dropout);
  if (c.labeled_fraction + c.unlabeled_fraction > 1 + 1e-12) throw ConfigError("unlabeled_fraction", "labeled + unlabeled exceeds 1");
  if (c.train_fraction + c.val_fraction > 1 + 1e-12) throw ConfigError("val_fraction", "train + val exceeds 1");
  if (c.workers == 0) throw ConfigError("workers", "must be >= 1");
  if (c.num_docs == 0) throw ConfigError("num_docs", "must be >= 1");
  if (c.min_freq == 0) throw ConfigError("min_freq", "must be >= 1");
  if (c.eps_align < 0) throw ConfigError("eps_align", "must be >= 0");
  if (c.merge_eps < 0) throw ConfigError("merge_eps", "must be >= 0");
  if (c.max_nodes == 0) throw ConfigError("max_nodes", "must be >= 1");
  if (c.max_ranks < 1) throw ConfigError("max_ranks", "must be >= 1");
  if (c.hidden_dim == 0 || c.num_heads == 0 || c.hidden_dim % c.num_heads != 0)
    throw ConfigError("num_heads", "hidden_dim must be a positive multiple of num_heads");
  if (c.max_seq_len < 4) throw ConfigError("max_seq_len", "must be >= 4");
  if (c.gcn_layers == 0 || c.gcn_hidden == 0) throw ConfigError("gcn_layers", "graph module needs at least one layer of positive width");
  if (!(c.lr_encoder > 0) || !(c.lr_rest > 0) || !(c.pretrain_lr > 0)) throw ConfigError("lr_encoder", "learning rates must be positive");
  if (c.max_epochs == 0) throw ConfigError("max_epochs", "must be >= 1");
  if (c.pretrain_batch == 0) throw ConfigError("pretrain_batch", "must be >= 1");
  try {
    pretrain::parse_stages(c.stages);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("stages", e.what());
  }
  for (std::size_t i = 1; i < c.fewshot_sizes.size(); ++i)
    if (c.fewshot_sizes[i] <= c.fewshot_sizes[i - 1]) throw ConfigError("fewshot_sizes", "must be strictly increasing");
  if (c.fewshot_seeds == 0) throw ConfigError("fewshot_seeds", "must be >= 1");
  if (c.ablate_seeds == 0) throw ConfigError("ablate_seeds", "must be >= 1");
  for (const auto& s : c.ablate_switches) {
    try {
      eval::disable(extract::ModelConfig{}, s);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("ablate_switches", e.what());
    }
  }
}

// Overlays the keys of `j` onto `c`. Unknown keys and wrongly typed values are
// errors naming the key.
inline void apply_json(RunConfig& c, const json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  std::set<std::string> known;
  visit_config(c, [&](const char* key, auto& value) {
    known.insert(key);
    if (auto it = j.find(key); it != j.end()) detail::read_value(key, *it, value);
  });
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ConfigError(it.key(), "unknown config key");
}

inline json to_json(const RunConfig& c) {
  json j = json::object();
  visit_config(c, [&](const char* key, const auto& value) { j[key] = value; });
  return j;
}

// File keys over preset defaults; `preset` and `corpus` are read first since
// they select the defaults. A preset given on the command line wins over the
// file's.
inline RunConfig resolve_config(const json& file, const std::optional<std::string>& preset_flag) {
  if (!file.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  std::string preset = "desk", corpus = "invoice";
  if (auto it = file.find("preset"); it != file.end()) detail::read_value("preset", *it, preset);
  if (auto it = file.find("corpus"); it != file.end()) detail::read_value("corpus", *it, corpus);
  if (preset_flag) preset = *preset_flag;
  RunConfig c = preset_defaults(preset, corpus);
  apply_json(c, file);
  c.preset = preset;
  return c;
}

// ---------------------------------------------------------------- module configs

inline extract::ModelConfig model_config(const RunConfig& c) {
  extract::ModelConfig m;
  m.encoder.hidden_dim = c.hidden_dim;
  m.encoder.num_layers = c.num_layers;
  m.encoder.num_heads = c.num_heads;
  m.encoder.ffn_dim = c.ffn_dim;
  m.encoder.max_seq_len = c.max_seq_len;
  m.encoder.dropout = c.dropout;
  m.gcn_hidden = c.gcn_hidden;
  m.gcn_layers = c.gcn_layers;
  m.max_ranks = c.max_ranks;
  m.use_gcn = c.use_gcn;
  m.use_font = c.font_feats;
  m.use_section_edges = c.section_title_edges;
  m.use_skip = c.skip_connections;
  m.eps_align = c.eps_align;
  m.merge_eps = c.merge_eps;
  m.max_nodes = c.max_nodes;
  return m;
}

inline extract::TrainConfig train_config(const RunConfig& c) {
  extract::TrainConfig t;
  t.max_epochs = c.max_epochs;
  t.patience = c.patience;
  t.lr_encoder = c.lr_encoder;
  t.lr_rest = c.lr_rest;
  t.seed = c.seed;
  return t;
}

inline pretrain::PipelineConfig pipeline_config(const RunConfig& c) {
  pretrain::PipelineConfig p;
  p.stages = pretrain::parse_stages(c.stages);
  const bool after_mlm = p.stages.size() == 2;
  p.mlm.epochs = c.mlm_epochs;
  p.sprc.epochs = after_mlm ? c.sprc_epochs_after_mlm : c.sprc_epochs;
  for (auto* s : {&p.mlm, &p.sprc}) {
    s->lr = c.pretrain_lr;
    s->batch = c.pretrain_batch;
    s->mask_ratio = c.mask_ratio;
    s->val_fraction = c.pretrain_val_fraction;
    s->seed = c.seed;
  }
  p.sprc_options.eps_align = c.eps_align;
  p.sprc_options.merge_eps = c.merge_eps;
  if (c.balance_ratio > 0) p.sprc_options.balance_ratio = c.balance_ratio;
  p.sprc_options.max_train = c.sprc_max_train;
  return p;
}

}  // namespace vrdie::cli
