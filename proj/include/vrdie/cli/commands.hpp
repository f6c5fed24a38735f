#pragma once

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vrdie/cli/config.hpp"
#include "vrdie/docmodel/corpus.hpp"
#include "vrdie/evalkit/harness.hpp"
#include "vrdie/io.hpp"
#include "vrdie/layoutgraph/graph.hpp"
#include "vrdie/pretrain/pretrain.hpp"
#include "vrdie/synthcorpus/split.hpp"

namespace vrdie::cli {

namespace fs = std::filesystem;

inline const char* kLabeledFile = "labeled.jsonl";
inline const char* kUnlabeledFile = "unlabeled.jsonl";
inline const char* kManifestFile = "manifest.json";

struct MissingInput : std::runtime_error {
  explicit MissingInput(const fs::path& p) : std::runtime_error("missing input: " + p.string()), path(p) {}
  fs::path path;
};

inline void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw MissingInput(p);
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------- corpus on disk

struct Corpus {
  std::map<std::string, std::vector<doc::Document>> splits;

  const std::vector<doc::Document>& split(const std::string& name) const {
    auto it = splits.find(name);
    if (it == splits.end()) {
      std::string have;
      for (const auto& [k, v] : splits) have += (have.empty() ? "" : ", ") + k;
      throw std::invalid_argument("corpus has no split '" + name + "' (available: " + have + ")");
    }
    return it->second;
  }
  bool has(const std::string& name) const { return splits.count(name) > 0; }
};

// Labeled documents of every split go to one file, stripped documents to
// another; the manifest maps split names to doc ids.
inline void write_corpus_dir(const fs::path& dir, const Corpus& c) {
  std::vector<doc::Document> labeled, unlabeled;
  json manifest = json::object();
  for (const auto& [name, docs] : c.splits) {
    manifest[name] = synth::manifest_entry(docs);
    auto& dst = name == "unlabeled" ? unlabeled : labeled;
    dst.insert(dst.end(), docs.begin(), docs.end());
  }
  doc::write_corpus(dir / kLabeledFile, labeled);
  doc::write_corpus(dir / kUnlabeledFile, unlabeled);
  write_file_atomic(dir / kManifestFile, dump(manifest));
}

inline Corpus read_corpus_dir(const fs::path& dir) {
  for (const char* f : {kLabeledFile, kUnlabeledFile, kManifestFile}) require_file(dir / f);
  const json manifest = json::parse(read_file(dir / kManifestFile));
  std::map<std::string, doc::Document> labeled, unlabeled;
  for (auto& d : doc::parse_corpus(dir / kLabeledFile)) labeled.emplace(d.doc_id, std::move(d));
  for (auto& d : doc::parse_corpus(dir / kUnlabeledFile)) unlabeled.emplace(d.doc_id, std::move(d));
  Corpus c;
  for (auto it = manifest.begin(); it != manifest.end(); ++it) {
    const auto& pool = it.key() == "unlabeled" ? unlabeled : labeled;
    auto& out = c.splits[it.key()];
    for (const auto& id : it.value()) {
      auto d = pool.find(id.get<std::string>());
      if (d == pool.end()) throw std::runtime_error("manifest names unknown document " + id.get<std::string>());
      out.push_back(d->second);
    }
  }
  return c;
}

inline Corpus generate_corpus(const RunConfig& c) {
  Corpus out;
  if (c.corpus == "invoice") {
    synth::InvoiceCorpusSpec spec;
    spec.gen.num_docs = c.num_docs;
    spec.gen.ambiguity = c.ambiguity;
    spec.gen.seed = c.seed;
    spec.unseen_templates = c.unseen_templates;
    spec.fractions = {c.labeled_fraction, c.unlabeled_fraction};
    spec.few_shot_docs = c.few_shot_docs;
    auto split = synth::make_invoice_corpus(spec);
    auto tvt = synth::split_train_val_test(split.labeled_seen, c.train_fraction, c.val_fraction, c.seed);
    out.splits["train"] = std::move(tvt.train);
    out.splits["val"] = std::move(tvt.val);
    out.splits["test"] = std::move(tvt.test);
    out.splits["unseen_test"] = std::move(split.labeled_unseen);
    out.splits["unlabeled"] = std::move(split.unlabeled);
    out.splits["few_shot"] = std::move(split.few_shot);
  } else {
    synth::ResumeSpec spec;
    spec.num_docs = c.num_docs;
    spec.seed = c.seed;
    auto split = synth::split_corpus(synth::gen_resumes(spec), {}, {c.labeled_fraction, c.unlabeled_fraction}, c.seed);
    auto tvt = synth::split_train_val_test(split.labeled_seen, c.train_fraction, c.val_fraction, c.seed);
    out.splits["train"] = std::move(tvt.train);
    out.splits["val"] = std::move(tvt.val);
    out.splits["test"] = std::move(tvt.test);
    out.splits["unlabeled"] = std::move(split.unlabeled);
  }
  return out;
}

inline const std::vector<std::string>& entity_types(const RunConfig& c) {
  return c.corpus == "invoice" ? synth::invoice_entity_types() : synth::resume_entity_types();
}

// Vocabulary over the supervised training split plus the unlabeled split, so
// that pretraining and supervised training agree without a checkpoint.
inline doc::Vocabulary corpus_vocab(const Corpus& c, const RunConfig& cfg) {
  std::vector<doc::Document> docs = c.split("train");
  if (c.has("unlabeled")) docs.insert(docs.end(), c.split("unlabeled").begin(), c.split("unlabeled").end());
  return doc::build_vocab(docs, static_cast<int>(cfg.min_freq));
}

// ---------------------------------------------------------------- commands

struct Context {
  RunConfig cfg;
  fs::path out;
  fs::path corpus_dir;
  std::ostream* log = &std::cerr;

  std::function<void(const std::string&)> logger() const {
    return [l = log](const std::string& s) { *l << s << std::endl; };
  }
};

inline void log_resolved(const Context& ctx, const std::string& command) {
  const json j = to_json(ctx.cfg);
  *ctx.log << "resolved config (" << command << "): " << j.dump() << std::endl;
  write_file_atomic(ctx.out / (command + ".config.json"), dump(j));
}

inline void cmd_gen_corpus(const Context& ctx) {
  const Corpus c = generate_corpus(ctx.cfg);
  write_corpus_dir(ctx.corpus_dir, c);
  for (const auto& [name, docs] : c.splits) *ctx.log << name << ": " << docs.size() << " documents" << std::endl;
}

inline void cmd_build_graph(const Context& ctx) {
  const Corpus c = read_corpus_dir(ctx.corpus_dir);
  const extract::ModelConfig mc = model_config(ctx.cfg);
  std::string lines;
  std::set<std::string> seen;
  std::size_t pages = 0;
  for (const auto& entry : c.splits)
    for (const auto& d0 : entry.second) {
      if (!seen.insert(d0.doc_id).second) continue;  // stripped copies share ids with few-shot documents
      doc::Document d = d0;
      for (auto& p : d.pages) p = doc::merge_close_boxes(p, mc.merge_eps);
      const auto ranks = graph::rank_fonts(d, mc.max_ranks);
      for (const auto& page : d.pages)
        for (const auto& chunk : graph::chunk_page(page, mc.max_nodes)) {
          const auto g = graph::build_page_graph(chunk, {mc.eps_align, mc.use_section_edges});
          json edges = json::array();
          for (const auto& e : g.edges) edges.push_back({{"type", graph::edge_type_name(e.type)}, {"i", e.i}, {"j", e.j}});
          json fr = json::object();
          for (const auto& b : chunk.boxes) fr[std::to_string(b.box_id)] = ranks.rank(b);
          lines += json{{"doc_id", d.doc_id}, {"page_no", page.page_no}, {"nodes", g.node_ids}, {"edges", edges},
                        {"font_ranks", fr}}
                       .dump() +
                   "\n";
          ++pages;
        }
    }
  write_file_atomic(ctx.out / "graphs.jsonl", lines);
  *ctx.log << "wrote " << pages << " page graphs" << std::endl;
}

inline void cmd_pretrain(const Context& ctx) {
  const Corpus c = read_corpus_dir(ctx.corpus_dir);
  const doc::Vocabulary vocab = corpus_vocab(c, ctx.cfg);
  const extract::ModelConfig mc = model_config(ctx.cfg);
  pretrain::PipelineConfig pc = pipeline_config(ctx.cfg);
  pc.mlm.log = pc.sprc.log = ctx.logger();
  fs::path last;
  pc.on_stage = [&](const pretrain::PretrainReport& r, enc::Encoder& e) {
    const fs::path ck = ctx.out / ("encoder_" + r.stage + ".ckpt");
    nn::save_checkpoint(ck, extract::encoder_checkpoint(e, vocab));
    write_file_atomic(ctx.out / ("pretrain_" + r.stage + ".json"), dump(pretrain::to_json(r, ck.filename().string())));
    last = ck;
  };
  const auto outcome = pretrain::run_pretraining(c.split("unlabeled"), vocab, mc.encoder, pc, mc.merge_eps);
  if (!last.empty()) fs::copy_file(last, ctx.out / "encoder.ckpt", fs::copy_options::overwrite_existing);
  *ctx.log << "vocabulary " << vocab.size() << " tokens; " << outcome.reports.size() << " stage(s)" << std::endl;
}

inline fs::path resolve_path(const Context& ctx, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || fs::exists(path) ? path : ctx.out / path;
}

inline void cmd_train(const Context& ctx) {
  const Corpus c = read_corpus_dir(ctx.corpus_dir);
  const extract::ModelConfig mc = model_config(ctx.cfg);
  const doc::TagSet tags(entity_types(ctx.cfg));
  std::optional<extract::EncoderBundle> init;
  if (!ctx.cfg.init_checkpoint.empty()) {
    const fs::path p = resolve_path(ctx, ctx.cfg.init_checkpoint);
    require_file(p);
    init = extract::read_encoder_checkpoint(nn::load_checkpoint(p));
  }
  const doc::Vocabulary vocab = init ? init->vocab : corpus_vocab(c, ctx.cfg);
  extract::Model model(mc, vocab, tags, nn::derive_seed(ctx.cfg.seed, {0x70}));
  if (init) extract::load_encoder_weights(model, *init);
  extract::TrainConfig tc = train_config(ctx.cfg);
  tc.log = ctx.logger();
  auto res = extract::train_supervised(c.split("train"), c.has("val") ? c.split("val") : std::vector<doc::Document>{},
                                       std::move(model), tc);
  extract::save_model(ctx.out / "model.ckpt", res.model);
  json hist = json::array();
  for (const auto& h : res.history) hist.push_back({{"epoch", h.epoch}, {"train_loss", h.train_loss}, {"val_f1", h.val_f1}});
  write_file_atomic(ctx.out / "train_log.json",
                    dump({{"best_epoch", res.best_epoch}, {"best_val_f1", res.best_val_f1}, {"history", hist},
                          {"init", ctx.cfg.init_checkpoint}}));
}

inline extract::Model load_model_for(const Context& ctx) {
  const fs::path p = resolve_path(ctx, ctx.cfg.model_checkpoint.empty() ? "model.ckpt" : ctx.cfg.model_checkpoint);
  require_file(p);
  return extract::load_model(p);
}

inline std::string model_label(const extract::Model& m) { return m.config().use_gcn ? "gcn" : "text-only"; }

inline void cmd_eval(const Context& ctx, const std::string& split) {
  const Corpus c = read_corpus_dir(ctx.corpus_dir);
  const extract::Model m = load_model_for(ctx);
  const auto& docs = c.split(split);
  eval::EvalReport r{model_label(m), split, ctx.cfg.span_scoring ? eval::evaluate_spans(m, docs) : extract::evaluate(m, docs)};
  write_file_atomic(ctx.out / ("metrics_" + split + ".json"), dump(eval::to_json(r)));
  std::string preds;
  for (const auto& d : docs) preds += extract::to_json(extract::predict(m, d)).dump() + "\n";
  write_file_atomic(ctx.out / ("predictions_" + split + ".jsonl"), preds);
  *ctx.log << eval::format_reports({r});
}

inline void cmd_fewshot(const Context& ctx) {
  const Corpus c = read_corpus_dir(ctx.corpus_dir);
  const extract::Model base = load_model_for(ctx);
  eval::FewShotConfig fc;
  fc.sizes = ctx.cfg.fewshot_sizes;
  fc.seeds.clear();
  for (std::size_t s = 0; s < ctx.cfg.fewshot_seeds; ++s) fc.seeds.push_back(ctx.cfg.seed + s);
  fc.epochs = ctx.cfg.fewshot_epochs;
  fc.lr_encoder = ctx.cfg.lr_encoder;
  fc.lr_rest = ctx.cfg.lr_rest;
  fc.workers = ctx.cfg.workers;
  const auto curve = eval::fewshot(base, c.split("few_shot"), c.split("unseen_test"), fc);
  write_file_atomic(ctx.out / "fewshot_curve.json", dump(eval::to_json(curve)));
  write_file_atomic(ctx.out / "fewshot_curve.tsv", eval::format_curve(curve));
  *ctx.log << eval::format_curve(curve);
}

inline void cmd_ablate(const Context& ctx) {
  const Corpus c = read_corpus_dir(ctx.corpus_dir);
  const doc::TagSet tags(entity_types(ctx.cfg));
  eval::AblationConfig ac;
  ac.switches = ctx.cfg.ablate_switches;
  ac.seeds.clear();
  for (std::size_t s = 0; s < ctx.cfg.ablate_seeds; ++s) ac.seeds.push_back(ctx.cfg.seed + s);
  ac.train = train_config(ctx.cfg);
  ac.train.log = ctx.cfg.workers > 1 ? nullptr : ctx.logger();
  ac.workers = ctx.cfg.workers;
  extract::ModelConfig mc = model_config(ctx.cfg);
  mc.use_gcn = true;
  const auto table = eval::ablate(c.split("train"), c.has("val") ? c.split("val") : std::vector<doc::Document>{},
                                  c.split("test"), mc, corpus_vocab(c, ctx.cfg), tags, ac);
  write_file_atomic(ctx.out / "ablation.json", dump(eval::to_json(table)));
  write_file_atomic(ctx.out / "ablation.txt", eval::format_ablation(table));
  *ctx.log << eval::format_ablation(table);
}

// ---------------------------------------------------------------- entry point

// Exit codes: 0 success, 1 runtime failure, 2 usage or config error, 3 missing input.
inline int run(int argc, const char* const* argv, std::ostream& log = std::cerr) {
  CLI::App app{"Layout-aware information extraction from visually rich documents"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");

  std::string config_path, out_dir, corpus_dir, preset, split = "test", stages;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers, max_nodes;
  std::optional<double> eps_align, merge_eps, balance_ratio;
  std::string init, model_path, sizes, switches;
  bool text_only = false;
  std::vector<std::string> sets;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--preset", preset, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--workers", workers, "maximum worker threads");
    sub->add_option("--corpus-dir", corpus_dir, "directory holding the corpus (default: --out)");
    sub->add_option("--eps-align", eps_align, "alignment tolerance");
    sub->add_option("--merge-eps", merge_eps, "box merge distance");
    sub->add_option("--max-nodes", max_nodes, "node cap per graph chunk");
    sub->add_option("--set", sets, "override a config key, KEY=JSON");
  };
  auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic corpus and split manifest");
  auto* bg = app.add_subcommand("build-graph", "dump per-page graphs");
  auto* pre = app.add_subcommand("pretrain", "run unsupervised encoder stages");
  pre->add_option("--stages", stages, "comma list of mlm,sprc");
  pre->add_option("--balance-ratio", balance_ratio, "SPRC vertical pair share, 0 keeps every pair");
  auto* tr = app.add_subcommand("train", "supervised training");
  tr->add_option("--init", init, "encoder checkpoint from pretrain");
  tr->add_flag("--text-only", text_only, "disable the graph module");
  auto* ev = app.add_subcommand("eval", "evaluate a model on a split");
  ev->add_option("--model", model_path, "model checkpoint");
  ev->add_option("--split", split, "split name");
  auto* fsh = app.add_subcommand("fewshot", "few-shot curve on held-out templates");
  fsh->add_option("--model", model_path, "base model checkpoint");
  fsh->add_option("--sizes", sizes, "comma list of training-set sizes");
  auto* ab = app.add_subcommand("ablate", "graph-module ablation table");
  ab->add_option("--switches", switches, "comma list of switches to disable");
  for (auto* s : {gen, bg, pre, tr, ev, fsh, ab}) common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  auto error = [&](const std::string& kind, const std::string& msg, const std::string& key, int code) {
    json j{{"error", kind}, {"message", msg}};
    if (!key.empty()) j["key"] = key;
    log << j.dump() << std::endl;
    return code;
  };
  auto split_list = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
      if (!item.empty()) out.push_back(item);
    return out;
  };

  try {
    json file = json::object();
    if (!config_path.empty()) file = json::parse(read_file(config_path));
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError(kv, "--set expects KEY=JSON");
      try {
        file[kv.substr(0, eq)] = json::parse(kv.substr(eq + 1));
      } catch (const json::parse_error&) {
        file[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
    }
    Context ctx;
    ctx.cfg = resolve_config(file, preset.empty() ? std::nullopt : std::optional<std::string>(preset));
    RunConfig& c = ctx.cfg;
    if (seed) c.seed = *seed;
    if (workers) c.workers = *workers;
    if (!corpus_dir.empty()) c.corpus_dir = corpus_dir;
    if (eps_align) c.eps_align = *eps_align;
    if (merge_eps) c.merge_eps = *merge_eps;
    if (max_nodes) c.max_nodes = *max_nodes;
    if (balance_ratio) c.balance_ratio = *balance_ratio;
    if (!stages.empty()) c.stages = stages;
    if (!init.empty()) c.init_checkpoint = init;
    if (!model_path.empty()) c.model_checkpoint = model_path;
    if (text_only) c.use_gcn = false;
    if (!sizes.empty()) {
      c.fewshot_sizes.clear();
      for (const auto& s : split_list(sizes)) {
        try {
          c.fewshot_sizes.push_back(static_cast<std::size_t>(std::stoull(s)));
        } catch (const std::exception&) {
          throw ConfigError("fewshot_sizes", "not a size: " + s);
        }
      }
    }
    if (!switches.empty()) c.ablate_switches = split_list(switches);
    validate(c);

    ctx.out = out_dir;
    ctx.corpus_dir = c.corpus_dir.empty() ? ctx.out : fs::path(c.corpus_dir);
    ctx.log = &log;
    fs::create_directories(ctx.out);
    const std::string name = app.get_subcommands().front()->get_name();
    log_resolved(ctx, name);
    if (name == "gen-corpus") cmd_gen_corpus(ctx);
    else if (name == "build-graph") cmd_build_graph(ctx);
    else if (name == "pretrain") cmd_pretrain(ctx);
    else if (name == "train") cmd_train(ctx);
    else if (name == "eval") cmd_eval(ctx, split);
    else if (name == "fewshot") cmd_fewshot(ctx);
    else if (name == "ablate") cmd_ablate(ctx);
    return 0;
  } catch (const ConfigError& e) {
    return error("config", e.what(), e.key, 2);
  } catch (const json::parse_error& e) {
    return error("config", std::string("malformed JSON: ") + e.what(), "", 2);
  } catch (const MissingInput& e) {
    return error("missing_input", e.what(), "", 3);
  } catch (const IoError& e) {
    return error("io", e.what(), "", 3);
  } catch (const std::exception& e) {
    return error("runtime", e.what(), "", 1);
  }
}

}  // namespace vrdie::cli
