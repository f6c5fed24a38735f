#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vrdie/docmodel/merge.hpp"
#include "vrdie/docmodel/tokenize.hpp"
#include "vrdie/docmodel/vocab.hpp"
#include "vrdie/extractor/model.hpp"
#include "vrdie/extractor/train.hpp"
#include "vrdie/layoutgraph/graph.hpp"
#include "vrdie/nn/optim.hpp"
#include "vrdie/textencoder/mlm.hpp"

namespace vrdie::pretrain {

using nn::Parameter;
using nn::Rng;
using nn::Tape;
using nn::Tensor;
using nn::Var;

struct PretrainConfig {
  std::size_t epochs = 30;
  double lr = 1e-3;
  std::size_t batch = 16;  // sequences per optimizer step
  double mask_ratio = 0.15;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
  std::function<void(const std::string&)> log;
};

struct PretrainReport {
  std::string stage;
  std::vector<double> epoch_loss;
  std::string metric_name;
  double initial_metric = 0;  // held-out metric before the first update
  double metric_value = 0;    // held-out metric after the last epoch
  std::size_t train_examples = 0;
  std::size_t val_examples = 0;
};

inline nlohmann::json to_json(const PretrainReport& r, const std::string& checkpoint = std::string()) {
  return {{"stage", r.stage},
          {"epochs", r.epoch_loss.size()},
          {"epoch_loss", r.epoch_loss},
          {"initial_metric_value", r.initial_metric},
          {"final_metric_name", r.metric_name},
          {"final_metric_value", r.metric_value},
          {"train_examples", r.train_examples},
          {"val_examples", r.val_examples},
          {"checkpoint", checkpoint}};
}

// Held-out membership from a stable hash, so the split does not depend on
// corpus order.
inline bool in_validation(const std::string& key, double fraction) {
  return static_cast<double>(nn::stable_hash(key) % 10000) < fraction * 10000.0;
}

inline doc::Document merged_copy(const doc::Document& d, double merge_eps) {
  doc::Document m = d;
  for (auto& p : m.pages) p = doc::merge_close_boxes(p, merge_eps);
  return m;
}

// ---------------------------------------------------------------- SPRC

struct SprcExample {
  std::string doc_id;
  int page_no = 0;
  int box_a = 0, box_b = 0;
  enc::EncoderInput input;
  int label = 0;  // graph::Relation
  bool truncated = false;
};

struct SprcOptions {
  double eps_align = 1.0;
  double merge_eps = 1.0;
  std::optional<double> balance_ratio;  // keep this share of vertical pairs
  std::size_t max_seq_len = 50;
  std::size_t max_train = 0;  // when nonzero, a seeded subsample of this many training pairs
};

struct SprcDataset {
  std::vector<SprcExample> train, val;
  std::size_t size() const { return train.size() + val.size(); }
};

// Both orders of a pair share one hash key and therefore one split.
inline SprcDataset build_sprc_dataset(const std::vector<doc::Document>& docs, const doc::Vocabulary& vocab,
                                      const SprcOptions& opt, double val_fraction, std::uint64_t seed) {
  SprcDataset ds;
  for (const auto& raw : docs) {
    const doc::Document d = merged_copy(raw, opt.merge_eps);
    for (const auto& page : d.pages) {
      auto pairs = graph::extract_sprc_pairs(page, opt.eps_align);
      if (opt.balance_ratio)
        pairs = graph::balance_sprc_pairs(pairs, *opt.balance_ratio,
                                          nn::derive_seed(seed, {nn::stable_hash(d.doc_id),
                                                                 static_cast<std::uint64_t>(page.page_no)}));
      for (const auto& p : pairs) {
        SprcExample ex;
        ex.doc_id = d.doc_id;
        ex.page_no = page.page_no;
        ex.box_a = p.box_a;
        ex.box_b = p.box_b;
        ex.label = static_cast<int>(p.label);
        const auto fr = enc::frame_pair(vocab.ids(doc::tokenize(page.find(p.box_a)->text)),
                                        vocab.ids(doc::tokenize(page.find(p.box_b)->text)), opt.max_seq_len);
        ex.input = fr.input;
        ex.truncated = fr.truncated;
        const std::string key = d.doc_id + "#" + std::to_string(page.page_no) + "#" +
                                std::to_string(std::min(p.box_a, p.box_b)) + "#" +
                                std::to_string(std::max(p.box_a, p.box_b));
        (in_validation(key, val_fraction) ? ds.val : ds.train).push_back(std::move(ex));
      }
    }
  }
  if (ds.size() == 0) throw std::invalid_argument("build_sprc_dataset: corpus yields no adjacent pairs");
  if (opt.max_train > 0 && ds.train.size() > opt.max_train) {
    nn::Rng rng(nn::derive_seed(seed, {0x5a}));
    rng.shuffle(ds.train);
    ds.train.resize(opt.max_train);
  }
  return ds;
}

class SprcHead {
 public:
  SprcHead() = default;
  SprcHead(std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    w_ = nn::normal_param("sprc.w", dim, graph::kNumRelations, 0.02, rng);
    b_ = nn::const_param("sprc.b", 1, graph::kNumRelations, 0.0);
  }
  template <class F>
  void visit(F&& f) {
    f(w_);
    f(b_);
  }
  Var logits(Tape& t, const Var& cls) const { return nn::linear(cls, t.param(w_), t.param(b_)); }

 private:
  Parameter w_, b_;
};

// Relation logits (one row of 4 per example) from the [CLS] state of each pair.
inline Var sprc_forward(Tape& t, const enc::Encoder& e, const SprcHead& head, const std::vector<const SprcExample*>& batch,
                        bool train, Rng* rng = nullptr) {
  std::vector<enc::EncoderInput> inputs;
  for (const auto* ex : batch) inputs.push_back(ex->input);
  const auto enc_out = e.forward(t, inputs, train, rng);
  return head.logits(t, nn::gather_rows(enc_out.states, enc_out.cls_rows()));
}

inline double sprc_accuracy(const enc::Encoder& e, const SprcHead& head, const std::vector<SprcExample>& examples,
                            std::size_t batch = 64) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t s = 0; s < examples.size(); s += batch) {
    std::vector<const SprcExample*> b;
    for (std::size_t i = s; i < std::min(examples.size(), s + batch); ++i) b.push_back(&examples[i]);
    Tape t(false);
    const Tensor L = sprc_forward(t, e, head, b, false).value();
    for (std::size_t r = 0; r < b.size(); ++r) {
      auto row = L.row_span(r);
      if (std::max_element(row.begin(), row.end()) - row.begin() == b[r]->label) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

// ---------------------------------------------------------------- MLM

struct MlmSequence {
  std::string doc_id;
  std::vector<int> ids;  // content ids, framed at use
};

// Page text in reading order, concatenated and cut into windows of
// max_seq_len - 2 tokens.
inline std::vector<MlmSequence> mlm_sequences(const std::vector<doc::Document>& docs, const doc::Vocabulary& vocab,
                                              double merge_eps, std::size_t max_seq_len) {
  if (max_seq_len < 3) throw std::invalid_argument("mlm_sequences: max_seq_len too small");
  const std::size_t window = max_seq_len - 2;
  std::vector<MlmSequence> out;
  for (const auto& raw : docs) {
    const doc::Document d = merged_copy(raw, merge_eps);
    for (const auto& page : d.pages) {
      std::vector<int> stream;
      for (std::size_t k : doc::reading_order(page.boxes)) {
        const auto ids = vocab.ids(doc::tokenize(page.boxes[k].text));
        stream.insert(stream.end(), ids.begin(), ids.end());
      }
      for (std::size_t s = 0; s < stream.size(); s += window)
        out.push_back({d.doc_id, std::vector<int>(stream.begin() + static_cast<std::ptrdiff_t>(s),
                                                  stream.begin() + static_cast<std::ptrdiff_t>(std::min(stream.size(), s + window)))});
    }
  }
  return out;
}

struct MaskedBatch {
  std::vector<enc::EncoderInput> inputs;
  std::vector<std::vector<std::size_t>> rows;  // masked rows within each sequence (framed index)
  std::vector<int> targets;
};

inline MaskedBatch mask_batch(const std::vector<const MlmSequence*>& seqs, const std::vector<std::uint64_t>& seeds,
                              std::size_t vocab_size, double ratio) {
  MaskedBatch mb;
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    const auto m = enc::dynamic_mask(seqs[s]->ids, seeds[s], vocab_size, ratio);
    enc::EncoderInput in;
    in.ids.push_back(doc::kCls);
    in.ids.insert(in.ids.end(), m.ids.begin(), m.ids.end());
    in.ids.push_back(doc::kSep);
    std::vector<std::size_t> rows;
    for (std::size_t p : m.positions) rows.push_back(p + 1);
    mb.inputs.push_back(std::move(in));
    mb.rows.push_back(std::move(rows));
    mb.targets.insert(mb.targets.end(), m.originals.begin(), m.originals.end());
  }
  return mb;
}

// Loss only at masked rows; returns nullopt when nothing was masked.
inline std::optional<Var> mlm_batch_loss(Tape& t, const enc::Encoder& e, const enc::MlmHead& head, const MaskedBatch& mb,
                                         bool train, Rng* rng) {
  if (mb.targets.empty()) return std::nullopt;
  const auto out = e.forward(t, mb.inputs, train, rng);
  std::vector<std::size_t> rows;
  for (std::size_t s = 0; s < mb.rows.size(); ++s)
    for (std::size_t r : mb.rows[s]) rows.push_back(out.segments[s].offset + r);
  return enc::mlm_loss(t, out.states, rows, mb.targets, head);
}

// exp(mean masked-token cross-entropy) over a held-out set with a fixed mask.
inline double mlm_perplexity(const enc::Encoder& e, const enc::MlmHead& head, const std::vector<MlmSequence>& seqs,
                             std::uint64_t seed, double ratio, std::size_t batch = 32) {
  double total = 0;
  std::size_t count = 0;
  for (std::size_t s = 0; s < seqs.size(); s += batch) {
    std::vector<const MlmSequence*> b;
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = s; i < std::min(seqs.size(), s + batch); ++i) {
      b.push_back(&seqs[i]);
      seeds.push_back(nn::derive_seed(seed, {0xe7a1, i}));
    }
    const auto mb = mask_batch(b, seeds, e.config().vocab_size, ratio);
    Tape t(false);
    if (auto loss = mlm_batch_loss(t, e, head, mb, false, nullptr)) {
      total += loss->value()[0] * static_cast<double>(mb.targets.size());
      count += mb.targets.size();
    }
  }
  if (count == 0) throw std::invalid_argument("mlm_perplexity: held-out set has no maskable tokens");
  return enc::perplexity(total / static_cast<double>(count));
}

struct EncoderResult {
  enc::Encoder encoder;
  PretrainReport report;
};

inline void log_epoch(const PretrainConfig& cfg, const std::string& stage, std::size_t epoch, double loss,
                      const std::string& metric, double value) {
  if (cfg.log)
    cfg.log(stage + " epoch " + std::to_string(epoch) + " loss " + std::to_string(loss) + " " + metric + " " +
            std::to_string(value));
}

template <class Head>
std::vector<nn::ParamGroup> encoder_and_head(enc::Encoder& e, Head& head, double lr) {
  nn::ParamGroup g{"pretrain", {}, nn::parameters_of(e)};
  for (auto* p : nn::parameters_of(head)) g.params.push_back(p);
  g.hyper.lr = lr;
  return {g};
}

// Dynamic-mask MLM on unlabeled text; the mask of every sequence is redrawn
// each epoch.
inline EncoderResult run_mlm(const std::vector<doc::Document>& docs, const doc::Vocabulary& vocab,
                             const enc::EncoderConfig& enc_cfg, const PretrainConfig& cfg, double merge_eps = 1.0,
                             const enc::Encoder* init = nullptr) {
  if (docs.empty()) throw std::invalid_argument("run_mlm: empty corpus");
  std::vector<MlmSequence> train, val;
  for (auto& s : mlm_sequences(docs, vocab, merge_eps, enc_cfg.max_seq_len))
    (in_validation(s.doc_id, cfg.val_fraction) ? val : train).push_back(std::move(s));
  if (train.empty()) throw std::invalid_argument("run_mlm: no training sequences");
  if (val.empty()) throw std::invalid_argument("run_mlm: held-out split is empty; use more documents");
  EncoderResult res;
  res.encoder = init ? *init : enc::Encoder(enc_cfg, nn::derive_seed(cfg.seed, {0x31}));
  if (res.encoder.config().vocab_size != vocab.size()) throw std::invalid_argument("run_mlm: encoder/vocabulary size mismatch");
  enc::MlmHead head(enc_cfg.hidden_dim, vocab.size(), nn::derive_seed(cfg.seed, {0x32}));
  res.report.stage = "mlm";
  res.report.metric_name = "perplexity";
  res.report.train_examples = train.size();
  res.report.val_examples = val.size();
  res.report.initial_metric = mlm_perplexity(res.encoder, head, val, cfg.seed, cfg.mask_ratio);
  nn::Adam opt(encoder_and_head(res.encoder, head, cfg.lr));
  opt.zero_grad();
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng(nn::derive_seed(cfg.seed, {0x5e, epoch}));
    shuffle_rng.shuffle(order);
    double loss_sum = 0;
    std::size_t steps = 0;
    for (std::size_t s = 0; s < order.size(); s += cfg.batch) {
      std::vector<const MlmSequence*> b;
      std::vector<std::uint64_t> seeds;
      for (std::size_t i = s; i < std::min(order.size(), s + cfg.batch); ++i) {
        b.push_back(&train[order[i]]);
        seeds.push_back(nn::derive_seed(cfg.seed, {0x3a, epoch, order[i]}));
      }
      const auto mb = mask_batch(b, seeds, vocab.size(), cfg.mask_ratio);
      Rng drop(nn::derive_seed(cfg.seed, {0xd0, epoch, s}));
      Tape t(true);
      auto loss = mlm_batch_loss(t, res.encoder, head, mb, true, &drop);
      if (!loss) continue;
      loss_sum += loss->value()[0];
      ++steps;
      t.backward(*loss);
      opt.step();
    }
    res.report.epoch_loss.push_back(steps ? loss_sum / static_cast<double>(steps) : 0.0);
    res.report.metric_value = mlm_perplexity(res.encoder, head, val, cfg.seed, cfg.mask_ratio);
    log_epoch(cfg, "mlm", epoch, res.report.epoch_loss.back(), "val_perplexity", res.report.metric_value);
  }
  if (cfg.epochs == 0) res.report.metric_value = res.report.initial_metric;
  return res;
}

// Four-way relation classification of adjacent box pairs from [CLS].
inline EncoderResult run_sprc(const SprcDataset& ds, const doc::Vocabulary& vocab, const enc::EncoderConfig& enc_cfg,
                              const PretrainConfig& cfg, const enc::Encoder* init = nullptr) {
  if (ds.train.empty()) throw std::invalid_argument("run_sprc: empty training set");
  EncoderResult res;
  res.encoder = init ? *init : enc::Encoder(enc_cfg, nn::derive_seed(cfg.seed, {0x41}));
  if (res.encoder.config().vocab_size != vocab.size()) throw std::invalid_argument("run_sprc: encoder/vocabulary size mismatch");
  SprcHead head(enc_cfg.hidden_dim, nn::derive_seed(cfg.seed, {0x42}));
  res.report.stage = "sprc";
  res.report.metric_name = "accuracy";
  res.report.train_examples = ds.train.size();
  res.report.val_examples = ds.val.size();
  res.report.initial_metric = sprc_accuracy(res.encoder, head, ds.val);
  nn::Adam opt(encoder_and_head(res.encoder, head, cfg.lr));
  opt.zero_grad();
  std::vector<std::size_t> order(ds.train.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng(nn::derive_seed(cfg.seed, {0x5e, epoch}));
    shuffle_rng.shuffle(order);
    double loss_sum = 0;
    std::size_t steps = 0;
    for (std::size_t s = 0; s < order.size(); s += cfg.batch) {
      std::vector<const SprcExample*> b;
      std::vector<int> labels;
      for (std::size_t i = s; i < std::min(order.size(), s + cfg.batch); ++i) {
        b.push_back(&ds.train[order[i]]);
        labels.push_back(ds.train[order[i]].label);
      }
      Rng drop(nn::derive_seed(cfg.seed, {0xd0, epoch, s}));
      Tape t(true);
      Var loss = nn::cross_entropy(sprc_forward(t, res.encoder, head, b, true, &drop), labels);
      loss_sum += loss.value()[0];
      ++steps;
      t.backward(loss);
      opt.step();
    }
    res.report.epoch_loss.push_back(loss_sum / static_cast<double>(steps));
    res.report.metric_value = sprc_accuracy(res.encoder, head, ds.val);
    log_epoch(cfg, "sprc", epoch, res.report.epoch_loss.back(), "val_accuracy", res.report.metric_value);
  }
  if (cfg.epochs == 0) res.report.metric_value = res.report.initial_metric;
  return res;
}

// ---------------------------------------------------------------- pipeline

enum class Stage { Mlm, Sprc };

inline const char* stage_name(Stage s) { return s == Stage::Mlm ? "mlm" : "sprc"; }

// "mlm,sprc" -> {Mlm, Sprc}; MLM must precede SPRC and no stage repeats.
inline std::vector<Stage> parse_stages(const std::string& text) {
  std::vector<Stage> out;
  std::size_t pos = 0;
  while (pos <= text.size() && !text.empty()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (item == "mlm") out.push_back(Stage::Mlm);
    else if (item == "sprc") out.push_back(Stage::Sprc);
    else throw std::invalid_argument("unknown pretraining stage '" + item + "' (expected mlm or sprc)");
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = i + 1; j < out.size(); ++j) {
      if (out[i] == out[j]) throw std::invalid_argument("pretraining stage listed twice: " + std::string(stage_name(out[i])));
      if (out[i] == Stage::Sprc && out[j] == Stage::Mlm) throw std::invalid_argument("pretraining stage order must be mlm before sprc");
    }
  return out;
}

struct PipelineConfig {
  std::vector<Stage> stages;
  PretrainConfig mlm;
  PretrainConfig sprc;
  SprcOptions sprc_options;
  std::function<void(const PretrainReport&, enc::Encoder&)> on_stage;  // called after each stage
};

struct PretrainOutcome {
  std::optional<enc::Encoder> encoder;  // empty when no stage ran
  std::vector<PretrainReport> reports;
};

// Runs the requested stages in order, each initialised from the previous one.
// Heads are dropped; only the encoder is returned.
inline PretrainOutcome run_pretraining(const std::vector<doc::Document>& unlabeled, const doc::Vocabulary& vocab,
                                       const enc::EncoderConfig& enc_cfg, const PipelineConfig& cfg, double merge_eps) {
  for (std::size_t i = 0; i + 1 < cfg.stages.size(); ++i)
    if (cfg.stages[i] == Stage::Sprc && cfg.stages[i + 1] == Stage::Mlm)
      throw std::invalid_argument("pretraining stage order must be mlm before sprc");
  PretrainOutcome out;
  enc::EncoderConfig ec = enc_cfg;
  ec.vocab_size = vocab.size();
  for (Stage s : cfg.stages) {
    const enc::Encoder* init = out.encoder ? &*out.encoder : nullptr;
    EncoderResult r;
    if (s == Stage::Mlm) {
      r = run_mlm(unlabeled, vocab, ec, cfg.mlm, merge_eps, init);
    } else {
      SprcOptions so = cfg.sprc_options;
      so.max_seq_len = ec.max_seq_len;
      so.merge_eps = merge_eps;
      const auto ds = build_sprc_dataset(unlabeled, vocab, so, cfg.sprc.val_fraction, cfg.sprc.seed);
      r = run_sprc(ds, vocab, ec, cfg.sprc, init);
    }
    out.encoder = std::move(r.encoder);
    if (cfg.on_stage) cfg.on_stage(r.report, *out.encoder);
    out.reports.push_back(std::move(r.report));
  }
  return out;
}

// Copies a pretrained encoder into a fresh extractor model.
inline void install_encoder(extract::Model& m, enc::Encoder& e) {
  if (!(e.config() == m.config().encoder))
    throw std::invalid_argument("install_encoder: pretrained encoder configuration differs from the model's");
  nn::restore_parameters(extract::encoder_checkpoint(e, m.vocab()), nn::parameters_of(m.encoder()));
}

struct PipelineResult {
  extract::TrainResult supervised;
  std::vector<PretrainReport> reports;
};

// Pretraining stages on unlabeled documents, then supervised training of a
// model whose encoder starts from the pretrained weights.
inline PipelineResult run_pipeline(const std::vector<doc::Document>& unlabeled, const std::vector<doc::Document>& train,
                                   const std::vector<doc::Document>& val, extract::Model init, const PipelineConfig& cfg,
                                   const extract::TrainConfig& train_cfg) {
  PipelineResult res;
  auto pre = run_pretraining(unlabeled, init.vocab(), init.config().encoder, cfg, init.config().merge_eps);
  if (pre.encoder) install_encoder(init, *pre.encoder);
  res.reports = std::move(pre.reports);
  res.supervised = extract::train_supervised(train, val, std::move(init), train_cfg);
  return res;
}

}  // namespace vrdie::pretrain
