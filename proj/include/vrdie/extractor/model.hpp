#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vrdie/docmodel/labels.hpp"
#include "vrdie/docmodel/merge.hpp"
#include "vrdie/docmodel/tokenize.hpp"
#include "vrdie/docmodel/vocab.hpp"
#include "vrdie/layoutgcn/gcn.hpp"
#include "vrdie/layoutgraph/graph.hpp"
#include "vrdie/nn/checkpoint.hpp"
#include "vrdie/textencoder/encoder.hpp"

namespace vrdie::extract {

using nlohmann::json;
using nn::Parameter;
using nn::Rng;
using nn::Tape;
using nn::Tensor;
using nn::Var;

struct ModelConfig {
  enc::EncoderConfig encoder;  // vocab_size is taken from the vocabulary
  std::size_t gcn_hidden = 64;
  std::size_t gcn_layers = 2;
  int max_ranks = 16;
  bool use_gcn = true;
  bool use_font = true;
  bool use_section_edges = true;
  bool use_skip = true;
  double eps_align = 1.0;
  double merge_eps = 1.0;
  std::size_t max_nodes = 100;

  bool operator==(const ModelConfig&) const = default;
};

inline json to_json(const enc::EncoderConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"hidden_dim", c.hidden_dim}, {"num_layers", c.num_layers},
          {"num_heads", c.num_heads},   {"ffn_dim", c.ffn_dim},       {"max_seq_len", c.max_seq_len},
          {"dropout", c.dropout}};
}

inline enc::EncoderConfig encoder_config_from_json(const json& j) {
  enc::EncoderConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.num_layers = j.at("num_layers").get<std::size_t>();
  c.num_heads = j.at("num_heads").get<std::size_t>();
  c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
  c.max_seq_len = j.at("max_seq_len").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  return c;
}

inline json to_json(const ModelConfig& c) {
  return {{"encoder", to_json(c.encoder)},
          {"gcn_hidden", c.gcn_hidden},
          {"gcn_layers", c.gcn_layers},
          {"max_ranks", c.max_ranks},
          {"use_gcn", c.use_gcn},
          {"use_font", c.use_font},
          {"use_section_edges", c.use_section_edges},
          {"use_skip", c.use_skip},
          {"eps_align", c.eps_align},
          {"merge_eps", c.merge_eps},
          {"max_nodes", c.max_nodes}};
}

inline ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.encoder = encoder_config_from_json(j.at("encoder"));
  c.gcn_hidden = j.at("gcn_hidden").get<std::size_t>();
  c.gcn_layers = j.at("gcn_layers").get<std::size_t>();
  c.max_ranks = j.at("max_ranks").get<int>();
  c.use_gcn = j.at("use_gcn").get<bool>();
  c.use_font = j.at("use_font").get<bool>();
  c.use_section_edges = j.at("use_section_edges").get<bool>();
  c.use_skip = j.at("use_skip").get<bool>();
  c.eps_align = j.at("eps_align").get<double>();
  c.merge_eps = j.at("merge_eps").get<double>();
  c.max_nodes = j.at("max_nodes").get<std::size_t>();
  return c;
}

// ---------------------------------------------------------------- preprocessing

struct PreparedBox {
  int box_id = 0;
  std::string text;
  doc::TokenSequence toks;  // bio_tags filled for labeled input
  enc::Framed framed;
  int font_rank = 0;
};

// One graph: a page, or a reading-order chunk of an oversized page.
struct PreparedPage {
  std::string doc_id;
  int page_no = 0;
  bool labeled = false;
  std::vector<PreparedBox> boxes;  // reading order == graph.node_ids
  graph::PageGraph graph;
  gcn::Neighborhoods nbhd;

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& b : boxes) n += b.toks.size();
    return n;
  }
};

// Merge, rank fonts, chunk, tokenize and build graphs exactly as for training.
// With `tags` set, gold BIO tags are projected onto the tokens.
inline std::vector<PreparedPage> prepare_document(const doc::Document& d, const ModelConfig& cfg,
                                                  const doc::Vocabulary& vocab, const doc::TagSet* tags) {
  doc::Document merged = d;
  for (auto& p : merged.pages) p = doc::merge_close_boxes(p, cfg.merge_eps);
  const graph::FontRankTable ranks = graph::rank_fonts(merged, cfg.max_ranks);
  const graph::GraphOptions gopt{cfg.eps_align, cfg.use_section_edges};
  std::vector<PreparedPage> out;
  for (const auto& page : merged.pages) {
    for (doc::Page chunk : graph::chunk_page(page, cfg.max_nodes)) {
      if (chunk.boxes.empty()) continue;
      std::vector<doc::TextBox> ordered;
      for (std::size_t k : doc::reading_order(chunk.boxes)) ordered.push_back(chunk.boxes[k]);
      chunk.boxes = std::move(ordered);
      PreparedPage pp;
      pp.doc_id = d.doc_id;
      pp.page_no = page.page_no;
      pp.labeled = tags != nullptr;
      pp.graph = graph::build_page_graph(chunk, gopt);
      pp.nbhd = gcn::neighborhoods(pp.graph, graph::kNumEdgeTypes);
      for (const auto& b : chunk.boxes) {
        PreparedBox pb;
        pb.box_id = b.box_id;
        pb.text = b.text;
        pb.toks = doc::tokenize(b.text);
        if (tags) pb.toks = doc::project_labels(b, std::move(pb.toks), *tags);
        pb.framed = enc::frame_single(vocab.ids(pb.toks), cfg.encoder.max_seq_len);
        pb.font_rank = ranks.rank(b);
        pp.boxes.push_back(std::move(pb));
      }
      for (std::size_t k = 0; k < pp.boxes.size(); ++k)
        if (pp.graph.node_ids[k] != pp.boxes[k].box_id) throw std::logic_error("prepare_document: node order mismatch");
      out.push_back(std::move(pp));
    }
  }
  return out;
}

inline std::vector<PreparedPage> prepare_corpus(const std::vector<doc::Document>& docs, const ModelConfig& cfg,
                                                const doc::Vocabulary& vocab, const doc::TagSet* tags) {
  std::vector<PreparedPage> out;
  for (const auto& d : docs) {
    auto pages = prepare_document(d, cfg, vocab, tags);
    std::move(pages.begin(), pages.end(), std::back_inserter(out));
  }
  return out;
}

// ---------------------------------------------------------------- model

struct PageLogits {
  Var logits;                    // one row per kept token, boxes in order
  std::vector<std::size_t> kept;  // kept tokens per box
};

// Encoder + font embedding + GCN + linear BIO tagging head over
// [token state ‖ box node state].
class Model {
 public:
  Model() = default;
  Model(ModelConfig cfg, doc::Vocabulary vocab, doc::TagSet tags, std::uint64_t seed)
      : cfg_(std::move(cfg)), vocab_(std::move(vocab)), tags_(std::move(tags)) {
    if (tags_.num_types() == 0) throw std::invalid_argument("Model: empty tag set");
    cfg_.encoder.vocab_size = vocab_.size();
    enc_ = enc::Encoder(cfg_.encoder, nn::derive_seed(seed, {1}));
    const std::size_t d = cfg_.encoder.hidden_dim;
    std::size_t head_in = d;
    if (cfg_.use_gcn) {
      if (cfg_.use_font) font_ = gcn::FontEmbedding(cfg_.max_ranks, nn::derive_seed(seed, {2}));
      gcn::GcnConfig g;
      g.in_dim = d + (cfg_.use_font ? gcn::kFontDim : 0);
      g.hidden_dim = cfg_.gcn_hidden;
      g.num_layers = cfg_.gcn_layers;
      g.num_edge_types = graph::kNumEdgeTypes;
      g.skip_connections = cfg_.use_skip;
      gcn_ = gcn::Gcn(g, nn::derive_seed(seed, {3}));
      head_in += cfg_.gcn_hidden;
    }
    Rng rng(nn::derive_seed(seed, {4}));
    head_w_ = nn::normal_param("head.w", head_in, tags_.num_tags(), std::sqrt(1.0 / static_cast<double>(head_in)), rng);
    head_b_ = nn::const_param("head.b", 1, tags_.num_tags(), 0.0);
  }

  const ModelConfig& config() const { return cfg_; }
  const doc::Vocabulary& vocab() const { return vocab_; }
  const doc::TagSet& tags() const { return tags_; }
  const enc::Encoder& encoder() const { return enc_; }
  enc::Encoder& encoder() { return enc_; }

  template <class F>
  void visit(F&& f) {
    enc_.visit(f);
    if (cfg_.use_gcn) {
      if (cfg_.use_font) font_.visit(f);
      gcn_.visit(f);
    }
    f(head_w_);
    f(head_b_);
  }

  PageLogits forward(Tape& t, const PreparedPage& page, bool train, Rng* rng = nullptr) const {
    if (page.boxes.size() != page.graph.node_ids.size()) throw std::invalid_argument("forward_page: box count mismatch");
    std::vector<enc::EncoderInput> inputs;
    inputs.reserve(page.boxes.size());
    for (const auto& b : page.boxes) inputs.push_back(b.framed.input);
    enc::EncodedBatch batch = enc_.forward(t, inputs, train, rng);

    PageLogits out;
    std::vector<std::size_t> rows, box_of_row;
    for (std::size_t b = 0; b < page.boxes.size(); ++b) {
      const std::size_t kept = page.boxes[b].framed.kept;
      out.kept.push_back(kept);
      for (std::size_t i = 0; i < kept; ++i) {
        rows.push_back(batch.segments[b].offset + 1 + i);
        box_of_row.push_back(b);
      }
    }
    Var feat = nn::gather_rows(batch.states, std::move(rows));
    if (cfg_.use_gcn) {
      Var cls = nn::gather_rows(batch.states, batch.cls_rows());
      Var h0 = cls;
      if (cfg_.use_font) {
        std::vector<int> ranks;
        for (const auto& b : page.boxes) ranks.push_back(b.font_rank);
        h0 = gcn::node_init(cls, ranks, t.param(font_.table()));
      }
      Var h = gcn_.forward(t, page.nbhd, h0);
      feat = nn::concat_cols(feat, nn::gather_rows(h, std::move(box_of_row)));
    }
    if (train) feat = nn::dropout(feat, cfg_.encoder.dropout, *rng, true);
    out.logits = nn::linear(feat, t.param(head_w_), t.param(head_b_));
    return out;
  }

 private:
  ModelConfig cfg_;
  doc::Vocabulary vocab_;
  doc::TagSet tags_;
  enc::Encoder enc_;
  gcn::FontEmbedding font_;
  gcn::Gcn gcn_;
  Parameter head_w_, head_b_;
};

// Gold tags of the kept tokens, aligned with PageLogits rows.
inline std::vector<int> kept_targets(const PreparedPage& page) {
  if (!page.labeled) throw std::invalid_argument("page_loss: page " + page.doc_id + " has no gold labels");
  std::vector<int> t;
  for (const auto& b : page.boxes)
    t.insert(t.end(), b.toks.bio_tags.begin(), b.toks.bio_tags.begin() + static_cast<std::ptrdiff_t>(b.framed.kept));
  return t;
}

// Mean token cross-entropy over the page; truncated tokens are excluded.
inline Var page_loss(Tape& t, const Model& m, const PreparedPage& page, bool train = false, Rng* rng = nullptr) {
  PageLogits pl = m.forward(t, page, train, rng);
  return nn::cross_entropy(pl.logits, kept_targets(page));
}

// Argmax tags per box over every token; tokens past the truncation point are O.
inline std::vector<std::vector<int>> predict_tags(const Model& m, const PreparedPage& page) {
  Tape t(false);
  PageLogits pl = m.forward(t, page, false);
  const Tensor& L = pl.logits.value();
  std::vector<std::vector<int>> out;
  std::size_t r = 0;
  for (std::size_t b = 0; b < page.boxes.size(); ++b) {
    std::vector<int> tags(page.boxes[b].toks.size(), 0);
    for (std::size_t i = 0; i < pl.kept[b]; ++i, ++r) {
      auto row = L.row_span(r);
      tags[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    out.push_back(doc::repair_bio(std::move(tags)));
  }
  return out;
}

// ---------------------------------------------------------------- predictions

struct EntityOut {
  int page_no = 0;
  int box_id = 0;
  std::string entity_type;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::string text;

  bool operator==(const EntityOut&) const = default;
};

struct DocumentPrediction {
  std::string doc_id;
  std::vector<EntityOut> entities;

  bool operator==(const DocumentPrediction&) const = default;
};

// Box ids refer to the merged page that the model sees.
inline DocumentPrediction predict(const Model& m, const doc::Document& d) {
  DocumentPrediction out;
  out.doc_id = d.doc_id;
  for (const auto& page : prepare_document(d, m.config(), m.vocab(), nullptr)) {
    const auto tags = predict_tags(m, page);
    for (std::size_t b = 0; b < page.boxes.size(); ++b) {
      const auto& box = page.boxes[b];
      for (const auto& s : doc::decode_spans(tags[b], box.toks, m.tags()))
        out.entities.push_back({page.page_no, box.box_id, s.entity_type, s.char_start, s.char_end,
                                box.text.substr(s.char_start, s.char_end - s.char_start)});
    }
  }
  return out;
}

inline json to_json(const DocumentPrediction& p) {
  json ents = json::array();
  for (const auto& e : p.entities)
    ents.push_back({{"page_no", e.page_no},
                    {"box_id", e.box_id},
                    {"entity_type", e.entity_type},
                    {"char_start", e.char_start},
                    {"char_end", e.char_end},
                    {"text", e.text}});
  return {{"doc_id", p.doc_id}, {"entities", std::move(ents)}};
}

// ---------------------------------------------------------------- checkpoints

inline nn::Checkpoint to_checkpoint(Model& m) {
  nn::Checkpoint ck;
  ck.config = json{{"kind", "extractor"},
                   {"model", to_json(m.config())},
                   {"vocab", m.vocab().keys()},
                   {"tags", m.tags().types()}}
                  .dump();
  m.visit([&](Parameter& p) { ck.tensors.push_back({p.name, p.value}); });
  return ck;
}

inline Model model_from_checkpoint(const nn::Checkpoint& ck) {
  const json j = json::parse(ck.config);
  if (j.value("kind", "") != "extractor") throw nn::CheckpointError("checkpoint does not hold an extractor model");
  Model m(model_config_from_json(j.at("model")), doc::Vocabulary(j.at("vocab").get<std::vector<std::string>>()),
          doc::TagSet(j.at("tags").get<std::vector<std::string>>()), 0);
  nn::restore_parameters(ck, nn::parameters_of(m));
  return m;
}

inline void save_model(const std::filesystem::path& path, Model& m) { nn::save_checkpoint(path, to_checkpoint(m)); }
inline Model load_model(const std::filesystem::path& path) { return model_from_checkpoint(nn::load_checkpoint(path)); }

// Encoder-only checkpoint, the hand-off format between pretraining stages and
// supervised training.
inline nn::Checkpoint encoder_checkpoint(enc::Encoder& e, const doc::Vocabulary& vocab) {
  nn::Checkpoint ck;
  ck.config = json{{"kind", "encoder"}, {"encoder", to_json(e.config())}, {"vocab", vocab.keys()}}.dump();
  e.visit([&](Parameter& p) { ck.tensors.push_back({p.name, p.value}); });
  return ck;
}

struct EncoderBundle {
  enc::EncoderConfig config;
  doc::Vocabulary vocab;
  nn::Checkpoint checkpoint;
};

inline EncoderBundle read_encoder_checkpoint(const nn::Checkpoint& ck) {
  const json j = json::parse(ck.config);
  if (j.value("kind", "") != "encoder") throw nn::CheckpointError("checkpoint does not hold an encoder");
  return {encoder_config_from_json(j.at("encoder")), doc::Vocabulary(j.at("vocab").get<std::vector<std::string>>()), ck};
}

// Copies pretrained encoder weights into `m`; vocabularies must agree.
inline void load_encoder_weights(Model& m, const EncoderBundle& b) {
  if (!(b.vocab == m.vocab())) throw nn::CheckpointError("encoder checkpoint vocabulary differs from the model's");
  nn::restore_parameters(b.checkpoint, nn::parameters_of(m.encoder()));
}

}  // namespace vrdie::extract
