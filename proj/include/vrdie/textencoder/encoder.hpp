#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "vrdie/docmodel/vocab.hpp"
#include "vrdie/nn/module.hpp"
#include "vrdie/nn/ops.hpp"

namespace vrdie::enc {

using nn::Parameter;
using nn::Rng;
using nn::Tape;
using nn::Tensor;
using nn::Var;

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t hidden_dim = 64;
  std::size_t num_layers = 2;
  std::size_t num_heads = 4;
  std::size_t ffn_dim = 128;
  std::size_t max_seq_len = 50;
  double dropout = 0.1;

  void validate() const {
    if (vocab_size <= static_cast<std::size_t>(doc::kNumReserved))
      throw std::invalid_argument("EncoderConfig: vocab_size must exceed the reserved ids");
    if (hidden_dim == 0 || num_heads == 0 || hidden_dim % num_heads != 0)
      throw std::invalid_argument("EncoderConfig: hidden_dim must be divisible by num_heads");
    if (max_seq_len < 2) throw std::invalid_argument("EncoderConfig: max_seq_len must be >= 2");
    if (num_layers == 0 || ffn_dim == 0) throw std::invalid_argument("EncoderConfig: empty layer stack");
    if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("EncoderConfig: dropout must be in [0,1)");
  }

  bool operator==(const EncoderConfig&) const = default;
};

// One framed input row block: [CLS] ... [SEP] (... [SEP]).
struct EncoderInput {
  std::vector<int> ids;
  std::vector<int> segments;  // empty means all segment 0
};

struct Framed {
  EncoderInput input;
  std::size_t kept = 0;  // content tokens kept after truncation
  bool truncated = false;
};

// [CLS] ids [SEP], keeping at most max_seq_len - 2 tokens.
inline Framed frame_single(const std::vector<int>& ids, std::size_t max_seq_len) {
  Framed f;
  f.kept = std::min(ids.size(), max_seq_len - 2);
  f.truncated = f.kept < ids.size();
  f.input.ids.reserve(f.kept + 2);
  f.input.ids.push_back(doc::kCls);
  f.input.ids.insert(f.input.ids.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(f.kept));
  f.input.ids.push_back(doc::kSep);
  return f;
}

// [CLS] a [SEP] b [SEP] with segment ids 0 for the first part, 1 for b [SEP].
// Each half is cut to at most (max_seq_len - 3) / 2 tokens.
inline Framed frame_pair(const std::vector<int>& a, const std::vector<int>& b, std::size_t max_seq_len) {
  if (max_seq_len < 5) throw std::invalid_argument("frame_pair: max_seq_len too small for a pair");
  const std::size_t half = (max_seq_len - 3) / 2;
  const std::size_t na = std::min(a.size(), half), nb = std::min(b.size(), half);
  Framed f;
  f.kept = na + nb;
  f.truncated = na < a.size() || nb < b.size();
  auto& ids = f.input.ids;
  auto& seg = f.input.segments;
  ids.push_back(doc::kCls);
  ids.insert(ids.end(), a.begin(), a.begin() + static_cast<std::ptrdiff_t>(na));
  ids.push_back(doc::kSep);
  seg.assign(ids.size(), 0);
  ids.insert(ids.end(), b.begin(), b.begin() + static_cast<std::ptrdiff_t>(nb));
  ids.push_back(doc::kSep);
  seg.resize(ids.size(), 1);
  return f;
}

struct EncoderBlock {
  Parameter ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;

  template <class F>
  void visit(F&& f) {
    for (Parameter* p : {&ln1_g, &ln1_b, &wq, &bq, &wk, &bk, &wv, &bv, &wo, &bo, &ln2_g, &ln2_b, &w1, &b1, &w2, &b2})
      f(*p);
  }
};

// Stacked states of a batch of sequences; sequence s occupies rows
// [segments[s].offset, segments[s].offset + segments[s].length).
struct EncodedBatch {
  Var states;
  std::vector<nn::Segment> segments;

  std::vector<std::size_t> cls_rows() const {
    std::vector<std::size_t> r;
    for (const auto& s : segments) r.push_back(s.offset);
    return r;
  }
  // Content rows of a single-text sequence (framing positions excluded).
  std::vector<std::size_t> token_rows(std::size_t s) const {
    std::vector<std::size_t> r;
    const auto& seg = segments.at(s);
    for (std::size_t i = 1; i + 1 < seg.length; ++i) r.push_back(seg.offset + i);
    return r;
  }
};

struct EncoderOutput {
  Var cls;     // 1×d
  Var tokens;  // k×d
  bool truncated = false;
};

// Pre-norm transformer encoder with learned token, position and segment
// embeddings and a final layer norm.
class Encoder {
 public:
  Encoder() = default;
  Encoder(const EncoderConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg.validate();
    Rng rng(seed);
    const std::size_t d = cfg.hidden_dim, f = cfg.ffn_dim;
    const double s = 0.02;
    tok_emb_ = nn::normal_param("enc.tok_emb", cfg.vocab_size, d, s, rng);
    pos_emb_ = nn::normal_param("enc.pos_emb", cfg.max_seq_len, d, s, rng);
    seg_emb_ = nn::normal_param("enc.seg_emb", 2, d, s, rng);
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
      const std::string p = "enc.l" + std::to_string(l) + ".";
      EncoderBlock b;
      b.ln1_g = nn::const_param(p + "ln1_g", 1, d, 1.0);
      b.ln1_b = nn::const_param(p + "ln1_b", 1, d, 0.0);
      b.wq = nn::normal_param(p + "wq", d, d, s, rng);
      b.bq = nn::const_param(p + "bq", 1, d, 0.0);
      b.wk = nn::normal_param(p + "wk", d, d, s, rng);
      b.bk = nn::const_param(p + "bk", 1, d, 0.0);
      b.wv = nn::normal_param(p + "wv", d, d, s, rng);
      b.bv = nn::const_param(p + "bv", 1, d, 0.0);
      b.wo = nn::normal_param(p + "wo", d, d, s, rng);
      b.bo = nn::const_param(p + "bo", 1, d, 0.0);
      b.ln2_g = nn::const_param(p + "ln2_g", 1, d, 1.0);
      b.ln2_b = nn::const_param(p + "ln2_b", 1, d, 0.0);
      b.w1 = nn::normal_param(p + "w1", d, f, s, rng);
      b.b1 = nn::const_param(p + "b1", 1, f, 0.0);
      b.w2 = nn::normal_param(p + "w2", f, d, s, rng);
      b.b2 = nn::const_param(p + "b2", 1, d, 0.0);
      blocks_.push_back(std::move(b));
    }
    lnf_g_ = nn::const_param("enc.lnf_g", 1, d, 1.0);
    lnf_b_ = nn::const_param("enc.lnf_b", 1, d, 0.0);
  }

  const EncoderConfig& config() const { return cfg_; }
  std::size_t dim() const { return cfg_.hidden_dim; }

  template <class F>
  void visit(F&& f) {
    f(tok_emb_);
    f(pos_emb_);
    f(seg_emb_);
    for (auto& b : blocks_) b.visit(f);
    f(lnf_g_);
    f(lnf_b_);
  }

  // Encodes every input in one stacked pass; attention never crosses inputs.
  // `rng` drives dropout and is required when train is true.
  EncodedBatch forward(Tape& t, const std::vector<EncoderInput>& inputs, bool train, Rng* rng = nullptr) const {
    if (train && cfg_.dropout > 0.0 && !rng) throw std::invalid_argument("Encoder::forward: training needs an rng");
    EncodedBatch out;
    std::vector<std::size_t> tok, pos, seg;
    for (const auto& in : inputs) {
      if (in.ids.size() > cfg_.max_seq_len)
        throw std::invalid_argument("Encoder::forward: sequence of " + std::to_string(in.ids.size()) +
                                    " exceeds max_seq_len " + std::to_string(cfg_.max_seq_len));
      if (!in.segments.empty() && in.segments.size() != in.ids.size())
        throw std::invalid_argument("Encoder::forward: segment ids misaligned");
      out.segments.push_back({tok.size(), in.ids.size()});
      for (std::size_t i = 0; i < in.ids.size(); ++i) {
        const int id = in.ids[i];
        if (id < 0 || static_cast<std::size_t>(id) >= cfg_.vocab_size)
          throw std::out_of_range("Encoder::forward: token id " + std::to_string(id) + " outside vocabulary");
        tok.push_back(static_cast<std::size_t>(id));
        pos.push_back(i);
        seg.push_back(in.segments.empty() ? 0 : static_cast<std::size_t>(in.segments[i] != 0));
      }
    }
    Var x = nn::add(nn::add(nn::gather_rows(t.param(tok_emb_), std::move(tok)), nn::gather_rows(t.param(pos_emb_), std::move(pos))),
                    nn::gather_rows(t.param(seg_emb_), std::move(seg)));
    const double p = cfg_.dropout;
    x = nn::dropout(x, p, *rng_or_dummy(rng), train);
    for (const auto& b : blocks_) {
      Var h = nn::layer_norm(x, t.param(b.ln1_g), t.param(b.ln1_b));
      Var q = nn::linear(h, t.param(b.wq), t.param(b.bq));
      Var k = nn::linear(h, t.param(b.wk), t.param(b.bk));
      Var v = nn::linear(h, t.param(b.wv), t.param(b.bv));
      Var a = nn::segment_attention(q, k, v, out.segments, cfg_.num_heads);
      a = nn::linear(a, t.param(b.wo), t.param(b.bo));
      x = nn::add(x, nn::dropout(a, p, *rng_or_dummy(rng), train));
      h = nn::layer_norm(x, t.param(b.ln2_g), t.param(b.ln2_b));
      h = nn::gelu(nn::linear(h, t.param(b.w1), t.param(b.b1)));
      h = nn::linear(h, t.param(b.w2), t.param(b.b2));
      x = nn::add(x, nn::dropout(h, p, *rng_or_dummy(rng), train));
    }
    out.states = nn::layer_norm(x, t.param(lnf_g_), t.param(lnf_b_));
    return out;
  }

  // Single sequence: C (state at [CLS]) and the content-token states.
  EncoderOutput encode(Tape& t, const std::vector<int>& ids, bool train, Rng* rng = nullptr) const {
    Framed f = frame_single(ids, cfg_.max_seq_len);
    EncodedBatch b = forward(t, {f.input}, train, rng);
    return {nn::gather_rows(b.states, b.cls_rows()), nn::gather_rows(b.states, b.token_rows(0)), f.truncated};
  }

 private:
  static Rng* rng_or_dummy(Rng* rng) {
    static thread_local Rng dummy(0);
    return rng ? rng : &dummy;
  }

  EncoderConfig cfg_;
  Parameter tok_emb_, pos_emb_, seg_emb_;
  std::vector<EncoderBlock> blocks_;
  Parameter lnf_g_, lnf_b_;
};

}  // namespace vrdie::enc
