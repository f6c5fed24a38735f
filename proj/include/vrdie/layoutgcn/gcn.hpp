#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "vrdie/layoutgraph/graph.hpp"
#include "vrdie/nn/module.hpp"
#include "vrdie/nn/ops.hpp"

namespace vrdie::gcn {

using nn::Parameter;
using nn::Rng;
using nn::Tape;
using nn::Tensor;
using nn::Var;

inline constexpr std::size_t kFontDim = 8;

// (max_ranks + 1) × 8 table; the last row is the overflow bucket.
class FontEmbedding {
 public:
  FontEmbedding() = default;
  FontEmbedding(int max_ranks, std::uint64_t seed) {
    if (max_ranks < 1) throw std::invalid_argument("FontEmbedding: max_ranks must be >= 1");
    Rng rng(seed);
    table_ = nn::normal_param("gcn.font_emb", static_cast<std::size_t>(max_ranks) + 1, kFontDim, 1.0, rng);
  }

  std::size_t rows() const { return table_.value.rows(); }
  const Parameter& table() const { return table_; }
  Parameter& table() { return table_; }

  template <class F>
  void visit(F&& f) {
    f(table_);
  }

 private:
  Parameter table_;
};

// h0_i = C_i ‖ e(rank_i)
inline Var node_init(const Var& cls, const std::vector<int>& ranks, const Var& table) {
  if (ranks.size() != cls.value().rows())
    throw nn::ShapeError("node_init: " + std::to_string(ranks.size()) + " ranks for " + cls.value().shape_str());
  std::vector<std::size_t> idx;
  idx.reserve(ranks.size());
  for (int r : ranks) {
    if (r < 0 || static_cast<std::size_t>(r) >= table.value().rows())
      throw std::out_of_range("node_init: font rank " + std::to_string(r) + " outside table of " +
                              std::to_string(table.value().rows()) + " rows");
    idx.push_back(static_cast<std::size_t>(r));
  }
  return nn::concat_cols(cls, nn::gather_rows(table, std::move(idx)));
}

struct GcnConfig {
  std::size_t in_dim = 0;
  std::size_t hidden_dim = 64;
  std::size_t num_layers = 2;
  std::size_t num_edge_types = graph::kNumEdgeTypes;
  bool skip_connections = true;

  void validate() const {
    if (in_dim == 0 || hidden_dim == 0) throw std::invalid_argument("GcnConfig: dims must be >= 1");
    if (num_layers == 0) throw std::invalid_argument("GcnConfig: num_layers must be >= 1");
    if (num_edge_types == 0) throw std::invalid_argument("GcnConfig: need at least one edge type");
  }

  bool operator==(const GcnConfig&) const = default;
};

struct GcnLayer {
  std::vector<Parameter> w;  // one per edge type, in_dim × hidden
  Parameter b;               // shared across edge types

  template <class F>
  void visit(F&& f) {
    for (auto& p : w) f(p);
    f(b);
  }
};

// Neighbourhoods per edge type and node: the node itself plus its neighbours,
// ascending. `lists[t][i]` excludes i; the result includes it.
using Neighborhoods = std::vector<std::vector<std::vector<std::size_t>>>;

inline Neighborhoods with_self(Neighborhoods lists) {
  for (auto& per_type : lists)
    for (std::size_t i = 0; i < per_type.size(); ++i) {
      auto& l = per_type[i];
      if (std::find(l.begin(), l.end(), i) == l.end()) l.push_back(i);
      std::sort(l.begin(), l.end());
    }
  return lists;
}

// Neighbourhoods of a page graph for `num_edge_types` types; types beyond the
// graph's (or with no edges) leave nodes with self-only neighbourhoods.
inline Neighborhoods neighborhoods(const graph::PageGraph& g, std::size_t num_edge_types) {
  auto lists = g.neighbor_lists();
  lists.resize(num_edge_types, std::vector<std::vector<std::size_t>>(g.node_ids.size()));
  return with_self(std::move(lists));
}

// One layer: per type t, message_t(i) = mean_{j in N_t(i)} W_t h_j + b; the
// messages are averaged over types; out = elu(avg + h_i) with the skip term
// when `skip` is set.
inline Var gcn_layer(Tape& t, const Neighborhoods& nbhd, const Var& h, const GcnLayer& layer, bool skip) {
  const std::size_t n = h.value().rows();
  if (n == 0) throw nn::ShapeError("gcn_layer: empty graph");
  if (nbhd.size() != layer.w.size())
    throw nn::ShapeError("gcn_layer: " + std::to_string(nbhd.size()) + " neighbourhood types for " +
                         std::to_string(layer.w.size()) + " weights");
  Var agg;
  for (std::size_t ty = 0; ty < layer.w.size(); ++ty) {
    if (nbhd[ty].size() != n) throw nn::ShapeError("gcn_layer: neighbourhood count does not match node count");
    Var msg = nn::add_bias(nn::neighbor_mean(nn::matmul(h, t.param(layer.w[ty])), nbhd[ty]), t.param(layer.b));
    agg = ty == 0 ? msg : nn::add(agg, msg);
  }
  agg = nn::scale(agg, 1.0 / static_cast<double>(layer.w.size()));
  if (skip) {
    if (h.value().cols() != agg.value().cols())
      throw nn::ShapeError("gcn_layer: skip connection needs matching dims, got " + h.value().shape_str() + " -> " +
                           agg.value().shape_str());
    agg = nn::add(agg, h);
  }
  return nn::elu(agg);
}

class Gcn {
 public:
  Gcn() = default;
  Gcn(const GcnConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg.validate();
    Rng rng(seed);
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
      const std::size_t in = l == 0 ? cfg.in_dim : cfg.hidden_dim;
      const double sd = std::sqrt(2.0 / static_cast<double>(in + cfg.hidden_dim));
      GcnLayer layer;
      for (std::size_t ty = 0; ty < cfg.num_edge_types; ++ty)
        layer.w.push_back(nn::normal_param("gcn.l" + std::to_string(l) + ".w" + std::to_string(ty), in, cfg.hidden_dim,
                                           sd, rng));
      layer.b = nn::const_param("gcn.l" + std::to_string(l) + ".b", 1, cfg.hidden_dim, 0.0);
      layers_.push_back(std::move(layer));
    }
  }

  const GcnConfig& config() const { return cfg_; }
  const std::vector<GcnLayer>& layers() const { return layers_; }
  std::vector<GcnLayer>& layers() { return layers_; }

  template <class F>
  void visit(F&& f) {
    for (auto& l : layers_) l.visit(f);
  }

  // Layer 0 maps in_dim -> hidden (no skip); later layers add the skip term
  // when enabled.
  Var forward(Tape& t, const Neighborhoods& nbhd, const Var& h0) const {
    if (h0.value().cols() != cfg_.in_dim)
      throw nn::ShapeError("Gcn::forward: node features " + h0.value().shape_str() + " but in_dim " +
                           std::to_string(cfg_.in_dim));
    Var h = h0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const bool skip = cfg_.skip_connections && l >= 1;
      h = gcn_layer(t, nbhd, h, layers_[l], skip);
    }
    return h;
  }

 private:
  GcnConfig cfg_;
  std::vector<GcnLayer> layers_;
};

}  // namespace vrdie::gcn
