#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vrdie/docmodel/merge.hpp"
#include "vrdie/docmodel/types.hpp"
#include "vrdie/nn/rng.hpp"

namespace vrdie::graph {

using doc::Document;
using doc::Page;
using doc::TextBox;

// ---------------------------------------------------------------- font ranks

class FontRankTable {
 public:
  using Key = std::pair<std::string, double>;

  FontRankTable() = default;
  FontRankTable(std::map<Key, int> ranks, int max_ranks) : ranks_(std::move(ranks)), max_ranks_(max_ranks) {}

  int max_ranks() const { return max_ranks_; }
  int overflow() const { return max_ranks_; }
  // Unknown fonts share the overflow bucket.
  int rank(const std::string& name, double size) const {
    auto it = ranks_.find({name, size});
    return it == ranks_.end() ? overflow() : it->second;
  }
  int rank(const TextBox& b) const { return rank(b.font_name, b.font_size); }
  const std::map<Key, int>& table() const { return ranks_; }

 private:
  std::map<Key, int> ranks_;
  int max_ranks_ = 16;
};

// Rank 0 = most frequent (font_name, font_size) over all boxes of the
// document; ties by name then size. Fonts past max_ranks-1 go to overflow.
inline FontRankTable rank_fonts(const Document& d, int max_ranks = 16) {
  if (max_ranks < 1) throw std::invalid_argument("rank_fonts: max_ranks must be >= 1");
  std::map<FontRankTable::Key, long> freq;
  for (const auto& p : d.pages)
    for (const auto& b : p.boxes) ++freq[{b.font_name, b.font_size}];
  std::vector<std::pair<FontRankTable::Key, long>> items(freq.begin(), freq.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::map<FontRankTable::Key, int> ranks;
  for (std::size_t i = 0; i < items.size(); ++i)
    ranks[items[i].first] = i < static_cast<std::size_t>(max_ranks) ? static_cast<int>(i) : max_ranks;
  return FontRankTable(std::move(ranks), max_ranks);
}

// ---------------------------------------------------------------- alignment

enum class Axis { Horizontal, Vertical };

// SPRC classes, in logit order.
enum class Relation { LeftRight = 0, RightLeft = 1, UpDown = 2, DownUp = 3 };
inline constexpr int kNumRelations = 4;

inline Relation flip(Relation r) {
  switch (r) {
    case Relation::LeftRight: return Relation::RightLeft;
    case Relation::RightLeft: return Relation::LeftRight;
    case Relation::UpDown: return Relation::DownUp;
    case Relation::DownUp: return Relation::UpDown;
  }
  return r;
}

inline bool is_vertical(Relation r) { return r == Relation::UpDown || r == Relation::DownUp; }

inline const char* relation_name(Relation r) {
  switch (r) {
    case Relation::LeftRight: return "LeftRight";
    case Relation::RightLeft: return "RightLeft";
    case Relation::UpDown: return "UpDown";
    case Relation::DownUp: return "DownUp";
  }
  return "?";
}

struct Alignment {
  Axis axis;
  Relation relation;  // relation of a to b

  bool operator==(const Alignment&) const = default;
};

// Horizontal when a top or bottom edge matches within eps_align, else vertical
// when a left or right edge matches. Pairs whose centres coincide on the
// relevant axis have no direction and are skipped.
inline std::optional<Alignment> alignment(const TextBox& a, const TextBox& b, double eps_align) {
  if (eps_align < 0) throw std::invalid_argument("alignment: eps_align must be >= 0");
  if ((std::abs(a.y0 - b.y0) <= eps_align || std::abs(a.y1 - b.y1) <= eps_align) && a.center_x() != b.center_x())
    return Alignment{Axis::Horizontal, a.center_x() < b.center_x() ? Relation::LeftRight : Relation::RightLeft};
  if ((std::abs(a.x0 - b.x0) <= eps_align || std::abs(a.x1 - b.x1) <= eps_align) && a.center_y() != b.center_y())
    return Alignment{Axis::Vertical, a.center_y() < b.center_y() ? Relation::UpDown : Relation::DownUp};
  return std::nullopt;
}

// ---------------------------------------------------------------- page graph

enum class EdgeType { Adjacency = 0, SectionTitle = 1 };
inline constexpr int kNumEdgeTypes = 2;

inline const char* edge_type_name(EdgeType t) { return t == EdgeType::Adjacency ? "adjacency" : "section_title"; }

// Undirected edge between box ids, stored with i < j.
struct Edge {
  EdgeType type;
  int i;
  int j;

  auto operator<=>(const Edge&) const = default;
};

struct PageGraph {
  std::vector<int> node_ids;  // box ids in reading order
  std::vector<Edge> edges;    // sorted, unique

  void add_edge(EdgeType type, int a, int b) {
    if (a == b) return;
    Edge e{type, std::min(a, b), std::max(a, b)};
    auto it = std::lower_bound(edges.begin(), edges.end(), e);
    if (it == edges.end() || *it != e) edges.insert(it, e);
  }

  std::size_t count(EdgeType t) const {
    return static_cast<std::size_t>(std::count_if(edges.begin(), edges.end(), [t](const Edge& e) { return e.type == t; }));
  }

  // Position of each box id in node_ids.
  std::unordered_map<int, std::size_t> index() const {
    std::unordered_map<int, std::size_t> m;
    for (std::size_t k = 0; k < node_ids.size(); ++k) m[node_ids[k]] = k;
    return m;
  }

  // Per edge type, the neighbour node indices of every node (self excluded).
  std::vector<std::vector<std::vector<std::size_t>>> neighbor_lists() const {
    const auto idx = index();
    std::vector<std::vector<std::vector<std::size_t>>> out(kNumEdgeTypes,
                                                           std::vector<std::vector<std::size_t>>(node_ids.size()));
    for (const Edge& e : edges) {
      const std::size_t a = idx.at(e.i), b = idx.at(e.j);
      auto& lists = out[static_cast<std::size_t>(e.type)];
      lists[a].push_back(b);
      lists[b].push_back(a);
    }
    for (auto& lists : out)
      for (auto& l : lists) std::sort(l.begin(), l.end());
    return out;
  }

  bool operator==(const PageGraph&) const = default;
};

inline std::vector<int> reading_order_ids(const Page& page) {
  std::vector<int> ids;
  for (std::size_t k : doc::reading_order(page.boxes)) ids.push_back(page.boxes[k].box_id);
  return ids;
}

// Each box links to its closest horizontally aligned box and, independently,
// its closest vertically aligned box (centre distance along the axis; ties go
// to the lower box id).
inline PageGraph build_adjacency_edges(const Page& page, double eps_align = 1.0) {
  PageGraph g;
  g.node_ids = reading_order_ids(page);
  const auto& boxes = page.boxes;
  for (std::size_t a = 0; a < boxes.size(); ++a) {
    int best[2] = {-1, -1};
    double best_d[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      if (a == b) continue;
      auto al = alignment(boxes[a], boxes[b], eps_align);
      if (!al) continue;
      const int ax = al->axis == Axis::Horizontal ? 0 : 1;
      const double d = ax == 0 ? std::abs(boxes[a].center_x() - boxes[b].center_x())
                               : std::abs(boxes[a].center_y() - boxes[b].center_y());
      if (d < best_d[ax] || (d == best_d[ax] && boxes[b].box_id < best[ax])) {
        best_d[ax] = d;
        best[ax] = boxes[b].box_id;
      }
    }
    for (int ax = 0; ax < 2; ++ax)
      if (best[ax] >= 0) g.add_edge(EdgeType::Adjacency, boxes[a].box_id, best[ax]);
  }
  return g;
}

// Each box links to the nearest box that ends above it and has a larger font
// (smallest vertical gap, then smallest centre-x distance, then lower id).
inline PageGraph add_section_title_edges(const Page& page, PageGraph g) {
  const auto& boxes = page.boxes;
  for (const auto& body : boxes) {
    const TextBox* best = nullptr;
    double best_gap = 0, best_dx = 0;
    for (const auto& t : boxes) {
      if (&t == &body || !(t.y1 <= body.y0) || !(t.font_size > body.font_size)) continue;
      const double gap = body.y0 - t.y1;
      const double dx = std::abs(body.center_x() - t.center_x());
      if (!best || gap < best_gap || (gap == best_gap && (dx < best_dx || (dx == best_dx && t.box_id < best->box_id)))) {
        best = &t;
        best_gap = gap;
        best_dx = dx;
      }
    }
    if (best) g.add_edge(EdgeType::SectionTitle, body.box_id, best->box_id);
  }
  return g;
}

struct GraphOptions {
  double eps_align = 1.0;
  bool section_title_edges = true;
};

inline PageGraph build_page_graph(const Page& page, const GraphOptions& opt = {}) {
  PageGraph g = build_adjacency_edges(page, opt.eps_align);
  if (opt.section_title_edges) g = add_section_title_edges(page, std::move(g));
  return g;
}

// Splits an oversized page into consecutive reading-order chunks.
inline std::vector<Page> chunk_page(const Page& page, std::size_t max_nodes) {
  if (max_nodes < 1) throw std::invalid_argument("chunk_page: max_nodes must be >= 1");
  if (page.boxes.size() <= max_nodes) return {page};
  const auto order = doc::reading_order(page.boxes);
  std::vector<Page> out;
  for (std::size_t s = 0; s < order.size(); s += max_nodes) {
    Page c;
    c.page_no = page.page_no;
    c.width = page.width;
    c.height = page.height;
    for (std::size_t k = s; k < std::min(order.size(), s + max_nodes); ++k) c.boxes.push_back(page.boxes[order[k]]);
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------- SPRC pairs

struct SprcPair {
  int box_a;
  int box_b;
  Relation label;

  bool operator==(const SprcPair&) const = default;
};

// Both orderings of every adjacency edge, labelled by direction.
inline std::vector<SprcPair> extract_sprc_pairs(const Page& page, double eps_align = 1.0) {
  const PageGraph g = build_adjacency_edges(page, eps_align);
  std::vector<SprcPair> out;
  for (const Edge& e : g.edges) {
    const TextBox* a = page.find(e.i);
    const TextBox* b = page.find(e.j);
    auto al = alignment(*a, *b, eps_align);
    if (!al) continue;
    out.push_back({e.i, e.j, al->relation});
    out.push_back({e.j, e.i, flip(al->relation)});
  }
  return out;
}

// Keeps every horizontal pair and a uniformly sampled round(ratio * n) of the
// n vertical pairs; input order is preserved.
inline std::vector<SprcPair> balance_sprc_pairs(const std::vector<SprcPair>& pairs, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("balance_sprc_pairs: ratio must be in (0,1]");
  std::vector<std::size_t> vertical;
  for (std::size_t i = 0; i < pairs.size(); ++i)
    if (is_vertical(pairs[i].label)) vertical.push_back(i);
  const auto keep_n = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(vertical.size())));
  nn::Rng rng(seed);
  rng.shuffle(vertical);
  std::vector<bool> keep(pairs.size(), true);
  for (std::size_t k = keep_n; k < vertical.size(); ++k) keep[vertical[k]] = false;
  std::vector<SprcPair> out;
  for (std::size_t i = 0; i < pairs.size(); ++i)
    if (keep[i]) out.push_back(pairs[i]);
  return out;
}

}  // namespace vrdie::graph
