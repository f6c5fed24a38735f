#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "vrdie/docmodel/types.hpp"

namespace vrdie::doc {

// Reading order: boxes are grouped into lines (a box joins the current line
// when its vertical centre lies above the line's bottom edge), lines run top
// to bottom, boxes within a line left to right.
inline std::vector<std::size_t> reading_order(const std::vector<TextBox>& boxes) {
  std::vector<std::size_t> idx(boxes.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto& A = boxes[a];
    const auto& B = boxes[b];
    if (A.y0 != B.y0) return A.y0 < B.y0;
    if (A.x0 != B.x0) return A.x0 < B.x0;
    return A.box_id < B.box_id;
  });
  std::vector<std::size_t> out;
  out.reserve(idx.size());
  std::size_t line_start = 0;
  double line_bottom = 0;
  auto flush = [&](std::size_t end) {
    std::sort(idx.begin() + static_cast<std::ptrdiff_t>(line_start), idx.begin() + static_cast<std::ptrdiff_t>(end),
              [&](std::size_t a, std::size_t b) {
                if (boxes[a].x0 != boxes[b].x0) return boxes[a].x0 < boxes[b].x0;
                return boxes[a].box_id < boxes[b].box_id;
              });
    for (std::size_t i = line_start; i < end; ++i) out.push_back(idx[i]);
  };
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& b = boxes[idx[i]];
    if (i == 0) {
      line_bottom = b.y1;
      continue;
    }
    if (b.center_y() < line_bottom) {
      line_bottom = std::max(line_bottom, b.y1);
    } else {
      flush(i);
      line_start = i;
      line_bottom = b.y1;
    }
  }
  if (!idx.empty()) flush(idx.size());
  return out;
}

namespace detail {

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

inline bool close_enough(const TextBox& a, const TextBox& b, double eps) {
  const bool v_overlap = std::max(a.y0, b.y0) < std::min(a.y1, b.y1);
  const bool h_overlap = std::max(a.x0, b.x0) < std::min(a.x1, b.x1);
  const double h_gap = std::max(a.x0, b.x0) - std::min(a.x1, b.x1);
  const double v_gap = std::max(a.y0, b.y0) - std::min(a.y1, b.y1);
  return (v_overlap && h_gap <= eps) || (h_overlap && v_gap <= eps);
}

// Merges members (given in reading order) into one box.
inline TextBox merge_group(const std::vector<TextBox>& members) {
  TextBox m = members.front();
  m.text.clear();
  m.spans.clear();
  const TextBox* dominant = &members.front();
  for (std::size_t i = 0; i < members.size(); ++i) {
    const auto& b = members[i];
    if (i > 0) m.text += ' ';
    const std::size_t shift = m.text.size();
    m.text += b.text;
    for (auto s : b.spans) {
      s.char_start += shift;
      s.char_end += shift;
      m.spans.push_back(std::move(s));
    }
    m.x0 = std::min(m.x0, b.x0);
    m.y0 = std::min(m.y0, b.y0);
    m.x1 = std::max(m.x1, b.x1);
    m.y1 = std::max(m.y1, b.y1);
    if (b.area() > dominant->area()) dominant = &b;
  }
  m.font_name = dominant->font_name;
  m.font_size = dominant->font_size;
  return m;
}

}  // namespace detail

// Transitively merges boxes that sit on a common line (or column) with a gap of
// at most `merge_eps`, repeating until no pair qualifies. When anything was
// merged, boxes are re-sorted into reading order and renumbered 0..n-1.
inline Page merge_close_boxes(const Page& page, double merge_eps) {
  if (merge_eps < 0) throw std::invalid_argument("merge_close_boxes: merge_eps must be >= 0");
  Page out = page;
  bool merged_any = false;
  for (;;) {
    const auto& boxes = out.boxes;
    const std::size_t n = boxes.size();
    detail::DisjointSets sets(n);
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (detail::close_enough(boxes[i], boxes[j], merge_eps)) changed |= sets.unite(i, j);
    if (!changed) break;
    merged_any = true;
    std::vector<std::vector<TextBox>> groups(n);
    for (std::size_t i : reading_order(boxes)) groups[sets.find(i)].push_back(boxes[i]);
    std::vector<TextBox> next;
    for (auto& g : groups)
      if (!g.empty()) next.push_back(g.size() == 1 ? g.front() : detail::merge_group(g));
    out.boxes = std::move(next);
  }
  if (merged_any) {
    std::vector<TextBox> ordered;
    ordered.reserve(out.boxes.size());
    for (std::size_t i : reading_order(out.boxes)) ordered.push_back(out.boxes[i]);
    for (std::size_t i = 0; i < ordered.size(); ++i) ordered[i].box_id = static_cast<int>(i);
    out.boxes = std::move(ordered);
  }
  return out;
}

}  // namespace vrdie::doc
