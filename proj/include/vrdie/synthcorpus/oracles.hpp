#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "vrdie/docmodel/types.hpp"
#include "vrdie/layoutgraph/graph.hpp"

namespace vrdie::synth {

inline bool has_entity(const doc::TextBox& b, const std::string& type) {
  return std::any_of(b.spans.begin(), b.spans.end(), [&](const auto& s) { return s.entity_type == type; });
}

struct TextOnlyBound {
  double mean_accuracy = 0;  // best expected hit rate of a text-only single-box pick
  double max_accuracy = 0;
  std::size_t pages = 0;
};

// A classifier that sees only box text and font must treat boxes with equal
// (text, font) alike, so picking the gold box succeeds with probability at
// most 1/|boxes sharing the gold box's text and font|.
inline TextOnlyBound text_only_bound(const std::vector<doc::Document>& docs, const std::string& entity) {
  TextOnlyBound out;
  double sum = 0;
  for (const auto& d : docs)
    for (const auto& p : d.pages)
      for (const auto& gold : p.boxes) {
        if (!has_entity(gold, entity)) continue;
        std::size_t same = 0;
        for (const auto& b : p.boxes)
          if (b.text == gold.text && b.font_name == gold.font_name && b.font_size == gold.font_size) ++same;
        const double acc = 1.0 / static_cast<double>(same);
        sum += acc;
        out.max_accuracy = std::max(out.max_accuracy, acc);
        ++out.pages;
      }
  if (out.pages) out.mean_accuracy = sum / static_cast<double>(out.pages);
  return out;
}

// Layout rule: the value of a cue is the nearest box in another font to its
// right on the same row, or else the nearest such box below it sharing its
// left edge.
inline const doc::TextBox* value_of_cue(const doc::Page& p, const doc::TextBox& cue, double eps = 1.0) {
  const doc::TextBox* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& b : p.boxes) {
    if (&b == &cue || (b.font_name == cue.font_name && b.font_size == cue.font_size)) continue;
    auto al = graph::alignment(cue, b, eps);
    if (!al || al->relation != graph::Relation::LeftRight) continue;
    const double d = b.x0 - cue.x1;
    if (d >= 0 && d < best_d) {
      best = &b;
      best_d = d;
    }
  }
  if (best) return best;
  for (const auto& b : p.boxes) {
    if (&b == &cue || (b.font_name == cue.font_name && b.font_size == cue.font_size)) continue;
    if (std::abs(b.x0 - cue.x0) > eps || b.y0 < cue.y1) continue;
    const double d = b.y0 - cue.y1;
    if (d < best_d) {
      best = &b;
      best_d = d;
    }
  }
  return best;
}

struct RuleOracleResult {
  std::size_t pages = 0;
  std::size_t correct = 0;
  double accuracy() const { return pages ? static_cast<double>(correct) / static_cast<double>(pages) : 0.0; }
};

// Resolves the gold box of `entity` on every page from the cue text alone plus
// geometry; a page counts as correct when the rule returns exactly the gold box.
inline RuleOracleResult rule_oracle(const std::vector<doc::Document>& docs, const std::string& entity,
                                    const std::set<std::string>& cue_texts) {
  RuleOracleResult r;
  for (const auto& d : docs)
    for (const auto& p : d.pages) {
      const doc::TextBox* gold = nullptr;
      for (const auto& b : p.boxes)
        if (has_entity(b, entity)) gold = &b;
      if (!gold) continue;
      ++r.pages;
      const doc::TextBox* found = nullptr;
      int hits = 0;
      for (const auto& b : p.boxes)
        if (cue_texts.count(b.text)) {
          found = value_of_cue(p, b);
          ++hits;
        }
      if (hits == 1 && found == gold) ++r.correct;
    }
  return r;
}

}  // namespace vrdie::synth
