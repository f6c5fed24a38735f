#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "vrdie/docmodel/tokenize.hpp"
#include "vrdie/docmodel/types.hpp"

namespace vrdie::doc {

// Tag ids: O = 0, B-type_k = 1 + 2k, I-type_k = 2 + 2k.
class TagSet {
 public:
  TagSet() = default;
  explicit TagSet(std::vector<std::string> types) : types_(std::move(types)) {
    for (std::size_t i = 0; i < types_.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (types_[i] == types_[j]) throw std::invalid_argument("TagSet: duplicate entity type " + types_[i]);
  }

  const std::vector<std::string>& types() const { return types_; }
  std::size_t num_types() const { return types_.size(); }
  std::size_t num_tags() const { return 2 * types_.size() + 1; }

  int type_index(const std::string& type) const {
    auto it = std::find(types_.begin(), types_.end(), type);
    return it == types_.end() ? -1 : static_cast<int>(it - types_.begin());
  }

  static int begin_tag(int type) { return 1 + 2 * type; }
  static int inside_tag(int type) { return 2 + 2 * type; }
  // -1 for O.
  static int type_of(int tag) { return tag <= 0 ? -1 : (tag - 1) / 2; }
  static bool is_begin(int tag) { return tag > 0 && tag % 2 == 1; }
  static bool is_inside(int tag) { return tag > 0 && tag % 2 == 0; }

  std::string tag_name(int tag) const {
    if (tag == 0) return "O";
    const int t = type_of(tag);
    if (t < 0 || static_cast<std::size_t>(t) >= types_.size()) return "?";
    return (is_begin(tag) ? "B-" : "I-") + types_[static_cast<std::size_t>(t)];
  }

  bool operator==(const TagSet&) const = default;

 private:
  std::vector<std::string> types_;
};

// Entity types present in a corpus, in sorted order.
inline TagSet collect_tagset(const std::vector<Document>& docs) {
  std::vector<std::string> types;
  for (const auto& d : docs)
    for (const auto& p : d.pages)
      for (const auto& b : p.boxes)
        for (const auto& s : b.spans)
          if (std::find(types.begin(), types.end(), s.entity_type) == types.end()) types.push_back(s.entity_type);
  std::sort(types.begin(), types.end());
  return TagSet(std::move(types));
}

// A token belongs to a span when their character ranges overlap; the first
// token of each span is tagged B, the following ones I, everything else O.
inline TokenSequence project_labels(const TextBox& box, TokenSequence toks, const TagSet& tags) {
  validate_spans(box, "box " + std::to_string(box.box_id));
  toks.bio_tags.assign(toks.tokens.size(), 0);
  std::vector<EntitySpan> spans = box.spans;
  std::sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) { return a.char_start < b.char_start; });
  for (const auto& s : spans) {
    const int type = tags.type_index(s.entity_type);
    if (type < 0) throw std::invalid_argument("project_labels: entity type '" + s.entity_type + "' not in tag set");
    bool first = true;
    for (std::size_t i = 0; i < toks.tokens.size(); ++i) {
      const Token& t = toks.tokens[i];
      if (t.char_start < s.char_end && s.char_start < t.char_end) {
        if (toks.bio_tags[i] != 0)
          throw ValidationError("box " + std::to_string(box.box_id) + ": token '" + t.surface + "' covered by two spans");
        toks.bio_tags[i] = first ? TagSet::begin_tag(type) : TagSet::inside_tag(type);
        first = false;
      }
    }
  }
  return toks;
}

// A stray I-X (not preceded by B-X or I-X) becomes B-X.
inline std::vector<int> repair_bio(std::vector<int> tags) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!TagSet::is_inside(tags[i])) continue;
    const int type = TagSet::type_of(tags[i]);
    if (i == 0 || TagSet::type_of(tags[i - 1]) != type) tags[i] = TagSet::begin_tag(type);
  }
  return tags;
}

inline bool is_valid_bio(const std::vector<int>& tags) {
  for (std::size_t i = 0; i < tags.size(); ++i)
    if (TagSet::is_inside(tags[i]) && (i == 0 || TagSet::type_of(tags[i - 1]) != TagSet::type_of(tags[i])))
      return false;
  return true;
}

// Spans (character offsets) of the repaired tag sequence.
inline std::vector<EntitySpan> decode_spans(const std::vector<int>& raw_tags, const TokenSequence& toks,
                                            const TagSet& tagset) {
  if (raw_tags.size() > toks.tokens.size()) throw std::invalid_argument("decode_spans: more tags than tokens");
  const std::vector<int> tags = repair_bio(raw_tags);
  std::vector<EntitySpan> out;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!TagSet::is_begin(tags[i])) continue;
    const int type = TagSet::type_of(tags[i]);
    std::size_t j = i + 1;
    while (j < tags.size() && TagSet::is_inside(tags[j]) && TagSet::type_of(tags[j]) == type) ++j;
    out.push_back({tagset.types().at(static_cast<std::size_t>(type)), toks.tokens[i].char_start,
                   toks.tokens[j - 1].char_end});
    i = j - 1;
  }
  return out;
}

}  // namespace vrdie::doc
