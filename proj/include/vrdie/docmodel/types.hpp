#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace vrdie::doc {

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Gold entity annotation inside one box. Offsets are UTF-8 byte offsets into
// TextBox::text, end exclusive.
struct EntitySpan {
  std::string entity_type;
  std::size_t char_start = 0;
  std::size_t char_end = 0;

  bool operator==(const EntitySpan&) const = default;
};

// Page coordinates: origin top-left, y grows downward.
struct TextBox {
  int box_id = 0;
  std::string text;
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  std::string font_name;
  double font_size = 0;
  std::vector<EntitySpan> spans;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x0 + x1); }
  double center_y() const { return 0.5 * (y0 + y1); }

  bool operator==(const TextBox&) const = default;
};

struct Page {
  int page_no = 0;
  double width = 0;
  double height = 0;
  std::vector<TextBox> boxes;

  const TextBox* find(int box_id) const {
    for (const auto& b : boxes)
      if (b.box_id == box_id) return &b;
    return nullptr;
  }

  bool operator==(const Page&) const = default;
};

struct Document {
  std::string doc_id;
  std::string template_id;
  std::vector<Page> pages;

  bool operator==(const Document&) const = default;
};

// Spans sorted by start, in range, non-overlapping.
inline void validate_spans(const TextBox& b, const std::string& where) {
  std::vector<EntitySpan> s = b.spans;
  std::sort(s.begin(), s.end(), [](const auto& a, const auto& c) { return a.char_start < c.char_start; });
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i].entity_type.empty()) throw ValidationError(where + ": span with empty entity_type");
    if (s[i].char_start >= s[i].char_end)
      throw ValidationError(where + ": empty or inverted span [" + std::to_string(s[i].char_start) + "," +
                            std::to_string(s[i].char_end) + ")");
    if (s[i].char_end > b.text.size())
      throw ValidationError(where + ": span end " + std::to_string(s[i].char_end) + " exceeds text length " +
                            std::to_string(b.text.size()));
    if (i > 0 && s[i].char_start < s[i - 1].char_end) throw ValidationError(where + ": overlapping spans");
  }
}

inline std::string box_location(const Document& d, const Page& p, const TextBox& b) {
  return "doc " + d.doc_id + " page " + std::to_string(p.page_no) + " box " + std::to_string(b.box_id);
}

inline void validate_box(const TextBox& b, const std::string& where) {
  if (!(b.x0 < b.x1) || !(b.y0 < b.y1)) throw ValidationError(where + ": degenerate bounding box");
  if (!(b.font_size > 0)) throw ValidationError(where + ": font_size must be positive");
  validate_spans(b, where);
}

inline void validate_document(const Document& d) {
  if (d.doc_id.empty()) throw ValidationError("document with empty doc_id");
  if (d.template_id.empty()) throw ValidationError("doc " + d.doc_id + ": empty template_id");
  for (const auto& p : d.pages) {
    if (p.page_no < 0) throw ValidationError("doc " + d.doc_id + ": negative page_no");
    std::set<int> ids;
    for (const auto& b : p.boxes) {
      const std::string where = box_location(d, p, b);
      if (!ids.insert(b.box_id).second) throw ValidationError(where + ": duplicate box_id");
      validate_box(b, where);
    }
  }
}

// Clips every box to the page rectangle; boxes that collapse become invalid.
inline void clip_to_page(Page& p) {
  for (auto& b : p.boxes) {
    b.x0 = std::clamp(b.x0, 0.0, p.width);
    b.x1 = std::clamp(b.x1, 0.0, p.width);
    b.y0 = std::clamp(b.y0, 0.0, p.height);
    b.y1 = std::clamp(b.y1, 0.0, p.height);
  }
}

inline Document strip_labels(Document d) {
  for (auto& p : d.pages)
    for (auto& b : p.boxes) b.spans.clear();
  return d;
}

}  // namespace vrdie::doc
