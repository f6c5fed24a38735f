#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "vrdie/docmodel/types.hpp"
#include "vrdie/nn/rng.hpp"
#include "vrdie/synthcorpus/lexicon.hpp"

namespace vrdie::synth {

struct FontSpec {
  std::string name;
  double size = 10;

  bool operator==(const FontSpec&) const = default;
};

// Rough advance width of a proportional font; only relative geometry matters.
inline double text_width(const std::string& text, double size) { return 0.5 * size * static_cast<double>(text.size()) + 2.0; }
inline double line_height(double size) { return 1.2 * size; }

// Accumulates boxes for one page, assigning ids in insertion order.
class Canvas {
 public:
  Canvas(double width, double height) {
    page_.width = width;
    page_.height = height;
  }

  doc::TextBox& add(const std::string& text, double x0, double y0, const FontSpec& f,
                    const std::string& entity = std::string()) {
    doc::TextBox b;
    b.box_id = static_cast<int>(page_.boxes.size());
    b.text = text;
    b.x0 = x0;
    b.y0 = y0;
    b.x1 = x0 + text_width(text, f.size);
    b.y1 = y0 + line_height(f.size);
    b.font_name = f.name;
    b.font_size = f.size;
    if (!entity.empty()) b.spans.push_back({entity, 0, text.size()});
    if (b.x0 < 0 || b.y0 < 0 || b.x1 > page_.width || b.y1 > page_.height)
      throw std::logic_error("synthetic box \"" + text + "\" falls outside the page");
    page_.boxes.push_back(std::move(b));
    return page_.boxes.back();
  }

  doc::Page& page() { return page_; }

 private:
  doc::Page page_;
};

inline std::string format_money(std::int64_t cents, const std::string& currency) {
  std::string whole = std::to_string(cents / 100);
  std::string grouped;
  for (std::size_t i = 0; i < whole.size(); ++i) {
    if (i > 0 && (whole.size() - i) % 3 == 0) grouped += ',';
    grouped += whole[i];
  }
  char frac[4];
  std::snprintf(frac, sizeof frac, "%02d", static_cast<int>(cents % 100));
  return currency + grouped + "." + frac;
}

inline std::string zero_pad(std::uint64_t v, int width) {
  std::string s = std::to_string(v);
  if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

inline std::string person_name(nn::Rng& rng) { return rng.pick(lex::first_names()) + " " + rng.pick(lex::last_names()); }

inline std::string street_address(nn::Rng& rng) {
  return std::to_string(rng.range(1, 999)) + " " + rng.pick(lex::streets()) + " " + rng.pick(lex::street_kinds()) +
         ", " + rng.pick(lex::cities());
}

}  // namespace vrdie::synth
