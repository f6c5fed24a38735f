#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "vrdie/docmodel/tokenize.hpp"
#include "vrdie/docmodel/types.hpp"
#include "vrdie/nn/rng.hpp"
#include "vrdie/synthcorpus/canvas.hpp"

namespace vrdie::synth {

inline const std::vector<std::string>& resume_entity_types() {
  static const std::vector<std::string> v{"Address", "Company",  "CompanyDuration", "Degree",      "Email",
                                          "Name",    "Phone",    "Position",        "School",      "SchoolDuration",
                                          "SectionTitle"};
  return v;
}

inline const std::string kEducationTitle = "EDUCATION";
inline const std::string kWorkTitle = "WORK EXPERIENCE";
inline const std::string kSkillsTitle = "SKILLS";

struct ResumeTemplate {
  std::string id;
  bool two_column = false;
  bool education_first = true;  // first (or left) section
  FontSpec body{"Arial", 10};
  FontSpec title{"Arial-Bold", 14};
  FontSpec name{"Arial-Bold", 18};
  // Unannotated heading style of the same size as `title`; at most one of
  // the two entry sections per page uses it.
  FontSpec alt_title{"Arial-Italic", 14};
  double alt_heading_prob = 0.5;
  double margin = 40;
  double column_gap = 290;       // x offset of the right column
  int min_entries = 1;
  int max_entries = 3;

  void validate() const {
    const std::string where = "resume template " + id + ": ";
    if (id.empty()) throw std::invalid_argument("resume template with empty id");
    if (!(body.size > 0 && title.size > body.size && name.size > title.size))
      throw std::invalid_argument(where + "font sizes must satisfy body < title < name");
    if (title == body) throw std::invalid_argument(where + "title font must differ from body font");
    if (alt_title == title || alt_title.size != title.size)
      throw std::invalid_argument(where + "alternate heading font must differ from the title font at the same size");
    if (alt_title.name == name.name && alt_title.size == name.size)
      throw std::invalid_argument(where + "alternate heading font must differ from the name font");
    if (!(alt_heading_prob >= 0 && alt_heading_prob <= 1)) throw std::invalid_argument(where + "alt_heading_prob must be in [0,1]");
    if (min_entries < 1 || max_entries < min_entries || max_entries > 4) throw std::invalid_argument(where + "bad entry range");
    if (margin < 10 || margin > 80 || (two_column && (column_gap < 260 || column_gap > 320)))
      throw std::invalid_argument(where + "block position out of range");
  }
};

inline std::vector<ResumeTemplate> default_resume_templates() {
  std::vector<ResumeTemplate> out;
  const FontSpec bodies[] = {{"Arial", 10}, {"Georgia", 10}, {"Verdana", 10}};
  for (int k = 0; k < 6; ++k) {
    ResumeTemplate t;
    t.id = "R" + zero_pad(static_cast<std::uint64_t>(k), 2);
    t.two_column = k >= 3;
    t.education_first = k % 2 == 0;
    t.body = bodies[k % 3];
    t.title = {t.body.name + "-Bold", 14};
    t.name = {t.body.name + "-Bold", 18};
    t.alt_title = {t.body.name + "-Italic", 14};
    t.margin = 30 + 8 * k;
    t.column_gap = 280 + 5 * k;
    out.push_back(std::move(t));
  }
  return out;
}

struct ResumeSpec {
  std::size_t num_docs = 400;
  std::vector<ResumeTemplate> templates = default_resume_templates();
  std::uint64_t seed = 0;
  std::string id_prefix = "cv";
};

namespace detail {

inline std::string date_range(nn::Rng& rng) {
  const int y0 = rng.range(2000, 2019);
  return rng.pick(lex::months()) + " " + std::to_string(y0) + " - " + rng.pick(lex::months()) + " " +
         std::to_string(y0 + rng.range(1, 4));
}

inline std::string school_name(nn::Rng& rng) {
  std::string pattern = rng.pick(lex::school_kinds());
  return pattern.replace(pattern.find("{}"), 2, rng.pick(lex::cities()));
}

inline bool shares_edge(const doc::TextBox& a, const doc::TextBox& b, double tol) {
  return std::abs(a.x0 - b.x0) <= tol || std::abs(a.x1 - b.x1) <= tol || std::abs(a.y0 - b.y0) <= tol ||
         std::abs(a.y1 - b.y1) <= tol;
}

}  // namespace detail

// Date boxes are placed off every alignment line so that only their section
// title tells a school period from an employment period.
inline doc::Document make_resume(const ResumeTemplate& t, std::uint64_t seed, const std::string& doc_id) {
  t.validate();
  nn::Rng rng(seed);
  Canvas c(600, 800);
  const double m = t.margin + rng.range(-4, 4);
  const std::string first = rng.pick(lex::first_names()), last = rng.pick(lex::last_names());

  c.add(first + " " + last, m, 30, t.name, "Name");
  const std::string email = doc::detail::ascii_lower(first) + "." + doc::detail::ascii_lower(last) + "@" +
                            rng.pick(lex::mail_domains());
  c.add(email, m, 62, t.body, "Email");
  c.add("+1 555 " + zero_pad(rng.below(10000), 4), m + 170, 62, t.body, "Phone");
  c.add(street_address(rng), m + 260, 62, t.body, "Address");

  struct DateSlot {
    std::size_t index;
    double x, y;
  };
  std::vector<DateSlot> dates;
  // one section at column x starting at y; returns the y below it
  const int alt_section = rng.bernoulli(t.alt_heading_prob) ? rng.range(0, 1) : -1;  // 0 education, 1 work
  auto section = [&](bool education, double x, double y) {
    const bool alt = alt_section == (education ? 0 : 1);
    c.add(education ? kEducationTitle : kWorkTitle, x, y, alt ? t.alt_title : t.title, alt ? "" : "SectionTitle");
    y += line_height(t.title.size) + 8;
    const int n = rng.range(t.min_entries, t.max_entries);
    for (int e = 0; e < n; ++e) {
      if (education) {
        c.add(detail::school_name(rng), x, y, t.body, "School");
        c.add(rng.pick(lex::degrees()) + " in " + rng.pick(lex::fields()), x, y + 16, t.body, "Degree");
      } else {
        c.add(rng.pick(lex::employers()), x, y, t.body, "Company");
        c.add(rng.pick(lex::positions()), x, y + 16, t.body, "Position");
      }
      const auto& d = c.add(detail::date_range(rng), x + rng.uniform(4, 30), y + 32 + rng.uniform(2, 5), t.body,
                            education ? "SchoolDuration" : "CompanyDuration");
      dates.push_back({static_cast<std::size_t>(d.box_id), x, y + 32});
      y += 60;
    }
    return y + 10;
  };

  double y = 100;
  if (t.two_column) {
    const double left = section(t.education_first, m, y);
    const double right = section(!t.education_first, m + t.column_gap, y);
    y = std::max(left, right);
  } else {
    y = section(t.education_first, m, y);
    y = section(!t.education_first, m, y);
  }

  c.add(kSkillsTitle, m, y, t.title, "SectionTitle");
  y += line_height(t.title.size) + 8;
  double x = m;
  for (int k = 0; k < 5; ++k) {
    const std::string w = rng.pick(lex::skills());
    c.add(w, x, y, t.body);
    x += text_width(w, t.body.size) + 14;
  }

  // redraw dates until none shares an edge coordinate with another box
  auto& boxes = c.page().boxes;
  for (int pass = 0;; ++pass) {
    bool moved = false;
    for (const auto& slot : dates) {
      auto& b = boxes[slot.index];
      bool clash = false;
      for (const auto& o : boxes)
        if (o.box_id != b.box_id && detail::shares_edge(b, o, 1.5)) clash = true;
      if (!clash) continue;
      const double w = b.width(), h = b.height();
      b.x0 = slot.x + rng.uniform(4, 40);
      b.y0 = slot.y + rng.uniform(2, 5);
      b.x1 = b.x0 + w;
      b.y1 = b.y0 + h;
      moved = true;
    }
    if (!moved) break;
    if (pass == 100) throw std::logic_error("make_resume: cannot place date boxes off alignment lines");
  }

  doc::Document d;
  d.doc_id = doc_id;
  d.template_id = t.id;
  d.pages.push_back(std::move(c.page()));
  return d;
}

inline std::vector<doc::Document> gen_resumes(const ResumeSpec& spec) {
  if (spec.templates.empty()) throw std::invalid_argument("gen_resumes: no templates");
  for (const auto& t : spec.templates) t.validate();
  std::vector<doc::Document> out;
  out.reserve(spec.num_docs);
  for (std::size_t i = 0; i < spec.num_docs; ++i) {
    const std::uint64_t s = nn::derive_seed(spec.seed, {i});
    nn::Rng pick(s);
    const auto& t = spec.templates[pick.below(spec.templates.size())];
    out.push_back(make_resume(t, nn::derive_seed(s, {1}), spec.id_prefix + "-" + zero_pad(i, 5)));
  }
  return out;
}

}  // namespace vrdie::synth
