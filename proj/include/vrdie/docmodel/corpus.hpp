#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vrdie/docmodel/types.hpp"
#include "vrdie/io.hpp"

// Corpus format: JSON Lines, one document per line:
// {doc_id, template_id, pages:[{page_no,width,height,
//   boxes:[{box_id,text,x0,y0,x1,y1,font_name,font_size,spans:[{entity_type,char_start,char_end}]}]}]}
// `spans` is omitted for unlabeled boxes.
namespace vrdie::doc {

using json = nlohmann::json;

struct CorpusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class T>
T require_field(const json& j, const char* key, const std::string& ctx) {
  if (!j.is_object()) throw CorpusError(ctx + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw CorpusError(ctx + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw CorpusError(ctx + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace detail

inline json to_json(const TextBox& b) {
  json j = {{"box_id", b.box_id}, {"text", b.text},           {"x0", b.x0},
            {"y0", b.y0},         {"x1", b.x1},               {"y1", b.y1},
            {"font_name", b.font_name}, {"font_size", b.font_size}};
  if (!b.spans.empty()) {
    json spans = json::array();
    for (const auto& s : b.spans)
      spans.push_back({{"entity_type", s.entity_type}, {"char_start", s.char_start}, {"char_end", s.char_end}});
    j["spans"] = std::move(spans);
  }
  return j;
}

inline json to_json(const Document& d) {
  json pages = json::array();
  for (const auto& p : d.pages) {
    json boxes = json::array();
    for (const auto& b : p.boxes) boxes.push_back(to_json(b));
    pages.push_back({{"page_no", p.page_no}, {"width", p.width}, {"height", p.height}, {"boxes", std::move(boxes)}});
  }
  return {{"doc_id", d.doc_id}, {"template_id", d.template_id}, {"pages", std::move(pages)}};
}

inline std::string serialize_document(const Document& d) { return to_json(d).dump(); }

inline std::string serialize_corpus(const std::vector<Document>& docs) {
  std::string out;
  for (const auto& d : docs) {
    out += serialize_document(d);
    out += '\n';
  }
  return out;
}

// Parses and validates one record; coordinates are clipped to the page.
inline Document parse_document(const std::string& line, const std::string& ctx = "record") {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw CorpusError(ctx + ": malformed JSON (" + std::string(e.what()) + ")");
  }
  Document d;
  d.doc_id = detail::require_field<std::string>(j, "doc_id", ctx);
  d.template_id = detail::require_field<std::string>(j, "template_id", ctx);
  const json pages = detail::require_field<json>(j, "pages", ctx);
  if (!pages.is_array()) throw CorpusError(ctx + ": 'pages' must be an array");
  for (const auto& pj : pages) {
    Page p;
    const std::string pctx = ctx + " doc " + d.doc_id;
    p.page_no = detail::require_field<int>(pj, "page_no", pctx);
    p.width = detail::require_field<double>(pj, "width", pctx);
    p.height = detail::require_field<double>(pj, "height", pctx);
    const json boxes = detail::require_field<json>(pj, "boxes", pctx);
    if (!boxes.is_array()) throw CorpusError(pctx + ": 'boxes' must be an array");
    for (const auto& bj : boxes) {
      TextBox b;
      b.box_id = detail::require_field<int>(bj, "box_id", pctx);
      const std::string bctx = pctx + " box " + std::to_string(b.box_id);
      b.text = detail::require_field<std::string>(bj, "text", bctx);
      b.x0 = detail::require_field<double>(bj, "x0", bctx);
      b.y0 = detail::require_field<double>(bj, "y0", bctx);
      b.x1 = detail::require_field<double>(bj, "x1", bctx);
      b.y1 = detail::require_field<double>(bj, "y1", bctx);
      b.font_name = detail::require_field<std::string>(bj, "font_name", bctx);
      b.font_size = detail::require_field<double>(bj, "font_size", bctx);
      if (auto it = bj.find("spans"); it != bj.end()) {
        if (!it->is_array()) throw CorpusError(bctx + ": 'spans' must be an array");
        for (const auto& sj : *it) {
          EntitySpan s;
          s.entity_type = detail::require_field<std::string>(sj, "entity_type", bctx);
          s.char_start = detail::require_field<std::size_t>(sj, "char_start", bctx);
          s.char_end = detail::require_field<std::size_t>(sj, "char_end", bctx);
          b.spans.push_back(std::move(s));
        }
      }
      p.boxes.push_back(std::move(b));
    }
    clip_to_page(p);
    d.pages.push_back(std::move(p));
  }
  try {
    validate_document(d);
  } catch (const ValidationError& e) {
    throw CorpusError(ctx + ": " + e.what());
  }
  return d;
}

inline std::vector<Document> parse_corpus_stream(std::istream& in) {
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    docs.push_back(parse_document(line, "line " + std::to_string(line_no)));
  }
  return docs;
}

inline std::vector<Document> parse_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file: " + path.string());
  return parse_corpus_stream(in);
}

inline std::vector<Document> parse_corpus_string(const std::string& text) {
  std::istringstream in(text);
  return parse_corpus_stream(in);
}

inline void write_corpus(const std::filesystem::path& path, const std::vector<Document>& docs) {
  write_file_atomic(path, serialize_corpus(docs));
}

}  // namespace vrdie::doc
