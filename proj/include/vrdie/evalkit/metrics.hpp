#pragma once

#include <algorithm>
#include <cstddef>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vrdie/docmodel/labels.hpp"

namespace vrdie::eval {

struct Counts {
  long tp = 0, fp = 0, fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const Counts&) const = default;
};

// Any ratio with a zero denominator is reported as 0.
inline double precision(const Counts& c) { return c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp); }
inline double recall(const Counts& c) { return c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn); }
inline double f1(const Counts& c) {
  const double p = precision(c), r = recall(c);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

class EvalCounts {
 public:
  EvalCounts() = default;
  explicit EvalCounts(std::vector<std::string> types) : types_(std::move(types)), per_type_(types_.size()) {}

  const std::vector<std::string>& types() const { return types_; }
  const Counts& of(std::size_t type) const { return per_type_.at(type); }
  Counts& of(std::size_t type) { return per_type_.at(type); }
  const Counts& of(const std::string& type) const { return per_type_.at(index(type)); }

  std::size_t index(const std::string& type) const {
    for (std::size_t i = 0; i < types_.size(); ++i)
      if (types_[i] == type) return i;
    throw std::out_of_range("EvalCounts: unknown entity type " + type);
  }

  Counts micro() const {
    Counts c;
    for (const auto& t : per_type_) c += t;
    return c;
  }

  double micro_f1() const { return f1(micro()); }
  double f1_of(const std::string& type) const { return f1(of(type)); }

  // Micro F1 over a subset of types.
  double f1_over(const std::vector<std::string>& types) const {
    Counts c;
    for (const auto& t : types) c += of(t);
    return f1(c);
  }

  EvalCounts& operator+=(const EvalCounts& o) {
    if (o.types_ != types_) throw std::invalid_argument("EvalCounts: merging counts over different type sets");
    for (std::size_t i = 0; i < per_type_.size(); ++i) per_type_[i] += o.per_type_[i];
    return *this;
  }

  bool operator==(const EvalCounts&) const = default;

 private:
  std::vector<std::string> types_;
  std::vector<Counts> per_type_;
};

// Token-level scoring. For a token with gold type g and predicted type p
// (entity type of a B-/I- tag, none for O): g = p ≠ none is a TP of g; p ≠ none
// with p ≠ g is an FP of p (and an FN of g when g ≠ none); g ≠ none with
// p = none is an FN of g.
inline void score_into(const std::vector<int>& pred, const std::vector<int>& gold, EvalCounts& counts) {
  if (pred.size() != gold.size())
    throw std::invalid_argument("score: " + std::to_string(pred.size()) + " predicted vs " + std::to_string(gold.size()) +
                                " gold tags");
  const auto ntypes = static_cast<int>(counts.types().size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int g = doc::TagSet::type_of(gold[i]);
    const int p = doc::TagSet::type_of(pred[i]);
    if (g >= ntypes || p >= ntypes) throw std::out_of_range("score: tag id outside the type set");
    if (g >= 0 && g == p) {
      ++counts.of(static_cast<std::size_t>(g)).tp;
      continue;
    }
    if (p >= 0) ++counts.of(static_cast<std::size_t>(p)).fp;
    if (g >= 0) ++counts.of(static_cast<std::size_t>(g)).fn;
  }
}

inline EvalCounts score(const std::vector<int>& pred, const std::vector<int>& gold, const std::vector<std::string>& types) {
  EvalCounts c(types);
  score_into(pred, gold, c);
  return c;
}

// Stricter diagnostic: a predicted span counts only when type and token range
// match a gold span exactly.
inline void score_spans_into(const std::vector<int>& pred, const std::vector<int>& gold, EvalCounts& counts) {
  if (pred.size() != gold.size()) throw std::invalid_argument("score_spans: length mismatch");
  struct S {
    int type;
    std::size_t b, e;
    bool operator==(const S&) const = default;
  };
  auto spans = [](const std::vector<int>& raw) {
    const auto tags = doc::repair_bio(raw);
    std::vector<S> out;
    for (std::size_t i = 0; i < tags.size(); ++i) {
      if (!doc::TagSet::is_begin(tags[i])) continue;
      const int t = doc::TagSet::type_of(tags[i]);
      std::size_t j = i + 1;
      while (j < tags.size() && doc::TagSet::is_inside(tags[j]) && doc::TagSet::type_of(tags[j]) == t) ++j;
      out.push_back({t, i, j});
      i = j - 1;
    }
    return out;
  };
  const auto ps = spans(pred), gs = spans(gold);
  for (const auto& p : ps) {
    bool hit = false;
    for (const auto& g : gs) hit = hit || g == p;
    if (hit) ++counts.of(static_cast<std::size_t>(p.type)).tp;
    else ++counts.of(static_cast<std::size_t>(p.type)).fp;
  }
  for (const auto& g : gs) {
    bool hit = false;
    for (const auto& p : ps) hit = hit || g == p;
    if (!hit) ++counts.of(static_cast<std::size_t>(g.type)).fn;
  }
}

inline nlohmann::json counts_to_json(const EvalCounts& c) {
  nlohmann::json per = nlohmann::json::object();
  for (std::size_t i = 0; i < c.types().size(); ++i) {
    const Counts& k = c.of(i);
    per[c.types()[i]] = {{"tp", k.tp}, {"fp", k.fp}, {"fn", k.fn}, {"p", precision(k)}, {"r", recall(k)}, {"f1", f1(k)}};
  }
  const Counts m = c.micro();
  return {{"per_entity", per}, {"micro", {{"p", precision(m)}, {"r", recall(m)}, {"f1", f1(m)}}}};
}

// Console table: one row per entity type plus a micro row; one F1 column per
// named configuration.
inline std::string format_table(const std::vector<std::string>& column_names, const std::vector<EvalCounts>& columns) {
  if (column_names.size() != columns.size()) throw std::invalid_argument("format_table: column count mismatch");
  std::ostringstream os;
  std::size_t w = 12;
  if (!columns.empty())
    for (const auto& t : columns.front().types()) w = std::max(w, t.size() + 2);
  os << std::left << std::setw(static_cast<int>(w)) << "entity";
  for (const auto& n : column_names) os << std::right << std::setw(static_cast<int>(std::max<std::size_t>(10, n.size() + 2))) << n;
  os << '\n';
  auto row = [&](const std::string& name, auto value_of) {
    os << std::left << std::setw(static_cast<int>(w)) << name;
    for (std::size_t c = 0; c < columns.size(); ++c)
      os << std::right << std::setw(static_cast<int>(std::max<std::size_t>(10, column_names[c].size() + 2)))
         << std::fixed << std::setprecision(2) << 100.0 * value_of(columns[c]);
    os << '\n';
  };
  if (!columns.empty())
    for (const auto& t : columns.front().types()) row(t, [&](const EvalCounts& c) { return c.f1_of(t); });
  row("micro", [](const EvalCounts& c) { return c.micro_f1(); });
  return os.str();
}

}  // namespace vrdie::eval
