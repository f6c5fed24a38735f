#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "vrdie/evalkit/metrics.hpp"
#include "vrdie/extractor/train.hpp"
#include "vrdie/nn/rng.hpp"

namespace vrdie::eval {

using nlohmann::json;

// Runs fn(0..n-1) on up to `workers` threads. Every task owns its outputs, so
// the result does not depend on the schedule.
template <class F>
void parallel_for(std::size_t n, std::size_t workers, F&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------- report

struct EvalReport {
  std::string config;
  std::string split;
  EvalCounts counts;
};

inline json to_json(const EvalReport& r) {
  json j = counts_to_json(r.counts);
  j["config"] = r.config;
  j["split"] = r.split;
  return j;
}

inline EvalReport evaluate_report(const extract::Model& m, const std::vector<doc::Document>& docs, std::string config,
                                  std::string split) {
  return {std::move(config), std::move(split), extract::evaluate(m, docs)};
}

// Exact-span counterpart of extract::evaluate, a stricter diagnostic.
inline EvalCounts evaluate_spans(const extract::Model& m, const std::vector<doc::Document>& docs) {
  EvalCounts c(m.tags().types());
  for (const auto& p : extract::prepare_corpus(docs, m.config(), m.vocab(), &m.tags())) {
    const auto pred = extract::predict_tags(m, p);
    for (std::size_t b = 0; b < p.boxes.size(); ++b) score_spans_into(pred[b], p.boxes[b].toks.bio_tags, c);
  }
  return c;
}

// Per-entity F1 table with one column per report.
inline std::string format_reports(const std::vector<EvalReport>& reports) {
  std::vector<std::string> names;
  std::vector<EvalCounts> cols;
  for (const auto& r : reports) {
    names.push_back(r.config);
    cols.push_back(r.counts);
  }
  return format_table(names, cols);
}

// ---------------------------------------------------------------- few-shot

struct FewShotConfig {
  std::vector<std::size_t> sizes{0, 1, 10, 20, 50};
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::size_t epochs = 5;
  double lr_encoder = 1e-3;
  double lr_rest = 1e-3;
  std::size_t workers = 1;
};

struct FewShotRow {
  std::size_t size = 0;
  std::uint64_t seed = 0;
  EvalCounts counts;
  double f1() const { return counts.micro_f1(); }
};

struct FewShotCurve {
  std::vector<FewShotRow> rows;  // seed-major, sizes ascending

  std::vector<std::size_t> sizes() const {
    std::set<std::size_t> s;
    for (const auto& r : rows) s.insert(r.size);
    return {s.begin(), s.end()};
  }

  // Seed-averaged F1 at `size`, micro over all types or over `types` when given.
  double mean_f1(std::size_t size, const std::vector<std::string>& types = {}) const {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& r : rows)
      if (r.size == size) {
        sum += types.empty() ? r.f1() : r.counts.f1_over(types);
        ++n;
      }
    if (n == 0) throw std::out_of_range("FewShotCurve: no rows for size " + std::to_string(size));
    return sum / static_cast<double>(n);
  }
};

inline json to_json(const FewShotCurve& c) {
  json rows = json::array();
  for (const auto& r : c.rows) rows.push_back({{"size", r.size}, {"seed", r.seed}, {"f1", r.f1()}});
  return rows;
}

// size, mean F1 and one column per seed, tab separated
inline std::string format_curve(const FewShotCurve& c) {
  std::ostringstream os;
  std::set<std::uint64_t> seeds;
  for (const auto& r : c.rows) seeds.insert(r.seed);
  os << "size\tmean_f1";
  for (auto s : seeds) os << "\tseed" << s;
  os << '\n';
  for (auto size : c.sizes()) {
    os << size << '\t' << std::fixed << std::setprecision(4) << c.mean_f1(size);
    for (auto s : seeds)
      for (const auto& r : c.rows)
        if (r.size == size && r.seed == s) os << '\t' << r.f1();
    os << '\n';
  }
  return os.str();
}

// For each seed the pool is shuffled once and every size takes a prefix, so
// larger training sets contain the smaller ones. Size 0 evaluates the base
// model untouched.
inline FewShotCurve fewshot(const extract::Model& base, const std::vector<doc::Document>& pool,
                            const std::vector<doc::Document>& test, const FewShotConfig& cfg) {
  if (cfg.sizes.empty()) throw std::invalid_argument("fewshot: no sizes");
  for (std::size_t i = 1; i < cfg.sizes.size(); ++i)
    if (cfg.sizes[i] <= cfg.sizes[i - 1]) throw std::invalid_argument("fewshot: sizes must be strictly increasing");
  if (cfg.sizes.back() > pool.size())
    throw std::invalid_argument("fewshot: pool has " + std::to_string(pool.size()) + " documents, size " +
                                std::to_string(cfg.sizes.back()) + " requested");
  if (cfg.seeds.empty()) throw std::invalid_argument("fewshot: no seeds");
  if (test.empty()) throw std::invalid_argument("fewshot: empty test set");

  const auto test_pages = extract::prepare_corpus(test, base.config(), base.vocab(), &base.tags());
  const auto pool_pages = extract::prepare_corpus(pool, base.config(), base.vocab(), &base.tags());
  std::map<std::string, std::vector<std::size_t>> pages_of;
  for (std::size_t i = 0; i < pool_pages.size(); ++i) pages_of[pool_pages[i].doc_id].push_back(i);

  FewShotCurve curve;
  curve.rows.resize(cfg.seeds.size() * cfg.sizes.size());
  parallel_for(curve.rows.size(), cfg.workers, [&](std::size_t task) {
    const std::uint64_t seed = cfg.seeds[task / cfg.sizes.size()];
    const std::size_t size = cfg.sizes[task % cfg.sizes.size()];
    FewShotRow& row = curve.rows[task];
    row.size = size;
    row.seed = seed;
    if (size == 0) {
      row.counts = extract::evaluate_pages(base, test_pages);
      return;
    }
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    nn::Rng rng(nn::derive_seed(seed, {0xfe}));
    rng.shuffle(order);
    std::vector<extract::PreparedPage> train;
    for (std::size_t k = 0; k < size; ++k)
      for (auto p : pages_of.at(pool[order[k]].doc_id)) train.push_back(pool_pages[p]);
    extract::TrainConfig tc;
    tc.max_epochs = cfg.epochs;
    tc.patience = 0;
    tc.lr_encoder = cfg.lr_encoder;
    tc.lr_rest = cfg.lr_rest;
    tc.seed = nn::derive_seed(seed, {size});
    const auto res = extract::train_prepared(base, train, {}, tc);
    row.counts = extract::evaluate_pages(res.model, test_pages);
  });
  return curve;
}

// ---------------------------------------------------------------- ablation

inline const std::vector<std::string>& ablation_switches() {
  static const std::vector<std::string> v{"section_title_edges", "font_feats", "skip_connections"};
  return v;
}

// Each item names one switch or several joined by '+', all disabled together.
inline extract::ModelConfig disable(extract::ModelConfig cfg, const std::string& item) {
  std::size_t pos = 0;
  while (true) {
    const std::size_t plus = item.find('+', pos);
    const std::string s = item.substr(pos, plus == std::string::npos ? std::string::npos : plus - pos);
    if (s == "section_title_edges") cfg.use_section_edges = false;
    else if (s == "font_feats") cfg.use_font = false;
    else if (s == "skip_connections") cfg.use_skip = false;
    else throw std::invalid_argument("unknown ablation switch '" + s + "' (expected section_title_edges, font_feats or skip_connections)");
    if (plus == std::string::npos) break;
    pos = plus + 1;
  }
  return cfg;
}

struct AblationConfig {
  std::vector<std::string> switches{"section_title_edges", "font_feats", "skip_connections"};
  std::vector<std::uint64_t> seeds{0};
  extract::TrainConfig train;
  std::size_t workers = 1;
};

struct AblationRow {
  std::string variant;  // "full" or "w/o <switch>"
  std::uint64_t seed = 0;
  EvalCounts counts;
};

struct AblationTable {
  std::vector<std::string> variants;
  std::vector<AblationRow> rows;  // seed-major, variants in order

  const AblationRow& at(const std::string& variant, std::uint64_t seed) const {
    for (const auto& r : rows)
      if (r.variant == variant && r.seed == seed) return r;
    throw std::out_of_range("AblationTable: no row for " + variant);
  }

  double mean_f1(const std::string& variant, const std::vector<std::string>& types = {}) const {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& r : rows)
      if (r.variant == variant) {
        sum += types.empty() ? r.counts.micro_f1() : r.counts.f1_over(types);
        ++n;
      }
    if (n == 0) throw std::out_of_range("AblationTable: no rows for " + variant);
    return sum / static_cast<double>(n);
  }
};

inline json to_json(const AblationTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json j = counts_to_json(r.counts);
    j["variant"] = r.variant;
    j["seed"] = r.seed;
    rows.push_back(std::move(j));
  }
  return rows;
}

// Variants as rows, seed-averaged per-entity F1 as columns.
inline std::string format_ablation(const AblationTable& t) {
  std::ostringstream os;
  if (t.rows.empty()) return "";
  const auto& types = t.rows.front().counts.types();
  std::size_t w = 8;
  for (const auto& v : t.variants) w = std::max(w, v.size() + 2);
  os << std::left << std::setw(static_cast<int>(w)) << "variant";
  auto col = [](const std::string& ty) { return static_cast<int>(std::max<std::size_t>(ty.size(), 6) + 2); };
  for (const auto& ty : types) os << std::right << std::setw(col(ty)) << ty;
  os << std::right << std::setw(8) << "micro" << '\n';
  for (const auto& v : t.variants) {
    os << std::left << std::setw(static_cast<int>(w)) << v;
    for (const auto& ty : types)
      os << std::right << std::setw(col(ty)) << std::fixed << std::setprecision(2)
         << 100.0 * t.mean_f1(v, {ty});
    os << std::right << std::setw(8) << std::fixed << std::setprecision(2) << 100.0 * t.mean_f1(v) << '\n';
  }
  return os.str();
}

// Trains the full configuration and one variant per switch item on identical
// data and seeds.
inline AblationTable ablate(const std::vector<doc::Document>& train, const std::vector<doc::Document>& val,
                            const std::vector<doc::Document>& test, const extract::ModelConfig& base,
                            const doc::Vocabulary& vocab, const doc::TagSet& tags, const AblationConfig& cfg) {
  if (!base.use_gcn) throw std::invalid_argument("ablate: the base configuration must use the graph module");
  if (cfg.seeds.empty()) throw std::invalid_argument("ablate: no seeds");
  AblationTable table;
  std::vector<extract::ModelConfig> configs{base};
  table.variants.push_back("full");
  for (const auto& s : cfg.switches) {
    configs.push_back(disable(base, s));
    table.variants.push_back("w/o " + s);
  }
  table.rows.resize(cfg.seeds.size() * configs.size());
  parallel_for(table.rows.size(), cfg.workers, [&](std::size_t task) {
    const std::uint64_t seed = cfg.seeds[task / configs.size()];
    const std::size_t v = task % configs.size();
    extract::TrainConfig tc = cfg.train;
    tc.seed = seed;
    if (cfg.workers > 1) tc.log = nullptr;
    extract::Model init(configs[v], vocab, tags, nn::derive_seed(seed, {0xab}));
    const auto res = extract::train_supervised(train, val, std::move(init), tc);
    table.rows[task] = {table.variants[v], seed, extract::evaluate(res.model, test)};
  });
  return table;
}

}  // namespace vrdie::eval
