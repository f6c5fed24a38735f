#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vrdie/docmodel/types.hpp"
#include "vrdie/nn/rng.hpp"
#include "vrdie/synthcorpus/invoice.hpp"
#include "vrdie/synthcorpus/resume.hpp"

namespace vrdie::synth {

struct CorpusSplit {
  std::vector<doc::Document> labeled_seen;
  std::vector<doc::Document> labeled_unseen;
  std::vector<doc::Document> unlabeled;  // labels stripped
  std::vector<doc::Document> few_shot;   // labeled, unseen templates, disjoint from labeled_unseen
};

struct SplitFractions {
  double labeled = 0.2;
  double unlabeled = 0.8;
};

inline std::size_t rounded_share(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

// Unseen-template documents become the unseen test set; the rest is shuffled
// and cut into labeled and unlabeled parts.
inline CorpusSplit split_corpus(const std::vector<doc::Document>& docs, const std::vector<std::string>& unseen_templates,
                                const SplitFractions& f, std::uint64_t seed) {
  if (f.labeled < 0 || f.unlabeled < 0) throw std::invalid_argument("split_corpus: negative fraction");
  if (f.labeled + f.unlabeled > 1.0 + 1e-12) throw std::invalid_argument("split_corpus: fractions sum to more than 1");
  const std::set<std::string> unseen(unseen_templates.begin(), unseen_templates.end());
  for (const auto& t : unseen)
    if (std::none_of(docs.begin(), docs.end(), [&](const auto& d) { return d.template_id == t; }))
      throw std::invalid_argument("split_corpus: unseen template " + t + " does not occur in the corpus");
  CorpusSplit out;
  std::vector<const doc::Document*> rest;
  for (const auto& d : docs) {
    if (unseen.count(d.template_id)) out.labeled_unseen.push_back(d);
    else rest.push_back(&d);
  }
  nn::Rng rng(nn::derive_seed(seed, {0x5b}));
  rng.shuffle(rest);
  const std::size_t n_lab = std::min(rest.size(), rounded_share(f.labeled, rest.size()));
  const std::size_t n_unl = std::min(rest.size() - n_lab, rounded_share(f.unlabeled, rest.size()));
  for (std::size_t i = 0; i < n_lab; ++i) out.labeled_seen.push_back(*rest[i]);
  for (std::size_t i = n_lab; i < n_lab + n_unl; ++i) out.unlabeled.push_back(doc::strip_labels(*rest[i]));
  return out;
}

struct TrainValTest {
  std::vector<doc::Document> train, val, test;
};

// Deterministic shuffle then cut by fractions; the test part takes the remainder.
inline TrainValTest split_train_val_test(const std::vector<doc::Document>& docs, double train, double val,
                                         std::uint64_t seed) {
  if (train < 0 || val < 0 || train + val > 1.0 + 1e-12) throw std::invalid_argument("split_train_val_test: bad fractions");
  std::vector<std::size_t> idx(docs.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  nn::Rng rng(nn::derive_seed(seed, {0x7e}));
  rng.shuffle(idx);
  const std::size_t n_tr = rounded_share(train, docs.size());
  const std::size_t n_va = std::min(docs.size() - n_tr, rounded_share(val, docs.size()));
  TrainValTest out;
  for (std::size_t k = 0; k < idx.size(); ++k)
    (k < n_tr ? out.train : k < n_tr + n_va ? out.val : out.test).push_back(docs[idx[k]]);
  return out;
}

struct InvoiceCorpusSpec {
  InvoiceSpec gen;
  std::vector<std::string> unseen_templates{"T10", "T11"};
  SplitFractions fractions;
  std::size_t few_shot_docs = 60;
  bool few_shot_unlabeled = true;  // stripped few-shot documents join the unlabeled set
};

inline CorpusSplit make_invoice_corpus(const InvoiceCorpusSpec& spec) {
  CorpusSplit split = split_corpus(gen_invoices(spec.gen), spec.unseen_templates, spec.fractions, spec.gen.seed);
  if (spec.few_shot_docs > 0) {
    InvoiceSpec few = spec.gen;
    few.num_docs = spec.few_shot_docs;
    few.templates = select_templates(spec.gen.templates, spec.unseen_templates);
    few.seed = nn::derive_seed(spec.gen.seed, {0xf5});
    few.id_prefix = spec.gen.id_prefix + "-few";
    split.few_shot = gen_invoices(few);
    if (spec.few_shot_unlabeled)
      for (const auto& d : split.few_shot) split.unlabeled.push_back(doc::strip_labels(d));
  }
  return split;
}

inline nlohmann::json manifest_entry(const std::vector<doc::Document>& docs) {
  nlohmann::json ids = nlohmann::json::array();
  for (const auto& d : docs) ids.push_back(d.doc_id);
  return ids;
}

}  // namespace vrdie::synth
