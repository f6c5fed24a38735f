#include <gtest/gtest.h>

#include <atomic>

#include "oracles.hpp"
#include "vrdie/evalkit/harness.hpp"
#include "vrdie/nn/rng.hpp"
#include "vrdie/synthcorpus/invoice.hpp"

using namespace vrdie;
using namespace vrdie::eval;

namespace {

const std::vector<std::string>& kTypes = oracle::fixture_types();

std::vector<doc::Document> invoices(std::size_t n, std::uint64_t seed) {
  synth::InvoiceSpec s;
  s.num_docs = n;
  s.seed = seed;
  return synth::gen_invoices(s);
}

extract::ModelConfig tiny_model() {
  extract::ModelConfig c;
  c.encoder.hidden_dim = 8;
  c.encoder.num_layers = 1;
  c.encoder.num_heads = 2;
  c.encoder.ffn_dim = 16;
  c.encoder.max_seq_len = 16;
  c.gcn_hidden = 8;
  return c;
}

}  // namespace

TEST(Score, HandFixtures) {
  const auto& fixtures = oracle::score_fixtures();
  ASSERT_EQ(fixtures.size(), 20u);
  for (std::size_t k = 0; k < fixtures.size(); ++k) {
    const auto& f = fixtures[k];
    const auto c = score(f.pred, f.gold, kTypes);
    EXPECT_EQ(c.of("A"), f.a) << "fixture " << k;
    EXPECT_EQ(c.of("B"), f.b) << "fixture " << k;
    EXPECT_NEAR(c.micro_f1(), f.micro, 1e-12) << "fixture " << k;
  }
}

TEST(Score, LengthMismatchAndUnknownTagsAreRejected) {
  EXPECT_THROW(score({1, 0}, {1}, kTypes), std::invalid_argument);
  EXPECT_THROW(score({5}, {0}, kTypes), std::out_of_range);
  EvalCounts a(kTypes), b({"A"});
  EXPECT_THROW(a += b, std::invalid_argument);
}

TEST(Score, ZeroDenominatorsReportZero) {
  Counts c;
  EXPECT_EQ(precision(c), 0.0);
  EXPECT_EQ(recall(c), 0.0);
  EXPECT_EQ(f1(c), 0.0);
  c.fn = 3;
  EXPECT_EQ(f1(c), 0.0);
}

TEST(Score, FuzzAgainstOracleAndMicroInvariant) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto [pred, gold, ntypes] = oracle::fuzz_case(seed);
    const std::size_t n = pred.size();
    nn::Rng rng(nn::derive_seed(seed, {0xc0}));
    const auto want = oracle::reference_score(pred, gold, ntypes);
    const auto got = score(pred, gold, want.types());
    ASSERT_EQ(got, want) << "seed " << seed;

    // micro counts are the per-type sums, and tp+fn / tp+fp count gold / predicted entity tokens
    Counts sum;
    for (std::size_t t = 0; t < ntypes; ++t) sum += got.of(t);
    ASSERT_EQ(got.micro(), sum);
    long gold_ent = 0, pred_ent = 0;
    for (std::size_t i = 0; i < n; ++i) {
      gold_ent += gold[i] != 0;
      pred_ent += pred[i] != 0;
    }
    ASSERT_EQ(sum.tp + sum.fn, gold_ent);
    ASSERT_EQ(sum.tp + sum.fp, pred_ent);
    const double expect = sum.tp == 0 ? 0.0 : 2.0 * sum.tp / static_cast<double>(2 * sum.tp + sum.fp + sum.fn);
    ASSERT_NEAR(got.micro_f1(), expect, 1e-12) << "seed " << seed;

    // scoring is additive over concatenation
    const std::size_t cut = n ? rng.below(n + 1) : 0;
    EvalCounts split(want.types());
    score_into({pred.begin(), pred.begin() + static_cast<std::ptrdiff_t>(cut)},
               {gold.begin(), gold.begin() + static_cast<std::ptrdiff_t>(cut)}, split);
    score_into({pred.begin() + static_cast<std::ptrdiff_t>(cut), pred.end()},
               {gold.begin() + static_cast<std::ptrdiff_t>(cut), gold.end()}, split);
    ASSERT_EQ(split, got);
  }
}

TEST(Score, SpansNeedExactBoundaries) {
  EvalCounts c(kTypes);
  score_spans_into({1, 2, 0}, {1, 2, 2}, c);
  EXPECT_EQ(c.of("A"), (Counts{0, 1, 1}));
  EvalCounts d(kTypes);
  score_spans_into({1, 2, 3}, {1, 2, 3}, d);
  EXPECT_EQ(d.micro(), (Counts{2, 0, 0}));
}

TEST(Score, JsonCarriesPerEntityAndMicro) {
  const auto c = score({1, 3}, {1, 0}, kTypes);
  const auto j = counts_to_json(c);
  EXPECT_EQ(j["per_entity"]["A"]["tp"], 1);
  EXPECT_EQ(j["per_entity"]["B"]["fp"], 1);
  EXPECT_NEAR(j["micro"]["f1"].get<double>(), 2.0 / 3.0, 1e-12);
}

TEST(Harness, ParallelForVisitsEveryTaskOnce) {
  std::vector<std::atomic<int>> hits(50);
  parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(5, 2, [](std::size_t i) {
                 if (i == 3) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

TEST(Harness, FewShotValidatesItsConfig) {
  const auto docs = invoices(6, 1);
  const doc::TagSet tags(synth::invoice_entity_types());
  extract::Model m(tiny_model(), doc::build_vocab(docs, 1), tags, 1);
  FewShotConfig c;
  c.sizes = {0, 2, 2};
  EXPECT_THROW(fewshot(m, docs, docs, c), std::invalid_argument);
  c.sizes = {0, 7};
  EXPECT_THROW(fewshot(m, docs, docs, c), std::invalid_argument);
  c.sizes = {0, 1};
  c.seeds.clear();
  EXPECT_THROW(fewshot(m, docs, docs, c), std::invalid_argument);
  c.seeds = {0};
  EXPECT_THROW(fewshot(m, docs, {}, c), std::invalid_argument);
}

TEST(Harness, FewShotRowsAreDeterministicAcrossWorkerCounts) {
  const auto pool = invoices(4, 2), test = invoices(3, 3);
  const doc::TagSet tags(synth::invoice_entity_types());
  extract::Model m(tiny_model(), doc::build_vocab(pool, 1), tags, 2);
  FewShotConfig c;
  c.sizes = {0, 1, 3};
  c.seeds = {0, 1};
  c.epochs = 1;
  const auto a = fewshot(m, pool, test, c);
  c.workers = 3;
  const auto b = fewshot(m, pool, test, c);
  ASSERT_EQ(a.rows.size(), 6u);
  EXPECT_EQ(to_json(a), to_json(b));
  EXPECT_EQ(a.sizes(), (std::vector<std::size_t>{0, 1, 3}));
  EXPECT_EQ(a.rows[0].counts, a.rows[3].counts);  // size 0 is the untouched base model
  EXPECT_THROW(a.mean_f1(2), std::out_of_range);
}

TEST(Harness, DisableParsesSwitchCombinations) {
  const auto base = tiny_model();
  const auto a = disable(base, "font_feats");
  EXPECT_FALSE(a.use_font);
  EXPECT_TRUE(a.use_section_edges && a.use_skip);
  const auto b = disable(base, "section_title_edges+skip_connections");
  EXPECT_FALSE(b.use_section_edges || b.use_skip);
  EXPECT_TRUE(b.use_font);
  EXPECT_THROW(disable(base, "dropout"), std::invalid_argument);
  EXPECT_THROW(disable(base, "font_feats+"), std::invalid_argument);
}

TEST(Harness, AblationTableHasOneRowPerVariantAndSeed) {
  const auto docs = invoices(5, 4);
  const doc::TagSet tags(synth::invoice_entity_types());
  AblationConfig c;
  c.seeds = {0, 1};
  c.train.max_epochs = 1;
  c.switches = {"font_feats", "section_title_edges+font_feats"};
  const auto t = ablate({docs.begin(), docs.begin() + 3}, {}, {docs.begin() + 3, docs.end()}, tiny_model(),
                        doc::build_vocab(docs, 1), tags, c);
  EXPECT_EQ(t.variants, (std::vector<std::string>{"full", "w/o font_feats", "w/o section_title_edges+font_feats"}));
  EXPECT_EQ(t.rows.size(), 6u);
  EXPECT_NO_THROW(t.at("w/o font_feats", 1));
  EXPECT_THROW(t.at("w/o skip_connections", 0), std::out_of_range);
  EXPECT_FALSE(format_ablation(t).empty());

  extract::ModelConfig text_only = tiny_model();
  text_only.use_gcn = false;
  EXPECT_THROW(ablate(docs, {}, docs, text_only, doc::build_vocab(docs, 1), tags, c), std::invalid_argument);
}
