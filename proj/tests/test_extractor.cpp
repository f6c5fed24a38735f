#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "test_util.hpp"
#include "vrdie/extractor/train.hpp"
#include "vrdie/nn/gradcheck.hpp"
#include "vrdie/synthcorpus/invoice.hpp"

using namespace vrdie;
using namespace vrdie::extract;
using testutil::box;
using testutil::page_of;

namespace {

ModelConfig tiny_model(bool gcn = true) {
  ModelConfig c;
  c.encoder.hidden_dim = 8;
  c.encoder.num_layers = 1;
  c.encoder.num_heads = 2;
  c.encoder.ffn_dim = 16;
  c.encoder.max_seq_len = 16;
  c.encoder.dropout = 0.0;
  c.gcn_hidden = 6;
  c.gcn_layers = 2;
  c.use_gcn = gcn;
  return c;
}

doc::Document labeled_doc() {
  auto a = box(0, "Total:", 10, 10, 50, 20, "Arial-Bold", 12);
  auto b = box(1, "$ 12.00", 60, 10, 100, 20);
  b.spans.push_back({"Amount", 0, b.text.size()});
  doc::Document d;
  d.doc_id = "d0";
  d.template_id = "T";
  d.pages.push_back(page_of({a, b}));
  return d;
}

std::vector<doc::Document> invoices(std::size_t n, std::uint64_t seed) {
  synth::InvoiceSpec s;
  s.num_docs = n;
  s.seed = seed;
  return synth::gen_invoices(s);
}

}  // namespace

TEST(Extractor, LogitShapesFollowKeptTokens) {
  const auto d = labeled_doc();
  const doc::TagSet tags({"Amount"});
  Model m(tiny_model(), doc::build_vocab({d}, 1), tags, 1);
  const auto pages = prepare_document(d, m.config(), m.vocab(), &tags);
  ASSERT_EQ(pages.size(), 1u);
  Tape t(false);
  const auto pl = m.forward(t, pages[0], false);
  std::size_t rows = 0;
  for (std::size_t k : pl.kept) rows += k;
  EXPECT_EQ(pl.logits.value().rows(), rows);
  EXPECT_EQ(pl.logits.value().cols(), tags.num_tags());
  EXPECT_EQ(kept_targets(pages[0]).size(), rows);
}

TEST(Extractor, PageLossGradientCheck) {
  const auto d = labeled_doc();
  const doc::TagSet tags({"Amount"});
  for (bool gcn : {false, true}) {
    Model m(tiny_model(gcn), doc::build_vocab({d}, 1), tags, 2);
    const auto pages = prepare_document(d, m.config(), m.vocab(), &tags);
    nn::GradCheckOptions opt;
    opt.max_coords_per_param = 8;
    const auto r = nn::grad_check([&](Tape& t) { return page_loss(t, m, pages[0]); }, nn::parameters_of(m), opt);
    EXPECT_TRUE(r.passed) << r.summary();
    EXPECT_LT(r.max_rel_error, 1e-4);
  }
}

TEST(Extractor, ZeroHeadGivesLogOfTagCount) {
  const auto d = labeled_doc();
  const doc::TagSet tags({"Amount", "Date", "Name"});
  Model m(tiny_model(), doc::build_vocab({d}, 1), tags, 3);
  m.visit([](Parameter& p) {
    if (p.name == "head.w") p.value.fill(0.0);
  });
  const auto pages = prepare_document(d, m.config(), m.vocab(), &tags);
  Tape t(false);
  EXPECT_NEAR(page_loss(t, m, pages[0]).value()[0], std::log(7.0), 1e-12);
}

TEST(Extractor, OverfitsTinyCorpus) {
  const auto docs = invoices(4, 1);
  const doc::TagSet tags(synth::invoice_entity_types());
  ModelConfig cfg = tiny_model();
  cfg.encoder.hidden_dim = 16;
  cfg.gcn_hidden = 16;
  Model m(cfg, doc::build_vocab(docs, 1), tags, 4);
  TrainConfig tc;
  tc.max_epochs = 40;
  tc.lr_encoder = tc.lr_rest = 1e-2;
  const auto res = train_supervised(docs, {}, m, tc);
  EXPECT_LT(res.history.back().train_loss, 0.1 * res.history.front().train_loss);
  EXPECT_GT(evaluate(res.model, docs).micro_f1(), 0.9);
}

TEST(Extractor, EarlyStoppingKeepsBestEpoch) {
  const auto docs = invoices(6, 2);
  const doc::TagSet tags(synth::invoice_entity_types());
  Model m(tiny_model(), doc::build_vocab(docs, 1), tags, 5);
  TrainConfig tc;
  tc.max_epochs = 12;
  tc.patience = 2;
  const auto res = train_supervised({docs.begin(), docs.begin() + 4}, {docs.begin() + 4, docs.end()}, m, tc);
  ASSERT_GE(res.best_epoch, 1u);
  double best = -1;
  for (const auto& h : res.history) best = std::max(best, h.val_f1);
  EXPECT_EQ(res.best_val_f1, best);
  EXPECT_EQ(res.history[res.best_epoch - 1].val_f1, best);
  EXPECT_LE(res.history.size(), std::min<std::size_t>(12, res.best_epoch + 2));
}

TEST(Extractor, TrainingIsReproducible) {
  const auto docs = invoices(3, 3);
  const doc::TagSet tags(synth::invoice_entity_types());
  Model m(tiny_model(), doc::build_vocab(docs, 1), tags, 6);
  TrainConfig tc;
  tc.max_epochs = 2;
  const auto a = train_supervised(docs, {}, m, tc);
  const auto b = train_supervised(docs, {}, m, tc);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
}

TEST(Extractor, TrainingRejectsUnlabeledOrEmptyInput) {
  const auto docs = invoices(2, 4);
  const doc::TagSet tags(synth::invoice_entity_types());
  Model m(tiny_model(), doc::build_vocab(docs, 1), tags, 7);
  EXPECT_THROW(train_supervised({}, {}, m, {}), std::invalid_argument);
  const auto pages = prepare_corpus(docs, m.config(), m.vocab(), nullptr);
  EXPECT_THROW(train_prepared(m, pages, {}, {}), std::invalid_argument);
}

TEST(Extractor, CheckpointRoundTripGivesIdenticalPredictions) {
  const auto docs = invoices(10, 5);
  const doc::TagSet tags(synth::invoice_entity_types());
  Model m(tiny_model(), doc::build_vocab(docs, 1), tags, 8);
  TrainConfig tc;
  tc.max_epochs = 2;
  auto trained = train_supervised(docs, {}, m, tc).model;
  const auto path = std::filesystem::temp_directory_path() / "vrdie_test_model.ckpt";
  save_model(path, trained);
  const Model back = load_model(path);
  std::filesystem::remove(path);
  for (const auto& d : docs) {
    const auto pa = prepare_document(d, trained.config(), trained.vocab(), nullptr);
    const auto pb = prepare_document(d, back.config(), back.vocab(), nullptr);
    for (std::size_t p = 0; p < pa.size(); ++p) {
      Tape ta(false), tb(false);
      const auto la = trained.forward(ta, pa[p], false).logits.value();
      const auto lb = back.forward(tb, pb[p], false).logits.value();
      ASSERT_EQ(la.size(), lb.size());
      for (std::size_t i = 0; i < la.size(); ++i) ASSERT_EQ(la[i], lb[i]);
    }
    EXPECT_EQ(predict(trained, d), predict(back, d));
  }
}

TEST(Extractor, EncoderCheckpointLoadsIntoFreshModel) {
  const auto docs = invoices(3, 6);
  const doc::TagSet tags(synth::invoice_entity_types());
  const auto vocab = doc::build_vocab(docs, 1);
  Model a(tiny_model(), vocab, tags, 9);
  Model b(tiny_model(), vocab, tags, 10);
  const auto bundle = read_encoder_checkpoint(encoder_checkpoint(a.encoder(), vocab));
  EXPECT_EQ(bundle.vocab.size(), vocab.size());
  load_encoder_weights(b, bundle);
  const auto pa = nn::parameters_of(a.encoder());
  const auto pb = nn::parameters_of(b.encoder());
  for (std::size_t i = 0; i < pa.size(); ++i)
    for (std::size_t k = 0; k < pa[i]->value.size(); ++k) ASSERT_EQ(pa[i]->value[k], pb[i]->value[k]);
}

TEST(Extractor, PredictionsAreValidBioAndDecodeToText) {
  const auto docs = invoices(3, 7);
  const doc::TagSet tags(synth::invoice_entity_types());
  Model m(tiny_model(), doc::build_vocab(docs, 1), tags, 11);
  for (const auto& d : docs) {
    for (const auto& page : prepare_document(d, m.config(), m.vocab(), nullptr))
      for (const auto& t : predict_tags(m, page)) EXPECT_TRUE(doc::is_valid_bio(t));
    for (const auto& e : predict(m, d).entities) {
      EXPECT_LT(e.char_start, e.char_end);
      EXPECT_FALSE(e.text.empty());
    }
  }
}
