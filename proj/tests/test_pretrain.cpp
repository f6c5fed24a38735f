#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "vrdie/pretrain/pretrain.hpp"
#include "vrdie/synthcorpus/invoice.hpp"

using namespace vrdie;
using namespace vrdie::pretrain;

namespace {

std::vector<doc::Document> corpus(std::size_t n, std::uint64_t seed = 0) {
  synth::InvoiceSpec s;
  s.num_docs = n;
  s.seed = seed;
  std::vector<doc::Document> out;
  for (const auto& d : synth::gen_invoices(s)) out.push_back(doc::strip_labels(d));
  return out;
}

enc::EncoderConfig tiny_encoder(std::size_t vocab) {
  enc::EncoderConfig c;
  c.vocab_size = vocab;
  c.hidden_dim = 16;
  c.num_layers = 1;
  c.num_heads = 2;
  c.ffn_dim = 32;
  c.max_seq_len = 24;
  c.dropout = 0.0;
  return c;
}

std::size_t adjacency_edge_count(const std::vector<doc::Document>& docs) {
  std::size_t n = 0;
  for (const auto& d : docs)
    for (const auto& p : d.pages) n += graph::build_adjacency_edges(doc::merge_close_boxes(p, 1.0)).edges.size();
  return n;
}

using PairKey = std::tuple<std::string, int, int, int>;

std::map<PairKey, int> labels_by_pair(const SprcDataset& ds) {
  std::map<PairKey, int> m;
  for (const auto* part : {&ds.train, &ds.val})
    for (const auto& ex : *part) m[{ex.doc_id, ex.page_no, ex.box_a, ex.box_b}] = ex.label;
  return m;
}

}  // namespace

TEST(SprcDataset, TwoExamplesPerAdjacencyEdge) {
  const auto docs = corpus(30);
  const auto vocab = doc::build_vocab(docs);
  const auto ds = build_sprc_dataset(docs, vocab, {}, 0.1, 0);
  EXPECT_EQ(ds.size(), 2 * adjacency_edge_count(docs));
}

TEST(SprcDataset, ReversedPairCarriesFlippedLabelInSameSplit) {
  const auto docs = corpus(30, 1);
  const auto ds = build_sprc_dataset(docs, doc::build_vocab(docs), {}, 0.2, 0);
  const auto labels = labels_by_pair(ds);
  std::set<PairKey> in_val;
  for (const auto& ex : ds.val) in_val.insert({ex.doc_id, ex.page_no, ex.box_a, ex.box_b});
  for (const auto& [k, label] : labels) {
    const PairKey rev{std::get<0>(k), std::get<1>(k), std::get<3>(k), std::get<2>(k)};
    ASSERT_EQ(labels.count(rev), 1u);
    EXPECT_EQ(static_cast<graph::Relation>(labels.at(rev)), graph::flip(static_cast<graph::Relation>(label)));
    EXPECT_EQ(in_val.count(k), in_val.count(rev));
  }
  EXPECT_FALSE(ds.val.empty());
}

TEST(SprcDataset, BalanceKeepsEveryHorizontalPair) {
  const auto docs = corpus(20, 2);
  const auto vocab = doc::build_vocab(docs);
  const auto full = build_sprc_dataset(docs, vocab, {}, 0.0, 0);
  SprcOptions opt;
  opt.balance_ratio = 0.25;
  const auto bal = build_sprc_dataset(docs, vocab, opt, 0.0, 0);
  auto count = [](const SprcDataset& ds, bool vertical) {
    std::size_t n = 0;
    for (const auto& ex : ds.train) n += graph::is_vertical(static_cast<graph::Relation>(ex.label)) == vertical;
    return n;
  };
  EXPECT_EQ(count(bal, false), count(full, false));
  EXPECT_LT(count(bal, true), count(full, true));
  EXPECT_NEAR(static_cast<double>(count(bal, true)), 0.25 * static_cast<double>(count(full, true)), 20.0);
}

TEST(SprcDataset, FortyPairBalanceArithmetic) {
  std::vector<graph::SprcPair> pairs;
  for (int i = 0; i < 40; ++i)
    pairs.push_back({i, i + 1, i < 30 ? graph::Relation::UpDown : graph::Relation::LeftRight});
  const auto kept = graph::balance_sprc_pairs(pairs, 0.5, 9);
  std::size_t vertical = 0;
  for (const auto& p : kept) vertical += graph::is_vertical(p.label);
  EXPECT_EQ(kept.size(), 25u);
  EXPECT_EQ(vertical, 15u);
}

TEST(SprcDataset, MaxTrainSubsamplesTheTrainingSplit) {
  const auto docs = corpus(30, 3);
  const auto vocab = doc::build_vocab(docs);
  const auto full = build_sprc_dataset(docs, vocab, {}, 0.1, 4);
  SprcOptions opt;
  opt.max_train = 100;
  const auto a = build_sprc_dataset(docs, vocab, opt, 0.1, 4);
  const auto b = build_sprc_dataset(docs, vocab, opt, 0.1, 4);
  ASSERT_EQ(a.train.size(), 100u);
  EXPECT_EQ(a.val.size(), full.val.size());
  const auto all = labels_by_pair(full);
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    const auto& ex = a.train[i];
    EXPECT_EQ(all.count({ex.doc_id, ex.page_no, ex.box_a, ex.box_b}), 1u);
    EXPECT_EQ(ex.box_a, b.train[i].box_a);
  }
}

TEST(SprcDataset, EmptyCorpusIsRejected) {
  const auto docs = corpus(2);
  EXPECT_THROW(build_sprc_dataset({}, doc::build_vocab(docs), {}, 0.1, 0), std::invalid_argument);
}

TEST(Stages, ParseAcceptsCanonicalOrders) {
  EXPECT_EQ(parse_stages("mlm,sprc"), (std::vector<Stage>{Stage::Mlm, Stage::Sprc}));
  EXPECT_EQ(parse_stages("sprc"), (std::vector<Stage>{Stage::Sprc}));
  EXPECT_TRUE(parse_stages("").empty());
}

TEST(Stages, ParseRejectsBadLists) {
  EXPECT_THROW(parse_stages("sprc,mlm"), std::invalid_argument);
  EXPECT_THROW(parse_stages("mlm,mlm"), std::invalid_argument);
  EXPECT_THROW(parse_stages("mlm,cls"), std::invalid_argument);
  EXPECT_THROW(parse_stages("mlm,"), std::invalid_argument);
}

TEST(Pretrain, MlmLowersHeldOutPerplexity) {
  const auto docs = corpus(60, 5);
  const auto vocab = doc::build_vocab(docs);
  PretrainConfig cfg;
  cfg.epochs = 3;
  cfg.lr = 3e-3;
  cfg.val_fraction = 0.2;
  const auto r = run_mlm(docs, vocab, tiny_encoder(vocab.size()), cfg);
  ASSERT_EQ(r.report.epoch_loss.size(), 3u);
  EXPECT_LT(r.report.metric_value, r.report.initial_metric);
  EXPECT_LT(r.report.epoch_loss.back(), r.report.epoch_loss.front());
  EXPECT_LT(r.report.metric_value, 0.5 * static_cast<double>(vocab.size()));
}

TEST(Pretrain, SprcBeatsItsStartingAccuracy) {
  const auto docs = corpus(40, 6);
  const auto vocab = doc::build_vocab(docs);
  SprcOptions opt;
  opt.max_seq_len = 24;
  opt.max_train = 1500;
  const auto ds = build_sprc_dataset(docs, vocab, opt, 0.1, 0);
  PretrainConfig cfg;
  cfg.epochs = 3;
  cfg.lr = 3e-3;
  const auto r = run_sprc(ds, vocab, tiny_encoder(vocab.size()), cfg);
  EXPECT_GT(r.report.metric_value, r.report.initial_metric);
  EXPECT_GT(r.report.metric_value, 0.5);
}

TEST(Pretrain, RunsAreReproducible) {
  const auto docs = corpus(30, 7);
  const auto vocab = doc::build_vocab(docs);
  PretrainConfig cfg;
  cfg.epochs = 1;
  cfg.val_fraction = 0.2;
  const auto a = run_mlm(docs, vocab, tiny_encoder(vocab.size()), cfg);
  const auto b = run_mlm(docs, vocab, tiny_encoder(vocab.size()), cfg);
  EXPECT_EQ(a.report.epoch_loss, b.report.epoch_loss);
  EXPECT_EQ(a.report.metric_value, b.report.metric_value);
}

TEST(Pretrain, PipelineChainsStagesAndReportsEach) {
  const auto docs = corpus(30, 8);
  const auto vocab = doc::build_vocab(docs);
  PipelineConfig pc;
  pc.stages = {Stage::Mlm, Stage::Sprc};
  pc.mlm.epochs = 1;
  pc.mlm.val_fraction = 0.2;
  pc.sprc.epochs = 1;
  pc.sprc_options.max_train = 200;
  std::vector<std::string> seen;
  pc.on_stage = [&](const PretrainReport& r, enc::Encoder&) { seen.push_back(r.stage); };
  const auto out = run_pretraining(docs, vocab, tiny_encoder(0), pc, 1.0);
  ASSERT_TRUE(out.encoder.has_value());
  EXPECT_EQ(out.encoder->config().vocab_size, vocab.size());
  EXPECT_EQ(seen, (std::vector<std::string>{"mlm", "sprc"}));
  ASSERT_EQ(out.reports.size(), 2u);
  EXPECT_EQ(out.reports[1].train_examples, 200u);

  const auto j = to_json(out.reports[0], "encoder_mlm.ckpt");
  for (const char* k : {"stage", "epochs", "epoch_loss", "initial_metric_value", "final_metric_name", "final_metric_value",
                        "train_examples", "val_examples", "checkpoint"})
    EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j["final_metric_name"], "perplexity");

  PipelineConfig none;
  EXPECT_FALSE(run_pretraining(docs, vocab, tiny_encoder(0), none, 1.0).encoder.has_value());
}

TEST(Pretrain, InstallRejectsMismatchedEncoder) {
  const auto docs = corpus(10, 9);
  const auto vocab = doc::build_vocab(docs);
  extract::ModelConfig mc;
  mc.encoder = tiny_encoder(0);
  extract::Model m(mc, vocab, doc::TagSet(synth::invoice_entity_types()), 1);
  enc::EncoderConfig other = tiny_encoder(vocab.size());
  other.hidden_dim = 8;
  enc::Encoder e(other, 2);
  EXPECT_THROW(install_encoder(m, e), std::invalid_argument);

  enc::Encoder same(m.config().encoder, 3);
  install_encoder(m, same);
  const auto a = nn::parameters_of(m.encoder());
  const auto b = nn::parameters_of(same);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(std::ranges::equal(a[i]->value.values(), b[i]->value.values())) << a[i]->name;
}
