#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "test_util.hpp"
#include "vrdie/docmodel/corpus.hpp"
#include "vrdie/docmodel/labels.hpp"
#include "vrdie/docmodel/merge.hpp"
#include "vrdie/docmodel/tokenize.hpp"
#include "vrdie/docmodel/vocab.hpp"

using namespace vrdie::doc;
using testutil::box;
using testutil::page_of;
using vrdie::nn::Rng;

namespace {

std::vector<std::string> surfaces(const TokenSequence& s) {
  std::vector<std::string> out;
  for (const auto& t : s.tokens) out.push_back(t.surface);
  return out;
}

Document random_document(Rng& rng, int idx) {
  static const std::vector<std::string> words = {"Total", "Amount:", "$35.00", "Acme", "Corp.", "(Ltd)", "Ünïcode", "a-b", "x"};
  Document d;
  d.doc_id = "doc" + std::to_string(idx);
  d.template_id = "T" + std::to_string(rng.below(3));
  const int pages = 1 + static_cast<int>(rng.below(2));
  for (int p = 0; p < pages; ++p) {
    Page pg;
    pg.page_no = p;
    pg.width = 600;
    pg.height = 800;
    const int n = static_cast<int>(rng.below(6));
    for (int b = 0; b < n; ++b) {
      std::string text;
      const int nw = 1 + static_cast<int>(rng.below(3));
      for (int w = 0; w < nw; ++w) text += (w ? " " : "") + rng.pick(words);
      TextBox tb = box(b, text, rng.uniform(0, 300), rng.uniform(0, 400), 0, 0, rng.bernoulli(0.5) ? "Arial" : "Times",
                       rng.bernoulli(0.5) ? 10.0 : 12.5);
      tb.x1 = tb.x0 + 1 + rng.uniform(0, 200);
      tb.y1 = tb.y0 + 1 + rng.uniform(0, 30);
      if (rng.bernoulli(0.5)) tb.spans.push_back({"E" + std::to_string(rng.below(2)), 0, text.size() / 2 + 1});
      pg.boxes.push_back(tb);
    }
    d.pages.push_back(pg);
  }
  return d;
}

}  // namespace

// ---------------------------------------------------------------- corpus

TEST(Corpus, SingleRecordFieldsVerbatim) {
  const std::string line =
      R"({"doc_id":"d1","template_id":"T0","pages":[{"page_no":0,"width":100,"height":50,"boxes":[)"
      R"({"box_id":0,"text":"Total","x0":1,"y0":2,"x1":30,"y1":12,"font_name":"Arial","font_size":10},)"
      R"({"box_id":1,"text":"$35.00","x0":40,"y0":2,"x1":70,"y1":12,"font_name":"Arial","font_size":10,)"
      R"("spans":[{"entity_type":"Amount","char_start":1,"char_end":6}]}]}]})";
  auto docs = parse_corpus_string(line + "\n");
  ASSERT_EQ(docs.size(), 1u);
  const auto& p = docs[0].pages.at(0);
  ASSERT_EQ(p.boxes.size(), 2u);
  EXPECT_EQ(p.boxes[0].text, "Total");
  EXPECT_EQ(p.boxes[1].x0, 40);
  EXPECT_EQ(p.boxes[1].spans.at(0), (EntitySpan{"Amount", 1, 6}));
  EXPECT_EQ(parse_corpus_string(serialize_corpus(docs)), docs);
}

TEST(Corpus, SpanPastEndNamesTheBox) {
  const std::string line =
      R"({"doc_id":"d7","template_id":"T0","pages":[{"page_no":0,"width":100,"height":50,"boxes":[)"
      R"({"box_id":4,"text":"abc","x0":1,"y0":2,"x1":30,"y1":12,"font_name":"Arial","font_size":10,)"
      R"("spans":[{"entity_type":"X","char_start":0,"char_end":9}]}]}]})";
  try {
    parse_corpus_string(line);
    FAIL();
  } catch (const CorpusError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("d7"), std::string::npos);
    EXPECT_NE(msg.find("box 4"), std::string::npos);
    EXPECT_NE(msg.find("line 1"), std::string::npos);
  }
}

TEST(Corpus, MalformedRecordReportsLineNumber) {
  Rng rng(1);
  std::string text = serialize_document(random_document(rng, 0)) + "\n{not json\n";
  try {
    parse_corpus_string(text);
    FAIL();
  } catch (const CorpusError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(parse_corpus_string(R"({"doc_id":"x","pages":[]})"), CorpusError);
}

TEST(Corpus, PreservesFileOrder) {
  Rng rng(2);
  std::vector<Document> docs;
  for (int i = 0; i < 3; ++i) docs.push_back(random_document(rng, i));
  const auto path = std::filesystem::temp_directory_path() / "vrdie_corpus_order.jsonl";
  write_corpus(path, docs);
  auto back = parse_corpus(path);
  ASSERT_EQ(back.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(back[static_cast<std::size_t>(i)].doc_id, "doc" + std::to_string(i));
  std::filesystem::remove(path);
}

TEST(Corpus, ClipsCoordinatesToPage) {
  const std::string line =
      R"({"doc_id":"d","template_id":"T","pages":[{"page_no":0,"width":100,"height":50,"boxes":[)"
      R"({"box_id":0,"text":"x","x0":-5,"y0":2,"x1":130,"y1":60,"font_name":"A","font_size":10}]}]})";
  auto d = parse_corpus_string(line).at(0);
  const auto& b = d.pages[0].boxes[0];
  EXPECT_EQ(b.x0, 0);
  EXPECT_EQ(b.x1, 100);
  EXPECT_EQ(b.y1, 50);
}

TEST(Corpus, RejectsInvariantViolations) {
  auto rec = [](const std::string& boxes) {
    return R"({"doc_id":"d","template_id":"T","pages":[{"page_no":0,"width":100,"height":50,"boxes":[)" + boxes + "]}]}";
  };
  const std::string b0 = R"({"box_id":0,"text":"abcdef","x0":1,"y0":1,"x1":20,"y1":10,"font_name":"A","font_size":10)";
  EXPECT_THROW(parse_corpus_string(rec(b0 + "}," + b0 + "}")), CorpusError);  // duplicate id
  EXPECT_THROW(parse_corpus_string(rec(
                   b0 + R"(,"spans":[{"entity_type":"A","char_start":0,"char_end":3},{"entity_type":"B","char_start":2,"char_end":4}]})")),
               CorpusError);  // overlapping spans
  EXPECT_THROW(parse_corpus_string(rec(R"({"box_id":0,"text":"a","x0":5,"y0":1,"x1":5,"y1":10,"font_name":"A","font_size":10})")),
               CorpusError);  // degenerate box
}

TEST(Corpus, RoundTripProperty) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    std::vector<Document> docs;
    for (int i = 0; i < 3; ++i) docs.push_back(random_document(rng, i));
    ASSERT_EQ(parse_corpus_string(serialize_corpus(docs)), docs) << "seed " << seed;
  }
}

// ---------------------------------------------------------------- merging

TEST(Merge, CloseBoxesOnALineMerge) {
  Page p = page_of({box(0, "Total", 0, 0, 40, 10), box(1, "Amount", 41, 0, 90, 10)});
  Page m = merge_close_boxes(p, 2.0);
  ASSERT_EQ(m.boxes.size(), 1u);
  EXPECT_EQ(m.boxes[0].text, "Total Amount");
  EXPECT_EQ(m.boxes[0].x0, 0);
  EXPECT_EQ(m.boxes[0].y0, 0);
  EXPECT_EQ(m.boxes[0].x1, 90);
  EXPECT_EQ(m.boxes[0].y1, 10);
  EXPECT_EQ(merge_close_boxes(p, 0.5), p);
}

TEST(Merge, SingleBoxPageUnchanged) {
  Page p = page_of({box(7, "only", 3, 3, 30, 13)});
  EXPECT_EQ(merge_close_boxes(p, 1.0), p);
}

TEST(Merge, ZeroEpsMergesOnlyTouching) {
  Page p = page_of({box(0, "a", 0, 0, 10, 10), box(1, "b", 10, 0, 20, 10), box(2, "c", 20.5, 0, 30, 10)});
  Page m = merge_close_boxes(p, 0.0);
  ASSERT_EQ(m.boxes.size(), 2u);
  EXPECT_EQ(m.boxes[0].text, "a b");
  EXPECT_EQ(m.boxes[1].text, "c");
  EXPECT_EQ(m.boxes[1].box_id, 1);
}

TEST(Merge, SpansReoffsetAndFontFromLargerBox) {
  TextBox a = box(5, "Acme", 0, 0, 20, 10, "Small", 8);
  TextBox b = box(2, "Corp", 21, 0, 80, 12, "Big", 12);
  b.spans.push_back({"Seller", 0, 4});
  Page m = merge_close_boxes(page_of({b, a}), 1.0);
  ASSERT_EQ(m.boxes.size(), 1u);
  EXPECT_EQ(m.boxes[0].text, "Acme Corp");
  EXPECT_EQ(m.boxes[0].spans.at(0), (EntitySpan{"Seller", 5, 9}));
  EXPECT_EQ(m.boxes[0].font_name, "Big");
  EXPECT_EQ(m.boxes[0].box_id, 0);
}

TEST(Merge, TransitiveAndVertical) {
  Page p = page_of({box(0, "top", 0, 0, 30, 10), box(1, "mid", 0, 10.5, 30, 20), box(2, "low", 5, 20.8, 25, 30),
                    box(3, "far", 200, 0, 230, 10)});
  Page m = merge_close_boxes(p, 1.0);
  ASSERT_EQ(m.boxes.size(), 2u);
  EXPECT_EQ(m.boxes[0].text, "top mid low");
  EXPECT_EQ(m.boxes[0].y1, 30);
  EXPECT_EQ(m.boxes[1].text, "far");
}

TEST(Merge, IdempotentProperty) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    std::vector<TextBox> boxes;
    const int n = 1 + static_cast<int>(rng.below(10));
    for (int i = 0; i < n; ++i) {
      const double x = std::floor(rng.uniform(0, 100)), y = std::floor(rng.uniform(0, 60));
      boxes.push_back(box(i, "w" + std::to_string(i), x, y, x + 5 + std::floor(rng.uniform(0, 30)), y + 5 + std::floor(rng.uniform(0, 8))));
    }
    const double eps = rng.uniform(0, 3);
    Page once = merge_close_boxes(page_of(boxes), eps);
    ASSERT_EQ(merge_close_boxes(once, eps), once) << "seed " << seed;
  }
}

// ---------------------------------------------------------------- tokenizer

TEST(Tokenize, SplitsPunctuation) {
  auto s = tokenize("Total: $35.00");
  EXPECT_EQ(surfaces(s), (std::vector<std::string>{"total", ":", "$", "35.00"}));
  EXPECT_EQ(s.tokens[0].char_start, 0u);
  EXPECT_EQ(s.tokens[0].char_end, 5u);
  EXPECT_EQ(s.tokens[1].char_start, 5u);
  EXPECT_EQ(s.tokens[2].char_start, 7u);
  EXPECT_EQ(s.tokens[3].char_start, 8u);
  EXPECT_EQ(s.tokens[3].char_end, 13u);
}

TEST(Tokenize, EmptyAndSingle) {
  EXPECT_TRUE(tokenize("").tokens.empty());
  EXPECT_TRUE(tokenize("   ").tokens.empty());
  auto s = tokenize("abc");
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.tokens[0], (Token{"abc", 0, 3}));
}

TEST(Tokenize, ReconstructsOriginalText) {
  const std::string alphabet = "aZ9 .,:$-()\té";
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    Rng rng(seed);
    std::string text;
    const int n = static_cast<int>(rng.below(25));
    for (int i = 0; i < n; ++i) text += alphabet[rng.below(alphabet.size())];
    auto s = tokenize(text);
    std::string rebuilt;
    std::size_t pos = 0;
    for (const auto& t : s.tokens) {
      ASSERT_GE(t.char_start, pos);
      rebuilt += text.substr(pos, t.char_start - pos);
      const std::string orig = text.substr(t.char_start, t.char_end - t.char_start);
      ASSERT_EQ(detail::ascii_lower(orig), t.surface);
      rebuilt += orig;
      pos = t.char_end;
    }
    rebuilt += text.substr(pos);
    ASSERT_EQ(rebuilt, text) << "seed " << seed;
    for (std::size_t i = pos; i < text.size(); ++i) ASSERT_TRUE(detail::is_space(static_cast<unsigned char>(text[i])));
  }
}

// ---------------------------------------------------------------- labels

TEST(Labels, FullCoverSpan) {
  TagSet tags({"SellerName"});
  TextBox b = box(0, "Acme Corp Ltd", 0, 0, 10, 10);
  b.spans.push_back({"SellerName", 0, 13});
  auto s = project_labels(b, tokenize(b.text), tags);
  EXPECT_EQ(s.bio_tags, (std::vector<int>{1, 2, 2}));
}

TEST(Labels, NoSpansAllO) {
  TagSet tags({"A"});
  TextBox b = box(0, "one two", 0, 0, 10, 10);
  EXPECT_EQ(project_labels(b, tokenize(b.text), tags).bio_tags, (std::vector<int>{0, 0}));
}

TEST(Labels, OffsetOverlapRule) {
  TagSet tags({"Amount"});
  TextBox b = box(0, "Total : $ 35.00", 0, 0, 10, 10);
  b.spans.push_back({"Amount", 10, 15});
  EXPECT_EQ(project_labels(b, tokenize(b.text), tags).bio_tags, (std::vector<int>{0, 0, 0, 1}));
}

TEST(Labels, OverlappingSpansRejected) {
  TagSet tags({"A", "B"});
  TextBox b = box(0, "abc def", 0, 0, 10, 10);
  b.spans = {{"A", 0, 5}, {"B", 4, 7}};
  EXPECT_THROW(project_labels(b, tokenize(b.text), tags), ValidationError);
}

TEST(Labels, TagIdLayout) {
  TagSet tags({"X", "Y"});
  EXPECT_EQ(tags.num_tags(), 5u);
  EXPECT_EQ(tags.tag_name(0), "O");
  EXPECT_EQ(tags.tag_name(3), "B-Y");
  EXPECT_EQ(tags.tag_name(4), "I-Y");
}

TEST(Labels, DecodeAndRepair) {
  TagSet tags({"Amount"});
  auto toks = tokenize("12 34 56");
  auto spans = decode_spans({1, 2, 0}, toks, tags);
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0], (EntitySpan{"Amount", 0, 5}));
  spans = decode_spans({0, 2, 0}, toks, tags);
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0], (EntitySpan{"Amount", 3, 5}));
  EXPECT_TRUE(decode_spans({0, 0, 0}, toks, tags).empty());
  EXPECT_EQ(repair_bio({2, 2, 0, 4, 2}), (std::vector<int>{1, 2, 0, 3, 1}));
}

TEST(Labels, ProjectionIsValidBioProperty) {
  TagSet tags({"A", "B", "C"});
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    std::string text;
    const int n = 1 + static_cast<int>(rng.below(8));
    for (int i = 0; i < n; ++i) text += (i ? " " : "") + std::string(1 + rng.below(4), static_cast<char>('a' + rng.below(3)));
    TextBox b = box(0, text, 0, 0, 10, 10);
    std::size_t pos = 0;
    while (pos < text.size() && rng.bernoulli(0.7)) {
      const std::size_t s = pos + rng.below(text.size() - pos);
      const std::size_t e = s + 1 + rng.below(text.size() - s);
      b.spans.push_back({tags.types()[rng.below(3)], s, e});
      pos = e;
    }
    // spans splitting a token would put two spans on it; skip those draws
    TokenSequence out;
    try {
      out = project_labels(b, tokenize(text), tags);
    } catch (const ValidationError&) {
      continue;
    }
    ASSERT_EQ(out.bio_tags.size(), out.tokens.size());
    ASSERT_TRUE(is_valid_bio(out.bio_tags)) << "seed " << seed;
    std::vector<int> noisy = out.bio_tags;
    for (int& t : noisy) t = static_cast<int>(rng.below(7));
    ASSERT_TRUE(is_valid_bio(repair_bio(noisy)));
  }
}

// ---------------------------------------------------------------- vocabulary

TEST(Vocab, FrequencyThresholdAndOrder) {
  Document d;
  d.doc_id = "d";
  d.template_id = "T";
  Page p = page_of({box(0, "total total total total total zzqx", 0, 0, 10, 10), box(1, "beta alpha beta alpha", 0, 20, 10, 30)});
  d.pages.push_back(p);
  Vocabulary v = build_vocab({d}, 2);
  EXPECT_TRUE(v.contains("total"));
  EXPECT_EQ(v.id("zzqx"), kUnk);
  EXPECT_EQ(v.id("total"), kNumReserved);
  EXPECT_LT(v.id("alpha"), v.id("beta"));
  Vocabulary all = build_vocab({d}, 1);
  EXPECT_TRUE(all.contains("zzqx"));
  EXPECT_EQ(all.size(), static_cast<std::size_t>(kNumReserved) + 4);
}

TEST(Vocab, EmptyCorpusHasOnlyReserved) {
  Vocabulary v = build_vocab({}, 2);
  EXPECT_EQ(v.size(), static_cast<std::size_t>(kNumReserved));
  EXPECT_EQ(v.token(kMask), "[MASK]");
  EXPECT_THROW(build_vocab({}, 0), std::invalid_argument);
}

TEST(Vocab, DigitsShareShapeEntries) {
  EXPECT_EQ(vocab_key("$35.00"), "$00.00");
  Vocabulary v({"00.00"});
  EXPECT_EQ(v.id("12.50"), v.id("99.99"));
  EXPECT_NE(v.id("12.50"), kUnk);
}

TEST(Vocab, CorpusTokensNeverHitReservedIds) {
  Rng rng(4);
  std::vector<Document> docs;
  for (int i = 0; i < 10; ++i) docs.push_back(random_document(rng, i));
  Vocabulary v = build_vocab(docs, 1);
  for (const auto& d : docs)
    for (const auto& p : d.pages)
      for (const auto& b : p.boxes)
        for (const auto& t : tokenize(b.text).tokens) EXPECT_GE(v.id(t.surface), kNumReserved);
}
