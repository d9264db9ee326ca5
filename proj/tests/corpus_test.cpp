#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "gravamen/corpus/document.hpp"
#include "gravamen/corpus/folds.hpp"
#include "gravamen/corpus/tokenizer.hpp"
#include "gravamen/corpus/vocabulary.hpp"
#include "gravamen/error.hpp"

using namespace gravamen::corpus;
using Tokens = std::vector<std::string>;

TEST(Preprocess, MentionUrlEmoticon) {
  EXPECT_EQ(preprocess("@John LOVES http://x.co :-)"), (Tokens{"<USER>", "loves", "<URL>", ":-)"}));
}

TEST(Preprocess, HashtagsPreserved) {
  EXPECT_EQ(preprocess("#fail twice #fail"), (Tokens{"#fail", "twice", "#fail"}));
}

TEST(Preprocess, EmptyText) {
  EXPECT_TRUE(preprocess("").empty());
  EXPECT_TRUE(preprocess("   \t\n").empty());
}

TEST(Preprocess, PunctuationAndContractions) {
  EXPECT_EQ(preprocess("Don't do that!! @Acme_Help"), (Tokens{"don't", "do", "that", "!", "!", "<USER>"}));
  EXPECT_EQ(preprocess("great:) www.shop.com/x <3"), (Tokens{"great", ":)", "<URL>", "<3"}));
  EXPECT_EQ(preprocess("(year 1998)"), (Tokens{"(", "year", "1998", ")"}));
  EXPECT_EQ(preprocess("Café ÜBER"), (Tokens{"café", "Über"}));
}

TEST(Preprocess, EmoticonRecognizer) {
  for (auto e : {":)", ":-(", ";)", ":D", ":p", "=)", "(:", ":-/", "<3", ":'(", ":))"}) {
    EXPECT_TRUE(is_emoticon(e)) << e;
  }
  for (auto e : {"", ":", "abc", "8", ")"}) EXPECT_FALSE(is_emoticon(e)) << e;
}

// Rejoining placeholder-free token lists with spaces reproduces the same tokens.
TEST(Preprocess, IdempotentOnRandomText) {
  const std::string alphabet = "abcXYZ019 _'#:;-()[]!?.,=8pD/<3\t";
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_int_distribution<int> len(0, 40);
  for (int trial = 0; trial < 2000; ++trial) {
    std::string text;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) text += alphabet[pick(rng)];
    const Tokens first = preprocess(text);
    std::string joined;
    for (const auto& t : first) joined += t + " ";
    EXPECT_EQ(preprocess(joined), first) << "input: " << text;
  }
}

TEST(LoadCorpus, ParsesValidLines) {
  std::istringstream in(
      R"({"id":"a","text":"My order is late @Shop","binary":"complaint","severity":"disapproval","annotators":["disapproval","blame","disapproval"],"domain":"Retail"})"
      "\n"
      R"({"id":"b","text":"thanks!","binary":"non_complaint","severity":null,"annotators":null,"domain":null})"
      "\n");
  Corpus c = parse_corpus(in);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].severity_label, SeverityLabel::Disapproval);
  EXPECT_EQ(c[0].tokens.back(), "<USER>");
  ASSERT_TRUE(c[0].annotator_labels);
  EXPECT_EQ((*c[0].annotator_labels)[1], SeverityLabel::Blame);
  EXPECT_EQ(c[1].binary_label, BinaryLabel::NonComplaint);
  EXPECT_FALSE(c[1].severity_label);

  std::ostringstream out;
  write_corpus(c, out);
  std::istringstream back(out.str());
  Corpus again = parse_corpus(back);
  EXPECT_EQ(again[0].tokens, c[0].tokens);
  EXPECT_EQ(again[0].annotator_labels, c[0].annotator_labels);
}

namespace {
std::string error_of(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_corpus(in);
  } catch (const gravamen::DataError& e) {
    return e.what();
  }
  return "";
}
}  // namespace

TEST(LoadCorpus, ErrorsNameLineAndValue) {
  const std::string ok = R"({"id":"a","text":"x","severity":"blame"})" "\n";
  const std::string msg = error_of(ok + R"({"id":"b","text":"y","severity":"Rage"})" "\n");
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("Rage"), std::string::npos) << msg;
  EXPECT_NE(error_of(ok + ok).find("duplicate id"), std::string::npos);
  EXPECT_NE(error_of("{not json}\n").find("line 1"), std::string::npos);
  EXPECT_NE(error_of(R"({"id":"a","text":"x","annotators":["blame"]})").find("exactly 3"), std::string::npos);
  EXPECT_NE(error_of(R"({"id":"a","text":"x","extra":1})").find("unknown field"), std::string::npos);
  EXPECT_NE(error_of(R"({"id":"a","text":"x","binary":"complaint","severity":"no_complaint_severity"})")
                .find("requires binary"),
            std::string::npos);
  EXPECT_THROW(load_corpus("/nonexistent/corpus.jsonl"), gravamen::DataError);
}

TEST(ClassDistribution, HandCountedAllFourLabels) {
  std::string text;
  const char* labels[] = {"blame", "accusation", "blame", "no_explicit_reproach", "disapproval", "blame",
                          "disapproval", "no_explicit_reproach"};
  int i = 0;
  for (auto l : labels) {
    text += R"({"id":")" + std::to_string(i++) + R"(","text":"t","severity":")" + l + "\"}\n";
  }
  std::istringstream in(text);
  auto dist = class_distribution(parse_corpus(in), LabelKind::Severity);
  ASSERT_EQ(dist.classes.size(), 4u);
  EXPECT_EQ(dist.classes[0].count, 2u);  // no explicit reproach
  EXPECT_EQ(dist.classes[1].count, 2u);  // disapproval
  EXPECT_EQ(dist.classes[2].count, 1u);  // accusation
  EXPECT_EQ(dist.classes[3].count, 3u);  // blame
  EXPECT_DOUBLE_EQ(dist.classes[3].percent, 37.5);
}

TEST(ClassDistribution, PaperSeverityTable) {
  Corpus c;
  const std::size_t counts[] = {435, 378, 225, 197};
  for (std::size_t k = 0; k < 4; ++k) {
    for (std::size_t i = 0; i < counts[k]; ++i) {
      Document d;
      d.id = std::to_string(k) + "_" + std::to_string(i);
      d.severity_label = static_cast<SeverityLabel>(k);
      c.push_back(d);
    }
  }
  auto dist = class_distribution(c, LabelKind::Severity);
  const double expected[] = {35.2, 30.6, 18.2, 16.0};
  double total = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(dist.classes[k].count, counts[k]);
    EXPECT_NEAR(std::round(dist.classes[k].percent * 10) / 10, expected[k], 1e-9);
    total += dist.classes[k].percent;
  }
  EXPECT_NEAR(total, 100.0, 1e-9);
}

TEST(ClassDistribution, BinaryPaperCorpusAndSingleClass) {
  Corpus c(3449);
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i].id = std::to_string(i);
    c[i].binary_label = i < 1235 ? BinaryLabel::Complaint : BinaryLabel::NonComplaint;
  }
  auto dist = class_distribution(c, LabelKind::Binary);
  EXPECT_EQ(dist.classes[0].count, 1235u);
  EXPECT_NEAR(std::round(dist.classes[0].percent * 10) / 10, 35.8, 1e-9);

  Corpus single(5);
  for (auto& d : single) d.severity_label = SeverityLabel::Blame;
  EXPECT_DOUBLE_EQ(class_distribution(single, LabelKind::Severity).classes[3].percent, 100.0);
  single[2].severity_label.reset();
  EXPECT_THROW(class_distribution(single, LabelKind::Severity), gravamen::DataError);
}

namespace {
Document doc_of(const std::string& text) {
  Document d;
  d.tokens = preprocess(text);
  return d;
}
}  // namespace

TEST(Vocabulary, MinFrequencyThreshold) {
  Corpus c{doc_of("a a b")};
  Vocabulary v2 = build_vocab(c, 2);
  EXPECT_TRUE(v2.contains("a"));
  EXPECT_FALSE(v2.contains("b"));
  Vocabulary v1 = build_vocab(c, 1);
  EXPECT_TRUE(v1.contains("a"));
  EXPECT_TRUE(v1.contains("b"));
  EXPECT_EQ(v1.id("<PAD>"), kPadId);
  EXPECT_EQ(v1.id("<USER>"), kUserId);
  EXPECT_EQ(v1.id("<URL>"), kUrlId);
  EXPECT_EQ(v1.id("zzz"), kUnkId);
  EXPECT_THROW(build_vocab(c, 0), std::invalid_argument);
  EXPECT_THROW(build_vocab(Corpus{}, 1), std::invalid_argument);
}

TEST(Vocabulary, SizeMatchesIndependentCount) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> word(0, 60);
  std::uniform_int_distribution<int> len(1, 12);
  Corpus c;
  for (int i = 0; i < 100; ++i) {
    std::string text;
    for (int k = len(rng); k > 0; --k) text += "w" + std::to_string(word(rng)) + " ";
    c.push_back(doc_of(text));
  }
  for (std::size_t min_freq : {1, 3, 8}) {
    std::map<std::string, std::size_t> freq;
    for (const auto& d : c)
      for (const auto& t : d.tokens) ++freq[t];
    std::size_t expected = 4;
    for (const auto& [t, n] : freq) expected += n >= min_freq;
    Vocabulary v = build_vocab(c, min_freq);
    EXPECT_EQ(v.size(), expected);
    EXPECT_EQ(v.hash(), build_vocab(c, min_freq).hash());
  }
}

TEST(Encode, TruncatesAndPads) {
  std::string long_text;
  for (int i = 0; i < 60; ++i) long_text += "t" + std::to_string(i) + " ";
  Corpus c{doc_of(long_text)};
  Vocabulary v = build_vocab(c, 1);
  auto seq = encode(c[0], v, 50);
  EXPECT_EQ(seq.length, 50u);
  ASSERT_EQ(seq.ids.size(), 50u);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(seq.ids[i], v.id("t" + std::to_string(i)));

  auto shortseq = encode(doc_of("t1 t2 unseen"), v, 50);
  EXPECT_EQ(shortseq.length, 3u);
  EXPECT_EQ(shortseq.ids[2], kUnkId);
  for (std::size_t i = 3; i < 50; ++i) EXPECT_EQ(shortseq.ids[i], kPadId);
  EXPECT_THROW(encode(c[0], v, 0), std::invalid_argument);
}

TEST(Encode, PadNeverPrecedesRealToken) {
  std::mt19937_64 rng(5);
  Vocabulary v = Vocabulary::from_tokens(Tokens{"a", "b", "c"});
  for (int trial = 0; trial < 200; ++trial) {
    Tokens toks(rng() % 12);
    for (auto& t : toks) t = std::string(1, static_cast<char>('a' + rng() % 4));
    auto seq = encode(toks, v, 1 + rng() % 10);
    bool seen_pad = false;
    for (std::size_t i = 0; i < seq.ids.size(); ++i) {
      if (seq.ids[i] == kPadId) seen_pad = true;
      else EXPECT_FALSE(seen_pad);
      EXPECT_EQ(seq.ids[i] == kPadId, i >= seq.length);
    }
  }
}

TEST(Folds, PaperSizedCorpusSplitsEvenly) {
  std::vector<int> keys(1235);
  for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = i < 435 ? 0 : i < 813 ? 1 : i < 1038 ? 2 : 3;
  FoldPlan plan = make_folds(keys, 10, 3, 7);
  std::map<std::size_t, int> sizes;
  for (const auto& f : plan.outer_test) ++sizes[f.size()];
  EXPECT_EQ(sizes[124], 5);
  EXPECT_EQ(sizes[123], 5);
  EXPECT_EQ(plan, make_folds(keys, 10, 3, 7));
  EXPECT_NE(plan.outer_test, make_folds(keys, 10, 3, 8).outer_test);
}

TEST(Folds, StratifiedWithinOneOfProportional) {
  std::vector<int> keys;
  const int counts[] = {23, 17, 11, 9};
  for (int k = 0; k < 4; ++k) keys.insert(keys.end(), counts[k], k);
  FoldPlan plan = make_folds(keys, 5, 3, 3);
  for (const auto& fold : plan.outer_test) {
    int per_class[4] = {};
    for (auto i : fold) ++per_class[keys[i]];
    for (int k = 0; k < 4; ++k) EXPECT_LE(std::abs(per_class[k] - counts[k] / 5.0), 1.0);
  }
}

TEST(Folds, RejectsTinyClasses) {
  std::vector<int> keys(30, 0);
  keys[0] = keys[1] = 1;
  EXPECT_THROW(make_folds(keys, 10, 3, 1), std::invalid_argument);
}

TEST(Folds, JsonRoundTrip) {
  std::vector<int> keys(40);
  for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = static_cast<int>(i % 2);
  FoldPlan plan = make_folds(keys, 4, 3, 11);
  EXPECT_EQ(fold_plan_from_json(fold_plan_to_json(plan)), plan);
  EXPECT_THROW(fold_plan_from_json("{}"), gravamen::DataError);
}
