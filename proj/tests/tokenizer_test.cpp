#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "test_support.hpp"

namespace revsent {
namespace {

using testing::temp_path;

Vocab toy_vocab() { return Vocab({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "main", "##nya", "bagus"}); }

TEST(LoadVocab, LineIndexIds) {
  const auto path = temp_path("vocab.txt");
  text::write_file(path, "[PAD]\n[UNK]\n[CLS]\n[SEP]\nmain\n##nya\nbagus\n");
  const auto v = load_vocab(path);
  EXPECT_EQ(v.size(), 7u);
  EXPECT_EQ(v.id("[PAD]"), 0);
  EXPECT_EQ(v.id("bagus"), 6);
  EXPECT_EQ(v.token(5), "##nya");
}

TEST(LoadVocab, MissingSpecialOrDuplicateIsFatal) {
  const auto path = temp_path("nocls.txt");
  text::write_file(path, "[PAD]\n[UNK]\n[SEP]\nmain\n");
  EXPECT_THROW(load_vocab(path), DataError);
  EXPECT_THROW(Vocab({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "a", "a"}), DataError);
}

TEST(Wordpiece, GreedyLongestMatch) {
  const auto v = toy_vocab();
  EXPECT_EQ(wordpiece_tokenize("mainnya bagus", v), (std::vector<std::string>{"main", "##nya", "bagus"}));
  EXPECT_EQ(wordpiece_tokenize("zzz", v), (std::vector<std::string>{"[UNK]"}));
  EXPECT_EQ(wordpiece_tokenize("bagus", v), (std::vector<std::string>{"bagus"}));
  // A matched prefix with an unmatched remainder still collapses the whole word.
  EXPECT_EQ(wordpiece_tokenize("mainzz bagus", v), (std::vector<std::string>{"[UNK]", "bagus"}));
}

TEST(Wordpiece, MatchesReferenceOnRandomVocabularies) {
  Rng rng(77);
  auto random_string = [&](std::size_t max) {
    std::string s;
    for (std::size_t i = 0, n = 1 + rng.uniform_index(max); i < n; ++i) s += static_cast<char>('a' + rng.uniform_index(3));
    return s;
  };
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<std::string> tokens = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
    for (int t = 0; t < 12; ++t) {
      std::string tok = (rng.uniform_index(2) ? "##" : "") + random_string(3);
      if (std::find(tokens.begin(), tokens.end(), tok) == tokens.end()) tokens.push_back(tok);
    }
    const Vocab vocab(tokens);
    for (int w = 0; w < 20; ++w) {
      const auto word = random_string(8);
      ASSERT_EQ(wordpiece_word(word, vocab), testing::oracle_wordpiece(word, tokens)) << word;
    }
  }
}

TEST(Wordpiece, OverlongWordBecomesUnk) {
  Vocab v({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "a", "##a"});
  EXPECT_EQ(wordpiece_tokenize(std::string(100, 'a'), v).size(), 100u);
  EXPECT_EQ(wordpiece_tokenize(std::string(101, 'a'), v), (std::vector<std::string>{"[UNK]"}));
}

TEST(Wordpiece, SplitsOnCodePointBoundaries) {
  Vocab v({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "caf", "##\xC3\xA9"});
  EXPECT_EQ(wordpiece_tokenize("caf\xC3\xA9", v), (std::vector<std::string>{"caf", "##\xC3\xA9"}));
}

TEST(Wordpiece, JoiningPiecesReproducesInVocabWords) {
  const auto v = toy_vocab();
  for (const std::string w : {"main", "mainnya", "bagus"}) {
    std::string joined;
    for (const auto& p : wordpiece_word(w, v)) joined += p.starts_with("##") ? p.substr(2) : p;
    EXPECT_EQ(joined, w);
  }
}

TEST(Encode, FormatsShortInput) {
  const auto v = toy_vocab();
  const auto e = encode("bagus", v, 6);
  EXPECT_EQ(e.ids, (std::vector<int>{2, 6, 3, 0, 0, 0}));
  EXPECT_EQ(e.attention_mask, (std::vector<int>{1, 1, 1, 0, 0, 0}));
  EXPECT_EQ(e.segment_ids, (std::vector<int>(6, 0)));
}

TEST(Encode, EmptyText) {
  const auto e = encode("", toy_vocab(), 4);
  EXPECT_EQ(e.ids, (std::vector<int>{2, 3, 0, 0}));
  EXPECT_EQ(e.attention_mask, (std::vector<int>{1, 1, 0, 0}));
}

TEST(Encode, TruncatesLongInputKeepingClsAndSep) {
  const auto v = toy_vocab();
  std::string text;
  for (int i = 0; i < 600; ++i) text += "bagus ";
  const auto e = encode(text, v, 512);
  ASSERT_EQ(e.ids.size(), 512u);
  EXPECT_EQ(e.ids.front(), v.cls_id());
  EXPECT_EQ(e.ids.back(), v.sep_id());
  EXPECT_EQ(std::count(e.ids.begin(), e.ids.end(), v.sep_id()), 1);
  EXPECT_EQ(std::accumulate(e.attention_mask.begin(), e.attention_mask.end(), 0), 512);
}

TEST(Encode, MaxLenBounds) {
  EXPECT_THROW(encode("x", toy_vocab(), 1), ConfigError);
  EXPECT_THROW(encode("x", toy_vocab(), 513), ConfigError);
}

TEST(Encode, MaskInvariantsOnRandomTexts) {
  Rng rng(21);
  const auto v = toy_vocab();
  const std::vector<std::string> words = {"main", "mainnya", "bagus", "zz", "nya"};
  for (int iter = 0; iter < 300; ++iter) {
    std::string text;
    for (std::size_t i = 0, n = rng.uniform_index(30); i < n; ++i) text += words[rng.uniform_index(words.size())] + " ";
    const int max_len = 2 + static_cast<int>(rng.uniform_index(20));
    const auto pieces = wordpiece_tokenize(text, v);
    const auto e = encode(text, v, max_len);
    ASSERT_EQ(e.ids.size(), static_cast<std::size_t>(max_len));
    const auto mask_sum = std::accumulate(e.attention_mask.begin(), e.attention_mask.end(), std::size_t{0});
    EXPECT_EQ(mask_sum, 2 + std::min(pieces.size(), static_cast<std::size_t>(max_len - 2)));
    for (std::size_t i = 0; i < e.ids.size(); ++i) EXPECT_EQ(e.attention_mask[i] == 1, e.ids[i] != v.pad_id());
    EXPECT_EQ(e.ids[mask_sum - 1], v.sep_id());
    EXPECT_EQ(encode(text, v, max_len), e);
  }
}

TEST(BuildVocab, CoversTrainingWords) {
  const std::vector<std::string> texts = {"aplikasi bagus sekali", "aplikasi jelek"};
  const auto v = build_vocab(texts, 2);
  EXPECT_EQ(v.token(0), "[PAD]");
  EXPECT_TRUE(v.contains("aplikasi"));
  // Words beyond max_words still segment through character pieces.
  for (const auto& t : texts)
    for (const auto& p : wordpiece_tokenize(t, v)) EXPECT_NE(p, "[UNK]");
}

}  // namespace
}  // namespace revsent
