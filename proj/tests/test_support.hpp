#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "revsent.hpp"

namespace revsent::testing {

// Small Indonesian-flavoured corpus whose lexicon label is known by
// construction: positive sentences carry only positive words, negative ones
// only negative words, neutral ones only filler.
struct SyntheticCorpus {
  std::vector<std::string> texts;
  std::vector<int> labels;
  Lexicon lexicon;
};

inline const std::vector<std::string> kPositiveWords = {"bagus", "mantap", "keren", "suka", "puas", "hebat"};
inline const std::vector<std::string> kNegativeWords = {"jelek", "buruk", "lambat", "kecewa", "rusak", "parah"};
inline const std::vector<std::string> kFillerWords = {"aplikasi", "ini", "saya", "untuk", "dan",
                                                      "yang", "sudah", "bisa", "update", "fitur"};

inline SyntheticCorpus make_lexicon_corpus(std::size_t n, std::uint64_t seed) {
  SyntheticCorpus c;
  Rng rng(seed);
  for (std::size_t i = 0; i < kPositiveWords.size(); ++i)
    c.lexicon.add(kPositiveWords[i], static_cast<std::int64_t>(1 + i % 5));
  for (std::size_t i = 0; i < kNegativeWords.size(); ++i)
    c.lexicon.add(kNegativeWords[i], -static_cast<std::int64_t>(1 + i % 5));

  auto pick = [&](const std::vector<std::string>& pool) { return pool[rng.uniform_index(pool.size())]; };
  for (std::size_t i = 0; i < n; ++i) {
    const int cls = static_cast<int>(i % 3);
    std::vector<std::string> words;
    const auto fillers = 2 + rng.uniform_index(5);
    for (std::size_t f = 0; f < fillers; ++f) words.push_back(pick(kFillerWords));
    const auto polar = 1 + rng.uniform_index(2);
    for (std::size_t p = 0; p < polar && cls != 1; ++p)
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng.uniform_index(words.size() + 1)),
                   pick(cls == 2 ? kPositiveWords : kNegativeWords));
    const auto text = text::join(words, " ");
    c.texts.push_back(text);
    c.labels.push_back(class_id(label_by_lexicon(text, c.lexicon)));
  }
  return c;
}

inline EncodedDataset encode_all(const std::vector<std::string>& texts, const std::vector<int>& labels,
                                 const Vocab& vocab, int max_len) {
  EncodedDataset d;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    d.inputs.push_back(encode(texts[i], vocab, max_len));
    d.labels.push_back(labels[i]);
  }
  return d;
}

inline std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("revsent_test_" + name)).string();
}

}  // namespace revsent::testing
