#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "revsent/error.hpp"
#include "revsent/text.hpp"

namespace revsent {

/// Three-way polarity; the integer value is the training class id.
enum class Sentiment : int { negative = 0, neutral = 1, positive = 2 };

inline constexpr int kNumSentimentClasses = 3;

inline constexpr int class_id(Sentiment s) noexcept { return static_cast<int>(s); }

inline Sentiment sentiment_from_class(int id) {
  if (id < 0 || id >= kNumSentimentClasses)
    throw DataError("class id " + std::to_string(id) + " outside [0,3)");
  return static_cast<Sentiment>(id);
}

inline std::string_view to_string(Sentiment s) noexcept {
  switch (s) {
    case Sentiment::negative: return "negative";
    case Sentiment::neutral: return "neutral";
    case Sentiment::positive: return "positive";
  }
  return "neutral";
}

inline std::optional<Sentiment> parse_sentiment(std::string_view s) {
  if (s == "negative") return Sentiment::negative;
  if (s == "neutral") return Sentiment::neutral;
  if (s == "positive") return Sentiment::positive;
  return std::nullopt;
}

/// 1-2 negative, 3 neutral, 4-5 positive.
inline Sentiment label_by_score(int score) {
  if (score < 1 || score > 5)
    throw DataError("score " + std::to_string(score) + " outside [1,5]");
  if (score <= 2) return Sentiment::negative;
  if (score == 3) return Sentiment::neutral;
  return Sentiment::positive;
}

// Word-level sentiment dictionary. Immutable once built; every weight is a
// nonzero integer whose sign is the word's polarity.
class Lexicon {
public:
  Lexicon() = default;

  /// Adds an entry; throws DataError on a duplicate word or zero weight.
  void add(std::string word, std::int64_t weight) {
    if (weight == 0) throw DataError("zero weight for lexicon word '" + word + "'");
    auto [it, inserted] = entries_.emplace(std::move(word), weight);
    if (!inserted) throw DataError("duplicate lexicon word '" + it->first + "'");
    (weight > 0 ? positive_count_ : negative_count_) += 1;
  }

  /// Weight of an exact lowercase word, 0 when absent.
  std::int64_t weight(std::string_view word) const {
    auto it = entries_.find(word);
    return it == entries_.end() ? 0 : it->second;
  }

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t positive_count() const noexcept { return positive_count_; }
  std::size_t negative_count() const noexcept { return negative_count_; }
  const std::map<std::string, std::int64_t, std::less<>>& entries() const noexcept { return entries_; }

private:
  std::map<std::string, std::int64_t, std::less<>> entries_;
  std::size_t positive_count_ = 0;
  std::size_t negative_count_ = 0;
};

namespace detail {

inline void load_lexicon_into(Lexicon& lex, const std::string& path) {
  const auto lines = text::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = text::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw DataError(path + ": expected 'word<TAB>weight'", i + 1);
    const auto word = text::trim(line.substr(0, tab));
    const auto weight_text = text::trim(line.substr(tab + 1));
    if (i == 0 && word == "word" && weight_text == "weight") continue;
    if (word.empty()) throw DataError(path + ": empty lexicon word", i + 1);
    std::int64_t weight = 0;
    try {
      std::size_t used = 0;
      weight = std::stoll(std::string(weight_text), &used);
      if (used != weight_text.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw DataError(path + ": weight '" + std::string(weight_text) + "' is not an integer", i + 1);
    }
    try {
      lex.add(text::to_lower(word), weight);
    } catch (const DataError& e) {
      throw DataError(path + ": " + e.what(), i + 1);
    }
  }
}

}  // namespace detail

/// Loads and merges one or more `word<TAB>weight` files (e.g. separate
/// positive and negative lists). A word present in two files is a duplicate.
inline Lexicon load_lexicon(const std::vector<std::string>& paths) {
  Lexicon lex;
  for (const auto& p : paths) detail::load_lexicon_into(lex, p);
  return lex;
}

inline Lexicon load_lexicon(const std::string& path) {
  return load_lexicon(std::vector<std::string>{path});
}

inline std::int64_t lexicon_score(const std::vector<std::string>& tokens, const Lexicon& lexicon) {
  std::int64_t total = 0;
  for (const auto& t : tokens) total += lexicon.weight(t);
  return total;
}

/// Sign of the summed weights of the whitespace tokens of preprocessed text.
inline Sentiment label_by_lexicon(std::string_view text, const Lexicon& lexicon) {
  const auto score = lexicon_score(text::split_whitespace(text), lexicon);
  if (score > 0) return Sentiment::positive;
  if (score < 0) return Sentiment::negative;
  return Sentiment::neutral;
}

/// Counts indexed by class id: {negative, neutral, positive}.
using ClassCounts = std::array<std::size_t, kNumSentimentClasses>;

inline ClassCounts class_distribution(const std::vector<Sentiment>& labels) {
  ClassCounts counts{};
  for (auto s : labels) ++counts[static_cast<std::size_t>(class_id(s))];
  return counts;
}

}  // namespace revsent
