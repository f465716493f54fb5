#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "revsent/error.hpp"
#include "revsent/text.hpp"

namespace revsent {

inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";
inline constexpr std::string_view kContinuationPrefix = "##";

inline constexpr int kMaxSequenceLength = 512;
/// Words longer than this many code points become a single [UNK].
inline constexpr std::size_t kMaxWordChars = 100;

/// Subword vocabulary; a token's id is its zero-based line in the vocab file.
class Vocab {
public:
  Vocab() = default;

  explicit Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    ids_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (tokens_[i].empty()) throw DataError("empty vocabulary entry", i + 1);
      if (!ids_.emplace(tokens_[i], static_cast<int>(i)).second)
        throw DataError("duplicate vocabulary entry '" + tokens_[i] + "'", i + 1);
    }
    for (auto special : {kPadToken, kUnkToken, kClsToken, kSepToken})
      if (!contains(special)) throw DataError("vocabulary lacks special token " + std::string(special));
    pad_ = id(kPadToken);
    unk_ = id(kUnkToken);
    cls_ = id(kClsToken);
    sep_ = id(kSepToken);
  }

  std::size_t size() const noexcept { return tokens_.size(); }
  bool contains(std::string_view token) const { return ids_.find(std::string(token)) != ids_.end(); }

  /// Id of a token, or the [UNK] id when absent.
  int id(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    return it == ids_.end() ? unk_ : it->second;
  }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  int pad_id() const noexcept { return pad_; }
  int unk_id() const noexcept { return unk_; }
  int cls_id() const noexcept { return cls_; }
  int sep_id() const noexcept { return sep_; }

  std::string to_text() const {
    std::string out;
    for (const auto& t : tokens_) {
      out += t;
      out += '\n';
    }
    return out;
  }

private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
  int pad_ = 0, unk_ = 0, cls_ = 0, sep_ = 0;
};

/// One token per line; the common BERT vocab.txt layout.
inline Vocab load_vocab(const std::string& path) {
  try {
    return Vocab(text::read_lines(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

namespace detail {

// Byte offsets of UTF-8 code point starts, plus the end offset.
inline std::vector<std::size_t> codepoint_boundaries(std::string_view word) {
  std::vector<std::size_t> b;
  b.reserve(word.size() + 1);
  for (std::size_t i = 0; i < word.size(); ++i)
    if ((static_cast<unsigned char>(word[i]) & 0xC0) != 0x80) b.push_back(i);
  b.push_back(word.size());
  return b;
}

}  // namespace detail

/// Greedy longest-match-first segmentation of one word. Returns {"[UNK]"} when
/// some remainder has no matching piece.
inline std::vector<std::string> wordpiece_word(std::string_view word, const Vocab& vocab,
                                               std::size_t max_word_chars = kMaxWordChars) {
  const auto bounds = detail::codepoint_boundaries(word);
  const std::size_t n_chars = bounds.size() - 1;
  if (n_chars > max_word_chars) return {std::string(kUnkToken)};

  std::vector<std::string> pieces;
  std::size_t start = 0;  // index into bounds
  std::string candidate;
  while (start < n_chars) {
    std::size_t end = n_chars;
    bool found = false;
    for (; end > start; --end) {
      candidate.clear();
      if (start > 0) candidate += kContinuationPrefix;
      candidate.append(word.substr(bounds[start], bounds[end] - bounds[start]));
      if (vocab.contains(candidate)) {
        found = true;
        break;
      }
    }
    if (!found) return {std::string(kUnkToken)};
    pieces.push_back(candidate);
    start = end;
  }
  return pieces;
}

inline std::vector<std::string> wordpiece_tokenize(std::string_view text, const Vocab& vocab) {
  std::vector<std::string> out;
  for (const auto& word : text::split_whitespace(text)) {
    auto pieces = wordpiece_word(word, vocab);
    out.insert(out.end(), std::make_move_iterator(pieces.begin()), std::make_move_iterator(pieces.end()));
  }
  return out;
}

/// Fixed-length model input for a single sentence.
struct EncodedInput {
  std::vector<int> ids;
  std::vector<int> attention_mask;  // 1 for real tokens, 0 for [PAD]
  std::vector<int> segment_ids;     // all zero

  std::size_t length() const noexcept { return ids.size(); }
  bool operator==(const EncodedInput&) const = default;
};

inline void check_max_len(int max_len) {
  if (max_len < 2 || max_len > kMaxSequenceLength)
    throw ConfigError("max_len", "must lie in [2," + std::to_string(kMaxSequenceLength) + "], got " +
                                     std::to_string(max_len));
}

/// [CLS] pieces [SEP] [PAD]..., truncating pieces so the total fits max_len.
inline EncodedInput encode_pieces(const std::vector<std::string>& pieces, const Vocab& vocab, int max_len) {
  check_max_len(max_len);
  const auto len = static_cast<std::size_t>(max_len);
  const std::size_t kept = std::min(pieces.size(), len - 2);
  EncodedInput e;
  e.ids.reserve(len);
  e.ids.push_back(vocab.cls_id());
  for (std::size_t i = 0; i < kept; ++i) e.ids.push_back(vocab.id(pieces[i]));
  e.ids.push_back(vocab.sep_id());
  e.attention_mask.assign(e.ids.size(), 1);
  e.ids.resize(len, vocab.pad_id());
  e.attention_mask.resize(len, 0);
  e.segment_ids.assign(len, 0);
  return e;
}

inline EncodedInput encode(std::string_view text, const Vocab& vocab, int max_len) {
  return encode_pieces(wordpiece_tokenize(text, vocab), vocab, max_len);
}

/// Word-level vocabulary for training from scratch: the specials, the
/// `max_words` most frequent words seen at least `min_count` times, then every
/// single character as a leading piece and as a "##" continuation so any word
/// built from seen characters segments without [UNK].
inline Vocab build_vocab(const std::vector<std::string>& texts, std::size_t max_words = 8000,
                         std::size_t min_count = 1) {
  std::map<std::string, std::size_t> counts;
  std::map<std::string, bool> chars;
  for (const auto& t : texts)
    for (const auto& w : text::split_whitespace(t)) {
      ++counts[w];
      const auto b = detail::codepoint_boundaries(w);
      for (std::size_t i = 0; i + 1 < b.size(); ++i) chars[w.substr(b[i], b[i + 1] - b[i])] = true;
    }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> tokens = {std::string(kPadToken), std::string(kUnkToken), std::string(kClsToken),
                                     std::string(kSepToken)};
  std::unordered_map<std::string, bool> seen;
  for (const auto& t : tokens) seen[t] = true;
  auto add = [&](std::string t) {
    if (seen.emplace(t, true).second) tokens.push_back(std::move(t));
  };
  for (std::size_t i = 0; i < ranked.size() && i < max_words; ++i)
    if (ranked[i].second >= min_count) add(ranked[i].first);
  for (const auto& [c, _] : chars) add(c);
  for (const auto& [c, _] : chars) add(std::string(kContinuationPrefix) + c);
  return Vocab(std::move(tokens));
}

}  // namespace revsent
