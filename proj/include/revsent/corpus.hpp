#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "revsent/csv.hpp"
#include "revsent/error.hpp"
#include "revsent/labeling.hpp"
#include "revsent/random.hpp"
#include "revsent/text.hpp"

namespace revsent {

/// One exported store review.
struct ReviewRecord {
  std::string review_id;
  std::string username;
  std::string user_image;
  std::string content;
  int score = 0;
  std::string review_date;

  bool operator==(const ReviewRecord&) const = default;
};

struct LabeledReview {
  ReviewRecord review;
  Sentiment label = Sentiment::neutral;

  bool operator==(const LabeledReview&) const = default;
};

enum class ReviewFormat { csv, jsonl };

/// Picks the format from the extension: ".jsonl"/".json" is JSONL, anything else CSV.
inline ReviewFormat format_from_path(std::string_view path) {
  if (path.ends_with(".jsonl") || path.ends_with(".json")) return ReviewFormat::jsonl;
  return ReviewFormat::csv;
}

inline const std::array<std::string, 6> kReviewColumns = {
    "review_id", "username", "user_image", "content", "score", "review_date"};

struct RejectedRow {
  std::size_t row = 0;  // 1-based data row (header excluded)
  std::string reason;
};

struct LoadOptions {
  bool dedup = false;   // drop later rows repeating a non-empty review_id
  bool strict = false;  // throw on the first rejected row instead of collecting it
};

template <typename Record>
struct LoadResult {
  std::vector<Record> records;
  std::vector<RejectedRow> rejected;
  std::size_t duplicates = 0;
  std::size_t rows = 0;
};

namespace detail {

// Column-addressed view over a parsed file, CSV or JSONL.
struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;  // aligned with columns; missing keys empty
  std::vector<std::string> row_errors;         // structural problem per row, empty when fine

  std::ptrdiff_t index_of(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<std::ptrdiff_t>(i);
    return -1;
  }
};

inline RawTable read_csv_table(const std::string& path) {
  auto records = csv::parse(text::read_file(path));
  RawTable t;
  if (records.empty()) throw DataError(path + ": empty file, no header");
  for (auto& h : records[0].fields) t.columns.emplace_back(text::trim(h));
  for (std::size_t i = 1; i < records.size(); ++i) {
    auto& fields = records[i].fields;
    std::string err;
    if (fields.size() != t.columns.size())
      err = "expected " + std::to_string(t.columns.size()) + " fields, found " + std::to_string(fields.size());
    fields.resize(t.columns.size());
    t.rows.push_back(std::move(fields));
    t.row_errors.push_back(std::move(err));
  }
  return t;
}

inline std::string json_field_to_string(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return {};
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  return v.dump();
}

inline RawTable read_jsonl_table(const std::string& path, std::span<const std::string> wanted) {
  RawTable t;
  t.columns.assign(wanted.begin(), wanted.end());
  std::set<std::string> seen_keys;
  for (const auto& raw : text::read_lines(path)) {
    if (text::trim(raw).empty()) continue;
    std::vector<std::string> row(t.columns.size());
    std::string err;
    try {
      const auto obj = nlohmann::json::parse(raw);
      if (!obj.is_object()) throw std::runtime_error("not a JSON object");
      for (auto it = obj.begin(); it != obj.end(); ++it) seen_keys.insert(it.key());
      for (std::size_t c = 0; c < t.columns.size(); ++c)
        if (auto it = obj.find(t.columns[c]); it != obj.end()) row[c] = json_field_to_string(*it);
      if (!obj.contains("content")) err = "missing key 'content'";
      else if (!obj.contains("score")) err = "missing key 'score'";
    } catch (const std::exception& e) {
      err = std::string("invalid JSON: ") + e.what();
    }
    t.rows.push_back(std::move(row));
    t.row_errors.push_back(std::move(err));
  }
  // Column presence for JSONL is judged over the whole file.
  if (!t.rows.empty()) {
    for (const char* required : {"content", "score"})
      if (!seen_keys.count(required)) t.columns[static_cast<std::size_t>(t.index_of(required))].clear();
  }
  return t;
}

inline std::optional<int> parse_score(std::string_view s) {
  s = text::trim(s);
  if (s.empty()) return std::nullopt;
  int value = 0;
  bool neg = false;
  std::size_t i = 0;
  if (s[0] == '-' || s[0] == '+') {
    neg = s[0] == '-';
    i = 1;
  }
  if (i == s.size()) return std::nullopt;
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') return std::nullopt;
    if (value > 1000000) return std::nullopt;
    value = value * 10 + (s[i] - '0');
  }
  return neg ? -value : value;
}

template <typename Record, typename Build>
LoadResult<Record> load_table(const RawTable& t, const std::string& path, const LoadOptions& opts,
                              Build&& build) {
  if (t.index_of("content") < 0) throw DataError(path + ": missing required column 'content'");
  if (t.index_of("score") < 0) throw DataError(path + ": missing required column 'score'");

  auto col = [&](const std::vector<std::string>& row, std::string_view name) -> std::string {
    const auto i = t.index_of(name);
    return i < 0 ? std::string{} : row[static_cast<std::size_t>(i)];
  };

  LoadResult<Record> result;
  std::unordered_set<std::string> ids;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ++result.rows;
    const auto& row = t.rows[r];
    std::string reason = t.row_errors[r];
    ReviewRecord rec;
    if (reason.empty()) {
      rec.review_id = col(row, "review_id");
      rec.username = col(row, "username");
      rec.user_image = col(row, "user_image");
      rec.content = col(row, "content");
      rec.review_date = col(row, "review_date");
      const auto score = parse_score(col(row, "score"));
      if (!score) reason = "score '" + col(row, "score") + "' is not an integer";
      else if (*score < 1 || *score > 5) reason = "score " + std::to_string(*score) + " outside [1,5]";
      else rec.score = *score;
      if (reason.empty() && text::trim(rec.content).empty()) reason = "empty content";
    }
    std::optional<Record> built;
    if (reason.empty()) {
      try {
        built = build(std::move(rec), [&](std::string_view name) { return col(row, name); });
      } catch (const DataError& e) {
        reason = e.what();
      }
    }
    if (!reason.empty()) {
      if (opts.strict) throw DataError(path + ": " + reason, r + 1);
      result.rejected.push_back({r + 1, std::move(reason)});
      continue;
    }
    if (opts.dedup) {
      const auto& id = [&]() -> const std::string& {
        if constexpr (std::is_same_v<Record, ReviewRecord>) return built->review_id;
        else return built->review.review_id;
      }();
      if (!id.empty() && !ids.insert(id).second) {
        ++result.duplicates;
        continue;
      }
    }
    result.records.push_back(std::move(*built));
  }
  return result;
}

inline RawTable read_table(const std::string& path, ReviewFormat format, bool with_label) {
  if (format == ReviewFormat::csv) return read_csv_table(path);
  std::vector<std::string> keys(kReviewColumns.begin(), kReviewColumns.end());
  if (with_label) keys.push_back("label");
  return read_jsonl_table(path, keys);
}

}  // namespace detail

/// Reads exported reviews. Rows violating a record invariant are collected in
/// `rejected` (or thrown with opts.strict); a missing content/score column is fatal.
inline LoadResult<ReviewRecord> load_reviews(const std::string& path, ReviewFormat format,
                                             const LoadOptions& opts = {}) {
  const auto table = detail::read_table(path, format, false);
  return detail::load_table<ReviewRecord>(table, path, opts,
                                          [](ReviewRecord rec, auto&&) { return rec; });
}

inline LoadResult<ReviewRecord> load_reviews(const std::string& path, const LoadOptions& opts = {}) {
  return load_reviews(path, format_from_path(path), opts);
}

/// Reads a labeled file: review columns plus `label` in negative|neutral|positive.
inline LoadResult<LabeledReview> load_labeled_reviews(const std::string& path, const LoadOptions& opts = {}) {
  const auto format = format_from_path(path);
  const auto table = detail::read_table(path, format, true);
  if (table.index_of("label") < 0) throw DataError(path + ": missing required column 'label'");
  return detail::load_table<LabeledReview>(table, path, opts, [](ReviewRecord rec, auto&& col) {
    const auto text_label = col("label");
    const auto label = parse_sentiment(text::trim(text_label));
    if (!label) throw DataError("unknown label '" + text_label + "'");
    return LabeledReview{std::move(rec), *label};
  });
}

inline csv::Row review_row(const ReviewRecord& r) {
  return {r.review_id, r.username, r.user_image, r.content, std::to_string(r.score), r.review_date};
}

inline std::string reviews_to_csv(const std::vector<ReviewRecord>& records) {
  csv::Row header(kReviewColumns.begin(), kReviewColumns.end());
  std::vector<csv::Row> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(review_row(r));
  return csv::write(header, rows);
}

inline std::string labeled_to_csv(const std::vector<LabeledReview>& records) {
  csv::Row header(kReviewColumns.begin(), kReviewColumns.end());
  header.emplace_back("label");
  std::vector<csv::Row> rows;
  rows.reserve(records.size());
  for (const auto& r : records) {
    auto row = review_row(r.review);
    row.emplace_back(to_string(r.label));
    rows.push_back(std::move(row));
  }
  return csv::write(header, rows);
}

// ---------------------------------------------------------------------------
// Text cleaning

/// Keyword/stopword file: one token per line, '#' starts a comment line.
inline std::vector<std::string> load_keywords(const std::string& path) {
  std::vector<std::string> words;
  const auto lines = text::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto w = text::trim(lines[i]);
    if (w.empty() || w.front() == '#') continue;
    if (text::split_whitespace(w).size() != 1)
      throw DataError(path + ": keyword '" + std::string(w) + "' is not a single token", i + 1);
    words.emplace_back(w);
  }
  return words;
}

namespace detail {

inline std::string strip_digits(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s)
    if (c < '0' || c > '9') out += c;
  return out;
}

}  // namespace detail

/// Precomputed keyword set for repeated preprocess calls.
class KeywordFilter {
public:
  KeywordFilter() = default;
  explicit KeywordFilter(const std::vector<std::string>& keywords) {
    for (const auto& k : keywords) {
      if (text::trim(k).empty()) throw DataError("empty keyword");
      if (text::split_whitespace(k).size() != 1)
        throw DataError("keyword '" + k + "' is not a single token");
      // Keywords go through the same normalization as the text they are matched against.
      auto norm = detail::strip_digits(text::to_lower(text::trim(k)));
      if (!norm.empty()) words_.insert(std::move(norm));
    }
  }

  bool contains(const std::string& token) const { return words_.count(token) != 0; }

private:
  std::unordered_set<std::string> words_;
};

/// Lowercases, deletes digit runs, drops keyword tokens and collapses whitespace.
/// No stemming or other morphology is applied.
inline std::string preprocess(std::string_view text, const KeywordFilter& keywords) {
  const auto cleaned = detail::strip_digits(text::to_lower(text));
  std::string out;
  for (const auto& token : text::split_whitespace(cleaned)) {
    if (keywords.contains(token)) continue;
    if (!out.empty()) out += ' ';
    out += token;
  }
  return out;
}

inline std::string preprocess(std::string_view text, const std::vector<std::string>& keywords) {
  return preprocess(text, KeywordFilter(keywords));
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitRatios {
  double train = 0.9;
  double validation = 0.05;
  double test = 0.05;
};

struct SplitSizes {
  std::size_t train = 0, validation = 0, test = 0;
  bool operator==(const SplitSizes&) const = default;
};

/// Largest-remainder apportionment of n items; leftover items go to the
/// parts with the largest fractional quota, ties resolved train, validation, test.
inline SplitSizes split_sizes(std::size_t n, const SplitRatios& r) {
  const std::array<double, 3> ratios = {r.train, r.validation, r.test};
  const std::array<const char*, 3> names = {"split.train", "split.validation", "split.test"};
  double sum = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    if (!(ratios[i] >= 0.0) || ratios[i] > 1.0)
      throw ConfigError(names[i], "ratio must lie in [0,1]");
    sum += ratios[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split.ratios", "ratios must sum to 1");
  if (n == 0) throw DataError("cannot split an empty dataset");

  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double quota = static_cast<double>(n) * ratios[i];
    sizes[i] = static_cast<std::size_t>(std::floor(quota));
    frac[i] = quota - std::floor(quota);
    assigned += sizes[i];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; assigned < n; k = (k + 1) % 3) {
    ++sizes[order[k]];
    ++assigned;
  }
  // Float noise can overshoot by an item when every quota is near-integral.
  while (assigned > n) {
    for (std::size_t i = 3; i-- > 0;)
      if (sizes[i] > 0 && assigned > n) {
        --sizes[i];
        --assigned;
      }
  }
  // Train is always mandatory; other parts are mandatory when their ratio is nonzero.
  for (std::size_t i = 0; i < 3; ++i)
    if (sizes[i] == 0 && (i == 0 || ratios[i] > 0.0))
      throw ConfigError(names[i], "ratio leaves this part empty for n=" + std::to_string(n));
  return {sizes[0], sizes[1], sizes[2]};
}

struct SplitIndices {
  std::vector<std::size_t> train, validation, test;
};

inline SplitIndices split_indices(std::size_t n, const SplitRatios& ratios, std::uint64_t seed) {
  const auto sizes = split_sizes(n, ratios);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(sizes.train));
  out.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(sizes.train),
                        order.begin() + static_cast<std::ptrdiff_t>(sizes.train + sizes.validation));
  out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(sizes.train + sizes.validation), order.end());
  return out;
}

template <typename T>
struct DatasetSplit {
  std::vector<T> train;
  std::vector<T> validation;
  std::vector<T> test;
  std::uint64_t seed = 0;
};

/// Seeded shuffle followed by a train/validation/test partition.
template <typename T>
DatasetSplit<T> split(const std::vector<T>& examples, const SplitRatios& ratios, std::uint64_t seed) {
  const auto idx = split_indices(examples.size(), ratios, seed);
  DatasetSplit<T> out;
  out.seed = seed;
  auto gather = [&](const std::vector<std::size_t>& ids, std::vector<T>& dst) {
    dst.reserve(ids.size());
    for (auto i : ids) dst.push_back(examples[i]);
  };
  gather(idx.train, out.train);
  gather(idx.validation, out.validation);
  gather(idx.test, out.test);
  return out;
}

}  // namespace revsent
