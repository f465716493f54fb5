#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "revsent/error.hpp"

namespace revsent::baselines {

struct SparseEntry {
  std::uint32_t index = 0;
  double value = 0.0;
  bool operator==(const SparseEntry&) const = default;
};

/// Entries sorted by strictly increasing index.
using SparseVector = std::vector<SparseEntry>;

/// Rows of one feature space, `dim` columns wide.
struct FeatureMatrix {
  std::size_t dim = 0;
  std::vector<SparseVector> rows;
};

inline double dot(const SparseVector& a, const SparseVector& b) {
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].index == b[j].index) s += a[i++].value * b[j++].value;
    else if (a[i].index < b[j].index) ++i;
    else ++j;
  }
  return s;
}

inline double dot(const std::vector<double>& dense, const SparseVector& x) {
  double s = 0.0;
  for (const auto& e : x) s += dense[e.index] * e.value;
  return s;
}

inline double l2_norm(const SparseVector& x) {
  double s = 0.0;
  for (const auto& e : x) s += e.value * e.value;
  return std::sqrt(s);
}

/// Value at `index`, 0 when not stored.
inline double value_at(const SparseVector& x, std::uint32_t index) {
  std::size_t lo = 0, hi = x.size();
  while (lo < hi) {
    const auto mid = (lo + hi) / 2;
    if (x[mid].index < index) lo = mid + 1;
    else hi = mid;
  }
  return (lo < x.size() && x[lo].index == index) ? x[lo].value : 0.0;
}

inline void check_dimension(const SparseVector& x, std::size_t dim) {
  if (!x.empty() && x.back().index >= dim)
    throw ShapeError("feature index " + std::to_string(x.back().index) + " outside model dimension " +
                     std::to_string(dim));
}

// TF-IDF vocabulary: raw term counts scaled by the smoothed
// idf(t) = ln((1 + n_docs) / (1 + df(t))) + 1, rows L2-normalized.
class FeatureSpace {
public:
  FeatureSpace() = default;

  static FeatureSpace fit(const std::vector<std::vector<std::string>>& documents) {
    if (documents.empty()) throw DataError("tfidf: no documents");
    std::map<std::string, std::size_t> df;
    for (const auto& doc : documents) {
      std::map<std::string, bool> seen;
      for (const auto& t : doc)
        if (seen.emplace(t, true).second) ++df[t];
    }
    if (df.empty()) throw DataError("tfidf: every document is empty");
    FeatureSpace fs;
    fs.n_docs_ = documents.size();
    const double n = static_cast<double>(fs.n_docs_);
    for (const auto& [term, count] : df) {
      fs.vocabulary_.emplace(term, static_cast<std::uint32_t>(fs.idf_.size()));
      fs.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
    }
    return fs;
  }

  /// Out-of-vocabulary terms are ignored.
  SparseVector transform(const std::vector<std::string>& doc) const {
    std::map<std::uint32_t, double> counts;
    for (const auto& t : doc)
      if (auto it = vocabulary_.find(t); it != vocabulary_.end()) counts[it->second] += 1.0;
    SparseVector v;
    v.reserve(counts.size());
    double norm2 = 0.0;
    for (const auto& [col, tf] : counts) {
      const double w = tf * idf_[col];
      v.push_back({col, w});
      norm2 += w * w;
    }
    if (norm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (auto& e : v) e.value *= inv;
    }
    return v;
  }

  FeatureMatrix transform_all(const std::vector<std::vector<std::string>>& docs) const {
    FeatureMatrix m;
    m.dim = dim();
    m.rows.reserve(docs.size());
    for (const auto& d : docs) m.rows.push_back(transform(d));
    return m;
  }

  std::size_t dim() const noexcept { return idf_.size(); }
  std::size_t n_docs() const noexcept { return n_docs_; }
  const std::map<std::string, std::uint32_t>& vocabulary() const noexcept { return vocabulary_; }
  const std::vector<double>& idf() const noexcept { return idf_; }

  /// idf of a term, or nullopt-like -1 when the term is unknown.
  double idf(const std::string& term) const {
    auto it = vocabulary_.find(term);
    return it == vocabulary_.end() ? -1.0 : idf_[it->second];
  }

  static FeatureSpace from_parts(std::map<std::string, std::uint32_t> vocabulary, std::vector<double> idf,
                                 std::size_t n_docs) {
    if (vocabulary.size() != idf.size()) throw DataError("feature space: vocabulary/idf size mismatch");
    for (const auto& [t, col] : vocabulary)
      if (col >= idf.size()) throw DataError("feature space: column out of range for '" + t + "'");
    FeatureSpace fs;
    fs.vocabulary_ = std::move(vocabulary);
    fs.idf_ = std::move(idf);
    fs.n_docs_ = n_docs;
    return fs;
  }

private:
  std::map<std::string, std::uint32_t> vocabulary_;
  std::vector<double> idf_;
  std::size_t n_docs_ = 0;
};

inline std::pair<FeatureSpace, FeatureMatrix> tfidf_fit_transform(
    const std::vector<std::vector<std::string>>& documents) {
  auto fs = FeatureSpace::fit(documents);
  auto rows = fs.transform_all(documents);
  return {std::move(fs), std::move(rows)};
}

/// Index of the largest score; the lowest index wins ties.
template <typename Scores>
int argmax(const Scores& scores) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(scores.size()); ++c)
    if (scores[static_cast<std::size_t>(c)] > scores[static_cast<std::size_t>(best)]) best = c;
  return best;
}

inline void check_training_set(const FeatureMatrix& x, const std::vector<int>& labels, int n_classes) {
  if (x.rows.size() != labels.size())
    throw DataError("training set: " + std::to_string(x.rows.size()) + " rows vs " + std::to_string(labels.size()) +
                    " labels");
  std::vector<bool> present(static_cast<std::size_t>(n_classes), false);
  for (int y : labels) {
    if (y < 0 || y >= n_classes) throw DataError("label " + std::to_string(y) + " outside class range");
    present[static_cast<std::size_t>(y)] = true;
  }
  std::size_t distinct = 0;
  for (bool p : present) distinct += p;
  if (distinct < 2) throw DataError("training set has fewer than two classes");
  for (const auto& r : x.rows) check_dimension(r, x.dim);
}

}  // namespace revsent::baselines
