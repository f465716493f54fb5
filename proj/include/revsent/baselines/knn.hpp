#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "revsent/baselines/features.hpp"

namespace revsent::baselines {

struct KnnParams {
  int k = 5;
};

// Cosine-distance k-nearest-neighbour vote over every stored training row.
class Knn {
public:
  Knn() = default;

  static Knn fit(const FeatureMatrix& x, const std::vector<int>& labels, int n_classes, const KnnParams& params = {}) {
    check_training_set(x, labels, n_classes);
    if (params.k < 1) throw ConfigError("knn.k", "must be at least 1");
    Knn m;
    m.dim_ = x.dim;
    m.k_ = params.k;
    m.n_classes_ = n_classes;
    m.rows_ = x.rows;
    m.labels_ = labels;
    m.norms_.reserve(m.rows_.size());
    for (const auto& r : m.rows_) m.norms_.push_back(l2_norm(r));
    return m;
  }

  /// 1 - cos(a, b); a zero vector is at distance 1 from everything.
  static double cosine_distance(const SparseVector& a, double norm_a, const SparseVector& b, double norm_b) {
    if (norm_a == 0.0 || norm_b == 0.0) return 1.0;
    return 1.0 - dot(a, b) / (norm_a * norm_b);
  }

  /// Stored-row indices of the k nearest rows, nearest first; equal distances keep storage order.
  std::vector<std::size_t> neighbours(const SparseVector& x) const {
    check_dimension(x, dim_);
    const double nx = l2_norm(x);
    std::vector<double> dist(rows_.size());
    // Distances are snapped to a 1e-12 grid so neighbours tied in exact
    // arithmetic stay tied under rounding noise (e.g. after rescaling).
    for (std::size_t i = 0; i < rows_.size(); ++i)
      dist[i] = std::round(cosine_distance(x, nx, rows_[i], norms_[i]) * 1e12);
    std::vector<std::size_t> order(rows_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto k = std::min(order.size(), static_cast<std::size_t>(k_));
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); });
    order.resize(k);
    return order;
  }

  int predict(const SparseVector& x) const {
    std::vector<int> votes(static_cast<std::size_t>(n_classes_), 0);
    for (auto i : neighbours(x)) ++votes[static_cast<std::size_t>(labels_[i])];
    return argmax(votes);
  }

  std::size_t dim() const noexcept { return dim_; }
  int k() const noexcept { return k_; }
  int n_classes() const noexcept { return n_classes_; }
  const std::vector<SparseVector>& rows() const noexcept { return rows_; }
  const std::vector<int>& labels() const noexcept { return labels_; }

  static Knn from_parts(std::size_t dim, int k, int n_classes, std::vector<SparseVector> rows, std::vector<int> labels) {
    FeatureMatrix x{dim, std::move(rows)};
    return fit(x, labels, n_classes, KnnParams{k});
  }

private:
  std::size_t dim_ = 0;
  int k_ = 5;
  int n_classes_ = 3;
  std::vector<SparseVector> rows_;
  std::vector<double> norms_;
  std::vector<int> labels_;
};

}  // namespace revsent::baselines
