#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "revsent/baselines/features.hpp"
#include "revsent/random.hpp"

namespace revsent::baselines {

struct TreeParams {
  int max_depth = 20;
  int min_leaf = 2;
  /// Features examined per node; 0 means all of them.
  std::size_t max_features = 0;
  std::uint64_t seed = 0;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x[feature] <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::int32_t prediction = 0;
  std::vector<double> class_counts;
};

namespace detail {

inline double gini(std::span<const double> counts, double total) {
  if (total <= 0.0) return 0.0;
  double s = 0.0;
  for (double c : counts) s += (c / total) * (c / total);
  return 1.0 - s;
}

}  // namespace detail

// CART classification tree with Gini impurity, grown on sparse rows. Only
// features that vary inside a node are split candidates; when max_features
// is set, a seeded uniform subset of those is examined.
class DecisionTree {
public:
  DecisionTree() = default;

  /// Grows a tree on the rows named by `samples` (repeats allowed, as in a bootstrap draw).
  static DecisionTree fit(const FeatureMatrix& x, const std::vector<int>& labels, int n_classes,
                          const TreeParams& params, std::vector<std::size_t> samples) {
    check_training_set(x, labels, n_classes);
    if (params.max_depth < 0) throw ConfigError("tree.max_depth", "must be nonnegative");
    if (params.min_leaf < 1) throw ConfigError("tree.min_leaf", "must be at least 1");
    DecisionTree t;
    t.dim_ = x.dim;
    t.n_classes_ = n_classes;
    Builder b{x, labels, n_classes, params, Rng(params.seed), t.nodes_};
    b.grow(std::move(samples), 0);
    return t;
  }

  static DecisionTree fit(const FeatureMatrix& x, const std::vector<int>& labels, int n_classes,
                          const TreeParams& params = {}) {
    std::vector<std::size_t> all(labels.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return fit(x, labels, n_classes, params, std::move(all));
  }

  int predict(const SparseVector& x) const {
    check_dimension(x, dim_);
    std::size_t n = 0;
    while (nodes_[n].feature >= 0) {
      const auto& node = nodes_[n];
      n = static_cast<std::size_t>(value_at(x, static_cast<std::uint32_t>(node.feature)) <= node.threshold ? node.left
                                                                                                           : node.right);
    }
    return nodes_[n].prediction;
  }

  std::size_t dim() const noexcept { return dim_; }
  int n_classes() const noexcept { return n_classes_; }
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }

  int depth() const {
    std::vector<std::pair<std::size_t, int>> stack{{0, 0}};
    int best = 0;
    while (!stack.empty()) {
      auto [n, d] = stack.back();
      stack.pop_back();
      best = std::max(best, d);
      if (nodes_[n].feature >= 0) {
        stack.push_back({static_cast<std::size_t>(nodes_[n].left), d + 1});
        stack.push_back({static_cast<std::size_t>(nodes_[n].right), d + 1});
      }
    }
    return best;
  }

  static DecisionTree from_parts(std::size_t dim, int n_classes, std::vector<TreeNode> nodes) {
    if (nodes.empty()) throw DataError("tree: no nodes");
    for (const auto& n : nodes)
      if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || static_cast<std::size_t>(n.left) >= nodes.size() ||
                             static_cast<std::size_t>(n.right) >= nodes.size()))
        throw DataError("tree: child index out of range");
    DecisionTree t;
    t.dim_ = dim;
    t.n_classes_ = n_classes;
    t.nodes_ = std::move(nodes);
    return t;
  }

private:
  struct Split {
    std::int32_t feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;
  };

  struct Entry {
    double value;
    int label;
  };

  struct Builder {
    const FeatureMatrix& x;
    const std::vector<int>& labels;
    int n_classes;
    TreeParams params;
    Rng rng;
    std::vector<TreeNode>& nodes;

    std::size_t grow(std::vector<std::size_t> samples, int depth) {
      const auto k = static_cast<std::size_t>(n_classes);
      std::vector<double> counts(k, 0.0);
      for (auto i : samples) counts[static_cast<std::size_t>(labels[i])] += 1.0;
      const auto id = nodes.size();
      nodes.push_back(TreeNode{});
      nodes[id].class_counts = counts;
      nodes[id].prediction = argmax(counts);

      const double total = static_cast<double>(samples.size());
      const double parent = detail::gini(counts, total);
      if (depth >= params.max_depth || parent == 0.0 ||
          samples.size() < 2 * static_cast<std::size_t>(params.min_leaf))
        return id;

      const auto split = best_split(samples, counts, parent);
      if (split.feature < 0) return id;

      std::vector<std::size_t> left, right;
      for (auto i : samples)
        (value_at(x.rows[i], static_cast<std::uint32_t>(split.feature)) <= split.threshold ? left : right).push_back(i);
      samples.clear();
      samples.shrink_to_fit();

      nodes[id].feature = split.feature;
      nodes[id].threshold = split.threshold;
      const auto l = grow(std::move(left), depth + 1);
      const auto r = grow(std::move(right), depth + 1);
      nodes[id].left = static_cast<std::int32_t>(l);
      nodes[id].right = static_cast<std::int32_t>(r);
      return id;
    }

    Split best_split(const std::vector<std::size_t>& samples, const std::vector<double>& counts, double parent) {
      // Nonzero values per feature; implicit zeros are accounted for by subtraction.
      std::unordered_map<std::uint32_t, std::vector<Entry>> by_feature;
      for (auto i : samples)
        for (const auto& e : x.rows[i])
          if (e.value != 0.0) by_feature[e.index].push_back({e.value, labels[i]});

      std::vector<std::uint32_t> candidates;
      candidates.reserve(by_feature.size());
      for (auto& [f, entries] : by_feature) {
        const bool has_zero = entries.size() < samples.size();
        bool varies = has_zero;
        for (std::size_t j = 1; !varies && j < entries.size(); ++j) varies = entries[j].value != entries[0].value;
        if (varies) candidates.push_back(f);
      }
      std::sort(candidates.begin(), candidates.end());
      if (params.max_features > 0 && params.max_features < candidates.size()) {
        // Partial Fisher-Yates: a uniform subset of size max_features.
        for (std::size_t j = 0; j < params.max_features; ++j) {
          const auto r = j + static_cast<std::size_t>(rng.uniform_index(candidates.size() - j));
          std::swap(candidates[j], candidates[r]);
        }
        candidates.resize(params.max_features);
        std::sort(candidates.begin(), candidates.end());
      }

      const auto k = static_cast<std::size_t>(n_classes);
      const double total = static_cast<double>(samples.size());
      const double min_leaf = static_cast<double>(params.min_leaf);
      Split best;
      best.impurity = parent - 1e-12;
      std::vector<double> left(k), zero_counts(k), right(k);
      for (auto f : candidates) {
        auto& entries = by_feature[f];
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.value < b.value; });
        zero_counts = counts;
        for (const auto& e : entries) zero_counts[static_cast<std::size_t>(e.label)] -= 1.0;
        double zero_total = total - static_cast<double>(entries.size());

        // Walk values in ascending order with the zero block inserted in place.
        std::fill(left.begin(), left.end(), 0.0);
        double left_total = 0.0;
        bool zeros_added = zero_total == 0.0;
        std::size_t j = 0;
        auto consider = [&](double lo, double hi) {
          if (left_total < min_leaf || total - left_total < min_leaf) return;
          for (std::size_t c = 0; c < k; ++c) right[c] = counts[c] - left[c];
          const double imp = (left_total * detail::gini(left, left_total) +
                              (total - left_total) * detail::gini(right, total - left_total)) / total;
          if (imp < best.impurity) {
            best.impurity = imp;
            best.feature = static_cast<std::int32_t>(f);
            best.threshold = lo + (hi - lo) / 2.0;
          }
        };
        while (j < entries.size() || !zeros_added) {
          double current;
          if (!zeros_added && (j == entries.size() || entries[j].value > 0.0)) {
            for (std::size_t c = 0; c < k; ++c) left[c] += zero_counts[c];
            left_total += zero_total;
            zeros_added = true;
            current = 0.0;
          } else {
            current = entries[j].value;
            while (j < entries.size() && entries[j].value == current) {
              left[static_cast<std::size_t>(entries[j].label)] += 1.0;
              left_total += 1.0;
              ++j;
            }
          }
          double next;
          if (!zeros_added && (j == entries.size() || entries[j].value > 0.0)) next = 0.0;
          else if (j < entries.size()) next = entries[j].value;
          else break;
          if (next == current) continue;
          consider(current, next);
        }
      }
      return best;
    }
  };

  std::size_t dim_ = 0;
  int n_classes_ = 3;
  std::vector<TreeNode> nodes_;
};

struct ForestParams {
  int n_trees = 50;
  int max_depth = 20;
  int min_leaf = 2;
  /// 0 selects floor(sqrt(dim)).
  std::size_t max_features = 0;
  /// false examines every feature at each node.
  bool subsample_features = true;
  std::uint64_t seed = 0;
};

/// Indices of a size-n draw with replacement.
inline std::vector<std::size_t> bootstrap_sample(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> s(n);
  for (auto& i : s) i = static_cast<std::size_t>(rng.uniform_index(n));
  return s;
}

// Bagged CART trees. Tree b draws its bootstrap sample from seed
// derive_seed(seed, b) and its feature subsets from derive_seed(that, 1).
class RandomForest {
public:
  RandomForest() = default;

  static std::uint64_t tree_seed(std::uint64_t seed, std::size_t b) { return derive_seed(seed, b); }

  static TreeParams tree_params(const ForestParams& p, std::size_t dim, std::size_t b) {
    TreeParams tp;
    tp.max_depth = p.max_depth;
    tp.min_leaf = p.min_leaf;
    if (p.subsample_features)
      tp.max_features = p.max_features > 0
                            ? p.max_features
                            : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(dim))));
    tp.seed = derive_seed(tree_seed(p.seed, b), 1);
    return tp;
  }

  static RandomForest fit(const FeatureMatrix& x, const std::vector<int>& labels, int n_classes,
                          const ForestParams& params = {}) {
    check_training_set(x, labels, n_classes);
    if (params.n_trees < 1) throw ConfigError("forest.n_trees", "must be at least 1");
    RandomForest f;
    f.dim_ = x.dim;
    f.n_classes_ = n_classes;
    for (int b = 0; b < params.n_trees; ++b) {
      const auto ub = static_cast<std::size_t>(b);
      const auto seed = tree_seed(params.seed, ub);
      f.tree_seeds_.push_back(seed);
      f.trees_.push_back(DecisionTree::fit(x, labels, n_classes, tree_params(params, x.dim, ub),
                                           bootstrap_sample(labels.size(), seed)));
    }
    return f;
  }

  std::vector<int> votes(const SparseVector& x) const {
    std::vector<int> v(static_cast<std::size_t>(n_classes_), 0);
    for (const auto& t : trees_) ++v[static_cast<std::size_t>(t.predict(x))];
    return v;
  }

  int predict(const SparseVector& x) const {
    check_dimension(x, dim_);
    return argmax(votes(x));
  }

  std::size_t dim() const noexcept { return dim_; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  const std::vector<std::uint64_t>& tree_seeds() const noexcept { return tree_seeds_; }

  static RandomForest from_parts(std::size_t dim, int n_classes, std::vector<DecisionTree> trees,
                                 std::vector<std::uint64_t> seeds) {
    if (trees.empty() || trees.size() != seeds.size()) throw DataError("forest: tree/seed count mismatch");
    RandomForest f;
    f.dim_ = dim;
    f.n_classes_ = n_classes;
    f.trees_ = std::move(trees);
    f.tree_seeds_ = std::move(seeds);
    return f;
  }

private:
  std::size_t dim_ = 0;
  int n_classes_ = 3;
  std::vector<DecisionTree> trees_;
  std::vector<std::uint64_t> tree_seeds_;
};

}  // namespace revsent::baselines
