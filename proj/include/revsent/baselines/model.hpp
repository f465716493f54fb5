#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "revsent/baselines/cart.hpp"
#include "revsent/baselines/features.hpp"
#include "revsent/baselines/knn.hpp"
#include "revsent/baselines/linear_svm.hpp"
#include "revsent/baselines/naive_bayes.hpp"
#include "revsent/labeling.hpp"
#include "revsent/text.hpp"

namespace revsent::baselines {

enum class BaselineKind { knn, nb, svm, tree, forest };

inline constexpr std::array<BaselineKind, 5> kAllBaselineKinds = {BaselineKind::knn, BaselineKind::svm,
                                                                  BaselineKind::nb, BaselineKind::tree,
                                                                  BaselineKind::forest};

inline std::string_view to_string(BaselineKind k) noexcept {
  switch (k) {
    case BaselineKind::knn: return "knn";
    case BaselineKind::nb: return "nb";
    case BaselineKind::svm: return "svm";
    case BaselineKind::tree: return "tree";
    case BaselineKind::forest: return "forest";
  }
  return "knn";
}

inline std::optional<BaselineKind> parse_baseline_kind(std::string_view s) {
  for (auto k : kAllBaselineKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

/// Every tunable of every baseline; only the block matching the kind is used.
struct BaselineHyperparams {
  KnnParams knn;
  NaiveBayesParams nb;
  SvmParams svm;
  TreeParams tree;
  ForestParams forest;
  int n_classes = kNumSentimentClasses;

  /// Points every seeded model at `seed`.
  void set_seed(std::uint64_t seed) {
    svm.seed = seed;
    tree.seed = seed;
    forest.seed = seed;
  }
};

struct BaselineModel {
  BaselineKind kind = BaselineKind::nb;
  BaselineHyperparams hyperparams;
  std::variant<Knn, NaiveBayes, LinearSvm, DecisionTree, RandomForest> model;

  std::size_t dim() const {
    return std::visit([](const auto& m) { return m.dim(); }, model);
  }
};

inline BaselineModel train_baseline(BaselineKind kind, const FeatureMatrix& features, const std::vector<int>& labels,
                                    const BaselineHyperparams& hp = {}) {
  BaselineModel m;
  m.kind = kind;
  m.hyperparams = hp;
  switch (kind) {
    case BaselineKind::knn: m.model = Knn::fit(features, labels, hp.n_classes, hp.knn); break;
    case BaselineKind::nb: m.model = NaiveBayes::fit(features, labels, hp.n_classes, hp.nb); break;
    case BaselineKind::svm: m.model = LinearSvm::fit(features, labels, hp.n_classes, hp.svm); break;
    case BaselineKind::tree: m.model = DecisionTree::fit(features, labels, hp.n_classes, hp.tree); break;
    case BaselineKind::forest: m.model = RandomForest::fit(features, labels, hp.n_classes, hp.forest); break;
  }
  return m;
}

/// Class id; ties resolve to the lowest class index.
inline int predict_class(const BaselineModel& model, const SparseVector& x) {
  return std::visit([&](const auto& m) { return m.predict(x); }, model.model);
}

inline Sentiment predict_baseline(const BaselineModel& model, const SparseVector& x) {
  return sentiment_from_class(predict_class(model, x));
}

inline std::vector<int> predict_all(const BaselineModel& model, const FeatureMatrix& x) {
  if (x.dim != model.dim())
    throw ShapeError("feature dimension " + std::to_string(x.dim) + " vs model " + std::to_string(model.dim()));
  std::vector<int> out;
  out.reserve(x.rows.size());
  for (const auto& r : x.rows) out.push_back(predict_class(model, r));
  return out;
}

/// Feature space plus classifier: what gets saved and reloaded.
struct BaselinePipeline {
  FeatureSpace features;
  BaselineModel model;

  int predict(const std::vector<std::string>& tokens) const {
    return predict_class(model, features.transform(tokens));
  }
};

// ---------------------------------------------------------------------------
// Serialization
//
// JSON document:
//   { "format": "revsent-baseline", "version": 1, "kind": "<knn|nb|svm|tree|forest>",
//     "hyperparams": {...}, "features": {"n_docs", "terms": [...], "idf": [...]},
//     "params": {kind-specific} }
// terms[i] owns column i. Non-finite numbers (log 0 priors) are written as null.

inline constexpr int kBaselineFormatVersion = 1;

namespace detail {

using nlohmann::json;

inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
inline double number(const json& j) {
  return j.is_null() ? -std::numeric_limits<double>::infinity() : j.get<double>();
}

inline json vec(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}
inline std::vector<double> vec(const json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(number(x));
  return v;
}

inline json sparse(const SparseVector& v) {
  json a = json::array();
  for (const auto& e : v) a.push_back(json::array({e.index, e.value}));
  return a;
}
inline SparseVector sparse(const json& j) {
  SparseVector v;
  for (const auto& e : j) v.push_back({e.at(0).get<std::uint32_t>(), e.at(1).get<double>()});
  return v;
}

inline json tree_json(const DecisionTree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes())
    nodes.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right},
                     {"p", n.prediction}, {"c", vec(n.class_counts)}});
  return nodes;
}
inline DecisionTree tree_from(const json& j, std::size_t dim, int n_classes) {
  std::vector<TreeNode> nodes;
  for (const auto& n : j) {
    TreeNode node;
    node.feature = n.at("f").get<std::int32_t>();
    node.threshold = n.at("t").get<double>();
    node.left = n.at("l").get<std::int32_t>();
    node.right = n.at("r").get<std::int32_t>();
    node.prediction = n.at("p").get<std::int32_t>();
    node.class_counts = vec(n.at("c"));
    nodes.push_back(std::move(node));
  }
  return DecisionTree::from_parts(dim, n_classes, std::move(nodes));
}

inline json hyper_json(const BaselineHyperparams& h) {
  return {{"n_classes", h.n_classes},
          {"knn", {{"k", h.knn.k}}},
          {"nb", {{"alpha", h.nb.alpha}}},
          {"svm", {{"passes", h.svm.passes}, {"step", h.svm.step}, {"lambda", h.svm.lambda}, {"seed", h.svm.seed}}},
          {"tree",
           {{"max_depth", h.tree.max_depth}, {"min_leaf", h.tree.min_leaf}, {"max_features", h.tree.max_features},
            {"seed", h.tree.seed}}},
          {"forest",
           {{"n_trees", h.forest.n_trees}, {"max_depth", h.forest.max_depth}, {"min_leaf", h.forest.min_leaf},
            {"max_features", h.forest.max_features}, {"subsample_features", h.forest.subsample_features},
            {"seed", h.forest.seed}}}};
}

inline BaselineHyperparams hyper_from(const json& j) {
  BaselineHyperparams h;
  h.n_classes = j.at("n_classes").get<int>();
  h.knn.k = j.at("knn").at("k").get<int>();
  h.nb.alpha = j.at("nb").at("alpha").get<double>();
  const auto& s = j.at("svm");
  h.svm = {s.at("passes").get<int>(), s.at("step").get<double>(), s.at("lambda").get<double>(),
           s.at("seed").get<std::uint64_t>()};
  const auto& t = j.at("tree");
  h.tree = {t.at("max_depth").get<int>(), t.at("min_leaf").get<int>(), t.at("max_features").get<std::size_t>(),
            t.at("seed").get<std::uint64_t>()};
  const auto& f = j.at("forest");
  h.forest = {f.at("n_trees").get<int>(), f.at("max_depth").get<int>(), f.at("min_leaf").get<int>(),
              f.at("max_features").get<std::size_t>(), f.at("subsample_features").get<bool>(),
              f.at("seed").get<std::uint64_t>()};
  return h;
}

}  // namespace detail

inline std::string baseline_to_json(const BaselinePipeline& p) {
  using nlohmann::json;
  json terms = json::array();
  std::vector<std::string> by_col(p.features.dim());
  for (const auto& [t, c] : p.features.vocabulary()) by_col[c] = t;
  for (auto& t : by_col) terms.push_back(t);

  json params;
  const auto n_classes = p.model.hyperparams.n_classes;
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Knn>) {
          json rows = json::array();
          for (const auto& r : m.rows()) rows.push_back(detail::sparse(r));
          params = {{"rows", rows}, {"labels", m.labels()}};
        } else if constexpr (std::is_same_v<M, NaiveBayes>) {
          json ll = json::array();
          for (const auto& r : m.log_likelihood()) ll.push_back(detail::vec(r));
          params = {{"log_prior", detail::vec(m.log_prior())}, {"log_likelihood", ll}};
        } else if constexpr (std::is_same_v<M, LinearSvm>) {
          json w = json::array();
          for (const auto& r : m.weights()) w.push_back(detail::vec(r));
          params = {{"weights", w}, {"bias", detail::vec(m.bias())}};
        } else if constexpr (std::is_same_v<M, DecisionTree>) {
          params = {{"nodes", detail::tree_json(m)}};
        } else {
          json trees = json::array();
          for (const auto& t : m.trees()) trees.push_back(detail::tree_json(t));
          params = {{"trees", trees}, {"tree_seeds", m.tree_seeds()}};
        }
      },
      p.model.model);

  json doc = {{"format", "revsent-baseline"},
              {"version", kBaselineFormatVersion},
              {"kind", std::string(to_string(p.model.kind))},
              {"n_classes", n_classes},
              {"hyperparams", detail::hyper_json(p.model.hyperparams)},
              {"features", {{"n_docs", p.features.n_docs()}, {"terms", terms}, {"idf", detail::vec(p.features.idf())}}},
              {"params", params}};
  return doc.dump();
}

inline BaselinePipeline baseline_from_json(std::string_view data) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(data);
  } catch (const json::exception& e) {
    throw DataError(std::string("baseline model: ") + e.what());
  }
  try {
    if (doc.at("format") != "revsent-baseline") throw DataError("baseline model: unknown format tag");
    if (doc.at("version").get<int>() != kBaselineFormatVersion)
      throw DataError("baseline model: unsupported version " + doc.at("version").dump());
    const auto kind = parse_baseline_kind(doc.at("kind").get<std::string>());
    if (!kind) throw DataError("baseline model: unknown kind " + doc.at("kind").dump());

    BaselinePipeline p;
    const auto& f = doc.at("features");
    std::map<std::string, std::uint32_t> vocab;
    const auto& terms = f.at("terms");
    for (std::size_t i = 0; i < terms.size(); ++i) vocab.emplace(terms[i].get<std::string>(), static_cast<std::uint32_t>(i));
    p.features = FeatureSpace::from_parts(std::move(vocab), detail::vec(f.at("idf")), f.at("n_docs").get<std::size_t>());

    p.model.kind = *kind;
    p.model.hyperparams = detail::hyper_from(doc.at("hyperparams"));
    const auto dim = p.features.dim();
    const int n_classes = p.model.hyperparams.n_classes;
    const auto& params = doc.at("params");
    switch (*kind) {
      case BaselineKind::knn: {
        std::vector<SparseVector> rows;
        for (const auto& r : params.at("rows")) rows.push_back(detail::sparse(r));
        p.model.model = Knn::from_parts(dim, p.model.hyperparams.knn.k, n_classes, std::move(rows),
                                        params.at("labels").get<std::vector<int>>());
        break;
      }
      case BaselineKind::nb: {
        std::vector<std::vector<double>> ll;
        for (const auto& r : params.at("log_likelihood")) ll.push_back(detail::vec(r));
        p.model.model = NaiveBayes::from_parts(dim, detail::vec(params.at("log_prior")), std::move(ll));
        break;
      }
      case BaselineKind::svm: {
        std::vector<std::vector<double>> w;
        for (const auto& r : params.at("weights")) w.push_back(detail::vec(r));
        p.model.model = LinearSvm::from_parts(dim, std::move(w), detail::vec(params.at("bias")));
        break;
      }
      case BaselineKind::tree:
        p.model.model = detail::tree_from(params.at("nodes"), dim, n_classes);
        break;
      case BaselineKind::forest: {
        std::vector<DecisionTree> trees;
        for (const auto& t : params.at("trees")) trees.push_back(detail::tree_from(t, dim, n_classes));
        p.model.model = RandomForest::from_parts(dim, n_classes, std::move(trees),
                                                 params.at("tree_seeds").get<std::vector<std::uint64_t>>());
        break;
      }
    }
    return p;
  } catch (const json::exception& e) {
    throw DataError(std::string("baseline model: ") + e.what());
  }
}

inline void save_baseline(const BaselinePipeline& p, const std::string& path) {
  text::write_file(path, baseline_to_json(p));
}

inline BaselinePipeline load_baseline(const std::string& path) { return baseline_from_json(text::read_file(path)); }

}  // namespace revsent::baselines
