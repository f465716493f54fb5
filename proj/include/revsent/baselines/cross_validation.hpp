#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "revsent/baselines/model.hpp"
#include "revsent/eval.hpp"
#include "revsent/random.hpp"

namespace revsent::baselines {

using Document = std::vector<std::string>;

/// Seeded shuffle of 0..n-1 cut into k contiguous folds; the first n % k
/// folds hold one extra item.
inline std::vector<std::vector<std::size_t>> kfold_assign(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("folds", "k must be at least 2");
  if (k > n) throw ConfigError("folds", "k=" + std::to_string(k) + " exceeds item count " + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                    order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return folds;
}

struct KFoldResult {
  std::vector<double> fold_accuracies;
  double mean_accuracy = 0.0;
  std::vector<std::vector<std::size_t>> folds;  // held-out indices per fold
  std::vector<std::string> warnings;
};

/// Trains the TF-IDF space and the model on k-1 folds, scores the held-out
/// fold, and repeats for every fold.
inline KFoldResult kfold_cv(BaselineKind kind, const std::vector<Document>& documents, const std::vector<int>& labels,
                            std::size_t k, std::uint64_t seed, const BaselineHyperparams& hp = {}) {
  if (documents.size() != labels.size()) throw DataError("kfold: documents and labels differ in length");
  KFoldResult result;
  result.folds = kfold_assign(documents.size(), k, seed);
  std::vector<std::size_t> fold_of(documents.size());
  for (std::size_t f = 0; f < k; ++f)
    for (auto i : result.folds[f]) fold_of[i] = f;

  for (std::size_t f = 0; f < k; ++f) {
    std::vector<Document> train_docs, test_docs;
    std::vector<int> train_labels, test_labels;
    for (std::size_t i = 0; i < documents.size(); ++i) {
      if (fold_of[i] == f) {
        test_docs.push_back(documents[i]);
        test_labels.push_back(labels[i]);
      } else {
        train_docs.push_back(documents[i]);
        train_labels.push_back(labels[i]);
      }
    }
    std::vector<bool> present(static_cast<std::size_t>(hp.n_classes), false);
    for (int y : train_labels)
      if (y >= 0 && y < hp.n_classes) present[static_cast<std::size_t>(y)] = true;
    for (int c = 0; c < hp.n_classes; ++c)
      if (!present[static_cast<std::size_t>(c)])
        result.warnings.push_back("fold " + std::to_string(f) + ": class " + std::to_string(c) +
                                  " absent from training folds");

    const auto [space, train_x] = tfidf_fit_transform(train_docs);
    const auto model = train_baseline(kind, train_x, train_labels, hp);
    const auto predictions = predict_all(model, space.transform_all(test_docs));
    result.fold_accuracies.push_back(accuracy(predictions, test_labels));
  }
  result.mean_accuracy = std::accumulate(result.fold_accuracies.begin(), result.fold_accuracies.end(), 0.0) /
                         static_cast<double>(k);
  return result;
}

}  // namespace revsent::baselines
