#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "test_support.hpp"

namespace revsent::baselines {
namespace {

void expect_partition(const std::vector<std::vector<std::size_t>>& folds, std::size_t n) {
  std::vector<int> seen(n, 0);
  std::size_t lo = n, hi = 0;
  for (const auto& f : folds) {
    lo = std::min(lo, f.size());
    hi = std::max(hi, f.size());
    for (auto i : f) {
      ASSERT_LT(i, n);
      ++seen[i];
    }
  }
  EXPECT_LE(hi - lo, 1u);
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(KFold, TenFoldsOfTen) {
  const auto folds = kfold_assign(100, 10, 1);
  ASSERT_EQ(folds.size(), 10u);
  for (const auto& f : folds) EXPECT_EQ(f.size(), 10u);
  expect_partition(folds, 100);
}

TEST(KFold, PartitionLawsOnRandomSizes) {
  Rng rng(8);
  for (int iter = 0; iter < 200; ++iter) {
    const std::size_t k = 2 + rng.uniform_index(11);
    const std::size_t n = k + rng.uniform_index(300);
    const auto seed = rng.next();
    const auto folds = kfold_assign(n, k, seed);
    ASSERT_EQ(folds.size(), k);
    expect_partition(folds, n);
    EXPECT_EQ(kfold_assign(n, k, seed), folds);
  }
}

TEST(KFold, BadFoldCounts) {
  EXPECT_THROW(kfold_assign(10, 1, 0), ConfigError);
  EXPECT_THROW(kfold_assign(5, 6, 0), ConfigError);
}

TEST(KFoldCv, MeanIsArithmeticMeanAndFoldsCover) {
  const auto corpus = testing::make_lexicon_corpus(120, 10);
  std::vector<Document> docs;
  for (const auto& t : corpus.texts) docs.push_back(text::split_whitespace(t));
  const auto r = kfold_cv(BaselineKind::nb, docs, corpus.labels, 10, 5);
  ASSERT_EQ(r.fold_accuracies.size(), 10u);
  EXPECT_EQ(r.mean_accuracy, std::accumulate(r.fold_accuracies.begin(), r.fold_accuracies.end(), 0.0) / 10.0);
  expect_partition(r.folds, 120);
  for (double a : r.fold_accuracies) {
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
  EXPECT_EQ(kfold_cv(BaselineKind::nb, docs, corpus.labels, 10, 5).fold_accuracies, r.fold_accuracies);
}

TEST(KFoldCv, AbsentClassWarnsButRuns) {
  // Only one item of class 1: the fold holding it trains without class 1.
  std::vector<Document> docs = {{"a"}, {"a"}, {"a"}, {"b"}, {"b"}, {"b"}, {"c"}};
  std::vector<int> labels = {0, 0, 0, 2, 2, 2, 1};
  const auto r = kfold_cv(BaselineKind::nb, docs, labels, 3, 1);
  EXPECT_EQ(r.fold_accuracies.size(), 3u);
  EXPECT_FALSE(r.warnings.empty());
}

}  // namespace
}  // namespace revsent::baselines
