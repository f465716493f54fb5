#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "oracles.hpp"
#include "test_support.hpp"

namespace revsent::baselines {
namespace {

struct Toy {
  FeatureSpace space;
  FeatureMatrix x;
  std::vector<int> labels;
};

Toy lexicon_toy(std::size_t n, std::uint64_t seed) {
  const auto corpus = testing::make_lexicon_corpus(n, seed);
  std::vector<Document> docs;
  for (const auto& t : corpus.texts) docs.push_back(text::split_whitespace(t));
  auto [fs, x] = tfidf_fit_transform(docs);
  return {std::move(fs), std::move(x), corpus.labels};
}

double train_accuracy(const BaselineModel& m, const Toy& t) { return accuracy(predict_all(m, t.x), t.labels); }

TEST(NaiveBayes, TwoDocumentExample) {
  const auto [fs, x] = tfidf_fit_transform({{"bagus"}, {"jelek"}});
  const auto nb = NaiveBayes::fit(x, {2, 0}, 3);
  EXPECT_EQ(nb.predict(fs.transform({"bagus"})), 2);
  EXPECT_EQ(nb.predict(fs.transform({"jelek"})), 0);
  // Absent class has zero posterior.
  EXPECT_EQ(nb.posterior(fs.transform({"bagus"}))[1], 0.0);
}

TEST(NaiveBayes, PosteriorMatchesBruteForceOnSmallCorpora) {
  Rng rng(99);
  const std::vector<std::string> terms = {"t0", "t1", "t2", "t3", "t4", "t5"};
  for (int iter = 0; iter < 300; ++iter) {
    const std::size_t n_docs = 2 + rng.uniform_index(7);
    const std::size_t n_terms = 1 + rng.uniform_index(6);
    std::vector<Document> docs(n_docs);
    std::vector<int> labels(n_docs);
    for (std::size_t i = 0; i < n_docs; ++i) {
      for (std::size_t t = 0, len = 1 + rng.uniform_index(5); t < len; ++t)
        docs[i].push_back(terms[rng.uniform_index(n_terms)]);
      labels[i] = static_cast<int>(i < 2 ? i : rng.uniform_index(3));
    }
    const auto [fs, x] = tfidf_fit_transform(docs);
    const double alpha = iter % 2 ? 1.0 : 0.5;
    const auto nb = NaiveBayes::fit(x, labels, 3, {alpha});
    Document query;
    for (std::size_t t = 0, len = rng.uniform_index(5); t < len; ++t) query.push_back(terms[rng.uniform_index(n_terms)]);
    const auto q = fs.transform(query);
    const auto got = nb.posterior(q);
    const auto expected = testing::oracle_nb_posterior(x, labels, 3, alpha, q);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(got[c], expected[c], 1e-9);
  }
}

TEST(Knn, OneNeighbourReturnsNearestLabel) {
  FeatureMatrix x{2, {{{0, 1.0}}, {{1, 1.0}}, {{0, 1.0}, {1, 0.1}}}};
  const auto m = Knn::fit(x, {0, 2, 1}, 3, {1});
  EXPECT_EQ(m.predict({{1, 5.0}}), 2);
  EXPECT_EQ(m.predict({{0, 1.0}, {1, 0.11}}), 1);
  for (std::size_t i = 0; i < x.rows.size(); ++i) EXPECT_EQ(m.predict(x.rows[i]), (std::vector<int>{0, 2, 1})[i]);
}

TEST(Knn, InvariantToUniformPositiveScaling) {
  Rng rng(5);
  for (int iter = 0; iter < 100; ++iter) {
    FeatureMatrix x{6, {}};
    std::vector<int> labels;
    for (int i = 0; i < 20; ++i) {
      SparseVector r;
      for (std::uint32_t j = 0; j < 6; ++j)
        if (rng.uniform_index(2)) r.push_back({j, rng.uniform01() + 0.01});
      x.rows.push_back(r);
      labels.push_back(i < 3 ? i : static_cast<int>(rng.uniform_index(3)));
    }
    const double scale = iter % 2 ? 8.0 : 0.1 + 10.0 * rng.uniform01();
    FeatureMatrix scaled = x;
    for (auto& r : scaled.rows)
      for (auto& e : r) e.value *= scale;
    const auto a = Knn::fit(x, labels, 3, {5});
    const auto b = Knn::fit(scaled, labels, 3, {5});
    for (int q = 0; q < 10; ++q) {
      SparseVector query;
      for (std::uint32_t j = 0; j < 6; ++j)
        if (rng.uniform_index(2)) query.push_back({j, rng.uniform01()});
      EXPECT_EQ(a.predict(query), b.predict(query)) << "scale " << scale << " iter " << iter;
    }
  }
}

TEST(DecisionTree, SeparableOneFeatureDataFitsExactly) {
  FeatureMatrix x{1, {}};
  std::vector<int> labels;
  for (int i = 0; i < 30; ++i) {
    x.rows.push_back(SparseVector{{0, static_cast<double>(i) / 30.0 + 0.01}});
    labels.push_back(i < 10 ? 0 : i < 20 ? 1 : 2);
  }
  BaselineHyperparams hp;
  hp.tree.min_leaf = 1;
  const auto m = train_baseline(BaselineKind::tree, x, labels, hp);
  EXPECT_EQ(train_accuracy(m, {FeatureSpace{}, x, labels}), 1.0);
}

TEST(DecisionTree, DepthRespectsLimit) {
  const auto t = lexicon_toy(150, 2);
  for (int depth : {0, 1, 3}) {
    TreeParams p;
    p.max_depth = depth;
    EXPECT_LE(DecisionTree::fit(t.x, t.labels, 3, p).depth(), depth);
  }
}

TEST(RandomForest, PredictionIsMajorityOfStoredTrees) {
  const auto t = lexicon_toy(150, 8);
  ForestParams p;
  p.n_trees = 9;
  p.seed = 17;
  const auto f = RandomForest::fit(t.x, t.labels, 3, p);
  ASSERT_EQ(f.trees().size(), 9u);
  for (const auto& row : t.x.rows) {
    std::map<int, int> tally;
    for (const auto& tree : f.trees()) ++tally[tree.predict(row)];
    int best = -1, best_votes = -1;
    for (const auto& [cls, v] : tally)
      if (v > best_votes) best = cls, best_votes = v;
    EXPECT_EQ(f.predict(row), best);
  }
}

TEST(RandomForest, SingleFullFeatureTreeEqualsPlainTree) {
  const auto t = lexicon_toy(150, 13);
  ForestParams p;
  p.n_trees = 1;
  p.subsample_features = false;
  p.seed = 31;
  const auto f = RandomForest::fit(t.x, t.labels, 3, p);
  TreeParams tp;
  tp.max_depth = p.max_depth;
  tp.min_leaf = p.min_leaf;
  const auto tree = DecisionTree::fit(t.x, t.labels, 3, tp, bootstrap_sample(t.labels.size(), f.tree_seeds()[0]));
  for (const auto& row : t.x.rows) EXPECT_EQ(f.predict(row), tree.predict(row));
}

TEST(RandomForest, SameSeedSameModel) {
  const auto t = lexicon_toy(90, 1);
  ForestParams p;
  p.n_trees = 5;
  p.seed = 3;
  const auto a = RandomForest::fit(t.x, t.labels, 3, p), b = RandomForest::fit(t.x, t.labels, 3, p);
  EXPECT_EQ(a.tree_seeds(), b.tree_seeds());
  for (const auto& row : t.x.rows) EXPECT_EQ(a.votes(row), b.votes(row));
}

class EveryKind : public ::testing::TestWithParam<BaselineKind> {};

TEST_P(EveryKind, LearnsSeparableLexiconCorpus) {
  const auto t = lexicon_toy(150, 6);
  BaselineHyperparams hp;
  hp.set_seed(4);
  const auto m = train_baseline(GetParam(), t.x, t.labels, hp);
  EXPECT_GE(train_accuracy(m, t), 0.8) << to_string(GetParam());
}

TEST_P(EveryKind, SaveLoadPreservesPredictions) {
  const auto t = lexicon_toy(90, 7);
  BaselineHyperparams hp;
  hp.set_seed(9);
  hp.forest.n_trees = 5;
  BaselinePipeline p{t.space, train_baseline(GetParam(), t.x, t.labels, hp)};
  const auto path = testing::temp_path(std::string("model_") + std::string(to_string(GetParam())) + ".json");
  save_baseline(p, path);
  const auto q = load_baseline(path);
  EXPECT_EQ(q.model.kind, GetParam());
  EXPECT_EQ(predict_all(q.model, t.x), predict_all(p.model, t.x));
  EXPECT_EQ(q.features.vocabulary(), p.features.vocabulary());
  EXPECT_EQ(baseline_to_json(q), baseline_to_json(p));
}

TEST_P(EveryKind, DimensionMismatchIsShapeError) {
  const auto t = lexicon_toy(60, 3);
  BaselineHyperparams hp;
  hp.forest.n_trees = 3;
  const auto m = train_baseline(GetParam(), t.x, t.labels, hp);
  FeatureMatrix wrong{t.x.dim + 1, {SparseVector{}}};
  EXPECT_THROW(predict_all(m, wrong), ShapeError);
}

TEST_P(EveryKind, SingleClassTrainingSetRejected) {
  FeatureMatrix x{1, {{{0, 1.0}}, {{0, 0.5}}}};
  EXPECT_THROW(train_baseline(GetParam(), x, {1, 1}), DataError);
}

INSTANTIATE_TEST_SUITE_P(Baselines, EveryKind, ::testing::ValuesIn(kAllBaselineKinds),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(BaselineJson, RejectsWrongFormatTag) {
  EXPECT_THROW(baseline_from_json(R"({"format":"other","version":1})"), DataError);
  EXPECT_THROW(baseline_from_json("not json"), DataError);
}

}  // namespace
}  // namespace revsent::baselines
