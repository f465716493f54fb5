#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

namespace revsent {
namespace {

TEST(Adam, FirstStepClosedForm) {
  std::vector<double> theta = {0.0}, grad = {1.0}, m = {0.0}, v = {0.0};
  adam_update<double>(theta, grad, m, v, 1, 0.001);
  EXPECT_NEAR(theta[0], -0.001, 1e-10);
  EXPECT_DOUBLE_EQ(m[0], 0.1);
  EXPECT_NEAR(v[0], 0.001, 1e-15);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  EncoderConfig c;
  c.hidden = 8, c.heads = 2, c.vocab_size = 10, c.max_positions = 8;
  auto p = init_params<float>(c, 1);
  const auto before = p;
  auto state = AdamState<float>::fresh(c);
  adam_step(p, EncoderParams<float>::zeros(c), state, 1e-3);
  EXPECT_EQ(state.step, 1);
  zip_tensors([](const std::string& n, TensorRole, const Tensor<float>& a, const Tensor<float>& b) { EXPECT_EQ(a, b) << n; },
              p, before);
}

TEST(Adam, NonFiniteGradientIsFatal) {
  EncoderConfig c;
  c.hidden = 8, c.heads = 2, c.vocab_size = 10, c.max_positions = 8;
  auto p = init_params<float>(c, 1);
  auto g = EncoderParams<float>::zeros(c);
  g.classifier_b(0, 1) = std::numeric_limits<float>::infinity();
  auto state = AdamState<float>::fresh(c);
  EXPECT_THROW(adam_step(p, g, state, 1e-3), NumericError);
}

TEST(History, BestEpochIsEarliestArgmax) {
  EXPECT_EQ(best_epoch_of(std::vector<double>{0.5, 0.7, 0.6}), 2);
  EXPECT_EQ(best_epoch_of(std::vector<double>{0.7, 0.7, 0.6}), 1);
  EXPECT_EQ(best_epoch_of(std::vector<double>{0.1}), 1);
}

TEST(History, CsvExport) {
  RunHistory h;
  h.train_acc = {0.5, 0.75};
  h.val_acc = {0.25, 1.0};
  h.loss = {1.0, 0.5};
  EXPECT_EQ(history_to_csv(h), "epoch,train_acc,val_acc,loss\n1,0.500000,0.250000,1.000000\n2,0.750000,1.000000,0.500000\n");
}

TEST(Decay, MultiplicativePerEpoch) {
  EXPECT_DOUBLE_EQ(learning_rate_at_epoch(1e-3, 0.0, 5), 1e-3);
  EXPECT_DOUBLE_EQ(learning_rate_at_epoch(1.0, 1e-4, 1), 1.0);
  EXPECT_NEAR(learning_rate_at_epoch(1.0, 1e-4, 2), 1.0 / (1 + 1e-4), 1e-15);
  EXPECT_NEAR(learning_rate_at_epoch(1.0, 1e-4, 3), 1.0 / ((1 + 1e-4) * (1 + 2e-4)), 1e-15);
}

TEST(TrainConfig, ValidationNamesKey) {
  TrainConfig c;
  c.batch_size = 0;
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "batch_size");
  }
  c = TrainConfig{};
  c.learning_rate = -1;
  EXPECT_THROW(c.validate(), ConfigError);
}

// Small lexicon-separable task shared by the trainer tests.
struct Task {
  Vocab vocab;
  EncodedDataset train, validation, test;
  EncoderConfig encoder;
};

Task make_task(std::size_t n, std::uint64_t seed, int hidden = 16) {
  const auto corpus = testing::make_lexicon_corpus(n + 60, seed);
  std::vector<std::string> train_texts(corpus.texts.begin(), corpus.texts.begin() + static_cast<std::ptrdiff_t>(n));
  Task t{build_vocab(train_texts), {}, {}, {}, {}};
  auto slice = [&](std::size_t from, std::size_t to) {
    std::vector<std::string> x(corpus.texts.begin() + static_cast<std::ptrdiff_t>(from),
                               corpus.texts.begin() + static_cast<std::ptrdiff_t>(to));
    std::vector<int> y(corpus.labels.begin() + static_cast<std::ptrdiff_t>(from),
                       corpus.labels.begin() + static_cast<std::ptrdiff_t>(to));
    return testing::encode_all(x, y, t.vocab, 16);
  };
  t.train = slice(0, n);
  t.validation = slice(n, n + 30);
  t.test = slice(n + 30, n + 60);
  t.encoder.layers = 2;
  t.encoder.hidden = hidden;
  t.encoder.heads = 2;
  t.encoder.vocab_size = static_cast<int>(t.vocab.size());
  t.encoder.max_positions = 16;
  return t;
}

TrainConfig quick_config(int epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 8;
  c.max_len = 16;
  c.seed = 3;
  return c;
}

TEST(FineTune, DeterministicUnderSeed) {
  const auto t = make_task(40, 1);
  const auto a = fine_tune(init_params<float>(t.encoder, 2), t.train, t.validation, quick_config(3));
  const auto b = fine_tune(init_params<float>(t.encoder, 2), t.train, t.validation, quick_config(3));
  EXPECT_EQ(a.history.loss, b.history.loss);
  EXPECT_EQ(a.history.train_acc, b.history.train_acc);
  zip_tensors([](const std::string& n, TensorRole, const Tensor<float>& x, const Tensor<float>& y) { EXPECT_EQ(x, y) << n; },
              a.best, b.best);
}

TEST(FineTune, HistoryContract) {
  const auto t = make_task(40, 2);
  int calls = 0;
  const auto r = fine_tune(init_params<float>(t.encoder, 2), t.train, t.validation, quick_config(4),
                           [&](int epoch, const RunHistory& h) {
                             ++calls;
                             EXPECT_EQ(h.val_acc.size(), static_cast<std::size_t>(epoch));
                           });
  EXPECT_EQ(calls, 4);
  EXPECT_EQ(r.history.train_acc.size(), 4u);
  EXPECT_EQ(r.history.val_acc.size(), 4u);
  EXPECT_EQ(r.history.loss.size(), 4u);
  EXPECT_GT(r.history.duration_s, 0.0);
  EXPECT_EQ(r.history.best_epoch, best_epoch_of(r.history.val_acc));
  EXPECT_EQ(dataset_accuracy(r.best, t.validation), r.history.val_acc[static_cast<std::size_t>(r.history.best_epoch - 1)]);
}

TEST(FineTune, EmptyTrainingSetIsFatal) {
  const auto t = make_task(20, 2);
  EXPECT_THROW(fine_tune(init_params<float>(t.encoder, 2), EncodedDataset{}, t.validation, quick_config(1)), DataError);
}

// The acceptance-scale overfit run: L=2, H=64, A=2, lr 1e-3, batch 16, 50 epochs.
class Overfit : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    task_ = new Task(make_task(200, 42, 64));
    TrainConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.batch_size = 16;
    cfg.epochs = 50;
    cfg.max_len = 16;
    cfg.seed = 42;
    result_ = new FineTuneResult<float>(fine_tune(init_params<float>(task_->encoder, 42), task_->train, task_->validation, cfg));
  }
  static void TearDownTestSuite() {
    delete result_;
    delete task_;
  }
  static Task* task_;
  static FineTuneResult<float>* result_;
};
Task* Overfit::task_ = nullptr;
FineTuneResult<float>* Overfit::result_ = nullptr;

TEST_F(Overfit, ReachesNinetyFivePercentTrainingAccuracy) {
  EXPECT_GE(result_->history.train_acc.back(), 0.95);
}

TEST_F(Overfit, LossTrendsDownAfterEpochFive) {
  const auto& loss = result_->history.loss;
  std::vector<double> xs, ys;
  for (std::size_t e = 5; e < loss.size(); ++e) {
    xs.push_back(static_cast<double>(e));
    ys.push_back(loss[e]);
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double num = 0, den = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  EXPECT_LT(num / den, 0.0);
  for (std::size_t e = 6; e < loss.size(); ++e) EXPECT_LE(loss[e], loss[e - 1] + 0.05) << "epoch " << e + 1;
}

TEST(Grid, DefaultGridHasSixCellsInOrder) {
  const auto cells = enumerate_grid({{1e-5, 2e-5, 3e-5}, {16, 32}, {25}});
  ASSERT_EQ(cells.size(), 6u);
  EXPECT_EQ(cells[0].learning_rate, 1e-5);
  EXPECT_EQ(cells[0].batch_size, 16);
  EXPECT_EQ(cells[1].batch_size, 32);
  EXPECT_EQ(cells[5].learning_rate, 3e-5);
  EXPECT_EQ(enumerate_grid({{1e-5}, {16}, {10, 25}}).size(), 2u);
  EXPECT_THROW(enumerate_grid({{}, {16}, {10}}), ConfigError);
}

TEST(Grid, SingleCellEqualsDirectFineTune) {
  const auto t = make_task(40, 5);
  auto base = quick_config(3);
  const auto grid = grid_search(t.encoder, base, {{2e-3}, {8}, {3}}, {&t.train, &t.validation, &t.test}, {}, true);
  ASSERT_EQ(grid.size(), 1u);
  base.learning_rate = 2e-3;
  const auto direct = fine_tune(init_params<float>(t.encoder, base.seed), t.train, t.validation, base);
  const auto& r = grid[0].report;
  EXPECT_FALSE(r.error);
  EXPECT_EQ(r.avg_train_acc, direct.history.mean_train_acc());
  EXPECT_EQ(r.avg_val_acc, direct.history.mean_val_acc());
  EXPECT_EQ(r.test_acc, dataset_accuracy(direct.best, t.test));
  EXPECT_EQ(grid[0].history.loss, direct.history.loss);
}

TEST(Grid, CheckpointFidelity) {
  const auto t = make_task(40, 6);
  const auto grid = grid_search(t.encoder, quick_config(3), {{1e-3}, {8}, {3}}, {&t.train, &t.validation, &t.test}, {}, true);
  ASSERT_TRUE(grid[0].best);
  const auto path = testing::temp_path("best.bin");
  save_params(*grid[0].best, path);
  EXPECT_EQ(dataset_accuracy(load_params<float>(path, t.encoder), t.test), grid[0].report.test_acc);
}

TEST(Grid, MoreEpochsTakeLonger) {
  const auto t = make_task(60, 7);
  const auto grid = grid_search(t.encoder, quick_config(1), {{1e-3}, {8}, {10, 25}}, {&t.train, &t.validation, &t.test});
  ASSERT_EQ(grid.size(), 2u);
  EXPECT_GT(grid[0].report.train_time_s, 0.0);
  EXPECT_GT(grid[1].report.train_time_s, grid[0].report.train_time_s);
}

TEST(Grid, FailingCellIsRecordedOthersContinue) {
  const auto t = make_task(30, 8);
  const auto grid = grid_search(t.encoder, quick_config(1), {{1e-3}, {8, 0}, {1}}, {&t.train, &t.validation, &t.test});
  ASSERT_EQ(grid.size(), 2u);
  EXPECT_FALSE(grid[0].report.error);
  ASSERT_TRUE(grid[1].report.error);
  EXPECT_NE(grid[1].report.error->find("batch_size"), std::string::npos);
}

TEST(Grid, ParallelJobsMatchSerial) {
  const auto t = make_task(30, 9);
  GridOptions serial, parallel;
  parallel.jobs = 3;
  const GridAxes axes{{1e-3, 2e-3}, {8, 16}, {2}};
  const auto a = grid_search(t.encoder, quick_config(1), axes, {&t.train, &t.validation, &t.test}, serial);
  const auto b = grid_search(t.encoder, quick_config(1), axes, {&t.train, &t.validation, &t.test}, parallel);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].report.learning_rate, b[i].report.learning_rate);
    EXPECT_EQ(a[i].report.batch_size, b[i].report.batch_size);
    EXPECT_EQ(a[i].history.loss, b[i].history.loss);
    EXPECT_EQ(a[i].report.test_acc, b[i].report.test_acc);
  }
}

}  // namespace
}  // namespace revsent
