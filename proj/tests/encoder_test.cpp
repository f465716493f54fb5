#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

namespace revsent {
namespace {

EncoderConfig small_config() {
  EncoderConfig c;
  c.layers = 2;
  c.hidden = 16;
  c.heads = 4;
  c.vocab_size = 40;
  c.max_positions = 64;
  return c;
}

EncodedInput random_input(Rng& rng, int vocab, int len, int real) {
  EncodedInput in;
  for (int i = 0; i < len; ++i) {
    const bool keep = i < real;
    in.ids.push_back(keep ? 4 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(vocab - 4))) : 0);
    in.attention_mask.push_back(keep ? 1 : 0);
    in.segment_ids.push_back(0);
  }
  return in;
}

TEST(ParameterCount, HandDerivedSmallConfigs) {
  EncoderConfig a;
  a.layers = 1, a.hidden = 4, a.heads = 2, a.vocab_size = 10, a.max_positions = 6;
  EXPECT_EQ(parameter_count(a), 339u);
  EXPECT_EQ(EncoderParams<float>::zeros(a).count(), 339u);

  EncoderConfig b;
  b.layers = 2, b.hidden = 2, b.heads = 1, b.ffn = 3, b.vocab_size = 5, b.max_positions = 4, b.type_vocab_size = 1,
  b.n_classes = 2;
  EXPECT_EQ(parameter_count(b), 128u);
  EXPECT_EQ(EncoderParams<float>::zeros(b).count(), 128u);
}

TEST(ParameterCount, BertBaseScale) {
  EncoderConfig c;
  c.layers = 12, c.hidden = 768, c.heads = 12, c.vocab_size = 30522, c.max_positions = 512;
  EXPECT_EQ(parameter_count(c), 108893955u);
  EXPECT_NEAR(static_cast<double>(parameter_count(c)), 110e6, 0.02 * 110e6);
  // The multilingual vocabulary adds embedding rows only; same order of magnitude.
  c.vocab_size = 119547;
  EXPECT_EQ(parameter_count(c), 177265155u);
  EXPECT_GT(parameter_count(c), 100'000'000u);
  EXPECT_LT(parameter_count(c), 1'000'000'000u);
}

TEST(EncoderConfig, ValidationNamesKey) {
  auto c = small_config();
  c.heads = 3;
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "encoder.A");
  }
  c = small_config();
  c.layers = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.n_classes = 1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(InitParams, DeterministicAndRuleAbiding) {
  const auto c = small_config();
  const auto a = init_params<float>(c, 7), b = init_params<float>(c, 7), other = init_params<float>(c, 8);
  bool all_equal = true, any_diff = false;
  zip_tensors(
      [&](const std::string& name, TensorRole role, const Tensor<float>& x, const Tensor<float>& y,
          const Tensor<float>& z) {
        all_equal = all_equal && x == y;
        any_diff = any_diff || x != z;
        switch (role) {
          case TensorRole::scale: EXPECT_TRUE((x.array() == 1.0f).all()) << name; break;
          case TensorRole::bias:
          case TensorRole::shift: EXPECT_TRUE((x.array() == 0.0f).all()) << name; break;
          case TensorRole::weight: EXPECT_LE(x.cwiseAbs().maxCoeff(), 0.04f + 1e-7f) << name; break;
        }
      },
      a, b, other);
  EXPECT_TRUE(all_equal);
  EXPECT_TRUE(any_diff);
}

TEST(Forward, LogitShapeAndProbabilityRows) {
  const auto c = small_config();
  const auto p = init_params<double>(c, 1);
  Rng rng(2);
  const std::vector<EncodedInput> batch = {random_input(rng, c.vocab_size, 12, 7), random_input(rng, c.vocab_size, 12, 12)};
  const auto out = forward<double>(p, batch);
  EXPECT_EQ(out.logits.rows(), 2);
  EXPECT_EQ(out.logits.cols(), 3);
  const auto probs = softmax_rows<double>(out.logits);
  for (Eigen::Index r = 0; r < 2; ++r) EXPECT_NEAR(probs.row(r).sum(), 1.0, 1e-6);
  for (std::size_t b = 0; b < batch.size(); ++b)
    for (const auto& layer : out.cache.examples[b].layers)
      for (const auto& head : layer.probs)
        for (Eigen::Index i = 0; i < head.rows(); ++i) {
          EXPECT_NEAR(head.row(i).sum(), 1.0, 1e-6);
          for (Eigen::Index j = 0; j < head.cols(); ++j)
            if (!batch[b].attention_mask[static_cast<std::size_t>(j)]) EXPECT_EQ(head(i, j), 0.0);
        }
}

TEST(Forward, PaddingLengthInvariance) {
  const auto c = small_config();
  const Vocab vocab = build_vocab({"aplikasi ini bagus sekali", "jelek dan lambat"});
  auto cfg = c;
  cfg.vocab_size = static_cast<int>(vocab.size());
  const auto q = init_params<float>(cfg, 11, 0.3);
  for (const std::string text : {"aplikasi ini bagus sekali", "jelek", ""}) {
    const std::vector<EncodedInput> short_in = {encode(text, vocab, 32)}, long_in = {encode(text, vocab, 64)};
    const auto a = forward<float>(q, short_in).logits, b = forward<float>(q, long_in).logits;
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-5f) << text;
  }
}

TEST(Forward, PadTokenIdsDoNotMatter) {
  const auto c = small_config();
  const auto p = init_params<float>(c, 4, 0.3);
  Rng rng(6);
  for (int iter = 0; iter < 20; ++iter) {
    const auto base = random_input(rng, c.vocab_size, 20, 1 + static_cast<int>(rng.uniform_index(19)));
    auto noisy = base;
    for (std::size_t i = 0; i < noisy.ids.size(); ++i)
      if (!noisy.attention_mask[i]) noisy.ids[i] = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(c.vocab_size)));
    const std::vector<EncodedInput> a = {base}, b = {noisy};
    EXPECT_LE((forward<float>(p, a).logits - forward<float>(p, b).logits).cwiseAbs().maxCoeff(), 1e-6f);
  }
}

TEST(Forward, ShapeMismatchIsFatal) {
  const auto p = init_params<float>(small_config(), 1);
  Rng rng(1);
  std::vector<EncodedInput> too_long = {random_input(rng, 40, 65, 3)};
  EXPECT_THROW(forward<float>(p, too_long), ShapeError);
  std::vector<EncodedInput> bad_id = {random_input(rng, 40, 8, 3)};
  bad_id[0].ids[1] = 40;
  EXPECT_THROW(forward<float>(p, bad_id), ShapeError);
}

TEST(Loss, ZeroClassifierGivesLogThree) {
  auto p = init_params<double>(small_config(), 3);
  p.classifier_w.setZero();
  p.classifier_b.setZero();
  Rng rng(3);
  const std::vector<EncodedInput> batch = {random_input(rng, 40, 10, 5), random_input(rng, 40, 10, 9)};
  const std::vector<int> labels = {0, 2};
  EXPECT_NEAR(loss_and_grad<double>(p, batch, labels).loss, std::log(3.0), 1e-9);
}

TEST(Loss, DuplicatingBatchLeavesLossAndGradientsUnchanged) {
  const auto p = init_params<double>(small_config(), 5, 0.2);
  Rng rng(8);
  std::vector<EncodedInput> batch = {random_input(rng, 40, 10, 6), random_input(rng, 40, 10, 10),
                                     random_input(rng, 40, 10, 2)};
  std::vector<int> labels = {0, 1, 2};
  const auto once = loss_and_grad<double>(p, batch, labels);
  auto twice_batch = batch;
  twice_batch.insert(twice_batch.end(), batch.begin(), batch.end());
  auto twice_labels = labels;
  twice_labels.insert(twice_labels.end(), labels.begin(), labels.end());
  const auto twice = loss_and_grad<double>(p, twice_batch, twice_labels);
  EXPECT_NEAR(once.loss, twice.loss, 1e-12);
  zip_tensors(
      [](const std::string& name, TensorRole, const Tensor<double>& a, const Tensor<double>& b) {
        EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12) << name;
      },
      once.grads, twice.grads);
}

TEST(Loss, BadLabelsRejected) {
  const auto p = init_params<double>(small_config(), 5);
  Rng rng(8);
  const std::vector<EncodedInput> batch = {random_input(rng, 40, 10, 6)};
  const std::vector<int> bad = {3};
  EXPECT_THROW(loss_and_grad<double>(p, batch, bad), DataError);
}

TEST(Loss, NonFiniteLossIsNumericError) {
  auto p = init_params<double>(small_config(), 5);
  p.classifier_b(0, 0) = std::numeric_limits<double>::quiet_NaN();
  Rng rng(8);
  const std::vector<EncodedInput> batch = {random_input(rng, 40, 10, 6)};
  const std::vector<int> labels = {1};
  EXPECT_THROW(loss_and_grad<double>(p, batch, labels), NumericError);
}

TEST(Dropout, EvaluationPathIsDeterministic) {
  auto c = small_config();
  c.dropout = 0.3;
  const auto p = init_params<float>(c, 2);
  Rng rng(4);
  const std::vector<EncodedInput> batch = {random_input(rng, 40, 10, 6)};
  EXPECT_EQ(forward<float>(p, batch).logits, forward<float>(p, batch).logits);
  Rng drop(1);
  EXPECT_NE(forward<float>(p, batch, &drop).logits, forward<float>(p, batch).logits);
}

}  // namespace
}  // namespace revsent
