#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "revsent/baselines/features.hpp"
#include "revsent/random.hpp"

namespace revsent::baselines {

struct SvmParams {
  int passes = 10;
  double step = 0.01;
  double lambda = 1e-4;  // L2 strength
  std::uint64_t seed = 0;
};

// One-vs-rest linear SVM trained by stochastic subgradient descent on the
// L2-regularized hinge loss. Each class keeps w = scale * v so the per-step
// shrink costs O(1) on sparse rows.
class LinearSvm {
public:
  LinearSvm() = default;

  static LinearSvm fit(const FeatureMatrix& x, const std::vector<int>& labels, int n_classes,
                       const SvmParams& params = {}) {
    check_training_set(x, labels, n_classes);
    if (params.passes < 1) throw ConfigError("svm.passes", "must be at least 1");
    if (!(params.step > 0.0)) throw ConfigError("svm.step", "must be positive");
    if (!(params.lambda >= 0.0) || params.step * params.lambda >= 1.0)
      throw ConfigError("svm.lambda", "need 0 <= step*lambda < 1");

    const auto k = static_cast<std::size_t>(n_classes);
    std::vector<std::vector<double>> v(k, std::vector<double>(x.dim, 0.0));
    std::vector<double> scale(k, 1.0);
    std::vector<double> bias(k, 0.0);
    const double shrink = 1.0 - params.step * params.lambda;

    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(params.seed);
    for (int pass = 0; pass < params.passes; ++pass) {
      rng.shuffle(std::span<std::size_t>(order));
      for (auto i : order) {
        const auto& row = x.rows[i];
        for (std::size_t c = 0; c < k; ++c) {
          const double y = labels[i] == static_cast<int>(c) ? 1.0 : -1.0;
          const double margin = y * (scale[c] * dot(v[c], row) + bias[c]);
          scale[c] *= shrink;
          if (margin < 1.0) {
            const double g = params.step * y / scale[c];
            for (const auto& e : row) v[c][e.index] += g * e.value;
            bias[c] += params.step * y;
          }
          if (scale[c] < 1e-9) {
            for (double& w : v[c]) w *= scale[c];
            scale[c] = 1.0;
          }
        }
      }
    }
    LinearSvm m;
    m.dim_ = x.dim;
    m.bias_ = std::move(bias);
    m.weights_.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
      m.weights_[c].resize(x.dim);
      for (std::size_t j = 0; j < x.dim; ++j) m.weights_[c][j] = scale[c] * v[c][j];
    }
    return m;
  }

  std::vector<double> decision(const SparseVector& x) const {
    check_dimension(x, dim_);
    std::vector<double> s(bias_);
    for (std::size_t c = 0; c < s.size(); ++c) s[c] += dot(weights_[c], x);
    return s;
  }

  int predict(const SparseVector& x) const { return argmax(decision(x)); }

  std::size_t dim() const noexcept { return dim_; }
  const std::vector<std::vector<double>>& weights() const noexcept { return weights_; }
  const std::vector<double>& bias() const noexcept { return bias_; }

  static LinearSvm from_parts(std::size_t dim, std::vector<std::vector<double>> weights, std::vector<double> bias) {
    if (weights.size() != bias.size()) throw ShapeError("svm: class count mismatch");
    for (const auto& w : weights)
      if (w.size() != dim) throw ShapeError("svm: weight width mismatch");
    LinearSvm m;
    m.dim_ = dim;
    m.weights_ = std::move(weights);
    m.bias_ = std::move(bias);
    return m;
  }

private:
  std::size_t dim_ = 0;
  std::vector<std::vector<double>> weights_;
  std::vector<double> bias_;
};

}  // namespace revsent::baselines
