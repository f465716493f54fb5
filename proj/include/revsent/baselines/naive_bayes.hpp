#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "revsent/baselines/features.hpp"

namespace revsent::baselines {

struct NaiveBayesParams {
  double alpha = 1.0;  // Laplace smoothing
};

// Multinomial naive Bayes over (fractional) term weights.
class NaiveBayes {
public:
  NaiveBayes() = default;

  static NaiveBayes fit(const FeatureMatrix& x, const std::vector<int>& labels, int n_classes,
                        const NaiveBayesParams& params = {}) {
    check_training_set(x, labels, n_classes);
    if (!(params.alpha > 0.0)) throw ConfigError("nb.alpha", "must be positive");
    NaiveBayes nb;
    nb.dim_ = x.dim;
    const auto k = static_cast<std::size_t>(n_classes);
    std::vector<double> class_count(k, 0.0);
    std::vector<std::vector<double>> mass(k, std::vector<double>(x.dim, 0.0));
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto c = static_cast<std::size_t>(labels[i]);
      class_count[c] += 1.0;
      for (const auto& e : x.rows[i]) mass[c][e.index] += e.value;
    }
    const double n = static_cast<double>(labels.size());
    nb.log_prior_.resize(k);
    nb.log_likelihood_.assign(k, std::vector<double>(x.dim, 0.0));
    for (std::size_t c = 0; c < k; ++c) {
      nb.log_prior_[c] = class_count[c] > 0 ? std::log(class_count[c] / n) : -std::numeric_limits<double>::infinity();
      double total = 0.0;
      for (double m : mass[c]) total += m;
      const double denom = total + params.alpha * static_cast<double>(x.dim);
      for (std::size_t j = 0; j < x.dim; ++j) nb.log_likelihood_[c][j] = std::log((mass[c][j] + params.alpha) / denom);
    }
    return nb;
  }

  /// Unnormalized log P(c) + sum_j x_j log P(j | c), per class.
  std::vector<double> log_joint(const SparseVector& x) const {
    check_dimension(x, dim_);
    std::vector<double> out(log_prior_);
    for (std::size_t c = 0; c < out.size(); ++c)
      for (const auto& e : x) out[c] += e.value * log_likelihood_[c][e.index];
    return out;
  }

  std::vector<double> posterior(const SparseVector& x) const {
    auto lj = log_joint(x);
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : lj) mx = std::max(mx, v);
    double z = 0.0;
    for (double& v : lj) {
      v = std::exp(v - mx);
      z += v;
    }
    for (double& v : lj) v /= z;
    return lj;
  }

  int predict(const SparseVector& x) const { return argmax(log_joint(x)); }

  std::size_t dim() const noexcept { return dim_; }
  int n_classes() const noexcept { return static_cast<int>(log_prior_.size()); }
  const std::vector<double>& log_prior() const noexcept { return log_prior_; }
  const std::vector<std::vector<double>>& log_likelihood() const noexcept { return log_likelihood_; }

  static NaiveBayes from_parts(std::size_t dim, std::vector<double> log_prior,
                               std::vector<std::vector<double>> log_likelihood) {
    NaiveBayes nb;
    nb.dim_ = dim;
    nb.log_prior_ = std::move(log_prior);
    nb.log_likelihood_ = std::move(log_likelihood);
    for (const auto& row : nb.log_likelihood_)
      if (row.size() != dim) throw ShapeError("naive bayes: likelihood row width mismatch");
    if (nb.log_likelihood_.size() != nb.log_prior_.size()) throw ShapeError("naive bayes: class count mismatch");
    return nb;
  }

private:
  std::size_t dim_ = 0;
  std::vector<double> log_prior_;
  std::vector<std::vector<double>> log_likelihood_;
};

}  // namespace revsent::baselines
