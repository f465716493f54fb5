#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "revsent/encoder.hpp"
#include "revsent/eval.hpp"
#include "revsent/random.hpp"

namespace revsent {

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 16;
  int epochs = 10;
  /// After epoch e (1-based) the rate is multiplied by 1 / (1 + epoch_decay * e); 0 disables decay.
  double epoch_decay = 1e-4;
  std::uint64_t seed = 42;
  int max_len = 128;
  /// Global-norm gradient clipping threshold; 0 disables it.
  double grad_clip = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate", "must be positive");
    if (batch_size < 1) throw ConfigError("batch_size", "must be at least 1");
    if (epochs < 1) throw ConfigError("epochs", "must be at least 1");
    if (!(epoch_decay >= 0.0)) throw ConfigError("decay", "must be nonnegative");
    if (!(grad_clip >= 0.0)) throw ConfigError("grad_clip", "must be nonnegative");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1", "must lie in [0,1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2", "must lie in [0,1)");
    if (!(adam_eps > 0.0)) throw ConfigError("adam_eps", "must be positive");
    check_max_len(max_len);
  }
};

// ---------------------------------------------------------------------------
// Adam

/// Bias-corrected Adam on flat arrays; `step` is the 1-based update count.
template <typename T>
void adam_update(std::span<T> theta, std::span<const T> grad, std::span<T> m, std::span<T> v, std::int64_t step,
                 double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = static_cast<double>(grad[i]);
    const double mi = beta1 * static_cast<double>(m[i]) + (1.0 - beta1) * g;
    const double vi = beta2 * static_cast<double>(v[i]) + (1.0 - beta2) * g * g;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double mhat = mi / c1;
    const double vhat = vi / c2;
    theta[i] = static_cast<T>(static_cast<double>(theta[i]) - lr * mhat / (std::sqrt(vhat) + eps));
  }
}

template <typename T>
struct AdamState {
  EncoderParams<T> m;
  EncoderParams<T> v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState fresh(const EncoderConfig& config, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    return AdamState{EncoderParams<T>::zeros(config), EncoderParams<T>::zeros(config), 0, beta1, beta2, eps};
  }
};

/// One Adam update of every tensor. Throws NumericError on a non-finite gradient.
template <typename T>
void adam_step(EncoderParams<T>& params, const EncoderParams<T>& grads, AdamState<T>& state, double lr) {
  zip_tensors(
      [&](const std::string& name, TensorRole, const Tensor<T>& g) {
        if (!g.allFinite()) throw NumericError("non-finite gradient in " + name);
      },
      grads);
  ++state.step;
  zip_tensors(
      [&](const std::string& name, TensorRole, Tensor<T>& p, const Tensor<T>& g, Tensor<T>& m, Tensor<T>& v) {
        if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size())
          throw ShapeError("adam: shape mismatch in " + name);
        const auto n = static_cast<std::size_t>(p.size());
        adam_update<T>({p.data(), n}, {g.data(), n}, {m.data(), n}, {v.data(), n}, state.step, lr, state.beta1,
                       state.beta2, state.eps);
      },
      params, grads, state.m, state.v);
}

// ---------------------------------------------------------------------------
// Fine-tuning

/// Encoded examples with integer class labels.
struct EncodedDataset {
  std::vector<EncodedInput> inputs;
  std::vector<int> labels;

  std::size_t size() const noexcept { return inputs.size(); }
};

struct RunHistory {
  std::vector<double> train_acc;
  std::vector<double> val_acc;
  std::vector<double> loss;  // mean training loss per epoch
  double duration_s = 0.0;
  int best_epoch = 0;  // 1-based

  double mean_train_acc() const {
    return train_acc.empty() ? 0.0 : std::accumulate(train_acc.begin(), train_acc.end(), 0.0) / train_acc.size();
  }
  double mean_val_acc() const {
    return val_acc.empty() ? 0.0 : std::accumulate(val_acc.begin(), val_acc.end(), 0.0) / val_acc.size();
  }
};

/// 1-based epoch with the highest validation accuracy; earliest wins ties.
inline int best_epoch_of(std::span<const double> val_acc) {
  if (val_acc.empty()) throw DataError("no epochs recorded");
  std::size_t best = 0;
  for (std::size_t i = 1; i < val_acc.size(); ++i)
    if (val_acc[i] > val_acc[best]) best = i;
  return static_cast<int>(best) + 1;
}

/// CSV with header `epoch,train_acc,val_acc,loss`.
inline std::string history_to_csv(const RunHistory& h) {
  std::string out = "epoch,train_acc,val_acc,loss\n";
  for (std::size_t e = 0; e < h.train_acc.size(); ++e)
    out += std::to_string(e + 1) + "," + format_fixed(h.train_acc[e], 6) + "," + format_fixed(h.val_acc[e], 6) + "," +
           format_fixed(h.loss[e], 6) + "\n";
  return out;
}

/// Learning rate used during epoch e (1-based) under the per-epoch decay rule.
inline double learning_rate_at_epoch(double base, double decay, int epoch) {
  double lr = base;
  for (int e = 1; e < epoch; ++e) lr *= 1.0 / (1.0 + decay * e);
  return lr;
}

template <typename T>
double dataset_accuracy(const EncoderParams<T>& params, const EncodedDataset& data) {
  const auto pred = predict_classes<T>(params, data.inputs);
  return accuracy(pred, data.labels);
}

template <typename T>
struct FineTuneResult {
  EncoderParams<T> best;
  RunHistory history;
};

/// Called after each epoch with (epoch, history so far).
using EpochCallback = std::function<void(int, const RunHistory&)>;

namespace detail {

template <typename T>
void clip_global_norm(EncoderParams<T>& g, double max_norm) {
  double sq = 0.0;
  zip_tensors([&](const std::string&, TensorRole, const Tensor<T>& t) { sq += static_cast<double>(t.squaredNorm()); },
              g);
  const double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0.0) return;
  const T scale = static_cast<T>(max_norm / norm);
  zip_tensors([&](const std::string&, TensorRole, Tensor<T>& t) { t *= scale; }, g);
}

inline void check_dataset(const EncodedDataset& d, const char* what) {
  if (d.inputs.size() != d.labels.size()) throw DataError(std::string(what) + ": inputs and labels differ in length");
}

}  // namespace detail

// Minibatch Adam over shuffled training data, keeping the snapshot with the best
// validation accuracy. All randomness (shuffles, dropout) comes from one
// generator seeded with cfg.seed.
template <typename T>
FineTuneResult<T> fine_tune(EncoderParams<T> params, const EncodedDataset& train, const EncodedDataset& validation,
                            const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  detail::check_dataset(train, "train");
  detail::check_dataset(validation, "validation");
  if (train.size() == 0) throw DataError("empty training set");
  if (validation.size() == 0) throw DataError("empty validation set");

  const auto start = std::chrono::steady_clock::now();
  Rng rng(cfg.seed);
  auto state = AdamState<T>::fresh(params.config, cfg.beta1, cfg.beta2, cfg.adam_eps);
  FineTuneResult<T> result;
  auto& hist = result.history;
  double best_val = -1.0;
  double lr = cfg.learning_rate;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<EncodedInput> batch;
  std::vector<int> batch_labels;
  const auto bs = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t pos = 0; pos < order.size(); pos += bs) {
      const auto n = std::min(bs, order.size() - pos);
      batch.clear();
      batch_labels.clear();
      for (std::size_t i = pos; i < pos + n; ++i) {
        batch.push_back(train.inputs[order[i]]);
        batch_labels.push_back(train.labels[order[i]]);
      }
      auto lg = loss_and_grad<T>(params, batch, batch_labels, params.config.dropout > 0.0 ? &rng : nullptr);
      if (cfg.grad_clip > 0.0) detail::clip_global_norm(lg.grads, cfg.grad_clip);
      adam_step(params, lg.grads, state, lr);
      loss_sum += static_cast<double>(lg.loss) * static_cast<double>(n);
    }
    lr *= 1.0 / (1.0 + cfg.epoch_decay * epoch);

    hist.loss.push_back(loss_sum / static_cast<double>(train.size()));
    hist.train_acc.push_back(dataset_accuracy(params, train));
    hist.val_acc.push_back(dataset_accuracy(params, validation));
    if (hist.val_acc.back() > best_val) {
      best_val = hist.val_acc.back();
      hist.best_epoch = epoch;
      result.best = params;
    }
    if (on_epoch) on_epoch(epoch, hist);
  }
  hist.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

// ---------------------------------------------------------------------------
// Grid search

struct GridAxes {
  std::vector<double> learning_rates;
  std::vector<int> batch_sizes;
  std::vector<int> epochs;
};

struct GridCell {
  double learning_rate = 0.0;
  int batch_size = 0;
  int epochs = 0;
};

/// Cells in report order: epochs outermost, then learning rate, then batch size.
inline std::vector<GridCell> enumerate_grid(const GridAxes& axes) {
  if (axes.learning_rates.empty() || axes.batch_sizes.empty() || axes.epochs.empty())
    throw ConfigError("grid", "every grid axis needs at least one value");
  std::vector<GridCell> cells;
  for (int e : axes.epochs)
    for (double lr : axes.learning_rates)
      for (int b : axes.batch_sizes) cells.push_back({lr, b, e});
  return cells;
}

struct GridDatasets {
  const EncodedDataset* train = nullptr;
  const EncodedDataset* validation = nullptr;
  const EncodedDataset* test = nullptr;
};

struct GridOptions {
  std::string model_name = "encoder";
  std::string labeling = "lexicon";
  unsigned jobs = 1;
  /// Shared starting checkpoint; when empty each cell starts from init_params(config, seed).
  std::optional<EncoderParams<float>> initial;
};

struct GridCellResult {
  RunReport report;
  RunHistory history;
  std::optional<EncoderParams<float>> best;
};

/// Runs one fine_tune per grid cell. A failing cell is reported with its
/// error message and does not stop the others.
inline std::vector<GridCellResult> grid_search(const EncoderConfig& encoder, const TrainConfig& base, const GridAxes& axes,
                                               const GridDatasets& data, const GridOptions& opts = {},
                                               bool keep_params = false) {
  if (!data.train || !data.validation || !data.test) throw DataError("grid: datasets missing");
  const auto cells = enumerate_grid(axes);
  std::vector<GridCellResult> results(cells.size());

  auto run_cell = [&](std::size_t i) {
    const auto& cell = cells[i];
    auto& out = results[i];
    out.report.model = opts.model_name;
    out.report.labeling = opts.labeling;
    out.report.batch_size = cell.batch_size;
    out.report.learning_rate = cell.learning_rate;
    out.report.epochs = cell.epochs;
    try {
      TrainConfig cfg = base;
      cfg.learning_rate = cell.learning_rate;
      cfg.batch_size = cell.batch_size;
      cfg.epochs = cell.epochs;
      auto params = opts.initial ? *opts.initial : init_params<float>(encoder, base.seed);
      auto ft = fine_tune<float>(std::move(params), *data.train, *data.validation, cfg);
      out.report.avg_train_acc = ft.history.mean_train_acc();
      out.report.avg_val_acc = ft.history.mean_val_acc();
      out.report.train_time_s = ft.history.duration_s;
      out.report.test_acc = data.test->size() ? dataset_accuracy(ft.best, *data.test) : 0.0;
      out.history = std::move(ft.history);
      if (keep_params) out.best = std::move(ft.best);
    } catch (const std::exception& e) {
      out.report.error = e.what();
    }
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(cells.size())));
  if (jobs == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  for (unsigned w = 0; w < jobs; ++w)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(i);
    });
  for (auto& t : workers) t.join();
  return results;
}

}  // namespace revsent
