#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "revsent/error.hpp"
#include "revsent/random.hpp"
#include "revsent/tokenizer.hpp"

namespace revsent {

/// Shape of a BERT-style encoder with a [CLS] classification head.
struct EncoderConfig {
  int layers = 2;            // L
  int hidden = 64;           // H
  int heads = 2;             // A
  int ffn = 0;               // feed-forward inner size, 0 selects 4*H
  int vocab_size = 0;
  int max_positions = 128;   // <= 512
  int type_vocab_size = 2;
  int n_classes = 3;
  double dropout = 0.0;
  double layer_norm_eps = 1e-12;

  int ffn_size() const noexcept { return ffn > 0 ? ffn : 4 * hidden; }
  int head_size() const noexcept { return hidden / heads; }

  void validate() const {
    if (layers < 1) throw ConfigError("encoder.L", "need at least one layer");
    if (hidden < 1) throw ConfigError("encoder.H", "must be positive");
    if (heads < 1) throw ConfigError("encoder.A", "must be positive");
    if (hidden % heads != 0) throw ConfigError("encoder.A", "H must be divisible by A");
    if (ffn < 0) throw ConfigError("encoder.ffn", "must be nonnegative");
    if (vocab_size < 1) throw ConfigError("encoder.vocab", "must be positive");
    if (max_positions < 2 || max_positions > kMaxSequenceLength)
      throw ConfigError("encoder.max_positions", "must lie in [2,512]");
    if (type_vocab_size < 1) throw ConfigError("encoder.type_vocab", "must be positive");
    if (n_classes < 2) throw ConfigError("encoder.n_classes", "need at least two classes");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("encoder.dropout", "must lie in [0,1)");
    if (!(layer_norm_eps > 0.0)) throw ConfigError("encoder.layer_norm_eps", "must be positive");
  }

  bool operator==(const EncoderConfig&) const = default;
};

/// Number of trainable scalars implied by a config.
inline std::uint64_t parameter_count(const EncoderConfig& c) {
  const std::uint64_t h = static_cast<std::uint64_t>(c.hidden);
  const std::uint64_t f = static_cast<std::uint64_t>(c.ffn_size());
  const std::uint64_t embeddings =
      (static_cast<std::uint64_t>(c.vocab_size) + static_cast<std::uint64_t>(c.max_positions) +
       static_cast<std::uint64_t>(c.type_vocab_size)) * h + 2 * h;
  const std::uint64_t per_layer = 4 * (h * h + h)  // query, key, value, attention output
                                  + 2 * h            // attention layer norm
                                  + (h * f + f) + (f * h + h) + 2 * h;
  const std::uint64_t head = h * static_cast<std::uint64_t>(c.n_classes) + static_cast<std::uint64_t>(c.n_classes);
  return embeddings + static_cast<std::uint64_t>(c.layers) * per_layer + head;
}

template <typename T>
using Tensor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

/// How init_params fills a tensor.
enum class TensorRole { weight, bias, scale, shift };

// Dense weights use the x * W + b convention, so W is (in x out). Biases,
// layer-norm scales and shifts are 1 x n.
template <typename T>
struct LayerParams {
  Tensor<T> query_w, query_b, key_w, key_b, value_w, value_b;
  Tensor<T> attn_out_w, attn_out_b, attn_norm_scale, attn_norm_shift;
  Tensor<T> ffn_in_w, ffn_in_b, ffn_out_w, ffn_out_b, ffn_norm_scale, ffn_norm_shift;
};

template <typename T>
struct EncoderParams {
  EncoderConfig config;
  Tensor<T> word_embeddings;      // vocab x H
  Tensor<T> position_embeddings;  // max_positions x H
  Tensor<T> segment_embeddings;   // type_vocab x H
  Tensor<T> embed_norm_scale, embed_norm_shift;
  std::vector<LayerParams<T>> layers;
  Tensor<T> classifier_w;  // H x n_classes
  Tensor<T> classifier_b;

  /// All tensors allocated per `config` and set to zero.
  static EncoderParams zeros(const EncoderConfig& config);

  std::uint64_t count() const;

  template <typename U>
  EncoderParams<U> cast() const;
};

// Visits every tensor of one or more same-shaped parameter sets in a fixed
// order, passing its canonical name and role. The names double as the
// weights-file layout:
//   embeddings.word | embeddings.position | embeddings.segment
//   embeddings.norm.scale | embeddings.norm.shift
//   layer.<i>.attention.{query,key,value,output}.{weight,bias}
//   layer.<i>.attention.norm.{scale,shift}
//   layer.<i>.ffn.{in,out}.{weight,bias}
//   layer.<i>.ffn.norm.{scale,shift}
//   classifier.weight | classifier.bias
template <typename F, typename First, typename... Rest>
void zip_tensors(F&& f, First& first, Rest&... rest) {
  f(std::string("embeddings.word"), TensorRole::weight, first.word_embeddings, rest.word_embeddings...);
  f(std::string("embeddings.position"), TensorRole::weight, first.position_embeddings, rest.position_embeddings...);
  f(std::string("embeddings.segment"), TensorRole::weight, first.segment_embeddings, rest.segment_embeddings...);
  f(std::string("embeddings.norm.scale"), TensorRole::scale, first.embed_norm_scale, rest.embed_norm_scale...);
  f(std::string("embeddings.norm.shift"), TensorRole::shift, first.embed_norm_shift, rest.embed_norm_shift...);
  for (std::size_t l = 0; l < first.layers.size(); ++l) {
    const std::string p = "layer." + std::to_string(l) + ".";
    f(p + "attention.query.weight", TensorRole::weight, first.layers[l].query_w, rest.layers[l].query_w...);
    f(p + "attention.query.bias", TensorRole::bias, first.layers[l].query_b, rest.layers[l].query_b...);
    f(p + "attention.key.weight", TensorRole::weight, first.layers[l].key_w, rest.layers[l].key_w...);
    f(p + "attention.key.bias", TensorRole::bias, first.layers[l].key_b, rest.layers[l].key_b...);
    f(p + "attention.value.weight", TensorRole::weight, first.layers[l].value_w, rest.layers[l].value_w...);
    f(p + "attention.value.bias", TensorRole::bias, first.layers[l].value_b, rest.layers[l].value_b...);
    f(p + "attention.output.weight", TensorRole::weight, first.layers[l].attn_out_w, rest.layers[l].attn_out_w...);
    f(p + "attention.output.bias", TensorRole::bias, first.layers[l].attn_out_b, rest.layers[l].attn_out_b...);
    f(p + "attention.norm.scale", TensorRole::scale, first.layers[l].attn_norm_scale, rest.layers[l].attn_norm_scale...);
    f(p + "attention.norm.shift", TensorRole::shift, first.layers[l].attn_norm_shift, rest.layers[l].attn_norm_shift...);
    f(p + "ffn.in.weight", TensorRole::weight, first.layers[l].ffn_in_w, rest.layers[l].ffn_in_w...);
    f(p + "ffn.in.bias", TensorRole::bias, first.layers[l].ffn_in_b, rest.layers[l].ffn_in_b...);
    f(p + "ffn.out.weight", TensorRole::weight, first.layers[l].ffn_out_w, rest.layers[l].ffn_out_w...);
    f(p + "ffn.out.bias", TensorRole::bias, first.layers[l].ffn_out_b, rest.layers[l].ffn_out_b...);
    f(p + "ffn.norm.scale", TensorRole::scale, first.layers[l].ffn_norm_scale, rest.layers[l].ffn_norm_scale...);
    f(p + "ffn.norm.shift", TensorRole::shift, first.layers[l].ffn_norm_shift, rest.layers[l].ffn_norm_shift...);
  }
  f(std::string("classifier.weight"), TensorRole::weight, first.classifier_w, rest.classifier_w...);
  f(std::string("classifier.bias"), TensorRole::bias, first.classifier_b, rest.classifier_b...);
}

template <typename T>
EncoderParams<T> EncoderParams<T>::zeros(const EncoderConfig& config) {
  config.validate();
  const Eigen::Index h = config.hidden, f = config.ffn_size();
  EncoderParams p;
  p.config = config;
  p.word_embeddings = Tensor<T>::Zero(config.vocab_size, h);
  p.position_embeddings = Tensor<T>::Zero(config.max_positions, h);
  p.segment_embeddings = Tensor<T>::Zero(config.type_vocab_size, h);
  p.embed_norm_scale = Tensor<T>::Zero(1, h);
  p.embed_norm_shift = Tensor<T>::Zero(1, h);
  p.layers.resize(static_cast<std::size_t>(config.layers));
  for (auto& l : p.layers) {
    for (auto* w : {&l.query_w, &l.key_w, &l.value_w, &l.attn_out_w}) *w = Tensor<T>::Zero(h, h);
    for (auto* b : {&l.query_b, &l.key_b, &l.value_b, &l.attn_out_b, &l.attn_norm_scale, &l.attn_norm_shift,
                    &l.ffn_out_b, &l.ffn_norm_scale, &l.ffn_norm_shift})
      *b = Tensor<T>::Zero(1, h);
    l.ffn_in_w = Tensor<T>::Zero(h, f);
    l.ffn_in_b = Tensor<T>::Zero(1, f);
    l.ffn_out_w = Tensor<T>::Zero(f, h);
  }
  p.classifier_w = Tensor<T>::Zero(h, config.n_classes);
  p.classifier_b = Tensor<T>::Zero(1, config.n_classes);
  return p;
}

template <typename T>
std::uint64_t EncoderParams<T>::count() const {
  std::uint64_t n = 0;
  zip_tensors([&](const std::string&, TensorRole, const Tensor<T>& t) { n += static_cast<std::uint64_t>(t.size()); },
              *this);
  return n;
}

template <typename T>
template <typename U>
EncoderParams<U> EncoderParams<T>::cast() const {
  auto out = EncoderParams<U>::zeros(config);
  zip_tensors([](const std::string&, TensorRole, Tensor<U>& dst, const Tensor<T>& src) { dst = src.template cast<U>(); },
              out, *this);
  return out;
}

/// Truncated-normal(0, 0.02) weights, zero biases and shifts, unit scales.
template <typename T = float>
EncoderParams<T> init_params(const EncoderConfig& config, std::uint64_t seed, double stddev = 0.02) {
  auto p = EncoderParams<T>::zeros(config);
  Rng rng(seed);
  zip_tensors(
      [&](const std::string&, TensorRole role, Tensor<T>& t) {
        switch (role) {
          case TensorRole::weight:
            for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<T>(rng.truncated_normal(stddev));
            break;
          case TensorRole::scale: t.setOnes(); break;
          case TensorRole::bias:
          case TensorRole::shift: t.setZero(); break;
        }
      },
      p);
  return p;
}

// ---------------------------------------------------------------------------
// Forward / backward

template <typename T>
struct NormCache {
  Tensor<T> normalized;  // (x - mean) / std per row
  Vec<T> inv_std;
};

template <typename T>
struct LayerCache {
  Tensor<T> input;               // S x H
  Tensor<T> q, k, v;             // S x H
  std::vector<Tensor<T>> probs;  // per head, S x S
  Tensor<T> context;             // S x H, heads concatenated
  Tensor<T> attn_dropout;        // scaled keep mask, empty when dropout is off
  NormCache<T> attn_norm;
  Tensor<T> attn_out;            // S x H, post layer norm
  Tensor<T> ffn_pre;             // S x F, before GELU
  Tensor<T> ffn_act;             // S x F
  Tensor<T> ffn_dropout;
  NormCache<T> ffn_norm;
};

template <typename T>
struct ExampleCache {
  std::vector<int> ids;
  std::vector<int> mask;
  std::vector<int> segments;
  NormCache<T> embed_norm;
  Tensor<T> embed_dropout;
  std::vector<LayerCache<T>> layers;
  Tensor<T> cls;  // 1 x H, final hidden state at [CLS]
};

/// Activations of one forward call, consumed by backward().
template <typename T>
struct ForwardCache {
  std::vector<ExampleCache<T>> examples;
};

template <typename T>
struct ForwardResult {
  Tensor<T> logits;  // batch x n_classes
  ForwardCache<T> cache;
};

namespace detail {

template <typename T>
T gelu(T x) {
  using std::erf;
  using std::sqrt;
  return T(0.5) * x * (T(1) + erf(x / sqrt(T(2))));
}

template <typename T>
T gelu_grad(T x) {
  using std::erf;
  using std::exp;
  using std::sqrt;
  const T cdf = T(0.5) * (T(1) + erf(x / sqrt(T(2))));
  const T pdf = exp(T(-0.5) * x * x) / sqrt(T(2) * std::numbers::pi_v<T>);
  return cdf + x * pdf;
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& scale, const Tensor<T>& shift, T eps, NormCache<T>& cache) {
  using std::sqrt;
  const auto rows = x.rows();
  cache.normalized.resize(rows, x.cols());
  cache.inv_std.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const T mean = x.row(r).mean();
    const auto centered = (x.row(r).array() - mean).eval();
    const T var = centered.square().mean();
    const T inv = T(1) / sqrt(var + eps);
    cache.inv_std(r) = inv;
    cache.normalized.row(r) = centered * inv;
  }
  Tensor<T> y = (cache.normalized.array().rowwise() * scale.row(0).array()).matrix();
  y.rowwise() += shift.row(0);
  return y;
}

template <typename T>
Tensor<T> layer_norm_backward(const Tensor<T>& dy, const Tensor<T>& scale, const NormCache<T>& cache,
                              Tensor<T>& dscale, Tensor<T>& dshift) {
  dscale += (dy.array() * cache.normalized.array()).colwise().sum().matrix();
  dshift += dy.colwise().sum();
  const Tensor<T> dxhat = (dy.array().rowwise() * scale.row(0).array()).matrix();
  Tensor<T> dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const T mean_d = dxhat.row(r).mean();
    const T mean_dx = dxhat.row(r).cwiseProduct(cache.normalized.row(r)).mean();
    dx.row(r) = cache.inv_std(r) * (dxhat.row(r).array() - mean_d - cache.normalized.row(r).array() * mean_dx).matrix();
  }
  return dx;
}

template <typename T>
Tensor<T> dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  Tensor<T> m(rows, cols);
  const T keep_scale = T(1) / T(1.0 - rate);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform01() < rate ? T(0) : keep_scale;
  return m;
}

template <typename T>
void check_input(const EncoderConfig& c, const EncodedInput& in) {
  const auto n = in.ids.size();
  if (n == 0 || in.attention_mask.size() != n || in.segment_ids.size() != n)
    throw ShapeError("encoded input: ids, mask and segments must share one nonzero length");
  if (n > static_cast<std::size_t>(c.max_positions))
    throw ShapeError("encoded input length " + std::to_string(n) + " exceeds max_positions " +
                     std::to_string(c.max_positions));
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (in.ids[i] < 0 || in.ids[i] >= c.vocab_size)
      throw ShapeError("token id " + std::to_string(in.ids[i]) + " outside vocabulary of " +
                       std::to_string(c.vocab_size));
    if (in.segment_ids[i] < 0 || in.segment_ids[i] >= c.type_vocab_size)
      throw ShapeError("segment id outside type vocabulary");
    if (in.attention_mask[i] != 0 && in.attention_mask[i] != 1) throw ShapeError("attention mask must be 0/1");
    any = any || in.attention_mask[i] == 1;
  }
  if (!any) throw ShapeError("attention mask selects no position");
}

template <typename T>
Tensor<T> forward_example(const EncoderParams<T>& p, const EncodedInput& in, Rng* dropout_rng, ExampleCache<T>& ex) {
  const auto& c = p.config;
  check_input<T>(c, in);
  const auto s = static_cast<Eigen::Index>(in.ids.size());
  const Eigen::Index h = c.hidden;
  const int heads = c.heads;
  const Eigen::Index d = c.head_size();
  const T eps = static_cast<T>(c.layer_norm_eps);
  const bool drop = dropout_rng != nullptr && c.dropout > 0.0;
  using std::sqrt;
  const T score_scale = T(1) / sqrt(static_cast<T>(d));

  ex.ids = in.ids;
  ex.mask = in.attention_mask;
  ex.segments = in.segment_ids;

  Tensor<T> x(s, h);
  for (Eigen::Index i = 0; i < s; ++i)
    x.row(i) = p.word_embeddings.row(in.ids[static_cast<std::size_t>(i)]) + p.position_embeddings.row(i) +
               p.segment_embeddings.row(in.segment_ids[static_cast<std::size_t>(i)]);
  x = layer_norm<T>(x, p.embed_norm_scale, p.embed_norm_shift, eps, ex.embed_norm);
  if (drop) {
    ex.embed_dropout = dropout_mask<T>(s, h, c.dropout, *dropout_rng);
    x = x.cwiseProduct(ex.embed_dropout);
  }

  // Additive key mask: padded keys get -inf so their softmax weight is exactly zero.
  // Vectorized exp does not map -inf to exactly 0, so the keep mask also
  // multiplies the exponentials.
  Eigen::Matrix<T, 1, Eigen::Dynamic> key_bias(s), key_keep(s);
  for (Eigen::Index j = 0; j < s; ++j) {
    const bool keep = in.attention_mask[static_cast<std::size_t>(j)] != 0;
    key_bias(j) = keep ? T(0) : -std::numeric_limits<T>::infinity();
    key_keep(j) = keep ? T(1) : T(0);
  }

  ex.layers.resize(p.layers.size());
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& w = p.layers[l];
    auto& lc = ex.layers[l];
    lc.input = x;
    lc.q = (x * w.query_w).rowwise() + w.query_b.row(0);
    lc.k = (x * w.key_w).rowwise() + w.key_b.row(0);
    lc.v = (x * w.value_w).rowwise() + w.value_b.row(0);
    lc.context.resize(s, h);
    lc.probs.resize(static_cast<std::size_t>(heads));
    for (int a = 0; a < heads; ++a) {
      const auto col = static_cast<Eigen::Index>(a) * d;
      Tensor<T> scores = (lc.q.middleCols(col, d) * lc.k.middleCols(col, d).transpose()) * score_scale;
      scores.rowwise() += key_bias;
      for (Eigen::Index i = 0; i < s; ++i) {
        const T mx = scores.row(i).maxCoeff();
        scores.row(i) = (scores.row(i).array() - mx).exp().matrix().cwiseProduct(key_keep);
        scores.row(i) /= scores.row(i).sum();
      }
      lc.context.middleCols(col, d) = scores * lc.v.middleCols(col, d);
      lc.probs[static_cast<std::size_t>(a)] = std::move(scores);
    }
    Tensor<T> attn = (lc.context * w.attn_out_w).rowwise() + w.attn_out_b.row(0);
    if (drop) {
      lc.attn_dropout = dropout_mask<T>(s, h, c.dropout, *dropout_rng);
      attn = attn.cwiseProduct(lc.attn_dropout);
    }
    lc.attn_out = layer_norm<T>(x + attn, w.attn_norm_scale, w.attn_norm_shift, eps, lc.attn_norm);

    lc.ffn_pre = (lc.attn_out * w.ffn_in_w).rowwise() + w.ffn_in_b.row(0);
    lc.ffn_act = lc.ffn_pre.unaryExpr([](T v) { return gelu(v); });
    Tensor<T> ffn = (lc.ffn_act * w.ffn_out_w).rowwise() + w.ffn_out_b.row(0);
    if (drop) {
      lc.ffn_dropout = dropout_mask<T>(s, h, c.dropout, *dropout_rng);
      ffn = ffn.cwiseProduct(lc.ffn_dropout);
    }
    x = layer_norm<T>(lc.attn_out + ffn, w.ffn_norm_scale, w.ffn_norm_shift, eps, lc.ffn_norm);
  }
  ex.cls = x.row(0);
  Tensor<T> logits = ex.cls * p.classifier_w + p.classifier_b;
  return logits;
}

// Accumulates gradients of one example given dL/dlogits (1 x n_classes).
template <typename T>
void backward_example(const EncoderParams<T>& p, const ExampleCache<T>& ex, const Tensor<T>& dlogits,
                      EncoderParams<T>& g) {
  const auto& c = p.config;
  const auto s = static_cast<Eigen::Index>(ex.ids.size());
  const Eigen::Index h = c.hidden;
  const Eigen::Index d = c.head_size();
  using std::sqrt;
  const T score_scale = T(1) / sqrt(static_cast<T>(d));

  g.classifier_w.noalias() += ex.cls.transpose() * dlogits;
  g.classifier_b += dlogits;
  Tensor<T> dx = Tensor<T>::Zero(s, h);
  dx.row(0) = dlogits * p.classifier_w.transpose();

  for (std::size_t l = p.layers.size(); l-- > 0;) {
    const auto& w = p.layers[l];
    auto& gw = g.layers[l];
    const auto& lc = ex.layers[l];

    // Output layer norm over (attn_out + ffn).
    Tensor<T> dsum = layer_norm_backward<T>(dx, w.ffn_norm_scale, lc.ffn_norm, gw.ffn_norm_scale, gw.ffn_norm_shift);
    Tensor<T> dattn_out = dsum;
    Tensor<T> dffn = lc.ffn_dropout.size() ? Tensor<T>(dsum.cwiseProduct(lc.ffn_dropout)) : dsum;
    gw.ffn_out_w.noalias() += lc.ffn_act.transpose() * dffn;
    gw.ffn_out_b += dffn.colwise().sum();
    Tensor<T> dact = dffn * w.ffn_out_w.transpose();
    Tensor<T> dpre = dact.cwiseProduct(lc.ffn_pre.unaryExpr([](T v) { return gelu_grad(v); }));
    gw.ffn_in_w.noalias() += lc.attn_out.transpose() * dpre;
    gw.ffn_in_b += dpre.colwise().sum();
    dattn_out.noalias() += dpre * w.ffn_in_w.transpose();

    // Attention layer norm over (input + attn).
    Tensor<T> dres = layer_norm_backward<T>(dattn_out, w.attn_norm_scale, lc.attn_norm, gw.attn_norm_scale,
                                            gw.attn_norm_shift);
    Tensor<T> dinput = dres;
    Tensor<T> dattn = lc.attn_dropout.size() ? Tensor<T>(dres.cwiseProduct(lc.attn_dropout)) : dres;
    gw.attn_out_w.noalias() += lc.context.transpose() * dattn;
    gw.attn_out_b += dattn.colwise().sum();
    Tensor<T> dcontext = dattn * w.attn_out_w.transpose();

    Tensor<T> dq(s, h), dk(s, h), dv(s, h);
    for (int a = 0; a < c.heads; ++a) {
      const auto col = static_cast<Eigen::Index>(a) * d;
      const auto& probs = lc.probs[static_cast<std::size_t>(a)];
      const Tensor<T> dctx = dcontext.middleCols(col, d);
      dv.middleCols(col, d) = probs.transpose() * dctx;
      Tensor<T> dprobs = dctx * lc.v.middleCols(col, d).transpose();
      // Softmax Jacobian, row by row: ds = p * (dp - <dp, p>).
      for (Eigen::Index i = 0; i < s; ++i) {
        const T inner = dprobs.row(i).dot(probs.row(i));
        dprobs.row(i) = probs.row(i).cwiseProduct((dprobs.row(i).array() - inner).matrix());
      }
      dprobs *= score_scale;
      dq.middleCols(col, d) = dprobs * lc.k.middleCols(col, d);
      dk.middleCols(col, d) = dprobs.transpose() * lc.q.middleCols(col, d);
    }
    gw.query_w.noalias() += lc.input.transpose() * dq;
    gw.query_b += dq.colwise().sum();
    gw.key_w.noalias() += lc.input.transpose() * dk;
    gw.key_b += dk.colwise().sum();
    gw.value_w.noalias() += lc.input.transpose() * dv;
    gw.value_b += dv.colwise().sum();
    dinput.noalias() += dq * w.query_w.transpose();
    dinput.noalias() += dk * w.key_w.transpose();
    dinput.noalias() += dv * w.value_w.transpose();
    dx = std::move(dinput);
  }

  if (ex.embed_dropout.size()) dx = dx.cwiseProduct(ex.embed_dropout);
  const Tensor<T> demb = layer_norm_backward<T>(dx, p.embed_norm_scale, ex.embed_norm, g.embed_norm_scale,
                                                g.embed_norm_shift);
  for (Eigen::Index i = 0; i < s; ++i) {
    g.word_embeddings.row(ex.ids[static_cast<std::size_t>(i)]) += demb.row(i);
    g.position_embeddings.row(i) += demb.row(i);
    g.segment_embeddings.row(ex.segments[static_cast<std::size_t>(i)]) += demb.row(i);
  }
}

}  // namespace detail

/// Logits for a batch. Passing a generator enables dropout (training mode);
/// nullptr runs the deterministic evaluation pass.
template <typename T>
ForwardResult<T> forward(const EncoderParams<T>& params, std::span<const EncodedInput> batch, Rng* dropout_rng = nullptr) {
  ForwardResult<T> out;
  out.logits.resize(static_cast<Eigen::Index>(batch.size()), params.config.n_classes);
  out.cache.examples.resize(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b)
    out.logits.row(static_cast<Eigen::Index>(b)) =
        detail::forward_example<T>(params, batch[b], dropout_rng, out.cache.examples[b]);
  return out;
}

/// Row-wise softmax.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits) {
  Tensor<T> p(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const T mx = logits.row(r).maxCoeff();
    p.row(r) = (logits.row(r).array() - mx).exp().matrix();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

/// Mean sparse categorical cross-entropy of a batch of logits.
template <typename T>
T cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
  using std::exp;
  using std::log;
  T total = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const T mx = logits.row(r).maxCoeff();
    const T lse = mx + log((logits.row(r).array() - mx).exp().sum());
    total += lse - logits(r, labels[static_cast<std::size_t>(r)]);
  }
  return total / static_cast<T>(logits.rows());
}

template <typename T>
struct LossAndGrad {
  T loss = 0;
  EncoderParams<T> grads;
  Tensor<T> logits;
};

/// Mean cross-entropy over the batch and its exact gradient w.r.t. every parameter.
template <typename T>
LossAndGrad<T> loss_and_grad(const EncoderParams<T>& params, std::span<const EncodedInput> batch,
                             std::span<const int> labels, Rng* dropout_rng = nullptr) {
  if (batch.empty()) throw DataError("empty batch");
  if (batch.size() != labels.size()) throw ShapeError("batch and label counts differ");
  for (int y : labels)
    if (y < 0 || y >= params.config.n_classes)
      throw DataError("label " + std::to_string(y) + " outside [0," + std::to_string(params.config.n_classes) + ")");

  auto fwd = forward<T>(params, batch, dropout_rng);
  LossAndGrad<T> out;
  out.loss = cross_entropy<T>(fwd.logits, labels);
  using std::isfinite;
  if (!isfinite(out.loss))
    throw NumericError("non-finite loss " + std::to_string(static_cast<double>(out.loss)) +
                       "; check learning rate and inputs");

  out.grads = EncoderParams<T>::zeros(params.config);
  const Tensor<T> probs = softmax_rows<T>(fwd.logits);
  const T inv_batch = T(1) / static_cast<T>(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    Tensor<T> dlogits = probs.row(static_cast<Eigen::Index>(b)) * inv_batch;
    dlogits(0, labels[b]) -= inv_batch;
    detail::backward_example<T>(params, fwd.cache.examples[b], dlogits, out.grads);
  }
  out.logits = std::move(fwd.logits);
  return out;
}

/// Argmax class per example (lowest index on ties), evaluation mode.
template <typename T>
std::vector<int> predict_classes(const EncoderParams<T>& params, std::span<const EncodedInput> inputs,
                                 std::size_t chunk = 64) {
  std::vector<int> out;
  out.reserve(inputs.size());
  for (std::size_t start = 0; start < inputs.size(); start += chunk) {
    const auto n = std::min(chunk, inputs.size() - start);
    const auto fwd = forward<T>(params, inputs.subspan(start, n));
    for (Eigen::Index r = 0; r < fwd.logits.rows(); ++r) {
      Eigen::Index best = 0;
      for (Eigen::Index cidx = 1; cidx < fwd.logits.cols(); ++cidx)
        if (fwd.logits(r, cidx) > fwd.logits(r, best)) best = cidx;
      out.push_back(static_cast<int>(best));
    }
  }
  return out;
}

}  // namespace revsent
