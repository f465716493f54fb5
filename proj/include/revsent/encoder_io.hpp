#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "revsent/encoder.hpp"
#include "revsent/error.hpp"

namespace revsent {

// Weights file layout (all integers little-endian):
//
//   8 bytes   magic "RSENCWTS"
//   u32       format version
//   u32       header length N
//   N bytes   UTF-8 JSON header: {"config": {...}, "tensors": [{"name", "rows", "cols"}, ...]}
//   then, for each header tensor in order, rows*cols IEEE-754 float32 values, row-major.
//
// Tensor names follow zip_tensors(); dense weights are stored (in x out).
// Externally converted checkpoints only need to follow the same names and shapes.

inline constexpr char kWeightsMagic[8] = {'R', 'S', 'E', 'N', 'C', 'W', 'T', 'S'};
inline constexpr std::uint32_t kWeightsVersion = 1;

struct WeightsHeader {
  std::uint32_t version = 0;
  EncoderConfig config;
  struct TensorInfo {
    std::string name;
    std::int64_t rows = 0, cols = 0;
  };
  std::vector<TensorInfo> tensors;
  std::uint64_t data_offset = 0;
};

namespace detail {

inline nlohmann::json config_to_json(const EncoderConfig& c) {
  return {{"layers", c.layers},         {"hidden", c.hidden},
          {"heads", c.heads},           {"ffn", c.ffn_size()},
          {"vocab_size", c.vocab_size}, {"max_positions", c.max_positions},
          {"type_vocab_size", c.type_vocab_size}, {"n_classes", c.n_classes},
          {"dropout", c.dropout},       {"layer_norm_eps", c.layer_norm_eps}};
}

inline EncoderConfig config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.layers = j.at("layers").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.heads = j.at("heads").get<int>();
  c.ffn = j.at("ffn").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.max_positions = j.at("max_positions").get<int>();
  c.type_vocab_size = j.at("type_vocab_size").get<int>();
  c.n_classes = j.at("n_classes").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.layer_norm_eps = j.at("layer_norm_eps").get<double>();
  return c;
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

inline bool same_shape_config(const EncoderConfig& a, const EncoderConfig& b) {
  return a.layers == b.layers && a.hidden == b.hidden && a.heads == b.heads && a.ffn_size() == b.ffn_size() &&
         a.vocab_size == b.vocab_size && a.max_positions == b.max_positions &&
         a.type_vocab_size == b.type_vocab_size && a.n_classes == b.n_classes;
}

inline std::string describe_mismatch(const EncoderConfig& want, const EncoderConfig& got) {
  std::string s;
  auto cmp = [&](const char* key, long long a, long long b) {
    if (a != b) s += std::string(s.empty() ? "" : ", ") + key + " expected " + std::to_string(a) + " found " + std::to_string(b);
  };
  cmp("L", want.layers, got.layers);
  cmp("H", want.hidden, got.hidden);
  cmp("A", want.heads, got.heads);
  cmp("ffn", want.ffn_size(), got.ffn_size());
  cmp("vocab", want.vocab_size, got.vocab_size);
  cmp("max_positions", want.max_positions, got.max_positions);
  cmp("type_vocab", want.type_vocab_size, got.type_vocab_size);
  cmp("n_classes", want.n_classes, got.n_classes);
  return s;
}

}  // namespace detail

/// Reads only the fixed prefix and JSON header, no tensor data.
inline WeightsHeader read_weights_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  unsigned char prefix[16];
  if (!in.read(reinterpret_cast<char*>(prefix), 16)) throw DataError(path + ": truncated weights header");
  if (std::memcmp(prefix, kWeightsMagic, 8) != 0) throw DataError(path + ": not a weights file (bad magic)");
  WeightsHeader h;
  h.version = detail::get_u32(prefix + 8);
  if (h.version != kWeightsVersion)
    throw DataError(path + ": unsupported weights version " + std::to_string(h.version));
  const auto len = detail::get_u32(prefix + 12);
  std::string json_text(len, '\0');
  if (!in.read(json_text.data(), len)) throw DataError(path + ": truncated weights header");
  try {
    const auto j = nlohmann::json::parse(json_text);
    h.config = detail::config_from_json(j.at("config"));
    for (const auto& t : j.at("tensors"))
      h.tensors.push_back({t.at("name").get<std::string>(), t.at("rows").get<std::int64_t>(),
                           t.at("cols").get<std::int64_t>()});
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": malformed weights header: " + e.what());
  }
  h.data_offset = 16 + len;
  return h;
}

template <typename T>
void save_params(const EncoderParams<T>& params, const std::string& path) {
  nlohmann::json tensors = nlohmann::json::array();
  zip_tensors(
      [&](const std::string& name, TensorRole, const Tensor<T>& t) {
        tensors.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
      },
      params);
  const std::string header = nlohmann::json{{"config", detail::config_to_json(params.config)}, {"tensors", tensors}}.dump();

  std::string out(kWeightsMagic, 8);
  detail::put_u32(out, kWeightsVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  zip_tensors(
      [&](const std::string&, TensorRole, const Tensor<T>& t) {
        for (Eigen::Index i = 0; i < t.size(); ++i)
          detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(t.data()[i])));
      },
      params);
  text::write_file(path, out);
}

/// Tensors present in a weights file, by name.
struct WeightsFile {
  WeightsHeader header;
  std::map<std::string, Tensor<float>> tensors;
};

inline WeightsFile read_weights(const std::string& path) {
  WeightsFile wf;
  wf.header = read_weights_header(path);
  const std::string data = text::read_file(path);
  std::uint64_t pos = wf.header.data_offset;
  for (const auto& info : wf.header.tensors) {
    if (info.rows < 0 || info.cols < 0) throw DataError(path + ": negative shape for " + info.name);
    const auto count = static_cast<std::uint64_t>(info.rows) * static_cast<std::uint64_t>(info.cols);
    if (pos + 4 * count > data.size()) throw DataError(path + ": truncated tensor data for " + info.name);
    Tensor<float> t(info.rows, info.cols);
    const auto* p = reinterpret_cast<const unsigned char*>(data.data() + pos);
    for (std::uint64_t i = 0; i < count; ++i) t.data()[i] = std::bit_cast<float>(detail::get_u32(p + 4 * i));
    pos += 4 * count;
    if (!wf.tensors.emplace(info.name, std::move(t)).second)
      throw DataError(path + ": duplicate tensor " + info.name);
  }
  if (pos != data.size()) throw DataError(path + ": trailing bytes after tensor data");
  return wf;
}

namespace detail {

template <typename T>
void assign_tensors(EncoderParams<T>& params, const WeightsFile& wf, const std::string& path, bool allow_missing) {
  std::size_t used = 0;
  zip_tensors(
      [&](const std::string& name, TensorRole, Tensor<T>& dst) {
        auto it = wf.tensors.find(name);
        if (it == wf.tensors.end()) {
          if (allow_missing) return;
          throw ShapeError(path + ": missing tensor " + name);
        }
        if (it->second.rows() != dst.rows() || it->second.cols() != dst.cols())
          throw ShapeError(path + ": tensor " + name + " has shape " + std::to_string(it->second.rows()) + "x" +
                           std::to_string(it->second.cols()) + ", expected " + std::to_string(dst.rows()) + "x" +
                           std::to_string(dst.cols()));
        dst = it->second.template cast<T>();
        ++used;
      },
      params);
  if (used != wf.tensors.size()) throw ShapeError(path + ": file holds tensors this encoder does not have");
}

}  // namespace detail

/// Loads a file written by save_params. The file's config must match `expected` in every shape field;
/// the returned parameters carry `expected` itself.
template <typename T = float>
EncoderParams<T> load_params(const std::string& path, const EncoderConfig& expected) {
  const auto wf = read_weights(path);
  if (!detail::same_shape_config(expected, wf.header.config))
    throw ShapeError(path + ": config mismatch: " + detail::describe_mismatch(expected, wf.header.config));
  auto params = EncoderParams<T>::zeros(expected);
  detail::assign_tensors(params, wf, path, false);
  return params;
}

/// Loads using the config recorded in the file.
template <typename T = float>
EncoderParams<T> load_params(const std::string& path) {
  const auto wf = read_weights(path);
  auto params = EncoderParams<T>::zeros(wf.header.config);
  detail::assign_tensors(params, wf, path, false);
  return params;
}

/// Pretrained-weight hook: starts from init_params(config, seed) and overwrites
/// every tensor the file provides (e.g. an encoder body without a classifier).
template <typename T = float>
EncoderParams<T> load_pretrained(const std::string& path, const EncoderConfig& config, std::uint64_t seed) {
  const auto wf = read_weights(path);
  auto params = init_params<T>(config, seed);
  detail::assign_tensors(params, wf, path, true);
  return params;
}

}  // namespace revsent
