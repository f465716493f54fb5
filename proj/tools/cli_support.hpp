#pragma once

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "revsent.hpp"

namespace revsent::cli {

namespace fs = std::filesystem;

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kOutputDirEnv = "REVSENT_OUTPUT_DIR";

/// Every key a run config file may carry. Flags map onto the same keys.
inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "in", "out", "reviews", "lexicon", "vocab", "stopwords", "output_dir", "train", "validation", "test",
      "method", "labeling", "seed", "split.ratios", "prefix", "dedup", "strict", "learning_rate", "batch_size",
      "epochs", "decay", "max_len", "grad_clip", "encoder.L", "encoder.H", "encoder.A", "encoder.ffn",
      "encoder.vocab", "encoder.dropout", "grid.lrs", "grid.batch_sizes", "grid.epochs", "jobs", "folds", "models",
      "model", "model_name", "format", "init", "history", "report", "save_models"};
  return keys;
}

/// Config-file values overlaid with command-line flags. Flags win.
class Settings {
public:
  void load_file(const std::string& path) {
    const auto file = KeyValueConfig::load(path);
    for (const auto& [k, v] : file.values()) {
      if (!known_keys().count(k)) throw ConfigError(k, "unknown key in " + path);
      values_.set(k, v);
    }
  }

  void set_flag(const std::string& key, const std::string& value) {
    values_.set(key, value);
    flagged_.insert(key);
  }

  bool from_flag(const std::string& key) const { return flagged_.count(key) != 0; }
  bool has(const std::string& key) const { return values_.has(key); }

  std::optional<std::string> str(const std::string& key) const { return values_.get_string(key); }

  std::string str(const std::string& key, const std::string& fallback) const {
    return values_.get_string(key).value_or(fallback);
  }

  std::string required(const std::string& key) const {
    auto v = values_.get_string(key);
    if (!v || v->empty()) throw ConfigError(key, "required setting is missing");
    return *v;
  }

  double real(const std::string& key, double fallback) const { return values_.get_double(key).value_or(fallback); }

  std::int64_t integer(const std::string& key, std::int64_t fallback) const {
    return values_.get_int(key).value_or(fallback);
  }

  int positive_int(const std::string& key, int fallback) const {
    const auto v = integer(key, fallback);
    if (v < 1 || v > 1'000'000'000) throw ConfigError(key, "must be a positive integer");
    return static_cast<int>(v);
  }

  bool flag(const std::string& key, bool fallback) const { return values_.get_bool(key).value_or(fallback); }

  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    if (auto v = values_.get_string(key))
      for (const auto& part : text::split(*v, ','))
        if (!text::trim(part).empty()) out.emplace_back(text::trim(part));
    return out;
  }

  std::uint64_t seed() const {
    const auto v = integer("seed", 42);
    if (v < 0) throw ConfigError("seed", "must be nonnegative");
    return static_cast<std::uint64_t>(v);
  }

private:
  KeyValueConfig values_;
  std::set<std::string> flagged_;
};

/// Registers a string option whose value, when given, lands in `settings` under `key`.
class FlagBinder {
public:
  explicit FlagBinder(Settings& settings) : settings_(settings) {}

  CLI::Option* add(CLI::App* app, const std::string& flags, const std::string& key, const std::string& help) {
    auto& slot = slots_[app][key];
    return app->add_option(flags, slot, help + "  [" + key + "]");
  }

  CLI::Option* add_switch(CLI::App* app, const std::string& flags, const std::string& key, const std::string& help) {
    auto& slot = switches_[app][key];
    return app->add_flag(flags, slot, help + "  [" + key + "]");
  }

  void apply(const CLI::App* app) {
    for (const auto& [key, value] : slots_[app])
      if (value) settings_.set_flag(key, *value);
    for (const auto& [key, value] : switches_[app])
      if (value) settings_.set_flag(key, "true");
  }

private:
  Settings& settings_;
  std::map<const CLI::App*, std::map<std::string, std::optional<std::string>>> slots_;
  std::map<const CLI::App*, std::map<std::string, bool>> switches_;
};

/// Output location: --out-dir flag, then the environment override, then the
/// config file's output_dir, then the working directory.
inline fs::path output_dir(const Settings& s) {
  if (s.from_flag("output_dir")) return s.required("output_dir");
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return s.str("output_dir", ".");
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Writes primary artifacts and their `.meta` sidecars. Artifacts hold only
/// deterministic content; run identity and timestamps go in the sidecar.
class Artifacts {
public:
  Artifacts(fs::path dir, std::string command, std::uint64_t seed)
      : dir_(std::move(dir)), command_(std::move(command)), seed_(seed) {}

  fs::path resolve(const std::string& name) const {
    const fs::path p(name);
    return p.is_absolute() ? p : dir_ / p;
  }

  fs::path write(const std::string& name, std::string_view contents,
                 const std::vector<std::pair<std::string, std::string>>& meta = {}) const {
    const auto path = resolve(name);
    if (path.has_parent_path()) {
      std::error_code ec;
      fs::create_directories(path.parent_path(), ec);
      if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    text::write_file(path.string(), contents);
    write_meta(path, meta);
    return path;
  }

  /// Sidecar for a file something else already wrote (e.g. a weights file).
  void write_meta(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& meta = {}) const {
    std::string m = "command=" + command_ + "\nseed=" + std::to_string(seed_) + "\ncreated=" + utc_timestamp() +
                    "\nversion=" + kVersion + "\n";
    for (const auto& [k, v] : meta) m += k + "=" + v + "\n";
    text::write_file(path.string() + ".meta", m);
  }

private:
  fs::path dir_;
  std::string command_;
  std::uint64_t seed_;
};

/// One-line JSON error record on stderr.
inline std::string error_line(const std::exception& e) {
  nlohmann::json j;
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    j["error"] = err->kind();
    if (const auto* c = dynamic_cast<const ConfigError*>(err)) j["key"] = c->key();
    if (const auto* d = dynamic_cast<const DataError*>(err); d && d->row() != DataError::npos) j["row"] = d->row();
  } else {
    j["error"] = "internal";
  }
  j["message"] = e.what();
  return j.dump();
}

inline std::string join_args(int argc, char** argv) {
  std::vector<std::string> parts;
  for (int i = 0; i < argc; ++i) parts.emplace_back(i == 0 ? "revsent" : argv[i]);
  return text::join(parts, " ");
}

}  // namespace revsent::cli
