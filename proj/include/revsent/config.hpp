#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "revsent/error.hpp"
#include "revsent/text.hpp"

namespace revsent {

// Flat `key = value` settings. Blank lines and lines starting with '#' are
// ignored; a repeated key keeps its last value. Typed getters throw
// ConfigError naming the key.
class KeyValueConfig {
public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::string_view data) {
    KeyValueConfig c;
    std::size_t line_no = 0;
    for (const auto& raw : text::split(data, '\n')) {
      ++line_no;
      const auto line = text::trim(raw);
      if (line.empty() || line.front() == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw ConfigError("line " + std::to_string(line_no), "expected key = value");
      const auto key = std::string(text::trim(line.substr(0, eq)));
      if (key.empty()) throw ConfigError("line " + std::to_string(line_no), "empty key");
      c.values_[key] = std::string(text::trim(line.substr(eq + 1)));
    }
    return c;
  }

  static KeyValueConfig load(const std::string& path) { return parse(text::read_file(path)); }

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  std::optional<std::string> get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<double> get_double(const std::string& key) const {
    auto s = get_string(key);
    if (!s) return std::nullopt;
    return parse_double(key, *s);
  }

  std::optional<std::int64_t> get_int(const std::string& key) const {
    auto s = get_string(key);
    if (!s) return std::nullopt;
    return parse_int(key, *s);
  }

  std::optional<bool> get_bool(const std::string& key) const {
    auto s = get_string(key);
    if (!s) return std::nullopt;
    const auto v = text::to_lower(*s);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key, "expected a boolean, got '" + *s + "'");
  }

  static double parse_double(const std::string& key, std::string_view s) {
    s = text::trim(s);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
      throw ConfigError(key, "expected a number, got '" + std::string(s) + "'");
    return v;
  }

  static std::int64_t parse_int(const std::string& key, std::string_view s) {
    s = text::trim(s);
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
      throw ConfigError(key, "expected an integer, got '" + std::string(s) + "'");
    return v;
  }

  template <typename T, typename Parse>
  static std::vector<T> parse_list(const std::string& key, std::string_view s, Parse&& parse) {
    std::vector<T> out;
    for (const auto& part : text::split(s, ',')) {
      if (text::trim(part).empty()) throw ConfigError(key, "empty list element");
      out.push_back(static_cast<T>(parse(key, part)));
    }
    return out;
  }

private:
  std::map<std::string, std::string> values_;
};

}  // namespace revsent
