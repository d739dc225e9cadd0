// Copyright 2026 The occluded-crosswalk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CROSSWALK__CONFIG_HPP_
#define CROSSWALK__CONFIG_HPP_

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace crosswalk {

/// Raised for malformed or missing configuration entries. The message carries
/// the source (file path or "<string>") and line number when known.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline double parse_double(std::string_view text, const std::string& context) {
  text = trim(text);
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(context + ": expected a number, got '" + std::string(text) + "'");
  }
  return value;
}

inline long long parse_integer(std::string_view text, const std::string& context) {
  text = trim(text);
  long long value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(context + ": expected an integer, got '" + std::string(text) + "'");
  }
  return value;
}

inline bool parse_bool(std::string_view text, const std::string& context) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(context + ": expected a boolean, got '" + std::string(text) + "'");
}

/// Whitespace-separated numbers, e.g. "31.5 -1.6 4.7 2.0 0".
inline std::vector<double> parse_doubles(std::string_view text, const std::string& context) {
  std::vector<double> out;
  std::istringstream in{std::string(text)};
  std::string token;
  while (in >> token) out.push_back(parse_double(token, context));
  return out;
}

}  // namespace detail

/// Plain-text `key = value` configuration.
///
/// `#` starts a comment, blank lines are ignored and a key may repeat (used
/// for lists such as several occluders). Lookups of a repeated key through
/// the scalar accessors return the last occurrence.
class KeyValueConfig {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  KeyValueConfig() = default;

  static KeyValueConfig from_string(std::string_view text, std::string source = "<string>") {
    KeyValueConfig cfg;
    cfg.source_ = std::move(source);
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto nl = text.find('\n', pos);
      std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
      pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError(cfg.source_ + ":" + std::to_string(line_no) + ": missing '=' in '" + std::string(line) + "'");
      }
      const auto key = detail::trim(line.substr(0, eq));
      if (key.empty()) throw ConfigError(cfg.source_ + ":" + std::to_string(line_no) + ": empty key");
      cfg.entries_[std::string(key)].push_back({std::string(detail::trim(line.substr(eq + 1))), line_no});
    }
    return cfg;
  }

  static KeyValueConfig from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    auto cfg = from_string(buffer.str(), path.string());
    cfg.directory_ = path.parent_path();
    return cfg;
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& source() const { return source_; }

  /// Resolves a path-valued entry relative to the directory of the file it came from.
  std::filesystem::path path(const std::string& key) const {
    std::filesystem::path p = string(key);
    if (p.is_relative() && !directory_.empty()) p = directory_ / p;
    return p;
  }

  const std::string& string(const std::string& key) const { return last(key).value; }
  std::string string_or(const std::string& key, std::string fallback) const {
    return has(key) ? string(key) : std::move(fallback);
  }

  double number(const std::string& key) const {
    const auto& e = last(key);
    return detail::parse_double(e.value, context(key, e));
  }
  double number_or(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  long long integer(const std::string& key) const {
    const auto& e = last(key);
    return detail::parse_integer(e.value, context(key, e));
  }
  long long integer_or(const std::string& key, long long fallback) const {
    return has(key) ? integer(key) : fallback;
  }

  bool boolean(const std::string& key) const {
    const auto& e = last(key);
    return detail::parse_bool(e.value, context(key, e));
  }
  bool boolean_or(const std::string& key, bool fallback) const { return has(key) ? boolean(key) : fallback; }

  /// Every occurrence of `key`, each parsed as a whitespace-separated number list.
  std::vector<std::vector<double>> number_lists(const std::string& key) const {
    std::vector<std::vector<double>> out;
    if (auto it = entries_.find(key); it != entries_.end()) {
      for (const auto& e : it->second) out.push_back(detail::parse_doubles(e.value, context(key, e)));
    }
    return out;
  }

  std::string context(const std::string& key, const Entry& e) const {
    return source_ + ":" + std::to_string(e.line) + ": key '" + key + "'";
  }

 private:
  const Entry& last(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError(source_ + ": missing required key '" + key + "'");
    return it->second.back();
  }

  std::map<std::string, std::vector<Entry>> entries_;
  std::string source_ = "<string>";
  std::filesystem::path directory_;
};

}  // namespace crosswalk

#endif  // CROSSWALK__CONFIG_HPP_
