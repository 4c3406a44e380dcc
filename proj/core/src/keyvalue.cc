// Copyright 2026 The attmot Authors.
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

#include "attmot/keyvalue.h"

#include <charconv>
#include <fstream>
#include <sstream>

namespace attmot {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

}  // namespace

KeyValueDoc KeyValueDoc::parse(std::istream& in,
                               std::string_view expected_kind) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty config document");
  const std::string prefix = "# attmot-";
  std::string_view header = trim(line);
  if (header.substr(0, prefix.size()) != prefix) {
    throw ConfigError("missing '# attmot-<kind> v<N>' header");
  }
  header.remove_prefix(prefix.size());
  const auto space = header.find(' ');
  if (space == std::string_view::npos || header.size() < space + 3 ||
      header[space + 1] != 'v') {
    throw ConfigError("malformed config header: " + line);
  }
  KeyValueDoc doc;
  doc.kind_ = std::string(header.substr(0, space));
  doc.version_ = parse_number<int>("header", std::string(header.substr(space + 2)));
  if (!expected_kind.empty() && doc.kind_ != expected_kind) {
    throw ConfigError("expected a '" + std::string(expected_kind) +
                      "' document, got '" + doc.kind_ + "'");
  }
  if (doc.version_ != 1) {
    throw ConfigError("unsupported config version " +
                      std::to_string(doc.version_));
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key(trim(t.substr(0, eq)));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    }
    if (doc.entries_.count(key)) {
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" +
                        key + "'");
    }
    doc.entries_[key] = std::string(trim(t.substr(eq + 1)));
  }
  return doc;
}

KeyValueDoc KeyValueDoc::load(const std::string& path,
                              std::string_view expected_kind) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse(in, expected_kind);
}

std::string KeyValueDoc::get_string(const std::string& key,
                                    std::string fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double KeyValueDoc::get_double(const std::string& key, double fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : parse_number<double>(key, it->second);
}

std::int64_t KeyValueDoc::get_int(const std::string& key,
                                  std::int64_t fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback
                              : parse_number<std::int64_t>(key, it->second);
}

std::uint64_t KeyValueDoc::get_uint(const std::string& key,
                                    std::uint64_t fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback
                              : parse_number<std::uint64_t>(key, it->second);
}

bool KeyValueDoc::get_bool(const std::string& key, bool fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<std::string> KeyValueDoc::get_list(const std::string& key) const {
  std::vector<std::string> out;
  const auto it = entries_.find(key);
  if (it == entries_.end()) return out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string_view t = trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::vector<double> KeyValueDoc::get_double_list(
    const std::string& key, std::vector<double> fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  for (const auto& item : get_list(key)) {
    out.push_back(parse_number<double>(key, item));
  }
  return out;
}

void KeyValueDoc::require_known(const std::set<std::string>& known) const {
  for (const auto& [key, value] : entries_) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
}

void KeyValueDoc::write(std::ostream& out) const {
  out << "# attmot-" << kind_ << " v" << version_ << '\n';
  for (const auto& [key, value] : entries_) out << key << " = " << value << '\n';
}

}  // namespace attmot
