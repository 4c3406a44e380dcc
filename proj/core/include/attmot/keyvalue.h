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

#ifndef ATTMOT_KEYVALUE_H_
#define ATTMOT_KEYVALUE_H_

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace attmot {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat "key = value" document with a mandatory first line
// "# attmot-<kind> v<version>". Blank lines and lines starting with '#' after
// the header are ignored. Keys are unique.
class KeyValueDoc {
 public:
  KeyValueDoc() = default;
  KeyValueDoc(std::string kind, int version)
      : kind_(std::move(kind)), version_(version) {}

  static KeyValueDoc parse(std::istream& in, std::string_view expected_kind);
  static KeyValueDoc load(const std::string& path,
                          std::string_view expected_kind);

  const std::string& kind() const { return kind_; }
  int version() const { return version_; }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void set(const std::string& key, std::string value) {
    entries_[key] = std::move(value);
  }

  std::string get_string(const std::string& key, std::string fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Comma-separated list; whitespace around items is trimmed.
  std::vector<std::string> get_list(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key,
                                      std::vector<double> fallback) const;

  // Throws ConfigError naming the first key not in `known`.
  void require_known(const std::set<std::string>& known) const;

  void write(std::ostream& out) const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::string kind_;
  int version_ = 1;
  std::map<std::string, std::string> entries_;
};

}  // namespace attmot

#endif  // ATTMOT_KEYVALUE_H_
