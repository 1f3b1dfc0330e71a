// Copyright 2026 The bevda Authors
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

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bevda {

/// Flat `section.key = value` configuration. Blank lines and text after '#'
/// are ignored; a repeated key keeps its last value.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<string>");
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  std::vector<std::string> keys() const;
  const std::string& origin() const { return origin_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Whitespace or comma separated numbers.
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;

  std::string to_text() const;

 private:
  const std::string& raw(const std::string& key) const;

  std::string origin_;
  std::map<std::string, std::string> values_;
};

}  // namespace bevda
