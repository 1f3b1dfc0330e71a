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

#include "bevda/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "bevda/errors.hpp"

namespace bevda {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  for (char c : key)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
  return true;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected 'section.key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_key(key)) throw ConfigError(origin + ":" + std::to_string(number) + ": bad key '" + key + "'");
    cfg.values_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

const std::string& Config::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(origin_ + ": missing key " + key);
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? raw(key) : fallback;
}

double Config::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const std::string& s = raw(key);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(origin_ + ": " + key + " expects a number, got '" + s + "'");
  return v;
}

int64_t Config::get_int(const std::string& key, int64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string& s = raw(key);
  int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(origin_ + ": " + key + " expects an integer, got '" + s + "'");
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& s = raw(key);
  if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "off" || s == "no") return false;
  throw ConfigError(origin_ + ": " + key + " expects true|false, got '" + s + "'");
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::string s = raw(key);
  for (char& c : s)
    if (c == ',') c = ' ';
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw ConfigError(origin_ + ": " + key + " expects numbers, got '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<double> Config::get_doubles(const std::string& key, std::vector<double> fallback) const {
  return has(key) ? get_doubles(key) : fallback;
}

std::string Config::to_text() const {
  std::ostringstream out;
  for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
  return out.str();
}

}  // namespace bevda
