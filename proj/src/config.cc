// Copyright 2026 The vqlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vqlab/config.h"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace vqlab {
namespace {

std::string Trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

int64_t ParseInt(const std::string& text, const std::string& what) {
  int64_t v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError(what + ": expected an integer, got '" + text + "'");
  }
  return v;
}

uint64_t ParseUint(const std::string& text, const std::string& what) {
  uint64_t v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError(what + ": expected a non-negative integer, got '" +
                      text + "'");
  }
  return v;
}

double ParseDouble(const std::string& text, const std::string& what) {
  if (text == "inf" || text == "+inf") return HUGE_VAL;
  if (text == "-inf") return -HUGE_VAL;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE ||
      std::isnan(v)) {
    throw ConfigError(what + ": expected a number, got '" + text + "'");
  }
  return v;
}

bool ParseBool(const std::string& text, const std::string& what) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(what + ": expected true/false, got '" + text + "'");
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("FormatDouble failed");
  return std::string(buf, ptr);
}

KeyValueConfig KeyValueConfig::Parse(std::istream& in) {
  KeyValueConfig cfg;
  std::string current;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = Trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError("line " + std::to_string(line_no) +
                          ": malformed section header '" + line + "'");
      }
      current = Trim(line.substr(1, line.size() - 2));
      if (cfg.HasSection(current)) {
        throw ConfigError("line " + std::to_string(line_no) +
                          ": duplicate section [" + current + "]");
      }
      cfg.sections_.emplace_back(current, Section{});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key=value, got '" + line + "'");
    }
    const std::string key = Trim(line.substr(0, eq));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    }
    if (cfg.Find(current, key)) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" +
                        key + "'");
    }
    cfg.Set(current, key, Trim(line.substr(eq + 1)));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::ParseString(const std::string& text) {
  std::istringstream in(text);
  return Parse(in);
}

KeyValueConfig KeyValueConfig::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return Parse(in);
}

void KeyValueConfig::Write(std::ostream& out) const {
  bool first = true;
  for (const auto& [name, entries] : sections_) {
    if (!name.empty()) {
      if (!first) out << '\n';
      out << '[' << name << "]\n";
    }
    for (const auto& [k, v] : entries) out << k << '=' << v << '\n';
    first = false;
  }
}

std::string KeyValueConfig::ToString() const {
  std::ostringstream out;
  Write(out);
  return out.str();
}

bool KeyValueConfig::HasSection(const std::string& name) const {
  return std::any_of(sections_.begin(), sections_.end(),
                     [&](const auto& s) { return s.first == name; });
}

std::vector<std::string> KeyValueConfig::SectionNames() const {
  std::vector<std::string> names;
  for (const auto& s : sections_) names.push_back(s.first);
  return names;
}

const KeyValueConfig::Section& KeyValueConfig::GetSection(
    const std::string& name) const {
  for (const auto& s : sections_) {
    if (s.first == name) return s.second;
  }
  throw ConfigError("missing section [" + name + "]");
}

void KeyValueConfig::Set(const std::string& section, const std::string& key,
                         const std::string& value) {
  auto it = std::find_if(sections_.begin(), sections_.end(),
                         [&](const auto& s) { return s.first == section; });
  if (it == sections_.end()) {
    sections_.emplace_back(section, Section{});
    it = std::prev(sections_.end());
  }
  for (auto& [k, v] : it->second) {
    if (k == key) {
      v = value;
      return;
    }
  }
  it->second.emplace_back(key, value);
}

std::optional<std::string> KeyValueConfig::Find(const std::string& section,
                                                const std::string& key) const {
  for (const auto& s : sections_) {
    if (s.first != section) continue;
    for (const auto& [k, v] : s.second) {
      if (k == key) return v;
    }
  }
  return std::nullopt;
}

std::string KeyValueConfig::GetString(const std::string& section,
                                      const std::string& key,
                                      const std::string& fallback) const {
  return Find(section, key).value_or(fallback);
}

int64_t KeyValueConfig::GetInt(const std::string& section,
                               const std::string& key, int64_t fallback) const {
  auto v = Find(section, key);
  return v ? ParseInt(*v, section + "." + key) : fallback;
}

uint64_t KeyValueConfig::GetUint(const std::string& section,
                                 const std::string& key,
                                 uint64_t fallback) const {
  auto v = Find(section, key);
  return v ? ParseUint(*v, section + "." + key) : fallback;
}

double KeyValueConfig::GetDouble(const std::string& section,
                                 const std::string& key,
                                 double fallback) const {
  auto v = Find(section, key);
  return v ? ParseDouble(*v, section + "." + key) : fallback;
}

bool KeyValueConfig::GetBool(const std::string& section, const std::string& key,
                             bool fallback) const {
  auto v = Find(section, key);
  return v ? ParseBool(*v, section + "." + key) : fallback;
}

}  // namespace vqlab
