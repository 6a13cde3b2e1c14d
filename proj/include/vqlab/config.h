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

#ifndef VQLAB_CONFIG_H_
#define VQLAB_CONFIG_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vqlab {

// Invalid configuration values or unsatisfiable settings.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Flat key=value text grouped into [sections]. '#' starts a comment line.
// Section order and key order are preserved; keys before any header belong
// to the unnamed section "".
//
//   [corpus]
//   num_speakers = 50
//   noise_sigma = 0.1
class KeyValueConfig {
 public:
  using Section = std::vector<std::pair<std::string, std::string>>;

  static KeyValueConfig Parse(std::istream& in);
  static KeyValueConfig ParseString(const std::string& text);
  static KeyValueConfig Load(const std::string& path);

  void Write(std::ostream& out) const;
  std::string ToString() const;

  bool HasSection(const std::string& name) const;
  // Section names in file order.
  std::vector<std::string> SectionNames() const;
  const Section& GetSection(const std::string& name) const;

  // Appends or overwrites; creates the section if needed.
  void Set(const std::string& section, const std::string& key,
           const std::string& value);
  std::optional<std::string> Find(const std::string& section,
                                   const std::string& key) const;

  std::string GetString(const std::string& section, const std::string& key,
                        const std::string& fallback) const;
  int64_t GetInt(const std::string& section, const std::string& key,
                 int64_t fallback) const;
  uint64_t GetUint(const std::string& section, const std::string& key,
                   uint64_t fallback) const;
  double GetDouble(const std::string& section, const std::string& key,
                   double fallback) const;
  bool GetBool(const std::string& section, const std::string& key,
               bool fallback) const;

  bool operator==(const KeyValueConfig&) const = default;

 private:
  std::vector<std::pair<std::string, Section>> sections_;
};

// Strict scalar parsers; throw ConfigError naming `what` on failure.
int64_t ParseInt(const std::string& text, const std::string& what);
uint64_t ParseUint(const std::string& text, const std::string& what);
double ParseDouble(const std::string& text, const std::string& what);
bool ParseBool(const std::string& text, const std::string& what);

// Shortest text that parses back to exactly the same double.
std::string FormatDouble(double v);

}  // namespace vqlab

#endif  // VQLAB_CONFIG_H_
