// Copyright 2026 The Aliasfree Authors.
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

#ifndef ALIASFREE_CONFIG_H_
#define ALIASFREE_CONFIG_H_

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "aliasfree/types.h"

namespace aliasfree {

// Raised for configuration and usage mistakes (CLI exit code 1); everything
// else maps to a runtime failure (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat `key = value` text with optional [section] headers; a header prefixes
// the following keys as `section.key`. No nesting beyond that.
class RunConfig {
 public:
  RunConfig() = default;
  static RunConfig FromFile(const std::string& path);

  void Set(const std::string& key, const std::string& value);
  // "key=value" from a --set flag.
  void ApplyOverride(const std::string& assignment);

  bool Has(const std::string& key) const;
  std::string Str(const std::string& key, const std::string& fallback) const;
  std::string RequiredStr(const std::string& key) const;
  int Int(const std::string& key, int fallback) const;
  FPType Real(const std::string& key, FPType fallback) const;
  bool Flag(const std::string& key, bool fallback) const;
  uint64_t Seed(uint64_t fallback) const;

  // Rejects keys outside `allowed`, listing every offender.
  void CheckKeys(const std::vector<std::string>& allowed) const;
  void WriteResolved(const std::string& path) const;
  // FNV-1a of the resolved text, eight hex digits.
  std::string Hash() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

struct ManifestEntry {
  std::string file;       // relative to the corpus directory
  std::string kind;
  std::string pair_file;  // clean reference for noisy items; empty otherwise
  FPType freq_hz = 0.0;
  FPType level_db = 0.0;
  FPType snr_db = 0.0;
};

void WriteManifest(const std::string& dir,
                   const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> ReadManifest(const std::string& dir);

}  // namespace aliasfree

#endif  // ALIASFREE_CONFIG_H_
