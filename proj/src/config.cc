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

#include "aliasfree/config.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace aliasfree {

namespace {

std::string Trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t");
  const size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

}  // namespace

RunConfig RunConfig::FromFile(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  RunConfig cfg;
  std::string line, section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = Trim(t.substr(1, t.size() - 2));
      continue;
    }
    const size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    std::string key = Trim(t.substr(0, eq));
    if (key.empty()) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
    }
    if (!section.empty()) key = section + "." + key;
    cfg.entries_[key] = Trim(t.substr(eq + 1));
  }
  return cfg;
}

void RunConfig::Set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

void RunConfig::ApplyOverride(const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set expects key=value, got: " + assignment);
  }
  entries_[Trim(assignment.substr(0, eq))] = Trim(assignment.substr(eq + 1));
}

bool RunConfig::Has(const std::string& key) const {
  return entries_.count(key) > 0;
}

std::string RunConfig::Str(const std::string& key,
                           const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

std::string RunConfig::RequiredStr(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing required key: " + key);
  return it->second;
}

int RunConfig::Int(const std::string& key, int fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    size_t used = 0;
    const int v = std::stoi(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' is not an integer: " + it->second);
  }
}

FPType RunConfig::Real(const std::string& key, FPType fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    size_t used = 0;
    const FPType v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' is not a number: " + it->second);
  }
}

bool RunConfig::Flag(const std::string& key, bool fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("key '" + key + "' is not a boolean: " + v);
}

uint64_t RunConfig::Seed(uint64_t fallback) const {
  const auto it = entries_.find("seed");
  if (it == entries_.end()) return fallback;
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw ConfigError("seed is not an integer: " + it->second);
  }
}

void RunConfig::CheckKeys(const std::vector<std::string>& allowed) const {
  std::string offenders;
  for (const auto& [key, value] : entries_) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      if (!offenders.empty()) offenders += ", ";
      offenders += key;
    }
  }
  if (!offenders.empty()) {
    std::string known;
    for (const auto& k : allowed) {
      if (!known.empty()) known += ", ";
      known += k;
    }
    throw ConfigError("unknown config keys: " + offenders +
                      " (known keys: " + known + ")");
  }
}

void RunConfig::WriteResolved(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& [key, value] : entries_) os << key << " = " << value << "\n";
}

std::string RunConfig::Hash() const {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const std::string& s) {
    for (const char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
  };
  for (const auto& [key, value] : entries_) {
    mix(key);
    mix("=");
    mix(value);
    mix("\n");
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x",
                static_cast<unsigned>(h ^ (h >> 32)));
  return buf;
}

void WriteManifest(const std::string& dir,
                   const std::vector<ManifestEntry>& entries) {
  std::ofstream os(dir + "/manifest.csv");
  if (!os) throw std::runtime_error("cannot open for writing: " + dir);
  os << "file,kind,freq_hz,level_db,snr_db,pair_file\n";
  char line[256];
  for (const ManifestEntry& e : entries) {
    std::snprintf(line, sizeof(line), "%s,%s,%.9g,%.9g,%.9g,%s\n",
                  e.file.c_str(), e.kind.c_str(), e.freq_hz, e.level_db,
                  e.snr_db, e.pair_file.c_str());
    os << line;
  }
}

std::vector<ManifestEntry> ReadManifest(const std::string& dir) {
  std::ifstream is(dir + "/manifest.csv");
  if (!is) throw std::runtime_error("cannot open manifest in: " + dir);
  std::vector<ManifestEntry> out;
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (Trim(line).empty()) continue;
    std::istringstream ss(line);
    std::string field;
    ManifestEntry e;
    std::getline(ss, e.file, ',');
    std::getline(ss, e.kind, ',');
    std::getline(ss, field, ',');
    e.freq_hz = std::stod(field);
    std::getline(ss, field, ',');
    e.level_db = std::stod(field);
    std::getline(ss, field, ',');
    e.snr_db = std::stod(field);
    std::getline(ss, e.pair_file, ',');
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace aliasfree
