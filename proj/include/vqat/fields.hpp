// Copyright 2026 The vqat Authors.
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

#include <charconv>
#include <cstdio>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "vqat/common.hpp"

namespace vqat {

// Flat key/value reflection for config structs. A config exposes
//   template <typename V> void visit(V&& v) { v("key", member); ... }
// and gets text round-tripping through the helpers below.

inline std::string format_field(int v) { return std::to_string(v); }
inline std::string format_field(bool v) { return v ? "true" : "false"; }
inline std::string format_field(const std::string& v) { return v; }
inline std::string format_field(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
inline std::string format_field(uint64_t v) { return std::to_string(v); }

inline void parse_field(const std::string& key, const std::string& text, int& out) {
  int v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) throw ValidationError(key, "expected an integer, got '" + text + "'");
  out = v;
}
inline void parse_field(const std::string& key, const std::string& text, uint64_t& out) {
  uint64_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) throw ValidationError(key, "expected an unsigned integer, got '" + text + "'");
  out = v;
}
inline void parse_field(const std::string& key, const std::string& text, double& out) {
  try {
    size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    out = v;
  } catch (const std::exception&) {
    throw ValidationError(key, "expected a number, got '" + text + "'");
  }
}
inline void parse_field(const std::string& key, const std::string& text, bool& out) {
  if (text == "true" || text == "1") {
    out = true;
  } else if (text == "false" || text == "0") {
    out = false;
  } else {
    throw ValidationError(key, "expected true/false, got '" + text + "'");
  }
}
inline void parse_field(const std::string&, const std::string& text, std::string& out) { out = text; }

template <typename Config>
std::vector<std::pair<std::string, std::string>> to_fields(const Config& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  const_cast<Config&>(cfg).visit(
      [&](const char* key, auto& member) { out.emplace_back(key, format_field(member)); });
  return out;
}

// Returns false when `key` is not a field of Config.
template <typename Config>
bool set_field(Config& cfg, const std::string& key, const std::string& value) {
  bool found = false;
  cfg.visit([&](const char* name, auto& member) {
    if (!found && key == name) {
      parse_field(key, value, member);
      found = true;
    }
  });
  return found;
}

}  // namespace vqat
