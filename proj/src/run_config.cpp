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

#include "vqat/run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "vqat/fields.hpp"

namespace vqat::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename Section>
void append_unique(KeyValues& out, const Section& section) {
  for (auto& kv : to_fields(section)) {
    bool seen = false;
    for (const auto& o : out) seen = seen || o.first == kv.first;
    if (!seen) out.push_back(std::move(kv));
  }
}

struct Own {
  RunConfig* cfg;
  template <typename V>
  void visit(V&& v) {
    cfg->visit_own(v);
  }
};

}  // namespace

bool RunConfig::set(const std::string& key, const std::string& value) {
  Own own{this};
  bool found = set_field(own, key, value);
  found = set_field(model, key, value) || found;
  found = set_field(train, key, value) || found;
  found = set_field(gen, key, value) || found;
  found = set_field(synth, key, value) || found;
  if (found) explicit_keys.insert(key);
  return found;
}

KeyValues RunConfig::fields() const {
  KeyValues out;
  Own own{const_cast<RunConfig*>(this)};
  append_unique(out, own);
  append_unique(out, model);
  append_unique(out, train);
  append_unique(out, gen);
  append_unique(out, synth);
  return out;
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& kv : RunConfig{}.fields()) out.push_back(kv.first);
  return out;
}

KeyValues parse_config_text(const std::string& text, const std::string& origin) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config", origin + ":" + std::to_string(n) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ValidationError("config", origin + ":" + std::to_string(n) + ": empty key");
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

std::string format_config(const RunConfig& config) {
  std::ostringstream out;
  out << "# effective configuration of `vqat " << config.subcommand << "`\n";
  for (const auto& [k, v] : config.fields()) out << k << " = " << v << "\n";
  return out.str();
}

RunConfig resolve_config(const std::string& subcommand, const std::optional<std::filesystem::path>& file,
                         const KeyValues& flags) {
  KeyValues from_file;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ValidationError("config", "cannot read " + file->string());
    std::stringstream buf;
    buf << in.rdbuf();
    from_file = parse_config_text(buf.str(), file->string());
  }

  // The preset picks the base defaults, so it is looked up first.
  std::string preset = "desk";
  for (const KeyValues* layer : {static_cast<const KeyValues*>(&from_file), &flags}) {
    for (const auto& [k, v] : *layer) {
      if (k == "preset") preset = v;
    }
  }
  RunConfig cfg;
  cfg.subcommand = subcommand;
  if (preset == "full") {
    cfg.model = ModelConfig::full();
    cfg.train = subcommand == "pretrain" ? train::TrainConfig::full_pretrain() : train::TrainConfig::full_finetune();
  } else if (preset != "desk") {
    throw ValidationError("preset", "expected desk or full, got '" + preset + "'");
  }
  if (subcommand == "finetune" || subcommand == "probe") cfg.train.mode = subcommand;

  for (const KeyValues* layer : {static_cast<const KeyValues*>(&from_file), &flags}) {
    for (const auto& [k, v] : *layer) {
      if (!cfg.set(k, v)) throw ValidationError(k, "unknown configuration key");
    }
  }

  if (cfg.out.empty()) {
    const char* root = std::getenv("VQAT_OUT_ROOT");
    const std::filesystem::path base = root && *root ? std::filesystem::path(root) : std::filesystem::path("runs");
    cfg.out = (base / subcommand).string();
  }
  return cfg;
}

}  // namespace vqat::cli
