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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vqat/model.hpp"
#include "vqat/qagen.hpp"
#include "vqat/synth.hpp"
#include "vqat/train.hpp"

namespace vqat::cli {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Effective configuration of one invocation: defaults, then the optional
// config file, then command-line flags. Keys form one flat namespace; a key
// shared by several sections (seed) sets all of them.
struct RunConfig {
  std::string subcommand;
  std::string preset = "desk";  // desk | full

  std::string out;
  std::string input;             // generate: transcripts or captions
  std::string output;            // generate: triplets path
  std::string gen_mode = "transcript";
  std::string plugin = "fallback";
  std::string plugin_command;
  std::string triplets;
  std::string transcripts;       // matching_baseline pairs
  std::string features;          // manifest
  std::string examples;          // finetune / probe / multiple_choice
  std::string validation;
  std::string vocab;
  std::string checkpoint;        // eval input; training init
  std::string eval_set;
  std::string protocol = "standard";
  bool ivqa = false;
  bool predictions = false;
  uint64_t seed = 0;

  ModelConfig model;
  train::TrainConfig train;
  qagen::GenConfig gen;
  synth::SynthConfig synth;

  // Keys set by the file or flags, as opposed to defaults.
  std::set<std::string> explicit_keys;

  template <typename V>
  void visit_own(V&& v) {
    v("preset", preset);
    v("out", out);
    v("input", input);
    v("output", output);
    v("gen_mode", gen_mode);
    v("plugin", plugin);
    v("plugin_command", plugin_command);
    v("triplets", triplets);
    v("transcripts", transcripts);
    v("features", features);
    v("examples", examples);
    v("validation", validation);
    v("vocab", vocab);
    v("checkpoint", checkpoint);
    v("eval_set", eval_set);
    v("protocol", protocol);
    v("ivqa", ivqa);
    v("predictions", predictions);
    v("seed", seed);
  }

  // Returns false when no section knows `key`.
  bool set(const std::string& key, const std::string& value);
  // Every key once, in a fixed order.
  KeyValues fields() const;
  static std::vector<std::string> keys();
};

// "key = value" lines; '#' starts a comment. Errors carry the line number.
KeyValues parse_config_text(const std::string& text, const std::string& origin);
std::string format_config(const RunConfig& config);

// Builds the effective config. Unknown keys raise ValidationError.
RunConfig resolve_config(const std::string& subcommand, const std::optional<std::filesystem::path>& file,
                         const KeyValues& flags);

}  // namespace vqat::cli
