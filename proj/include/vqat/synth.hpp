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
#include <string>
#include <string_view>
#include <vector>

#include "vqat/common.hpp"

namespace vqat::synth {

// Toy narrated-video corpus. Each narrated video walks through a few steps;
// a step names one object in a templated sentence while the per-second
// features carry that object's fixed vector. Held-out videos reuse the
// scheme without narration and come with annotated questions whose wording
// never names the object, so only the visual stream identifies the answer.
struct SynthConfig {
  int videos = 50;  // narrated videos; held-out splits are added on top
  uint64_t seed = 0;
  int feature_dim = 32;
  int steps_per_video = 5;
  double signal = 1.0;
  double noise = 0.1;
  double background = 0.3;  // per-video constant offset

  void validate() const;

  template <typename V>
  void visit(V&& v) {
    v("videos", videos);
    v("seed", seed);
    v("feature_dim", feature_dim);
    v("steps_per_video", steps_per_video);
    v("signal", signal);
    v("noise", noise);
    v("background", background);
  }
};

struct SynthSummary {
  size_t narrated_videos = 0;
  size_t eval_examples = 0;
  size_t downstream_examples = 0;
  size_t vocabulary_size = 0;
};

// Writes, under `out`:
//   transcripts.jsonl, features/<id>.vqf, manifest.jsonl,
//   eval.jsonl, downstream_train.jsonl, vocab.txt
SynthSummary write_corpus(const SynthConfig& config, const std::filesystem::path& out);

// The closed set of object words.
const std::vector<std::string>& objects();

// Unit vector in R^dim seeded by an FNV-1a hash of `word`.
Vector hash_to_vector(std::string_view word, int dim);

}  // namespace vqat::synth
