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

#include <vector>

#include "vqat/rng.hpp"
#include "vqat/tokenizer.hpp"

namespace vqat::train {

struct MlmConfig {
  double prob = 0.15;
  double mask_share = 0.8;
  double keep_share = 0.1;
  double random_share = 0.1;

  void validate() const;
};

enum class MlmAction : uint8_t { kNone, kMask, kKeep, kRandom };

struct MlmSample {
  TokenizedText corrupted;
  std::vector<int> labels;  // original id at corrupted positions, kIgnoreLabel elsewhere
  std::vector<MlmAction> actions;
};

// Corrupts non-special tokens independently with probability cfg.prob;
// a corrupted token becomes [MASK], stays, or becomes a uniformly drawn
// non-special token according to the three shares.
MlmSample mlm_corrupt(const TokenizedText& text, const MlmConfig& cfg, int token_vocab_size, Rng& rng);

}  // namespace vqat::train
