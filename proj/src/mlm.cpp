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

#include "vqat/mlm.hpp"

#include <cmath>

#include "vqat/common.hpp"
#include "vqat/losses.hpp"

namespace vqat::train {

void MlmConfig::validate() const {
  auto unit = [](const char* name, double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(name, "must lie in [0, 1]");
  };
  unit("mlm_prob", prob);
  unit("mlm_mask", mask_share);
  unit("mlm_keep", keep_share);
  unit("mlm_random", random_share);
  if (std::abs(mask_share + keep_share + random_share - 1.0) > 1e-9) {
    throw ValidationError("mlm_mask", "mask/keep/random shares must sum to 1");
  }
}

MlmSample mlm_corrupt(const TokenizedText& text, const MlmConfig& cfg, int token_vocab_size, Rng& rng) {
  MlmSample out;
  out.corrupted = text;
  out.labels.assign(text.ids.size(), kIgnoreLabel);
  out.actions.assign(text.ids.size(), MlmAction::kNone);
  const int first_word = kNumSpecialTokens;
  const int n_words = token_vocab_size - first_word;
  for (size_t i = 0; i < text.ids.size(); ++i) {
    const int id = text.ids[i];
    if (is_special(id) || !text.mask[i]) continue;
    if (!rng.bernoulli(cfg.prob)) continue;
    out.labels[i] = id;
    const double u = rng.uniform();
    if (u < cfg.mask_share) {
      out.corrupted.ids[i] = kMask;
      out.actions[i] = MlmAction::kMask;
    } else if (u < cfg.mask_share + cfg.keep_share || n_words <= 0) {
      out.actions[i] = MlmAction::kKeep;
    } else {
      out.corrupted.ids[i] = first_word + static_cast<int>(rng.below(static_cast<uint64_t>(n_words)));
      out.actions[i] = MlmAction::kRandom;
    }
  }
  return out;
}

}  // namespace vqat::train
