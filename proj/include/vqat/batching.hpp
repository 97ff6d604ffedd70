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

#include <string>
#include <vector>

#include "vqat/rng.hpp"

namespace vqat::train {

using Batch = std::vector<size_t>;

// One epoch of video-grouped batches. Each batch takes `videos_per_batch`
// videos not yet used this epoch and `clips_per_batch / videos_per_batch`
// clips from each: without replacement when the video has enough clips,
// with replacement otherwise. A short final group yields a smaller batch
// and a warning.
std::vector<Batch> make_batches(const std::vector<std::vector<size_t>>& clips_by_video,
                                int clips_per_batch, int videos_per_batch, Rng& rng,
                                std::vector<std::string>* warnings = nullptr);

// Shuffled contiguous chunks of [0, n).
std::vector<Batch> make_flat_batches(size_t n, int batch_size, Rng& rng);

// lr0 * (1 + cos(pi * step / total_steps)) / 2
double cosine_lr(size_t step, size_t total_steps, double lr0);

}  // namespace vqat::train
