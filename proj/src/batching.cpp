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

#include "vqat/batching.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>

#include "vqat/common.hpp"

namespace vqat::train {

std::vector<Batch> make_batches(const std::vector<std::vector<size_t>>& clips_by_video,
                                int clips_per_batch, int videos_per_batch, Rng& rng,
                                std::vector<std::string>* warnings) {
  if (videos_per_batch < 1) throw ValidationError("videos_per_batch", "must be positive");
  if (clips_per_batch < 1 || clips_per_batch % videos_per_batch != 0) {
    throw ValidationError("clips_per_batch", "must be a positive multiple of videos_per_batch");
  }
  const size_t per_video = static_cast<size_t>(clips_per_batch / videos_per_batch);
  std::vector<size_t> videos;
  for (size_t v = 0; v < clips_by_video.size(); ++v) {
    if (!clips_by_video[v].empty()) videos.push_back(v);
  }
  rng.shuffle(std::span(videos));

  std::vector<Batch> batches;
  for (size_t at = 0; at < videos.size(); at += static_cast<size_t>(videos_per_batch)) {
    const size_t group_end = std::min(videos.size(), at + static_cast<size_t>(videos_per_batch));
    if (group_end - at < static_cast<size_t>(videos_per_batch) && warnings) {
      warnings->push_back("final batch has " + std::to_string(group_end - at) + " of " +
                          std::to_string(videos_per_batch) + " videos");
    }
    Batch batch;
    for (size_t k = at; k < group_end; ++k) {
      std::vector<size_t> clips = clips_by_video[videos[k]];
      if (clips.size() >= per_video) {
        // Partial Fisher-Yates: the first per_video slots are the sample.
        for (size_t i = 0; i < per_video; ++i) {
          const size_t j = i + static_cast<size_t>(rng.below(clips.size() - i));
          std::swap(clips[i], clips[j]);
          batch.push_back(clips[i]);
        }
      } else {
        for (size_t i = 0; i < per_video; ++i) batch.push_back(clips[rng.below(clips.size())]);
      }
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

std::vector<Batch> make_flat_batches(size_t n, int batch_size, Rng& rng) {
  if (batch_size < 1) throw ValidationError("clips_per_batch", "must be positive");
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  rng.shuffle(std::span(order));
  std::vector<Batch> batches;
  for (size_t at = 0; at < n; at += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(n, at + static_cast<size_t>(batch_size));
    batches.emplace_back(order.begin() + static_cast<long>(at), order.begin() + static_cast<long>(end));
  }
  return batches;
}

double cosine_lr(size_t step, size_t total_steps, double lr0) {
  if (total_steps == 0) return lr0;
  const double frac = static_cast<double>(std::min(step, total_steps)) / static_cast<double>(total_steps);
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

}  // namespace vqat::train
