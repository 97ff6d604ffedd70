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

#include <filesystem>

#include <json.hpp>

#include "vqat/model.hpp"

namespace vqat {

// Binary container:
//   "VQCK" | uint32 format_version | uint64 header_len | header JSON
//   | uint32 tensor_count | per tensor: uint32 name_len, name,
//     uint32 rows, uint32 cols, uint8 dtype (8 = float64 LE), data.
// The header JSON echoes the model config, the token vocabulary and any
// caller metadata (training history, run config).
inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Model& model, const nlohmann::json& metadata,
                     const std::filesystem::path& path);

struct LoadedCheckpoint {
  Model model;
  nlohmann::json metadata;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace vqat
