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

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "vqat/qagen.hpp"

namespace vqat::qagen {

// A long-lived child process speaking line-delimited JSON on stdin/stdout.
// Request:  {"stage": "...", "sentence": "...", "answer": "...", "beam_width": n}
// Response: {"outputs": [...]}
class ExternalCommand {
 public:
  explicit ExternalCommand(const std::string& command);
  ~ExternalCommand();
  ExternalCommand(const ExternalCommand&) = delete;
  ExternalCommand& operator=(const ExternalCommand&) = delete;

  std::vector<std::string> call(const nlohmann::json& request);

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::string command_;
};

// Routes all three stages through one external command.
GeneratorPlugins make_external_plugins(std::shared_ptr<ExternalCommand> command,
                                       const GenConfig& cfg);

}  // namespace vqat::qagen
