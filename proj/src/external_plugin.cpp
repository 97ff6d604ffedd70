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

#include "vqat/external_plugin.hpp"

#include <csignal>
#include <cerrno>
#include <cstring>
#include <stdexcept>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

namespace vqat::qagen {

using nlohmann::json;

ExternalCommand::ExternalCommand(const std::string& command) : command_(command) {
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) {
    throw std::runtime_error("plug-in: pipe() failed: " + std::string(std::strerror(errno)));
  }
  pid_ = fork();
  if (pid_ < 0) throw std::runtime_error("plug-in: fork() failed");
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  fcntl(to_child_, F_SETFD, FD_CLOEXEC);
  fcntl(from_child_, F_SETFD, FD_CLOEXEC);
  // A dead child must surface as an error from call(), not kill us.
  std::signal(SIGPIPE, SIG_IGN);
}

ExternalCommand::~ExternalCommand() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    waitpid(pid_, &status, 0);
  }
}

std::vector<std::string> ExternalCommand::call(const json& request) {
  const std::string line = request.dump() + "\n";
  size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = write(to_child_, line.data() + written, line.size() - written);
    if (n <= 0) throw std::runtime_error("plug-in '" + command_ + "': write failed");
    written += static_cast<size_t>(n);
  }
  size_t newline;
  while ((newline = buffer_.find('\n')) == std::string::npos) {
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof(chunk));
    if (n <= 0) throw std::runtime_error("plug-in '" + command_ + "': closed its output");
    buffer_.append(chunk, static_cast<size_t>(n));
  }
  const std::string reply = buffer_.substr(0, newline);
  buffer_.erase(0, newline + 1);
  json parsed;
  try {
    parsed = json::parse(reply);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("plug-in '" + command_ + "': malformed reply: " + e.what());
  }
  if (!parsed.is_object() || !parsed.contains("outputs") || !parsed["outputs"].is_array()) {
    throw std::runtime_error("plug-in '" + command_ + "': reply lacks \"outputs\" array");
  }
  std::vector<std::string> outputs;
  for (const auto& o : parsed["outputs"]) {
    if (o.is_string()) outputs.push_back(o.get<std::string>());
  }
  return outputs;
}

GeneratorPlugins make_external_plugins(std::shared_ptr<ExternalCommand> command,
                                       const GenConfig& cfg) {
  GeneratorPlugins plugins;
  const int beam = cfg.beam_width_hint;
  plugins.punctuator = [command, beam](const std::string& raw) {
    auto out = command->call({{"stage", "punctuate"}, {"sentence", raw}, {"beam_width", beam}});
    return out.empty() ? std::string() : out.front();
  };
  plugins.answer_extractor = [command, beam](const std::string& sentence) {
    return command->call({{"stage", "extract_answers"}, {"sentence", sentence}, {"beam_width", beam}});
  };
  plugins.question_generator = [command, beam](const std::string& sentence,
                                               const std::string& answer) {
    return command->call({{"stage", "generate_question"},
                          {"sentence", sentence},
                          {"answer", answer},
                          {"beam_width", beam}});
  };
  return plugins;
}

}  // namespace vqat::qagen
