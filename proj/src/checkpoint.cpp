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

#include "vqat/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "vqat/fields.hpp"

namespace vqat {

using nlohmann::json;

namespace {

constexpr uint8_t kFloat64 = 8;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error(path.string() + ": truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(const Model& model, const json& metadata, const std::filesystem::path& path) {
  static_assert(std::endian::native == std::endian::little);
  json header;
  header["format_version"] = kCheckpointVersion;
  json cfg = json::object();
  for (auto& [k, v] : to_fields(model.config())) cfg[k] = v;
  header["model_config"] = cfg;
  header["tokens"] = model.tokens().words();
  header["metadata"] = metadata;
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write("VQCK", 4);
  put<uint32_t>(out, kCheckpointVersion);
  put<uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  const auto params = model.params().all();
  put<uint32_t>(out, static_cast<uint32_t>(params.size()));
  for (const auto& p : params) {
    put<uint32_t>(out, static_cast<uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put<uint32_t>(out, static_cast<uint32_t>(p->value.rows()));
    put<uint32_t>(out, static_cast<uint32_t>(p->value.cols()));
    put<uint8_t>(out, kFloat64);
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "VQCK", 4) != 0) {
    throw std::runtime_error(path.string() + ": not a checkpoint file");
  }
  const auto version = get<uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw std::runtime_error(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = get<uint64_t>(in, path);
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw std::runtime_error(path.string() + ": truncated header");
  const json header = json::parse(text);

  ModelConfig config;
  for (auto& [k, v] : header.at("model_config").items()) {
    if (!set_field(config, k, v.get<std::string>())) {
      throw ValidationError(k, "unknown model config key in checkpoint");
    }
  }
  TokenVocabulary tokens(header.at("tokens").get<std::vector<std::string>>());

  ad::ParameterSet params;
  const auto count = get<uint32_t>(in, path);
  for (uint32_t i = 0; i < count; ++i) {
    const auto name_len = get<uint32_t>(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rows = get<uint32_t>(in, path);
    const auto cols = get<uint32_t>(in, path);
    const auto dtype = get<uint8_t>(in, path);
    if (dtype != kFloat64) throw std::runtime_error(path.string() + ": unsupported dtype for " + name);
    Matrix value(rows, cols);
    in.read(reinterpret_cast<char*>(value.data()),
            static_cast<std::streamsize>(value.size() * sizeof(double)));
    if (!in) throw std::runtime_error(path.string() + ": truncated tensor " + name);
    params.add(std::move(name), std::move(value));
  }
  return {Model(config, std::move(tokens), std::move(params)), header.value("metadata", json::object())};
}

}  // namespace vqat
