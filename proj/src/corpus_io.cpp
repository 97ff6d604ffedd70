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

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "vqat/corpus.hpp"

namespace vqat {

using nlohmann::json;
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "feature files are read with native little-endian layout");

FormatError::FormatError(const fs::path& path, size_t line, const std::string& message)
    : std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + message),
      line_(line) {}

namespace {

std::ifstream open_in(const fs::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

// Calls fn(object, line_number) for every non-blank line.
template <typename Fn>
void for_each_json_line(const fs::path& path, Fn&& fn) {
  auto in = open_in(path);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(path, line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw FormatError(path, line_no, "expected a JSON object");
    try {
      fn(obj, line_no);
    } catch (const json::type_error& e) {
      throw FormatError(path, line_no, std::string("bad field type: ") + e.what());
    }
  }
}

class FieldReader {
 public:
  FieldReader(const json& obj, const fs::path& path, size_t line)
      : obj_(obj), path_(path), line_(line) {}

  const json& require(const char* key) const {
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) {
      throw FormatError(path_, line_, std::string("missing field \"") + key + "\"");
    }
    return *it;
  }

  std::string str(const char* key) const {
    const json& v = require(key);
    if (!v.is_string()) throw FormatError(path_, line_, std::string("field \"") + key + "\" must be a string");
    return v.get<std::string>();
  }

  double num(const char* key) const {
    const json& v = require(key);
    if (!v.is_number()) throw FormatError(path_, line_, std::string("field \"") + key + "\" must be a number");
    return v.get<double>();
  }

  std::optional<double> opt_num(const char* key) const {
    if (!obj_.contains(key) || obj_[key].is_null()) return std::nullopt;
    return num(key);
  }

  std::optional<std::string> opt_str(const char* key) const {
    if (!obj_.contains(key) || obj_[key].is_null()) return std::nullopt;
    return str(key);
  }

  std::vector<std::string> str_list(const char* key) const {
    const json& v = require(key);
    if (!v.is_array()) throw FormatError(path_, line_, std::string("field \"") + key + "\" must be an array");
    std::vector<std::string> out;
    for (const auto& s : v) {
      if (!s.is_string()) throw FormatError(path_, line_, std::string("field \"") + key + "\" must hold strings");
      out.push_back(s.get<std::string>());
    }
    return out;
  }

  const json& obj() const { return obj_; }

 private:
  const json& obj_;
  const fs::path& path_;
  size_t line_;
};

}  // namespace

std::string triplet_to_json_line(const QATriplet& t) {
  json obj = {{"video_id", t.video_id},
              {"start_s", t.start_s},
              {"end_s", t.end_s},
              {"question", t.question},
              {"answer", t.answer}};
  return obj.dump();
}

std::vector<QATriplet> read_triplets(const fs::path& path) {
  std::vector<QATriplet> out;
  for_each_json_line(path, [&](const json& obj, size_t line) {
    FieldReader r(obj, path, line);
    out.push_back({r.str("video_id"), r.num("start_s"), r.num("end_s"), r.str("question"),
                   r.str("answer")});
  });
  return out;
}

void write_triplets(std::span<const QATriplet> triplets, const fs::path& path) {
  auto out = open_out(path);
  for (const auto& t : triplets) out << triplet_to_json_line(t) << '\n';
}

std::vector<Transcript> read_transcripts(const fs::path& path) {
  std::vector<Transcript> out;
  for_each_json_line(path, [&](const json& obj, size_t line) {
    FieldReader r(obj, path, line);
    Transcript tr;
    tr.video_id = r.str("video_id");
    const json& segs = r.require("segments");
    if (!segs.is_array()) throw FormatError(path, line, "field \"segments\" must be an array");
    for (const auto& s : segs) {
      if (!s.is_object()) throw FormatError(path, line, "segment must be an object");
      FieldReader sr(s, path, line);
      tr.segments.push_back({tr.video_id, sr.num("start_s"), sr.num("end_s"), sr.str("text")});
    }
    out.push_back(std::move(tr));
  });
  return out;
}

void write_transcripts(std::span<const Transcript> transcripts, const fs::path& path) {
  auto out = open_out(path);
  for (const auto& tr : transcripts) {
    json segs = json::array();
    for (const auto& s : tr.segments) {
      segs.push_back({{"start_s", s.start_s}, {"end_s", s.end_s}, {"text", s.text}});
    }
    out << json{{"video_id", tr.video_id}, {"segments", segs}}.dump() << '\n';
  }
}

std::vector<CaptionRecord> read_captions(const fs::path& path) {
  std::vector<CaptionRecord> out;
  for_each_json_line(path, [&](const json& obj, size_t line) {
    FieldReader r(obj, path, line);
    out.push_back({r.str("video_id"), r.str("caption"), r.num("duration_s")});
  });
  return out;
}

void write_captions(std::span<const CaptionRecord> captions, const fs::path& path) {
  auto out = open_out(path);
  for (const auto& c : captions) {
    out << json{{"video_id", c.video_id}, {"caption", c.caption}, {"duration_s", c.duration_s}}
               .dump()
        << '\n';
  }
}

std::vector<AnnotatedExample> read_annotated(const fs::path& path) {
  std::vector<AnnotatedExample> out;
  for_each_json_line(path, [&](const json& obj, size_t line) {
    FieldReader r(obj, path, line);
    AnnotatedExample ex;
    ex.video_id = r.str("video_id");
    ex.question = r.str("question");
    ex.answers = r.str_list("answers");
    if (ex.answers.empty()) throw FormatError(path, line, "field \"answers\" must be non-empty");
    ex.answer_type = r.opt_str("answer_type");
    ex.start_s = r.opt_num("start_s");
    ex.end_s = r.opt_num("end_s");
    if (obj.contains("candidates") && !obj["candidates"].is_null()) {
      ex.candidates = r.str_list("candidates");
    }
    out.push_back(std::move(ex));
  });
  return out;
}

void write_annotated(std::span<const AnnotatedExample> examples, const fs::path& path) {
  auto out = open_out(path);
  for (const auto& ex : examples) {
    json obj = {{"video_id", ex.video_id}, {"question", ex.question}, {"answers", ex.answers}};
    if (ex.answer_type) obj["answer_type"] = *ex.answer_type;
    if (ex.start_s) obj["start_s"] = *ex.start_s;
    if (ex.end_s) obj["end_s"] = *ex.end_s;
    if (!ex.candidates.empty()) obj["candidates"] = ex.candidates;
    out << obj.dump() << '\n';
  }
}

Matrix read_feature_file(const fs::path& path) {
  auto in = open_in(path, true);
  char magic[4];
  uint32_t header[2];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || std::memcmp(magic, "VQF1", 4) != 0) {
    throw std::runtime_error(path.string() + ": not a VQF1 feature file");
  }
  const uint32_t rows = header[0];
  const uint32_t cols = header[1];
  if (rows == 0 || cols == 0) throw std::runtime_error(path.string() + ": empty feature matrix");
  std::vector<float> body(static_cast<size_t>(rows) * cols);
  in.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(body.size() * sizeof(float)));
  if (!in) throw std::runtime_error(path.string() + ": truncated feature body");
  Matrix m(rows, cols);
  for (uint32_t r = 0; r < rows; ++r) {
    for (uint32_t c = 0; c < cols; ++c) {
      const float v = body[static_cast<size_t>(r) * cols + c];
      if (!std::isfinite(v)) throw std::runtime_error(path.string() + ": non-finite feature value");
      m(r, c) = v;
    }
  }
  return m;
}

void write_feature_file(const Matrix& features, const fs::path& path) {
  if (features.rows() == 0 || features.cols() == 0) {
    throw ValidationError("features", "matrix must have at least one row and column");
  }
  if (!features.allFinite()) throw ValidationError("features", "non-finite feature value");
  auto out = open_out(path, true);
  const uint32_t header[2] = {static_cast<uint32_t>(features.rows()),
                              static_cast<uint32_t>(features.cols())};
  out.write("VQF1", 4);
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  std::vector<float> body(static_cast<size_t>(features.size()));
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      body[static_cast<size_t>(r * features.cols() + c)] = static_cast<float>(features(r, c));
    }
  }
  out.write(reinterpret_cast<const char*>(body.data()),
            static_cast<std::streamsize>(body.size() * sizeof(float)));
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::vector<ManifestEntry> out;
  for_each_json_line(path, [&](const json& obj, size_t line) {
    FieldReader r(obj, path, line);
    out.push_back({r.str("video_id"), r.str("path")});
  });
  return out;
}

void write_manifest(std::span<const ManifestEntry> entries, const fs::path& path) {
  auto out = open_out(path);
  for (const auto& e : entries) out << json{{"video_id", e.video_id}, {"path", e.path}}.dump() << '\n';
}

FeatureStore FeatureStore::load(const fs::path& manifest_path) {
  FeatureStore store;
  const fs::path base = manifest_path.parent_path();
  for (const auto& entry : read_manifest(manifest_path)) {
    fs::path p(entry.path);
    if (p.is_relative()) p = base / p;
    store.add({entry.video_id, read_feature_file(p)});
  }
  return store;
}

void FeatureStore::add(VideoFeatures video) {
  if (!videos_.empty() && video.features.cols() != feature_dim()) {
    throw ValidationError("d_v", "video " + video.video_id + " has feature dim " +
                                     std::to_string(video.features.cols()) + ", expected " +
                                     std::to_string(feature_dim()));
  }
  std::string id = video.video_id;
  videos_.insert_or_assign(std::move(id), std::move(video));
}

const VideoFeatures& FeatureStore::get(const std::string& video_id) const {
  auto it = videos_.find(video_id);
  if (it == videos_.end()) throw ValidationError("video_id", "no features for video " + video_id);
  return it->second;
}

int FeatureStore::feature_dim() const {
  if (videos_.empty()) return 0;
  return static_cast<int>(videos_.begin()->second.features.cols());
}

AnswerVocabulary read_vocabulary(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    entries.push_back(line);
  }
  return AnswerVocabulary(std::move(entries));
}

void write_vocabulary(const AnswerVocabulary& vocab, const fs::path& path) {
  auto out = open_out(path);
  for (const auto& e : vocab.entries()) out << e << '\n';
}

}  // namespace vqat
