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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vqat/common.hpp"

namespace vqat {

// One timestamped ASR segment.
struct TranscriptSegment {
  std::string video_id;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string text;

  bool operator==(const TranscriptSegment&) const = default;
};

struct Transcript {
  std::string video_id;
  std::vector<TranscriptSegment> segments;

  bool operator==(const Transcript&) const = default;
};

// Whole-video alt-text description.
struct CaptionRecord {
  std::string video_id;
  std::string caption;
  double duration_s = 0.0;

  bool operator==(const CaptionRecord&) const = default;
};

// A punctuated sentence aligned to the segments it was built from.
struct Sentence {
  std::string text;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string video_id;

  bool operator==(const Sentence&) const = default;
};

struct QATriplet {
  std::string video_id;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string question;
  std::string answer;

  bool operator==(const QATriplet&) const = default;
};

// Per-second visual features, [T x d_v].
struct VideoFeatures {
  std::string video_id;
  Matrix features;
};

// Downstream evaluation / finetuning record. Multiple-choice records carry
// their candidate list; answers[0] is then the correct candidate.
struct AnnotatedExample {
  std::string video_id;
  std::string question;
  std::vector<std::string> answers;
  std::optional<std::string> answer_type;
  std::optional<double> start_s;
  std::optional<double> end_s;
  std::vector<std::string> candidates;

  bool operator==(const AnnotatedExample&) const = default;
};

// Lowercases, trims, collapses internal whitespace and strips terminal
// punctuation (.,!?). An empty result means "no usable answer".
std::string normalize_answer(std::string_view text);

// Splits on ASCII whitespace.
std::vector<std::string> split_tokens(std::string_view text);
std::string join_tokens(std::span<const std::string> tokens);

// Ordered answer set with a frequency-based construction policy.
class AnswerVocabulary {
 public:
  AnswerVocabulary() = default;

  // Entries are taken verbatim (already normalized, unique, in order).
  explicit AnswerVocabulary(std::vector<std::string> entries, int min_count = 1,
                            std::optional<size_t> max_size = std::nullopt);

  const std::vector<std::string>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::optional<size_t> index_of(const std::string& answer) const;
  bool contains(const std::string& answer) const { return index_.count(answer) > 0; }
  const std::string& operator[](size_t i) const { return entries_[i]; }

  int min_count() const { return min_count_; }
  std::optional<size_t> max_size() const { return max_size_; }

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, size_t> index_;
  int min_count_ = 1;
  std::optional<size_t> max_size_;
};

// Keeps answers seen at least `min_count` times, optionally the `max_size`
// most frequent. Order: descending frequency, then lexicographic.
AnswerVocabulary build_vocabulary(std::span<const std::string> answers, int min_count,
                                  std::optional<size_t> max_size = std::nullopt);

std::map<std::string, size_t> count_answers(std::span<const std::string> answers);

// Fixed-length video input: `features` is [t x d_v], mask[i] != 0 iff row i
// holds real data.
struct SampledClip {
  Matrix features;
  std::vector<uint8_t> mask;
};

// Equally spaced, endpoint-inclusive row selection when rows >= t;
// copy-then-zero-pad otherwise.
SampledClip sample_features(const Matrix& features, int t);

// Rows of the per-second matrix overlapping [start_s, end_s); an unset
// bound extends to the video edge. Always returns at least one row.
Matrix clip_rows(const Matrix& features, std::optional<double> start_s,
                 std::optional<double> end_s);

// ---------------------------------------------------------------------------
// File I/O. JSON-lines readers raise FormatError with the 1-based line
// number; missing keys are named in the message.

class FormatError : public std::runtime_error {
 public:
  FormatError(const std::filesystem::path& path, size_t line, const std::string& message);
  size_t line() const { return line_; }

 private:
  size_t line_;
};

std::vector<QATriplet> read_triplets(const std::filesystem::path& path);
void write_triplets(std::span<const QATriplet> triplets, const std::filesystem::path& path);
std::string triplet_to_json_line(const QATriplet& triplet);

std::vector<Transcript> read_transcripts(const std::filesystem::path& path);
void write_transcripts(std::span<const Transcript> transcripts,
                       const std::filesystem::path& path);

std::vector<CaptionRecord> read_captions(const std::filesystem::path& path);
void write_captions(std::span<const CaptionRecord> captions, const std::filesystem::path& path);

std::vector<AnnotatedExample> read_annotated(const std::filesystem::path& path);
void write_annotated(std::span<const AnnotatedExample> examples,
                     const std::filesystem::path& path);

// Binary feature file: "VQF1", uint32 T, uint32 d_v, T*d_v little-endian
// float32, row-major.
Matrix read_feature_file(const std::filesystem::path& path);
void write_feature_file(const Matrix& features, const std::filesystem::path& path);

struct ManifestEntry {
  std::string video_id;
  std::string path;
};
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(std::span<const ManifestEntry> entries, const std::filesystem::path& path);

// All videos of a manifest, loaded eagerly. Relative paths resolve against
// the manifest's directory.
class FeatureStore {
 public:
  FeatureStore() = default;
  static FeatureStore load(const std::filesystem::path& manifest_path);

  void add(VideoFeatures video);
  const VideoFeatures& get(const std::string& video_id) const;
  bool contains(const std::string& video_id) const { return videos_.count(video_id) > 0; }
  size_t size() const { return videos_.size(); }
  int feature_dim() const;

 private:
  std::map<std::string, VideoFeatures> videos_;
};

// UTF-8, one answer per line.
AnswerVocabulary read_vocabulary(const std::filesystem::path& path);
void write_vocabulary(const AnswerVocabulary& vocab, const std::filesystem::path& path);

}  // namespace vqat
