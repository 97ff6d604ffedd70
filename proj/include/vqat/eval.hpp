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

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vqat/corpus.hpp"
#include "vqat/model.hpp"

namespace vqat::eval {

// min(#matching annotations / 2, 1) over exactly five annotations. Both
// sides are normalized before matching.
double ivqa_accuracy(const std::string& pred, std::span<const std::string> ground_truths);

// 1 iff `target` is among the k best scores; equal scores rank the lower
// index first.
bool topk_hit(const Vector& scores, size_t target, size_t k);

// Most frequent annotation; ties go to the earliest.
std::string primary_answer(const AnnotatedExample& example);

// Most frequent annotation present in `vocab`, if any.
std::optional<std::string> primary_in_vocabulary(const AnnotatedExample& example,
                                                 const AnswerVocabulary& vocab);

// Q1 (most frequent training answers) .. Q4 (least frequent). Samples are
// ordered by descending training frequency of their primary answer, then
// answer string, then input order, and cut into contiguous groups whose
// sizes differ by at most one, larger groups first.
std::array<std::vector<size_t>, 4> quartile_split(std::span<const AnnotatedExample> test,
                                                  const std::map<std::string, size_t>& train_frequency);

// Grouped by answer_type (lowercased) when present, else by the leading
// interrogative of the question (what/who/where/when/how/other).
std::map<std::string, std::vector<size_t>> question_type_split(std::span<const AnnotatedExample> test);

enum class Protocol { kZeroShot, kStandard };
enum class Scorer { kJoint, kMatching };

const char* protocol_name(Protocol p);

struct EvalOptions {
  Protocol protocol = Protocol::kStandard;
  Scorer scorer = Scorer::kJoint;
  bool ivqa = false;
  std::optional<FusionMode> mode;  // defaults to the model's
  // Training-split answer counts for quartiles; when absent the vocabulary
  // order stands in (entries are sorted by frequency).
  std::optional<std::map<std::string, size_t>> train_frequency;
};

struct SampleResult {
  std::string video_id;
  std::string question;
  std::string pred;
  double score = 0.0;
  bool top1 = false;
  bool top10 = false;
  bool oov = false;
  std::optional<double> ivqa;
  int quartile = 0;  // 1..4
  std::string type;
};

struct EvalReport {
  Protocol protocol = Protocol::kStandard;
  double top1 = 0.0;
  double top10 = 0.0;
  std::optional<double> ivqa_acc;
  std::map<std::string, double> per_quartile;
  std::map<std::string, size_t> quartile_sizes;
  std::map<std::string, double> per_type;
  size_t n_samples = 0;
  double oov_fraction = 0.0;
  std::vector<SampleResult> samples;
};

// Resamples the clip [start_s, end_s] of a stored video to the model's t.
SampledClip load_clip(const FeatureStore& features, const std::string& video_id,
                      std::optional<double> start_s, std::optional<double> end_s, int video_len);

// Open-ended examples are ranked over `vocab`; examples carrying candidates
// are ranked over their own candidate list.
EvalReport evaluate(const Model& model, std::span<const AnnotatedExample> examples,
                    const FeatureStore& features, const AnswerVocabulary& vocab,
                    const EvalOptions& options);

nlohmann::json report_to_json(const EvalReport& report);
std::string report_to_text(const EvalReport& report);
nlohmann::json sample_to_json(const SampleResult& sample);

}  // namespace vqat::eval
