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

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vqat/corpus.hpp"

namespace vqat::qagen {

struct GenConfig {
  int max_tokens_per_text = 32;
  int max_answers_per_sentence = 3;
  int answer_max_words = 5;
  int beam_width_hint = 4;  // forwarded to neural plug-ins only

  void validate() const;

  template <typename V>
  void visit(V&& v) {
    v("max_tokens_per_text", max_tokens_per_text);
    v("max_answers_per_sentence", max_answers_per_sentence);
    v("answer_max_words", answer_max_words);
    v("beam_width_hint", beam_width_hint);
  }
};

// Stage plug-ins. An empty function selects the built-in rule-based stage.
struct GeneratorPlugins {
  // Raw token stream -> same tokens with punctuation/casing inferred.
  std::function<std::string(const std::string&)> punctuator;
  // Sentence -> candidate answer spans.
  std::function<std::vector<std::string>(const std::string&)> answer_extractor;
  // (sentence, answer) -> one or more questions.
  std::function<std::vector<std::string>(const std::string&, const std::string&)>
      question_generator;

  static GeneratorPlugins fallback() { return {}; }
};

// Counters accumulated across a generation run.
struct GenerationReport {
  size_t videos = 0;
  size_t sentences = 0;
  size_t skipped_sentences = 0;   // no extractable answer
  size_t skipped_answers = 0;     // question could not be formed
  size_t dropped_segments = 0;    // zero/negative duration, empty text
  size_t punctuator_fallbacks = 0;
  size_t triplets = 0;

  GenerationReport& operator+=(const GenerationReport& other);
};

// Versioned function-word list used by the built-in stages.
inline constexpr std::string_view kStoplistVersion = "stoplist-v1";
bool is_function_word(std::string_view normalized_token);

// Lowercase and strip surrounding ASCII punctuation; the comparison key
// for tokens across the pipeline.
std::string token_key(std::string_view token);

// Sorts by start, drops zero-duration/empty segments and clips overlaps.
std::vector<TranscriptSegment> normalize_segments(std::span<const TranscriptSegment> segments,
                                                  GenerationReport* report = nullptr);

// Removes from each segment the longest token prefix that repeats a token
// suffix of the previous kept segment. Segments emptied this way vanish.
std::vector<TranscriptSegment> dedup_adjacent_repetitions(
    std::span<const TranscriptSegment> segments);

std::vector<Sentence> punctuate(std::span<const TranscriptSegment> segments,
                                const GeneratorPlugins& plugins,
                                GenerationReport* report = nullptr);

// Built-in punctuator break rule budget.
inline constexpr size_t kMaxSentenceTokens = 24;

std::vector<std::string> extract_answers(const Sentence& sentence, const GenConfig& cfg,
                                         const GeneratorPlugins& plugins);

class QuestionError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fallback: cloze the first occurrence of `answer` with "what". Throws
// QuestionError when no well-formed question can be built.
std::string generate_question(const Sentence& sentence, const std::string& answer,
                              const GenConfig& cfg, const GeneratorPlugins& plugins);

// True when the normalized answer occurs as a contiguous token run of
// `text` (token keys compared).
bool contains_token_span(std::string_view text, std::string_view answer);

std::vector<QATriplet> generate_from_transcript(std::span<const TranscriptSegment> segments,
                                                const GenConfig& cfg,
                                                const GeneratorPlugins& plugins,
                                                GenerationReport* report = nullptr);

std::vector<QATriplet> generate_from_caption(const CaptionRecord& record, const GenConfig& cfg,
                                             const GeneratorPlugins& plugins,
                                             GenerationReport* report = nullptr);

// Truncates to the first `max_tokens` whitespace tokens.
std::string truncate_tokens(std::string_view text, int max_tokens);

}  // namespace vqat::qagen
