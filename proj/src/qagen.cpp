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

#include "vqat/qagen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace vqat::qagen {
namespace {

bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
bool is_sentence_end(char c) { return c == '.' || c == '!' || c == '?'; }

bool ends_sentence(std::string_view token) {
  return !token.empty() && is_sentence_end(token.back());
}

// Next segment opens a new sentence when it starts with a capitalized
// content word.
bool opens_sentence(std::string_view token) {
  if (token.empty() || !std::isupper(static_cast<unsigned char>(token.front()))) return false;
  const std::string key = token_key(token);
  return !key.empty() && !is_function_word(key);
}

struct StreamToken {
  std::string text;
  size_t segment;
};

// Closes a token run into a Sentence ending in exactly one terminal mark.
std::optional<Sentence> make_sentence(std::vector<std::string> tokens,
                                      std::span<const size_t> segment_of,
                                      std::span<const TranscriptSegment> segments) {
  char mark = '.';
  while (!tokens.empty()) {
    std::string& last = tokens.back();
    size_t cut = last.size();
    while (cut > 0 && (is_sentence_end(last[cut - 1]) || last[cut - 1] == ',')) --cut;
    if (cut < last.size()) {
      for (size_t i = cut; i < last.size(); ++i) {
        if (is_sentence_end(last[i])) {
          mark = last[i];
          break;
        }
      }
      last.resize(cut);
    }
    if (!last.empty()) break;
    tokens.pop_back();
  }
  if (tokens.empty()) return std::nullopt;
  Sentence s;
  s.text = join_tokens(tokens) + mark;
  s.start_s = segments[segment_of.front()].start_s;
  s.end_s = segments[segment_of.back()].end_s;
  s.video_id = segments[segment_of.front()].video_id;
  return s;
}

std::vector<Sentence> split_stream(const std::vector<StreamToken>& stream,
                                   std::span<const TranscriptSegment> segments, bool rule_based) {
  std::vector<Sentence> out;
  std::vector<std::string> tokens;
  std::vector<size_t> segs;
  auto flush = [&]() {
    if (tokens.empty()) return;
    if (auto s = make_sentence(std::move(tokens), segs, segments)) out.push_back(std::move(*s));
    tokens.clear();
    segs.clear();
  };
  for (size_t k = 0; k < stream.size(); ++k) {
    tokens.push_back(stream[k].text);
    segs.push_back(stream[k].segment);
    bool brk = ends_sentence(stream[k].text);
    if (rule_based) {
      if (!brk && k + 1 < stream.size() && stream[k + 1].segment != stream[k].segment &&
          opens_sentence(stream[k + 1].text)) {
        brk = true;
      }
      if (tokens.size() >= kMaxSentenceTokens) brk = true;
    }
    if (brk) flush();
  }
  flush();
  return out;
}

// Splits a token into (leading punctuation, core, trailing punctuation).
struct TokenParts {
  std::string_view prefix, core, suffix;
};

TokenParts split_punct(std::string_view token) {
  size_t b = 0, e = token.size();
  while (b < e && is_punct(token[b])) ++b;
  while (e > b && is_punct(token[e - 1])) --e;
  return {token.substr(0, b), token.substr(b, e - b), token.substr(e)};
}

// First index where `needle` keys match consecutive keys of `haystack`.
std::optional<size_t> find_span(const std::vector<std::string>& haystack_keys,
                                const std::vector<std::string>& needle_keys) {
  if (needle_keys.empty() || needle_keys.size() > haystack_keys.size()) return std::nullopt;
  for (size_t i = 0; i + needle_keys.size() <= haystack_keys.size(); ++i) {
    if (std::equal(needle_keys.begin(), needle_keys.end(), haystack_keys.begin() + i)) return i;
  }
  return std::nullopt;
}

std::vector<std::string> keys_of(std::string_view text) {
  std::vector<std::string> keys;
  for (const auto& t : split_tokens(text)) keys.push_back(token_key(t));
  return keys;
}

std::string finish_question(std::string text) {
  while (!text.empty() && (is_sentence_end(text.back()) || text.back() == ',' ||
                           std::isspace(static_cast<unsigned char>(text.back())))) {
    text.pop_back();
  }
  size_t first = text.find_first_not_of(' ');
  if (first == std::string::npos) return {};
  text.erase(0, first);
  text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
  return text + "?";
}

std::vector<std::string> fallback_answers(const std::string& text, const GenConfig& cfg) {
  std::vector<std::vector<std::string>> spans;
  std::vector<std::string> current;
  auto close = [&]() {
    if (!current.empty()) spans.push_back(std::move(current));
    current.clear();
  };
  for (const auto& token : split_tokens(text)) {
    const std::string key = token_key(token);
    if (key.empty() || is_function_word(key)) {
      close();
      continue;
    }
    current.push_back(key);
    const TokenParts parts = split_punct(token);
    if (!parts.suffix.empty() || !parts.prefix.empty()) close();
  }
  close();
  std::vector<std::string> answers;
  for (auto& span : spans) {
    // Keep the trailing words of overlong runs; heads of English noun
    // phrases come last.
    const size_t max_words = static_cast<size_t>(cfg.answer_max_words);
    if (span.size() > max_words) span.erase(span.begin(), span.end() - static_cast<long>(max_words));
    answers.push_back(normalize_answer(join_tokens(span)));
  }
  return answers;
}

}  // namespace

void GenConfig::validate() const {
  if (max_tokens_per_text < 1) throw ValidationError("max_tokens_per_text", "must be positive");
  if (max_answers_per_sentence < 1) throw ValidationError("max_answers_per_sentence", "must be positive");
  if (answer_max_words < 1) throw ValidationError("answer_max_words", "must be positive");
  if (beam_width_hint < 1) throw ValidationError("beam_width_hint", "must be positive");
}

GenerationReport& GenerationReport::operator+=(const GenerationReport& o) {
  videos += o.videos;
  sentences += o.sentences;
  skipped_sentences += o.skipped_sentences;
  skipped_answers += o.skipped_answers;
  dropped_segments += o.dropped_segments;
  punctuator_fallbacks += o.punctuator_fallbacks;
  triplets += o.triplets;
  return *this;
}

std::string token_key(std::string_view token) {
  const TokenParts parts = split_punct(token);
  std::string key(parts.core);
  for (char& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return key;
}

std::string truncate_tokens(std::string_view text, int max_tokens) {
  auto tokens = split_tokens(text);
  if (tokens.size() > static_cast<size_t>(max_tokens)) tokens.resize(static_cast<size_t>(max_tokens));
  return join_tokens(tokens);
}

bool contains_token_span(std::string_view text, std::string_view answer) {
  return find_span(keys_of(text), keys_of(answer)).has_value();
}

std::vector<TranscriptSegment> normalize_segments(std::span<const TranscriptSegment> segments,
                                                  GenerationReport* report) {
  std::vector<TranscriptSegment> sorted(segments.begin(), segments.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.start_s < b.start_s; });
  std::vector<TranscriptSegment> out;
  size_t dropped = 0;
  for (auto& seg : sorted) {
    if (!std::isfinite(seg.start_s) || !std::isfinite(seg.end_s) || split_tokens(seg.text).empty()) {
      ++dropped;
      continue;
    }
    seg.start_s = std::max(seg.start_s, 0.0);
    if (!out.empty()) seg.start_s = std::max(seg.start_s, out.back().end_s);
    if (seg.end_s <= seg.start_s) {
      ++dropped;
      continue;
    }
    out.push_back(std::move(seg));
  }
  if (report) report->dropped_segments += dropped;
  return out;
}

std::vector<TranscriptSegment> dedup_adjacent_repetitions(
    std::span<const TranscriptSegment> segments) {
  std::vector<TranscriptSegment> out;
  std::vector<std::string> prev_keys;
  for (const auto& seg : segments) {
    auto tokens = split_tokens(seg.text);
    if (!out.empty()) {
      std::vector<std::string> keys;
      for (const auto& t : tokens) keys.push_back(token_key(t));
      size_t overlap = 0;
      for (size_t k = std::min(prev_keys.size(), keys.size()); k > 0; --k) {
        if (std::equal(prev_keys.end() - static_cast<long>(k), prev_keys.end(), keys.begin())) {
          overlap = k;
          break;
        }
      }
      tokens.erase(tokens.begin(), tokens.begin() + static_cast<long>(overlap));
    }
    if (tokens.empty()) continue;
    TranscriptSegment kept = seg;
    kept.text = join_tokens(tokens);
    prev_keys.clear();
    for (const auto& t : tokens) prev_keys.push_back(token_key(t));
    out.push_back(std::move(kept));
  }
  return out;
}

std::vector<Sentence> punctuate(std::span<const TranscriptSegment> segments,
                                const GeneratorPlugins& plugins, GenerationReport* report) {
  std::vector<StreamToken> stream;
  for (size_t s = 0; s < segments.size(); ++s) {
    for (auto& tok : split_tokens(segments[s].text)) stream.push_back({std::move(tok), s});
  }
  if (stream.empty()) return {};
  if (plugins.punctuator) {
    std::vector<std::string> raw;
    raw.reserve(stream.size());
    for (const auto& t : stream) raw.push_back(t.text);
    const auto punctuated = split_tokens(plugins.punctuator(join_tokens(raw)));
    // Alignment back to segments needs a one-to-one token mapping.
    if (punctuated.size() == stream.size()) {
      std::vector<StreamToken> relabeled = stream;
      for (size_t k = 0; k < stream.size(); ++k) relabeled[k].text = punctuated[k];
      return split_stream(relabeled, segments, false);
    }
    if (report) ++report->punctuator_fallbacks;
  }
  return split_stream(stream, segments, true);
}

std::vector<std::string> extract_answers(const Sentence& sentence, const GenConfig& cfg,
                                         const GeneratorPlugins& plugins) {
  const std::string text = truncate_tokens(sentence.text, cfg.max_tokens_per_text);
  if (text.empty()) return {};
  std::vector<std::string> candidates =
      plugins.answer_extractor ? plugins.answer_extractor(text) : fallback_answers(text, cfg);
  std::vector<std::string> answers;
  std::set<std::string> seen;
  for (const auto& raw : candidates) {
    std::string a = normalize_answer(raw);
    if (a.empty() || split_tokens(a).size() > static_cast<size_t>(cfg.answer_max_words)) continue;
    if (!contains_token_span(text, a)) continue;
    if (!seen.insert(a).second) continue;
    answers.push_back(std::move(a));
    if (answers.size() >= static_cast<size_t>(cfg.max_answers_per_sentence)) break;
  }
  return answers;
}

namespace {

std::vector<std::string> generate_questions(const Sentence& sentence, const std::string& answer,
                                            const GenConfig& cfg, const GeneratorPlugins& plugins) {
  const std::string text = truncate_tokens(sentence.text, cfg.max_tokens_per_text);
  std::vector<std::string> questions;
  if (plugins.question_generator) {
    for (const auto& raw : plugins.question_generator(text, answer)) {
      std::string q = finish_question(raw);
      if (q.empty() || contains_token_span(q, answer)) continue;
      if (std::find(questions.begin(), questions.end(), q) == questions.end()) questions.push_back(q);
    }
    if (questions.empty()) throw QuestionError("plug-in produced no usable question");
    return questions;
  }
  auto tokens = split_tokens(text);
  std::vector<std::string> keys;
  for (const auto& t : tokens) keys.push_back(token_key(t));
  const auto answer_keys = keys_of(answer);
  const auto at = find_span(keys, answer_keys);
  if (!at) throw QuestionError("answer span \"" + answer + "\" not found in sentence");
  const TokenParts head = split_punct(tokens[*at]);
  const TokenParts tail = split_punct(tokens[*at + answer_keys.size() - 1]);
  std::string replacement = std::string(head.prefix) + "what" + std::string(tail.suffix);
  tokens.erase(tokens.begin() + static_cast<long>(*at),
               tokens.begin() + static_cast<long>(*at + answer_keys.size()));
  tokens.insert(tokens.begin() + static_cast<long>(*at), replacement);
  std::string q = finish_question(join_tokens(tokens));
  if (q.empty()) throw QuestionError("empty question");
  if (contains_token_span(q, answer)) {
    throw QuestionError("answer \"" + answer + "\" still present in question");
  }
  questions.push_back(std::move(q));
  return questions;
}

std::vector<QATriplet> generate_from_sentences(std::span<const Sentence> sentences,
                                               const GenConfig& cfg,
                                               const GeneratorPlugins& plugins,
                                               GenerationReport& report) {
  std::vector<QATriplet> out;
  for (const auto& sentence : sentences) {
    ++report.sentences;
    const auto answers = extract_answers(sentence, cfg, plugins);
    if (answers.empty()) {
      ++report.skipped_sentences;
      continue;
    }
    for (const auto& answer : answers) {
      std::vector<std::string> questions;
      try {
        questions = generate_questions(sentence, answer, cfg, plugins);
      } catch (const QuestionError&) {
        ++report.skipped_answers;
        continue;
      }
      for (auto& q : questions) {
        out.push_back({sentence.video_id, sentence.start_s, sentence.end_s, std::move(q), answer});
      }
    }
  }
  report.triplets += out.size();
  return out;
}

}  // namespace

std::string generate_question(const Sentence& sentence, const std::string& answer,
                              const GenConfig& cfg, const GeneratorPlugins& plugins) {
  return generate_questions(sentence, answer, cfg, plugins).front();
}

std::vector<QATriplet> generate_from_transcript(std::span<const TranscriptSegment> segments,
                                                const GenConfig& cfg,
                                                const GeneratorPlugins& plugins,
                                                GenerationReport* report) {
  cfg.validate();
  GenerationReport local;
  local.videos = 1;
  const auto normalized = normalize_segments(segments, &local);
  const auto deduped = dedup_adjacent_repetitions(normalized);
  const auto sentences = punctuate(deduped, plugins, &local);
  auto out = generate_from_sentences(sentences, cfg, plugins, local);
  if (report) *report += local;
  return out;
}

std::vector<QATriplet> generate_from_caption(const CaptionRecord& record, const GenConfig& cfg,
                                             const GeneratorPlugins& plugins,
                                             GenerationReport* report) {
  cfg.validate();
  if (!std::isfinite(record.duration_s) || record.duration_s <= 0.0) {
    throw ValidationError("duration_s", "caption " + record.video_id + " needs a positive duration");
  }
  GenerationReport local;
  local.videos = 1;
  std::vector<QATriplet> out;
  const std::string text = truncate_tokens(record.caption, cfg.max_tokens_per_text);
  if (!text.empty()) {
    const Sentence whole{text, 0.0, record.duration_s, record.video_id};
    out = generate_from_sentences(std::span(&whole, 1), cfg, plugins, local);
  }
  if (report) *report += local;
  return out;
}

}  // namespace vqat::qagen
