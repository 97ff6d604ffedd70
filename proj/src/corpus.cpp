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

#include "vqat/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace vqat {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_terminal(char c) { return c == '.' || c == ',' || c == '!' || c == '?'; }

}  // namespace

std::string normalize_answer(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  // "spoon ." needs both the punctuation and the exposed space removed.
  while (!out.empty() && (is_terminal(out.back()) || out.back() == ' ')) out.pop_back();
  return out;
}

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) tokens.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

AnswerVocabulary::AnswerVocabulary(std::vector<std::string> entries, int min_count,
                                   std::optional<size_t> max_size)
    : entries_(std::move(entries)), min_count_(min_count), max_size_(max_size) {
  for (size_t i = 0; i < entries_.size(); ++i) {
    if (!index_.emplace(entries_[i], i).second) {
      throw ValidationError("vocabulary", "duplicate entry '" + entries_[i] + "'");
    }
  }
}

std::optional<size_t> AnswerVocabulary::index_of(const std::string& answer) const {
  auto it = index_.find(answer);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::map<std::string, size_t> count_answers(std::span<const std::string> answers) {
  std::map<std::string, size_t> counts;
  for (const auto& a : answers) ++counts[a];
  return counts;
}

AnswerVocabulary build_vocabulary(std::span<const std::string> answers, int min_count,
                                  std::optional<size_t> max_size) {
  if (min_count < 1) throw ValidationError("min_count", "must be >= 1");
  std::vector<std::pair<std::string, size_t>> kept;
  for (auto& [answer, count] : count_answers(answers)) {
    if (count >= static_cast<size_t>(min_count)) kept.emplace_back(answer, count);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (max_size && kept.size() > *max_size) kept.resize(*max_size);
  std::vector<std::string> entries;
  entries.reserve(kept.size());
  for (auto& [answer, count] : kept) entries.push_back(answer);
  return AnswerVocabulary(std::move(entries), min_count, max_size);
}

SampledClip sample_features(const Matrix& features, int t) {
  if (t < 1) throw ValidationError("t", "must be >= 1");
  const Eigen::Index rows = features.rows();
  SampledClip clip;
  clip.features = Matrix::Zero(t, features.cols());
  clip.mask.assign(static_cast<size_t>(t), 0);
  if (rows >= t) {
    for (int i = 0; i < t; ++i) {
      // round(i * (rows-1) / (t-1)) in exact integer arithmetic.
      Eigen::Index src = 0;
      if (t > 1) {
        const int64_t num = static_cast<int64_t>(i) * (rows - 1);
        const int64_t den = t - 1;
        src = static_cast<Eigen::Index>((2 * num + den) / (2 * den));
      }
      clip.features.row(i) = features.row(src);
      clip.mask[static_cast<size_t>(i)] = 1;
    }
  } else {
    clip.features.topRows(rows) = features;
    std::fill(clip.mask.begin(), clip.mask.begin() + rows, 1);
  }
  return clip;
}

Matrix clip_rows(const Matrix& features, std::optional<double> start_s,
                 std::optional<double> end_s) {
  const Eigen::Index total = features.rows();
  if (total == 0) throw ValidationError("features", "video has no rows");
  Eigen::Index first = 0;
  Eigen::Index last = total - 1;
  if (start_s) first = static_cast<Eigen::Index>(std::floor(std::max(0.0, *start_s)));
  if (end_s) last = static_cast<Eigen::Index>(std::ceil(*end_s)) - 1;
  first = std::clamp<Eigen::Index>(first, 0, total - 1);
  last = std::clamp<Eigen::Index>(last, first, total - 1);
  return features.middleRows(first, last - first + 1);
}

}  // namespace vqat
