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

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vqat {

enum SpecialToken : int {
  kCls = 0,
  kSep = 1,
  kPad = 2,
  kMask = 3,
  kUnk = 4,
};
inline constexpr int kNumSpecialTokens = 5;

// Word-level vocabulary; ids below kNumSpecialTokens are reserved.
class TokenVocabulary {
 public:
  TokenVocabulary() = default;
  explicit TokenVocabulary(std::vector<std::string> words);

  // Every word seen at least `min_count` times in `texts`, by descending
  // count then lexicographically.
  static TokenVocabulary build(std::span<const std::string> texts, int min_count = 1);

  int id(const std::string& word) const;
  const std::string& word(int id) const;
  int size() const { return kNumSpecialTokens + static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

// Lowercases and splits on whitespace and ASCII punctuation; punctuation
// marks become tokens of their own.
std::vector<std::string> basic_tokenize(std::string_view text);

struct TokenizedText {
  std::vector<int> ids;
  std::vector<uint8_t> mask;  // 1 where ids[i] != kPad

  size_t length() const { return ids.size(); }
  bool operator==(const TokenizedText&) const = default;
};

// [CLS] w1 .. wk [SEP] [PAD]...; truncation always keeps [SEP] last.
TokenizedText tokenize(std::string_view text, int length, const TokenVocabulary& vocab);

inline bool is_special(int id) { return id >= 0 && id < kNumSpecialTokens; }

}  // namespace vqat
