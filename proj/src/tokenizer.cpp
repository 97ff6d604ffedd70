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

#include "vqat/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

namespace vqat {
namespace {

const std::string kSpecialNames[kNumSpecialTokens] = {"[CLS]", "[SEP]", "[PAD]", "[MASK]", "[UNK]"};

}  // namespace

TokenVocabulary::TokenVocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  for (size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], kNumSpecialTokens + static_cast<int>(i)).second) {
      throw std::invalid_argument("duplicate token " + words_[i]);
    }
  }
}

TokenVocabulary TokenVocabulary::build(std::span<const std::string> texts, int min_count) {
  std::map<std::string, int> counts;
  for (const auto& t : texts) {
    for (auto& w : basic_tokenize(t)) ++counts[w];
  }
  std::vector<std::pair<std::string, int>> kept;
  for (auto& [w, c] : counts) {
    if (c >= min_count) kept.emplace_back(w, c);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words;
  for (auto& [w, c] : kept) words.push_back(w);
  return TokenVocabulary(std::move(words));
}

int TokenVocabulary::id(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& TokenVocabulary::word(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("token id out of range");
  if (id < kNumSpecialTokens) return kSpecialNames[id];
  return words_[static_cast<size_t>(id - kNumSpecialTokens)];
}

std::vector<std::string> basic_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&]() {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      flush();
    } else if (std::ispunct(u)) {
      flush();
      out.emplace_back(1, c);
    } else {
      current.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  flush();
  return out;
}

TokenizedText tokenize(std::string_view text, int length, const TokenVocabulary& vocab) {
  if (length < 2) throw std::invalid_argument("token length must be >= 2");
  const auto words = basic_tokenize(text);
  TokenizedText out;
  out.ids.assign(static_cast<size_t>(length), kPad);
  out.mask.assign(static_cast<size_t>(length), 0);
  out.ids[0] = kCls;
  const size_t room = static_cast<size_t>(length - 2);
  const size_t n = std::min(room, words.size());
  for (size_t i = 0; i < n; ++i) out.ids[i + 1] = vocab.id(words[i]);
  out.ids[n + 1] = kSep;
  for (size_t i = 0; i < n + 2; ++i) out.mask[i] = 1;
  return out;
}

}  // namespace vqat
