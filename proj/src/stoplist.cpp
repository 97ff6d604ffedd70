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

#include <algorithm>
#include <iterator>
#include <string_view>
#include <unordered_set>

#include "vqat/qagen.hpp"

namespace vqat::qagen {
namespace {

// stoplist-v1. Function words, auxiliaries, pronouns, discourse fillers
// common in narrated video and a handful of light verbs that rarely carry
// an answer on their own. Changing this list changes golden outputs; bump
// kStoplistVersion when doing so.
constexpr std::string_view kStoplist[] = {
    "a", "about", "above", "after", "again", "against", "all", "alright", "also", "am",
    "an", "and", "any", "are", "around", "as", "at", "be", "because", "been", "before", "being",
    "below", "between", "both", "but", "by", "can", "could", "did", "do", "does", "doing",
    "done", "down", "during", "each", "either", "else", "even", "every", "few", "first", "for",
    "from", "further", "get", "gets", "getting", "go", "goes", "going", "gonna", "got", "had",
    "has", "have", "having", "he", "her", "here", "hers", "herself", "him", "himself", "his",
    "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just", "let", "like", "make",
    "may", "me", "might", "more", "most", "much", "must", "my", "myself", "need", "next", "no",
    "nor", "not", "now", "of", "off", "oh", "ok", "okay", "on", "once", "one", "only", "or",
    "other", "our", "ours", "ourselves", "out", "over", "own", "put", "really", "same", "see",
    "shall", "she", "should", "show", "so", "some", "such", "take", "than", "that", "the",
    "their", "theirs", "them", "themselves", "then", "there", "these", "they", "thing",
    "things", "this", "those", "through", "to", "too", "uh", "um", "under", "until", "up",
    "use", "very", "via", "want", "was", "we", "well", "were", "what", "when", "where",
    "which", "while", "who", "whom", "why", "will", "with", "would", "yeah", "yes", "you",
    "your", "yours", "yourself", "yourselves"};

const std::unordered_set<std::string_view>& stoplist() {
  static const std::unordered_set<std::string_view> set(std::begin(kStoplist), std::end(kStoplist));
  return set;
}

}  // namespace

bool is_function_word(std::string_view normalized_token) {
  return stoplist().count(normalized_token) > 0;
}

}  // namespace vqat::qagen
