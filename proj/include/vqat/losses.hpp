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

#include <set>
#include <span>
#include <string>
#include <vector>

#include "vqat/autograd.hpp"
#include "vqat/common.hpp"

namespace vqat::train {

// In-batch contrastive objective with duplicate-negative removal.
//
// For anchor i the candidate set is its own answer embedding g_i plus one
// embedding per distinct answer string in the batch other than a_i; the
// representative of a string is its first occurrence in batch order. The
// returned loss is the mean over anchors of
//   log(exp(f_i.g_i) + sum_u exp(f_i.g_u)) - f_i.g_i
// evaluated with a max shift.
struct ContrastiveResult {
  double loss = 0.0;
  Matrix grad_fused;    // d loss / d fused, [B x d]
  Matrix grad_answers;  // d loss / d answers, [B x d]
};

ContrastiveResult contrastive_loss(const Matrix& fused, const Matrix& answers,
                                   std::span<const std::string> answer_strings);

// The negative answer strings each anchor is contrasted against.
std::vector<std::set<std::string>> negative_answer_sets(std::span<const std::string> answer_strings);

// log(1 + sum_j exp(neg_j - pos)), i.e. the per-anchor term with explicit
// negatives.
double contrastive_term(double positive_score, std::span<const double> negative_scores);

struct ScoreLoss {
  double loss = 0.0;
  Vector grad;  // d loss / d scores
};

// -log softmax(scores)[target]
ScoreLoss finetune_loss(const Vector& scores, size_t target);

// Softmax cross-entropy over K >= 2 candidates; throws if correct >= K.
ScoreLoss multiple_choice_loss(const Vector& scores, size_t correct);

inline constexpr int kIgnoreLabel = -1;

struct LogitLoss {
  double loss = 0.0;
  Matrix grad;  // same shape as the logits
};

// Mean cross-entropy over rows whose label != kIgnoreLabel; 0 when none.
LogitLoss mlm_loss(const Matrix& logits, std::span<const int> labels);

// Mean binary cross-entropy with logits; labels in {0, 1}.
LogitLoss matching_loss(const Vector& logits, std::span<const double> labels);

// Differentiable wrappers over the kernels above.
ad::Var contrastive_loss(ad::Graph& g, ad::Var fused, ad::Var answers,
                         std::span<const std::string> answer_strings);
// Mean over rows of -log softmax(scores.row(i))[targets[i]].
ad::Var softmax_ce_rows(ad::Graph& g, ad::Var scores, std::span<const size_t> targets);
ad::Var mlm_loss(ad::Graph& g, ad::Var logits, std::span<const int> labels);
ad::Var matching_loss(ad::Graph& g, ad::Var logits, std::span<const double> labels);

}  // namespace vqat::train
