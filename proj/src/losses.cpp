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

#include "vqat/losses.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace vqat::train {
namespace {

// Distinct strings in first-occurrence order and, per anchor, the index of
// its own string in that list.
struct UniqueAnswers {
  std::vector<size_t> representative;  // batch index of each distinct string
  std::vector<size_t> own;             // distinct id per anchor
};

UniqueAnswers unique_answers(std::span<const std::string> answers) {
  UniqueAnswers u;
  std::unordered_map<std::string, size_t> seen;
  u.own.reserve(answers.size());
  for (size_t i = 0; i < answers.size(); ++i) {
    auto [it, inserted] = seen.emplace(answers[i], u.representative.size());
    if (inserted) u.representative.push_back(i);
    u.own.push_back(it->second);
  }
  return u;
}

// Log-softmax cross-entropy of one row; writes d loss / d row into grad.
double row_ce(const double* row, Eigen::Index n, Eigen::Index target, double* grad) {
  double mx = row[0];
  for (Eigen::Index j = 1; j < n; ++j) mx = std::max(mx, row[j]);
  double z = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) z += std::exp(row[j] - mx);
  const double lse = mx + std::log(z);
  if (grad) {
    for (Eigen::Index j = 0; j < n; ++j) grad[j] = std::exp(row[j] - lse);
    grad[target] -= 1.0;
  }
  return lse - row[target];
}

}  // namespace

ContrastiveResult contrastive_loss(const Matrix& fused, const Matrix& answers,
                                   std::span<const std::string> answer_strings) {
  const Eigen::Index b = fused.rows();
  if (b < 1 || answers.rows() != b || static_cast<Eigen::Index>(answer_strings.size()) != b ||
      answers.cols() != fused.cols()) {
    throw std::invalid_argument("contrastive_loss: batch shapes disagree");
  }
  const UniqueAnswers u = unique_answers(answer_strings);
  const Eigen::Index n_unique = static_cast<Eigen::Index>(u.representative.size());
  Matrix reps(n_unique, answers.cols());
  for (Eigen::Index k = 0; k < n_unique; ++k) reps.row(k) = answers.row(static_cast<Eigen::Index>(u.representative[static_cast<size_t>(k)]));
  const Matrix all_scores = fused * reps.transpose();  // [B x U]

  ContrastiveResult r;
  r.grad_fused = Matrix::Zero(b, fused.cols());
  r.grad_answers = Matrix::Zero(b, answers.cols());
  std::vector<double> logits;
  std::vector<double> probs;
  std::vector<Eigen::Index> which;  // distinct id behind each negative logit
  const double inv_b = 1.0 / static_cast<double>(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    logits.assign(1, fused.row(i).dot(answers.row(i)));
    which.clear();
    for (Eigen::Index k = 0; k < n_unique; ++k) {
      if (static_cast<size_t>(k) == u.own[static_cast<size_t>(i)]) continue;
      logits.push_back(all_scores(i, k));
      which.push_back(k);
    }
    probs.resize(logits.size());
    r.loss += row_ce(logits.data(), static_cast<Eigen::Index>(logits.size()), 0, probs.data());
    // probs now holds d loss_i / d logits.
    r.grad_fused.row(i) += probs[0] * answers.row(i);
    r.grad_answers.row(i) += probs[0] * fused.row(i);
    for (size_t j = 0; j < which.size(); ++j) {
      const double gj = probs[j + 1];
      const Eigen::Index rep = static_cast<Eigen::Index>(u.representative[static_cast<size_t>(which[j])]);
      r.grad_fused.row(i) += gj * reps.row(which[j]);
      r.grad_answers.row(rep) += gj * fused.row(i);
    }
  }
  r.loss *= inv_b;
  r.grad_fused *= inv_b;
  r.grad_answers *= inv_b;
  return r;
}

std::vector<std::set<std::string>> negative_answer_sets(std::span<const std::string> answer_strings) {
  const std::set<std::string> all(answer_strings.begin(), answer_strings.end());
  std::vector<std::set<std::string>> out;
  out.reserve(answer_strings.size());
  for (const auto& a : answer_strings) {
    std::set<std::string> neg = all;
    neg.erase(a);
    out.push_back(std::move(neg));
  }
  return out;
}

double contrastive_term(double positive_score, std::span<const double> negative_scores) {
  std::vector<double> row(1, positive_score);
  row.insert(row.end(), negative_scores.begin(), negative_scores.end());
  return row_ce(row.data(), static_cast<Eigen::Index>(row.size()), 0, nullptr);
}

ScoreLoss finetune_loss(const Vector& scores, size_t target) {
  if (target >= static_cast<size_t>(scores.size())) {
    throw std::out_of_range("finetune_loss: target outside the vocabulary");
  }
  ScoreLoss r;
  r.grad.resize(scores.size());
  r.loss = row_ce(scores.data(), scores.size(), static_cast<Eigen::Index>(target), r.grad.data());
  return r;
}

ScoreLoss multiple_choice_loss(const Vector& scores, size_t correct) {
  if (scores.size() < 2) throw std::invalid_argument("multiple_choice_loss: need at least 2 candidates");
  if (correct >= static_cast<size_t>(scores.size())) {
    throw std::out_of_range("multiple_choice_loss: correct index >= number of candidates");
  }
  return finetune_loss(scores, correct);
}

LogitLoss mlm_loss(const Matrix& logits, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows()) {
    throw std::invalid_argument("mlm_loss: one label per row expected");
  }
  LogitLoss r;
  r.grad = Matrix::Zero(logits.rows(), logits.cols());
  size_t labeled = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kIgnoreLabel) continue;
    if (labels[i] < 0 || labels[i] >= logits.cols()) throw std::out_of_range("mlm_loss: label out of range");
    const auto row = static_cast<Eigen::Index>(i);
    r.loss += row_ce(logits.row(row).data(), logits.cols(), labels[i], r.grad.row(row).data());
    ++labeled;
  }
  if (labeled == 0) return r;
  r.loss /= static_cast<double>(labeled);
  r.grad /= static_cast<double>(labeled);
  return r;
}

LogitLoss matching_loss(const Vector& logits, std::span<const double> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.size()) {
    throw std::invalid_argument("matching_loss: one label per logit expected");
  }
  LogitLoss r;
  r.grad = Matrix::Zero(logits.size(), 1);
  if (logits.size() == 0) return r;
  const double inv_n = 1.0 / static_cast<double>(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const double x = logits(i);
    const double y = labels[static_cast<size_t>(i)];
    // max(x,0) - x*y + log(1 + exp(-|x|))
    r.loss += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
    const double sigmoid = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    r.grad(i, 0) = (sigmoid - y) * inv_n;
  }
  r.loss *= inv_n;
  return r;
}

// ---------------------------------------------------------------------------

ad::Var contrastive_loss(ad::Graph& g, ad::Var fused, ad::Var answers,
                         std::span<const std::string> answer_strings) {
  ContrastiveResult r = contrastive_loss(g.value(fused), g.value(answers), answer_strings);
  Matrix value(1, 1);
  value(0, 0) = r.loss;
  const ad::Var inputs[] = {fused, answers};
  return g.custom(inputs, std::move(value),
                  [fused, answers, gf = std::move(r.grad_fused),
                   ga = std::move(r.grad_answers)](ad::Graph& g, const Matrix& out) {
                    g.accumulate(fused, gf * out(0, 0));
                    g.accumulate(answers, ga * out(0, 0));
                  });
}

ad::Var softmax_ce_rows(ad::Graph& g, ad::Var scores, std::span<const size_t> targets) {
  const Matrix& s = g.value(scores);
  if (static_cast<Eigen::Index>(targets.size()) != s.rows()) {
    throw std::invalid_argument("softmax_ce_rows: one target per row expected");
  }
  Matrix grad(s.rows(), s.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const auto t = static_cast<Eigen::Index>(targets[static_cast<size_t>(i)]);
    if (t >= s.cols()) throw std::out_of_range("softmax_ce_rows: target out of range");
    loss += row_ce(s.row(i).data(), s.cols(), t, grad.row(i).data());
  }
  const double inv = s.rows() ? 1.0 / static_cast<double>(s.rows()) : 0.0;
  Matrix value(1, 1);
  value(0, 0) = loss * inv;
  grad *= inv;
  const ad::Var inputs[] = {scores};
  return g.custom(inputs, std::move(value), [scores, grad = std::move(grad)](ad::Graph& g, const Matrix& out) {
    g.accumulate(scores, grad * out(0, 0));
  });
}

ad::Var mlm_loss(ad::Graph& g, ad::Var logits, std::span<const int> labels) {
  LogitLoss r = mlm_loss(g.value(logits), labels);
  Matrix value(1, 1);
  value(0, 0) = r.loss;
  const ad::Var inputs[] = {logits};
  return g.custom(inputs, std::move(value), [logits, grad = std::move(r.grad)](ad::Graph& g, const Matrix& out) {
    g.accumulate(logits, grad * out(0, 0));
  });
}

ad::Var matching_loss(ad::Graph& g, ad::Var logits, std::span<const double> labels) {
  const Matrix& m = g.value(logits);
  const Vector flat = Eigen::Map<const Vector>(m.data(), m.size());
  LogitLoss r = matching_loss(flat, labels);
  Matrix value(1, 1);
  value(0, 0) = r.loss;
  Matrix grad = Eigen::Map<const Matrix>(r.grad.data(), m.rows(), m.cols());
  const ad::Var inputs[] = {logits};
  return g.custom(inputs, std::move(value), [logits, grad = std::move(grad)](ad::Graph& g, const Matrix& out) {
    g.accumulate(logits, grad * out(0, 0));
  });
}

}  // namespace vqat::train
