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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vqat/autograd.hpp"
#include "vqat/corpus.hpp"
#include "vqat/rng.hpp"
#include "vqat/tokenizer.hpp"

namespace vqat {

// Hyperparameters of the two-branch model. Defaults are desk-scale.
struct ModelConfig {
  int question_len = 12;     // l
  int video_len = 8;         // t
  int answer_len = 5;        // m
  int joint_dim = 32;        // d
  int hidden_dim = 64;       // d_h
  int layers = 1;            // N (fusion transformer)
  int heads = 2;             // h
  double dropout = 0.1;      // p_d
  int question_dim = 32;     // d_q
  int answer_dim = 32;       // d_a
  int video_dim = 32;        // d_v
  int token_vocab_size = 0;  // filled from the tokenizer vocabulary
  int text_layers = 1;       // layers of the stand-in contextual text encoder
  bool share_answer_encoder = false;  // token embeddings are always shared
  bool qa_only = false;      // video-blind variant

  static ModelConfig full();

  void validate() const;

  template <typename V>
  void visit(V&& v) {
    v("question_len", question_len);
    v("video_len", video_len);
    v("answer_len", answer_len);
    v("joint_dim", joint_dim);
    v("hidden_dim", hidden_dim);
    v("layers", layers);
    v("heads", heads);
    v("dropout", dropout);
    v("question_dim", question_dim);
    v("answer_dim", answer_dim);
    v("video_dim", video_dim);
    v("token_vocab_size", token_vocab_size);
    v("text_layers", text_layers);
    v("share_answer_encoder", share_answer_encoder);
    v("qa_only", qa_only);
  }
};

enum class FusionMode { kVqa, kQaOnly };

// Fixed sinusoidal table, [positions x width].
Matrix sinusoid_table(int positions, int width);

// The video-question transformer f and the answer encoder g, with the MLM
// and cross-modal matching heads. Parameters live in params(); graph-level
// methods build differentiable computations, the plain methods run
// inference with dropout off.
class Model {
 public:
  Model(ModelConfig config, TokenVocabulary tokens, uint64_t seed);
  // For checkpoint loading: parameters supplied by the caller.
  Model(ModelConfig config, TokenVocabulary tokens, ad::ParameterSet params);

  const ModelConfig& config() const { return config_; }
  const TokenVocabulary& tokens() const { return tokens_; }
  ad::ParameterSet& params() { return params_; }
  const ad::ParameterSet& params() const { return params_; }

  FusionMode default_mode() const { return config_.qa_only ? FusionMode::kQaOnly : FusionMode::kVqa; }

  TokenizedText tokenize_question(std::string_view text) const;
  TokenizedText tokenize_answer(std::string_view text) const;

  struct Fused {
    ad::Var embedding;      // f(v,q), 1 x d
    ad::Var cls;            // Q_1 before the output head, 1 x d
    ad::Var token_outputs;  // Q_1..Q_l, l x d
  };

  // `dropout` non-null selects training behaviour.
  Fused fuse(ad::Graph& g, const SampledClip& video, const TokenizedText& question,
             FusionMode mode, Rng* dropout) const;
  ad::Var encode_answer(ad::Graph& g, const TokenizedText& answer, Rng* dropout) const;
  ad::Var mlm_logits(ad::Graph& g, ad::Var token_outputs) const;
  ad::Var match_score(ad::Graph& g, ad::Var cls) const;

  // Inference helpers.
  RowVector fused_embedding(const SampledClip& video, const TokenizedText& question,
                            FusionMode mode) const;
  RowVector answer_embedding(const std::string& answer) const;
  Matrix answer_matrix(std::span<const std::string> answers) const;
  double score_concat(const SampledClip& video, const std::string& question,
                      const std::string& candidate) const;

  // Names of the output heads trained in feature-probe mode.
  static const std::vector<std::string>& probe_parameter_names();

 private:
  ad::Var encode_text(ad::Graph& g, const TokenizedText& text, const std::string& prefix,
                      Rng* dropout) const;
  ad::Var transformer_layer(ad::Graph& g, ad::Var x, std::span<const uint8_t> mask,
                            const std::string& prefix, int heads, Rng* dropout) const;
  ad::Var projected_input(ad::Graph& g, ad::Var x, const std::string& prefix,
                          const Matrix& positions, Rng* dropout) const;
  ad::Var p(ad::Graph& g, const std::string& name) const;

  void init_parameters(uint64_t seed);
  void add_layer(Rng& rng, const std::string& prefix, int width);

  ModelConfig config_;
  TokenVocabulary tokens_;
  mutable ad::ParameterSet params_;
  Matrix fusion_positions_;  // [(l+t) x d]
  Matrix question_text_positions_;
  Matrix answer_text_positions_;
};

// scores[k] = f . answers.row(k); raw dot products.
Vector score_answers(const RowVector& fused, const Matrix& answers);

// Index of the maximum; the lowest index wins ties.
size_t argmax_lowest(const Vector& scores);

// Highest-scoring vocabulary entry for (video, question).
std::string predict(const Model& model, const SampledClip& video, const std::string& question,
                    const AnswerVocabulary& vocab, const Matrix& answer_matrix, FusionMode mode);

}  // namespace vqat
