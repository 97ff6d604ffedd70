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

#include "vqat/model.hpp"

#include <cmath>

namespace vqat {

using ad::Graph;
using ad::Var;

ModelConfig ModelConfig::full() {
  ModelConfig c;
  c.question_len = 20;
  c.video_len = 20;
  c.answer_len = 10;
  c.joint_dim = 512;
  c.hidden_dim = 2048;
  c.layers = 2;
  c.heads = 8;
  c.dropout = 0.1;
  c.question_dim = 768;
  c.answer_dim = 768;
  c.video_dim = 1024;
  c.token_vocab_size = 30522;
  c.text_layers = 6;
  return c;
}

void ModelConfig::validate() const {
  auto positive = [](const char* name, int v) {
    if (v <= 0) throw ValidationError(name, "must be positive");
  };
  positive("question_len", question_len);
  positive("video_len", video_len);
  positive("answer_len", answer_len);
  positive("joint_dim", joint_dim);
  positive("hidden_dim", hidden_dim);
  positive("layers", layers);
  positive("heads", heads);
  positive("question_dim", question_dim);
  positive("answer_dim", answer_dim);
  positive("video_dim", video_dim);
  if (question_len < 2) throw ValidationError("question_len", "must hold [CLS] and [SEP]");
  if (answer_len < 2) throw ValidationError("answer_len", "must hold [CLS] and [SEP]");
  if (joint_dim % heads != 0) throw ValidationError("heads", "joint_dim must be divisible by heads");
  if (text_layers < 0) throw ValidationError("text_layers", "must be >= 0");
  if (answer_dim != question_dim) {
    throw ValidationError("answer_dim", "must equal question_dim (token embeddings are shared)");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ValidationError("dropout", "must be in [0, 1)");
  if (token_vocab_size <= kNumSpecialTokens) {
    throw ValidationError("token_vocab_size", "must exceed the reserved special tokens");
  }
}

Matrix sinusoid_table(int positions, int width) {
  Matrix table(positions, width);
  for (int p = 0; p < positions; ++p) {
    for (int i = 0; i < width; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / width);
      table(p, i) = (i % 2 == 0) ? std::sin(p * freq) : std::cos(p * freq);
    }
  }
  return table;
}

namespace {

int text_heads(int width, int heads) { return width % heads == 0 ? heads : 1; }

Matrix glorot(Rng& rng, int fan_in, int fan_out) {
  const double stddev = std::sqrt(2.0 / (fan_in + fan_out));
  Matrix m(fan_in, fan_out);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * stddev;
  return m;
}

Matrix gaussian(Rng& rng, int rows, int cols, double stddev) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * stddev;
  return m;
}

}  // namespace

Model::Model(ModelConfig config, TokenVocabulary tokens, uint64_t seed)
    : config_(config), tokens_(std::move(tokens)) {
  config_.token_vocab_size = tokens_.size();
  config_.validate();
  init_parameters(seed);
  fusion_positions_ = sinusoid_table(config_.question_len + config_.video_len, config_.joint_dim);
  question_text_positions_ = sinusoid_table(config_.question_len, config_.question_dim);
  answer_text_positions_ = sinusoid_table(config_.answer_len, config_.answer_dim);
}

Model::Model(ModelConfig config, TokenVocabulary tokens, ad::ParameterSet params)
    : config_(config), tokens_(std::move(tokens)) {
  if (config_.token_vocab_size != tokens_.size()) {
    throw ValidationError("token_vocab_size", "does not match the stored token vocabulary");
  }
  config_.validate();
  // Shapes are checked against a freshly initialised layout.
  init_parameters(0);
  for (const auto& mine : params_.all()) {
    const ad::Parameter* theirs = params.find(mine->name);
    if (!theirs) throw ValidationError(mine->name, "missing from checkpoint");
    if (theirs->value.rows() != mine->value.rows() || theirs->value.cols() != mine->value.cols()) {
      throw ValidationError(mine->name, "shape differs from the configured model");
    }
  }
  if (params.size() != params_.size()) throw ValidationError("parameters", "unexpected extra tensors");
  params_.assign(params);
  fusion_positions_ = sinusoid_table(config_.question_len + config_.video_len, config_.joint_dim);
  question_text_positions_ = sinusoid_table(config_.question_len, config_.question_dim);
  answer_text_positions_ = sinusoid_table(config_.answer_len, config_.answer_dim);
}

void Model::add_layer(Rng& rng, const std::string& prefix, int width) {
  const int hidden = config_.hidden_dim;
  for (const char* m : {"wq", "wk", "wv", "wo"}) {
    params_.add(prefix + ".attn." + m, glorot(rng, width, width));
  }
  for (const char* b : {"bq", "bk", "bv", "bo"}) {
    params_.add(prefix + ".attn." + b, Matrix::Zero(1, width));
  }
  params_.add(prefix + ".ln1.gain", Matrix::Ones(1, width));
  params_.add(prefix + ".ln1.bias", Matrix::Zero(1, width));
  params_.add(prefix + ".ffn.w1", glorot(rng, width, hidden));
  params_.add(prefix + ".ffn.b1", Matrix::Zero(1, hidden));
  params_.add(prefix + ".ffn.w2", glorot(rng, hidden, width));
  params_.add(prefix + ".ffn.b2", Matrix::Zero(1, width));
  params_.add(prefix + ".ln2.gain", Matrix::Ones(1, width));
  params_.add(prefix + ".ln2.bias", Matrix::Zero(1, width));
}

void Model::init_parameters(uint64_t seed) {
  Rng rng(seed);
  const ModelConfig& c = config_;
  const int d = c.joint_dim;
  params_.add("token_embedding", gaussian(rng, c.token_vocab_size, c.question_dim, 0.5));

  auto add_text_encoder = [&](const std::string& prefix) {
    params_.add(prefix + ".ln_in.gain", Matrix::Ones(1, c.question_dim));
    params_.add(prefix + ".ln_in.bias", Matrix::Zero(1, c.question_dim));
    for (int i = 0; i < c.text_layers; ++i) add_layer(rng, prefix + ".layer" + std::to_string(i), c.question_dim);
  };
  add_text_encoder("text");
  if (!c.share_answer_encoder) add_text_encoder("answer_text");

  params_.add("fusion.question_proj.w", glorot(rng, c.question_dim, d));
  params_.add("fusion.question_proj.b", Matrix::Zero(1, d));
  params_.add("fusion.question_ln.gain", Matrix::Ones(1, d));
  params_.add("fusion.question_ln.bias", Matrix::Zero(1, d));
  params_.add("fusion.video_proj.w", glorot(rng, c.video_dim, d));
  params_.add("fusion.video_proj.b", Matrix::Zero(1, d));
  params_.add("fusion.video_ln.gain", Matrix::Ones(1, d));
  params_.add("fusion.video_ln.bias", Matrix::Zero(1, d));
  params_.add("fusion.mod_q", gaussian(rng, 1, d, 0.02));
  params_.add("fusion.mod_v", gaussian(rng, 1, d, 0.02));
  for (int i = 0; i < c.layers; ++i) add_layer(rng, "fusion.layer" + std::to_string(i), d);

  params_.add("head.w_vq", glorot(rng, d, d));
  params_.add("head.b_vq", Matrix::Zero(1, d));
  params_.add("head.w_a", glorot(rng, c.answer_dim, d));
  params_.add("head.b_a", Matrix::Zero(1, d));

  params_.add("mlm.w", glorot(rng, d, c.token_vocab_size));
  params_.add("mlm.b", Matrix::Zero(1, c.token_vocab_size));
  params_.add("match.w", glorot(rng, d, 1));
  params_.add("match.b", Matrix::Zero(1, 1));
}

const std::vector<std::string>& Model::probe_parameter_names() {
  static const std::vector<std::string> names = {"head.w_vq", "head.b_vq", "head.w_a", "head.b_a"};
  return names;
}

TokenizedText Model::tokenize_question(std::string_view text) const {
  return tokenize(text, config_.question_len, tokens_);
}

TokenizedText Model::tokenize_answer(std::string_view text) const {
  return tokenize(text, config_.answer_len, tokens_);
}

Var Model::p(Graph& g, const std::string& name) const { return g.param(params_.get(name)); }

Var Model::transformer_layer(Graph& g, Var x, std::span<const uint8_t> mask,
                             const std::string& prefix, int heads, Rng* dropout) const {
  const Eigen::Index width = g.value(x).cols();
  const Eigen::Index dk = width / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  const Var q = g.add_row(g.matmul(x, p(g, prefix + ".attn.wq")), p(g, prefix + ".attn.bq"));
  const Var k = g.add_row(g.matmul(x, p(g, prefix + ".attn.wk")), p(g, prefix + ".attn.bk"));
  const Var v = g.add_row(g.matmul(x, p(g, prefix + ".attn.wv")), p(g, prefix + ".attn.bv"));
  std::vector<Var> per_head;
  per_head.reserve(static_cast<size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const Var qh = g.slice_cols(q, h * dk, dk);
    const Var kh = g.slice_cols(k, h * dk, dk);
    const Var vh = g.slice_cols(v, h * dk, dk);
    const Var attn = g.masked_softmax(g.scale(g.matmul_nt(qh, kh), scale), mask);
    per_head.push_back(g.matmul(attn, vh));
  }
  const Var merged = heads == 1 ? per_head[0] : g.concat_cols(per_head);
  Var out = g.add_row(g.matmul(merged, p(g, prefix + ".attn.wo")), p(g, prefix + ".attn.bo"));
  out = g.dropout(out, config_.dropout, dropout);
  x = g.layer_norm(g.add(x, out), p(g, prefix + ".ln1.gain"), p(g, prefix + ".ln1.bias"));

  Var ff = g.gelu(g.add_row(g.matmul(x, p(g, prefix + ".ffn.w1")), p(g, prefix + ".ffn.b1")));
  ff = g.add_row(g.matmul(ff, p(g, prefix + ".ffn.w2")), p(g, prefix + ".ffn.b2"));
  ff = g.dropout(ff, config_.dropout, dropout);
  return g.layer_norm(g.add(x, ff), p(g, prefix + ".ln2.gain"), p(g, prefix + ".ln2.bias"));
}

Var Model::encode_text(Graph& g, const TokenizedText& text, const std::string& prefix,
                       Rng* dropout) const {
  const Var table = p(g, "token_embedding");
  const int len = static_cast<int>(text.length());
  Matrix positions;
  if (len == config_.question_len) {
    positions = question_text_positions_;
  } else if (len == config_.answer_len) {
    positions = answer_text_positions_;
  } else {
    positions = sinusoid_table(len, config_.question_dim);
  }
  Var x = g.add(g.gather_rows(table, text.ids), g.constant(std::move(positions)));
  x = g.layer_norm(x, p(g, prefix + ".ln_in.gain"), p(g, prefix + ".ln_in.bias"));
  x = g.dropout(x, config_.dropout, dropout);
  const int heads = text_heads(config_.question_dim, config_.heads);
  for (int i = 0; i < config_.text_layers; ++i) {
    x = transformer_layer(g, x, text.mask, prefix + ".layer" + std::to_string(i), heads, dropout);
  }
  return x;
}

// dp(sigma(x W + b) + pos + mod), sigma = GELU then LayerNorm.
Var Model::projected_input(Graph& g, Var x, const std::string& prefix, const Matrix& positions,
                           Rng* dropout) const {
  Var h = g.add_row(g.matmul(x, p(g, "fusion." + prefix + "_proj.w")),
                    p(g, "fusion." + prefix + "_proj.b"));
  h = g.layer_norm(g.gelu(h), p(g, "fusion." + prefix + "_ln.gain"),
                   p(g, "fusion." + prefix + "_ln.bias"));
  h = g.add(h, g.constant(positions));
  h = g.add_row(h, p(g, prefix == "question" ? "fusion.mod_q" : "fusion.mod_v"));
  return g.dropout(h, config_.dropout, dropout);
}

Model::Fused Model::fuse(Graph& g, const SampledClip& video, const TokenizedText& question,
                         FusionMode mode, Rng* dropout) const {
  const int l = config_.question_len;
  const int t = config_.video_len;
  if (static_cast<int>(question.length()) != l || question.mask.size() != question.ids.size()) {
    throw ValidationError("question_len", "question has " + std::to_string(question.length()) +
                                              " tokens, expected " + std::to_string(l));
  }
  if (video.features.rows() != t || static_cast<int>(video.mask.size()) != t) {
    throw ValidationError("video_len", "video has " + std::to_string(video.features.rows()) +
                                           " rows, expected " + std::to_string(t));
  }
  if (video.features.cols() != config_.video_dim) {
    throw ValidationError("video_dim", "video features have width " +
                                           std::to_string(video.features.cols()) + ", expected " +
                                           std::to_string(config_.video_dim));
  }

  std::vector<uint8_t> mask(question.mask.begin(), question.mask.end());
  Var video_in;
  if (mode == FusionMode::kQaOnly) {
    // Zero input with a fixed all-valid mask: f must not depend on v at all.
    video_in = g.constant(Matrix::Zero(t, config_.video_dim));
    mask.insert(mask.end(), static_cast<size_t>(t), 1);
  } else {
    video_in = g.constant(video.features);
    mask.insert(mask.end(), video.mask.begin(), video.mask.end());
  }

  const Var q_ctx = encode_text(g, question, "text", dropout);
  const Var q_in = projected_input(g, q_ctx, "question", fusion_positions_.topRows(l), dropout);
  const Var v_in = projected_input(g, video_in, "video", fusion_positions_.bottomRows(t), dropout);
  const Var parts[] = {q_in, v_in};
  Var u = g.concat_rows(parts);
  for (int i = 0; i < config_.layers; ++i) {
    u = transformer_layer(g, u, mask, "fusion.layer" + std::to_string(i), config_.heads, dropout);
  }
  Fused out;
  out.cls = g.slice_rows(u, 0, 1);
  out.token_outputs = g.slice_rows(u, 0, l);
  out.embedding = g.add_row(g.matmul(g.dropout(out.cls, config_.dropout, dropout), p(g, "head.w_vq")),
                            p(g, "head.b_vq"));
  return out;
}

Var Model::encode_answer(Graph& g, const TokenizedText& answer, Rng* dropout) const {
  const std::string prefix = config_.share_answer_encoder ? "text" : "answer_text";
  const Var ctx = encode_text(g, answer, prefix, dropout);
  const Var cls = g.slice_rows(ctx, 0, 1);
  return g.add_row(g.matmul(cls, p(g, "head.w_a")), p(g, "head.b_a"));
}

Var Model::mlm_logits(Graph& g, Var token_outputs) const {
  return g.add_row(g.matmul(token_outputs, p(g, "mlm.w")), p(g, "mlm.b"));
}

Var Model::match_score(Graph& g, Var cls) const {
  return g.add_row(g.matmul(cls, p(g, "match.w")), p(g, "match.b"));
}

RowVector Model::fused_embedding(const SampledClip& video, const TokenizedText& question,
                                 FusionMode mode) const {
  Graph g(false);
  const Fused f = fuse(g, video, question, mode, nullptr);
  return g.value(f.embedding).row(0);
}

RowVector Model::answer_embedding(const std::string& answer) const {
  Graph g(false);
  return g.value(encode_answer(g, tokenize_answer(answer), nullptr)).row(0);
}

Matrix Model::answer_matrix(std::span<const std::string> answers) const {
  Matrix out(static_cast<Eigen::Index>(answers.size()), config_.joint_dim);
  for (size_t i = 0; i < answers.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = answer_embedding(answers[i]);
  }
  return out;
}

double Model::score_concat(const SampledClip& video, const std::string& question,
                           const std::string& candidate) const {
  Graph g(false);
  const Fused f = fuse(g, video, tokenize_question(question + " " + candidate), default_mode(), nullptr);
  return g.scalar(match_score(g, f.cls));
}

Vector score_answers(const RowVector& fused, const Matrix& answers) {
  if (answers.cols() != fused.size()) throw ValidationError("joint_dim", "answer matrix width mismatch");
  return answers * fused.transpose();
}

size_t argmax_lowest(const Vector& scores) {
  if (scores.size() == 0) throw std::invalid_argument("argmax of empty scores");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i) {
    if (scores(i) > scores(best)) best = i;
  }
  return static_cast<size_t>(best);
}

std::string predict(const Model& model, const SampledClip& video, const std::string& question,
                    const AnswerVocabulary& vocab, const Matrix& answer_matrix, FusionMode mode) {
  if (vocab.empty()) throw ValidationError("vocabulary", "must be non-empty");
  const RowVector f = model.fused_embedding(video, model.tokenize_question(question), mode);
  return vocab[argmax_lowest(score_answers(f, answer_matrix))];
}

}  // namespace vqat
