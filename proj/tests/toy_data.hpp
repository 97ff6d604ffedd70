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

#include <string>
#include <vector>

#include "test_util.hpp"
#include "vqat/synth.hpp"
#include "vqat/train.hpp"

namespace vqat::testing {

// In-memory pretraining set: `videos` videos with `per_video` steps each;
// every step shows one object (features carry its hashed vector) and is
// described by a clozed question whose answer is the object.
struct ToyData {
  FeatureStore features;
  std::vector<QATriplet> triplets;
  std::vector<AnnotatedExample> examples;
  AnswerVocabulary vocab;
  TokenVocabulary tokens;
};

inline ToyData make_toy_data(int videos, int per_video, int n_objects, int d_v, uint64_t seed) {
  static const std::vector<std::string> questions = {"now we take the what?", "here you can see the what?",
                                                     "this is the what we need?"};
  const auto& objs = synth::objects();
  Rng rng(seed);
  ToyData out;
  std::vector<std::string> texts;
  std::vector<std::string> answers;
  for (int v = 0; v < videos; ++v) {
    const std::string id = "toy" + std::to_string(v);
    Matrix f = random_matrix(rng, 3 * per_video, d_v, 0.1);
    for (int s = 0; s < per_video; ++s) {
      const std::string obj = objs[rng.below(static_cast<uint64_t>(n_objects))];
      const RowVector h = synth::hash_to_vector(obj, d_v).transpose();
      for (int r = 3 * s; r < 3 * s + 3; ++r) f.row(r) += h;
      const std::string q = questions[rng.below(questions.size())];
      out.triplets.push_back({id, 3.0 * s, 3.0 * s + 3.0, q, obj});
      AnnotatedExample ex;
      ex.video_id = id;
      ex.question = "what do we need here?";
      ex.answers.assign(5, obj);
      ex.start_s = 3.0 * s;
      ex.end_s = 3.0 * s + 3.0;
      out.examples.push_back(ex);
      texts.push_back(q);
      texts.push_back(obj);
      answers.push_back(obj);
    }
    out.features.add({id, f});
  }
  texts.push_back("what do we need here?");
  out.vocab = build_vocabulary(answers, 1);
  out.tokens = TokenVocabulary::build(texts, 1);
  return out;
}

inline ModelConfig toy_model_config(const ToyData& data, int d_v) {
  ModelConfig c;
  c.question_len = 10;
  c.video_len = 3;
  c.answer_len = 4;
  c.joint_dim = 32;
  c.hidden_dim = 64;
  c.question_dim = 32;
  c.answer_dim = 32;
  c.video_dim = d_v;
  c.token_vocab_size = data.tokens.size();
  return c;
}

}  // namespace vqat::testing
