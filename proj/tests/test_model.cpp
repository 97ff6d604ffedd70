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

#include <doctest.h>

#include <fstream>

#include "gradcheck.hpp"
#include "vqat/checkpoint.hpp"

using namespace vqat;
using namespace vqat::testing;

TEST_CASE("tokenizer") {
  const TokenVocabulary v = toy_tokens();
  CHECK(v.id("what") == kNumSpecialTokens);
  CHECK(v.id("zebra") == kUnk);
  CHECK(basic_tokenize("Take the Spoon?") == std::vector<std::string>{"take", "the", "spoon", "?"});

  const TokenizedText t = tokenize("take the spoon", 6, v);
  CHECK(t.ids == std::vector<int>{kCls, v.id("take"), v.id("the"), v.id("spoon"), kSep, kPad});
  CHECK(t.mask == std::vector<uint8_t>{1, 1, 1, 1, 1, 0});

  const TokenizedText cut = tokenize("take the spoon bowl salt", 4, v);
  CHECK(cut.ids.back() == kSep);
  CHECK(cut.mask == std::vector<uint8_t>{1, 1, 1, 1});

  CHECK(TokenVocabulary::build(std::vector<std::string>{"b a", "a c", "a"}, 1).words() ==
        std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("model config validation names the field") {
  ModelConfig c = tiny_config();
  c.heads = 3;
  try {
    c.validate();
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "heads");
  }
  c = tiny_config();
  c.answer_dim = 4;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = tiny_config();
  c.dropout = 1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  CHECK_NOTHROW(ModelConfig::full().validate());
}

TEST_CASE("full-scale preset dimensions") {
  const ModelConfig p = ModelConfig::full();
  CHECK(p.question_len == 20);
  CHECK(p.video_len == 20);
  CHECK(p.answer_len == 10);
  CHECK(p.joint_dim == 512);
  CHECK(p.hidden_dim == 2048);
  CHECK(p.layers == 2);
  CHECK(p.heads == 8);
  CHECK(p.dropout == 0.1);
  CHECK(p.question_dim == 768);
  CHECK(p.video_dim == 1024);
}

TEST_CASE("output shapes") {
  const Model m(tiny_config(), toy_tokens(), 1);
  Rng rng(2);
  const auto clip = random_clip(rng, 4, 6, 3);
  const auto q = m.tokenize_question("what do we need here ?");
  ad::Graph g(false);
  const auto f = m.fuse(g, clip, q, FusionMode::kVqa, nullptr);
  CHECK(g.value(f.embedding).rows() == 1);
  CHECK(g.value(f.embedding).cols() == 16);
  CHECK(g.value(f.token_outputs).rows() == 6);
  CHECK(g.value(m.mlm_logits(g, f.token_outputs)).cols() == toy_tokens().size());
  CHECK(g.value(m.match_score(g, f.cls)).size() == 1);
  const std::vector<std::string> answers = {"spoon", "bowl", "red cat"};
  const Matrix a = m.answer_matrix(answers);
  CHECK(a.rows() == 3);
  CHECK(a.cols() == 16);
  CHECK(a.row(1) == m.answer_embedding("bowl"));
}

TEST_CASE("fuse rejects mismatched inputs by field") {
  const Model m(tiny_config(), toy_tokens(), 1);
  Rng rng(2);
  ad::Graph g(false);
  const auto q = m.tokenize_question("what");
  try {
    m.fuse(g, random_clip(rng, 4, 5, 4), q, FusionMode::kVqa, nullptr);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "video_dim");
  }
  try {
    m.fuse(g, random_clip(rng, 3, 6, 3), q, FusionMode::kVqa, nullptr);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "video_len");
  }
}

TEST_CASE("padded video rows and padded tokens do not influence f") {
  const Model m(tiny_config(), toy_tokens(), 3);
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int valid = 1 + static_cast<int>(rng.below(3));
    SampledClip clip = random_clip(rng, 4, 6, valid);
    TokenizedText q = m.tokenize_question("take the spoon");
    const RowVector ref = m.fused_embedding(clip, q, FusionMode::kVqa);
    for (int r = valid; r < 4; ++r) clip.features.row(r) = random_matrix(rng, 1, 6, 10.0);
    for (size_t i = 0; i < q.ids.size(); ++i) {
      if (!q.mask[i]) q.ids[i] = kNumSpecialTokens + static_cast<int>(rng.below(10));
    }
    CHECK((m.fused_embedding(clip, q, FusionMode::kVqa) - ref).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("video-blind mode ignores the video exactly") {
  ModelConfig c = tiny_config();
  c.qa_only = true;
  const Model m(c, toy_tokens(), 5);
  CHECK(m.default_mode() == FusionMode::kQaOnly);
  Rng rng(6);
  const auto q = m.tokenize_question("what do we need");
  const RowVector ref = m.fused_embedding(random_clip(rng, 4, 6, 4), q, FusionMode::kQaOnly);
  for (int i = 0; i < 10; ++i) {
    const auto clip = random_clip(rng, 4, 6, 1 + static_cast<int>(rng.below(4)));
    CHECK(m.fused_embedding(clip, q, FusionMode::kQaOnly) == ref);
  }
  // The full model does depend on the video.
  const Model full(tiny_config(), toy_tokens(), 5);
  CHECK(full.fused_embedding(random_clip(rng, 4, 6, 4), q, FusionMode::kVqa) !=
        full.fused_embedding(random_clip(rng, 4, 6, 4), q, FusionMode::kVqa));
}

TEST_CASE("initialization is seeded") {
  const Model a(tiny_config(), toy_tokens(), 9);
  const Model b(tiny_config(), toy_tokens(), 9);
  const Model c(tiny_config(), toy_tokens(), 10);
  bool all_equal = true, any_diff = false;
  for (const auto& p : a.params().all()) {
    all_equal = all_equal && p->value == b.params().get(p->name).value;
    any_diff = any_diff || p->value != c.params().get(p->name).value;
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("probe heads exist") {
  const Model m(tiny_config(), toy_tokens(), 1);
  CHECK(Model::probe_parameter_names().size() == 4);
  for (const auto& n : Model::probe_parameter_names()) CHECK(m.params().contains(n));
}

TEST_CASE("share_answer_encoder reuses the question encoder") {
  ModelConfig c = tiny_config();
  c.share_answer_encoder = true;
  const Model shared(c, toy_tokens(), 1);
  const Model separate(tiny_config(), toy_tokens(), 1);
  CHECK(shared.params().size() < separate.params().size());
}

TEST_CASE("argmax prefers the lowest index on ties") {
  Vector s(4);
  s << 1, 3, 3, 2;
  CHECK(argmax_lowest(s) == 1);
}

TEST_CASE("pretraining objective gradients through the whole model") {
  const Model m(tiny_config(0.1), toy_tokens(), 11);
  Rng rng(12);
  for (int inst = 0; inst < 3; ++inst) {
    const PretrainInstance data = make_pretrain_instance(m, rng, 3);
    Model& mm = const_cast<Model&>(m);
    const GradCheck r = check_gradients(mm.params(), [&](ad::Graph& g) { return pretrain_loss(g, m, data); }, rng, 3);
    INFO("worst " << r.worst);
    CHECK(r.max_rel <= 1e-4);
  }
}

TEST_CASE("checkpoint round-trip is bitwise") {
  const auto dir = scratch_dir("checkpoint");
  ModelConfig c = tiny_config();
  c.qa_only = true;
  const Model m(c, toy_tokens(), 13);
  const nlohmann::json meta = {{"history", {"pretrain"}}, {"note", "x"}};
  save_checkpoint(m, meta, dir / "m.vqck");
  const LoadedCheckpoint back = load_checkpoint(dir / "m.vqck");
  CHECK(back.metadata == meta);
  CHECK(back.model.config().qa_only);
  CHECK(back.model.tokens().words() == m.tokens().words());
  REQUIRE(back.model.params().size() == m.params().size());
  for (const auto& p : m.params().all()) CHECK(back.model.params().get(p->name).value == p->value);

  save_checkpoint(back.model, back.metadata, dir / "again.vqck");
  std::ifstream a(dir / "m.vqck", std::ios::binary), b(dir / "again.vqck", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);

  std::ofstream(dir / "bad.vqck", std::ios::binary) << "VQCK garbage";
  CHECK_THROWS(load_checkpoint(dir / "bad.vqck"));
  CHECK_THROWS(load_checkpoint(dir / "missing.vqck"));
}
