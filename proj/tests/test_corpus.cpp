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

#include <algorithm>
#include <fstream>

#include "test_util.hpp"
#include "vqat/corpus.hpp"

using namespace vqat;
using vqat::testing::scratch_dir;

TEST_CASE("normalize_answer") {
  CHECK(normalize_answer(" The  Spoon.") == "the spoon");
  CHECK(normalize_answer("spoon") == "spoon");
  CHECK(normalize_answer("") == "");
  CHECK(normalize_answer("Red\tCup!?") == "red cup");
  CHECK(normalize_answer("  ...  ") == "");
}

TEST_CASE("normalize_answer is idempotent on random strings") {
  Rng rng(7);
  const std::string alphabet = "aB .,!?\t xyZ";
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    const auto n = rng.below(12);
    for (size_t i = 0; i < n; ++i) s += alphabet[rng.below(alphabet.size())];
    const std::string once = normalize_answer(s);
    CHECK(normalize_answer(once) == once);
  }
}

TEST_CASE("build_vocabulary thresholds, caps and tie order") {
  std::vector<std::string> a = {"cat", "dog", "cat", "fox", "dog", "cat"};
  CHECK(build_vocabulary(a, 2).entries() == std::vector<std::string>{"cat", "dog"});

  std::vector<std::string> b = {"b", "a", "c", "a", "b", "a", "b", "a", "b", "a", "b"};
  CHECK(build_vocabulary(b, 1, 2).entries() == std::vector<std::string>{"a", "b"});

  std::vector<std::string> c = {"x"};
  CHECK(build_vocabulary(c, 2).empty());
}

TEST_CASE("vocabulary is independent of stream order") {
  Rng rng(3);
  std::vector<std::string> pool = {"a", "b", "c", "d", "e"};
  std::vector<std::string> s;
  for (int i = 0; i < 60; ++i) s.push_back(pool[rng.below(pool.size())]);
  const auto ref = build_vocabulary(s, 2).entries();
  for (int trial = 0; trial < 20; ++trial) {
    rng.shuffle(std::span<std::string>(s));
    CHECK(build_vocabulary(s, 2).entries() == ref);
  }
}

TEST_CASE("vocabulary index is the inverse of entries") {
  AnswerVocabulary v({"a", "b c", "d"});
  for (size_t i = 0; i < v.size(); ++i) CHECK(*v.index_of(v[i]) == i);
  CHECK_FALSE(v.index_of("zzz").has_value());
  CHECK_THROWS(AnswerVocabulary({"a", "a"}));
}

TEST_CASE("triplet files round-trip") {
  const auto dir = scratch_dir("triplets");
  std::vector<QATriplet> t = {{"v1", 0.1, 2.7, "Use a what?", "spoon"},
                              {"v1", 1.0 / 3.0, 9.25, "Add the what to the bowl?", "brown sugar"},
                              {"v2", 0.0, 1e-3, "What?", "x"}};
  write_triplets(t, dir / "t.jsonl");
  CHECK(read_triplets(dir / "t.jsonl") == t);

  std::ofstream(dir / "empty.jsonl").close();
  CHECK(read_triplets(dir / "empty.jsonl").empty());
}

TEST_CASE("triplet reader names missing fields and bad lines") {
  const auto dir = scratch_dir("triplets_bad");
  std::ofstream(dir / "missing.jsonl")
      << R"({"video_id":"v","start_s":0,"end_s":1,"question":"q?","answer":"a"})" << "\n"
      << R"({"video_id":"v","start_s":0,"end_s":1,"question":"q?"})" << "\n";
  try {
    read_triplets(dir / "missing.jsonl");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("\"answer\"") != std::string::npos);
  }
  std::ofstream(dir / "broken.jsonl") << "{not json\n";
  try {
    read_triplets(dir / "broken.jsonl");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 1);
  }
}

TEST_CASE("transcripts, captions and annotated sets round-trip") {
  const auto dir = scratch_dir("records");
  std::vector<Transcript> tr = {{"v1", {{"v1", 0.0, 1.5, "how to make"}, {"v1", 1.5, 3.25, "make bread"}}},
                                {"v2", {}}};
  write_transcripts(tr, dir / "tr.jsonl");
  CHECK(read_transcripts(dir / "tr.jsonl") == tr);

  std::vector<CaptionRecord> caps = {{"v3", "woman slicing fresh bread", 4.0}};
  write_captions(caps, dir / "c.jsonl");
  CHECK(read_captions(dir / "c.jsonl") == caps);

  AnnotatedExample a;
  a.video_id = "v1";
  a.question = "what is it?";
  a.answers = {"spoon", "spoon", "fork", "spoon", "ladle"};
  a.answer_type = "what";
  a.start_s = 1.25;
  a.end_s = 4.5;
  AnnotatedExample b;
  b.video_id = "v2";
  b.question = "which one?";
  b.answers = {"red"};
  b.candidates = {"red", "blue", "green", "black"};
  std::vector<AnnotatedExample> ex = {a, b};
  write_annotated(ex, dir / "a.jsonl");
  CHECK(read_annotated(dir / "a.jsonl") == ex);
}

TEST_CASE("timestamps survive serialization to full precision") {
  const auto dir = scratch_dir("precision");
  Rng rng(11);
  std::vector<QATriplet> t;
  for (int i = 0; i < 50; ++i) {
    const double s = rng.uniform() * 1e4;
    t.push_back({"v", s, s + rng.uniform(), "q?", "a"});
  }
  write_triplets(t, dir / "t.jsonl");
  const auto back = read_triplets(dir / "t.jsonl");
  for (size_t i = 0; i < t.size(); ++i) {
    CHECK(std::abs(back[i].start_s - t[i].start_s) <= 1e-9);
    CHECK(std::abs(back[i].end_s - t[i].end_s) <= 1e-9);
  }
}

TEST_CASE("sample_features selection and padding") {
  Matrix f(40, 2);
  for (int r = 0; r < 40; ++r) f.row(r) << r, -r;

  SUBCASE("T = t is the identity") {
    const auto c = sample_features(f.topRows(20), 20);
    CHECK(c.features == Matrix(f.topRows(20)));
    CHECK(std::all_of(c.mask.begin(), c.mask.end(), [](uint8_t m) { return m == 1; }));
  }
  SUBCASE("T < t pads with zeros") {
    const auto c = sample_features(f.topRows(5), 20);
    CHECK(c.features.rows() == 20);
    CHECK(c.features.topRows(5) == Matrix(f.topRows(5)));
    CHECK(c.features.bottomRows(15).isZero());
    for (int i = 0; i < 20; ++i) CHECK(c.mask[static_cast<size_t>(i)] == (i < 5 ? 1 : 0));
  }
  SUBCASE("T = 40, t = 4 picks rows 0, 13, 26, 39") {
    const auto c = sample_features(f, 4);
    CHECK(c.features.col(0).transpose() == Eigen::RowVector4d(0, 13, 26, 39));
  }
  SUBCASE("single-row video with t = 1") {
    const auto c = sample_features(f.topRows(1), 1);
    CHECK(c.features(0, 0) == 0.0);
  }
}

TEST_CASE("sample_features shape and mask property") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = 1 + static_cast<int>(rng.below(60));
    const int t = 1 + static_cast<int>(rng.below(30));
    Matrix f = Matrix::Constant(rows, 3, 1.0);
    const auto c = sample_features(f, t);
    REQUIRE(c.features.rows() == t);
    REQUIRE(c.mask.size() == static_cast<size_t>(t));
    for (int i = 0; i < t; ++i) {
      const bool valid = c.mask[static_cast<size_t>(i)] != 0;
      CHECK(valid == (i < std::min(rows, t)));
      CHECK(c.features(i, 0) == (valid ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("clip_rows covers the overlapping seconds") {
  Matrix f(10, 1);
  for (int r = 0; r < 10; ++r) f(r, 0) = r;
  CHECK(clip_rows(f, 2.0, 5.0).rows() == 3);
  CHECK(clip_rows(f, 2.0, 5.0)(0, 0) == 2.0);
  CHECK(clip_rows(f, 2.5, 5.5).rows() == 4);
  CHECK(clip_rows(f, std::nullopt, std::nullopt).rows() == 10);
  CHECK(clip_rows(f, 30.0, 40.0).rows() == 1);
}

TEST_CASE("feature files, manifest and store") {
  const auto dir = scratch_dir("features");
  Rng rng(2);
  Matrix f = vqat::testing::random_matrix(rng, 7, 5);
  std::filesystem::create_directories(dir / "feat");
  write_feature_file(f, dir / "feat" / "a.vqf");
  const Matrix back = read_feature_file(dir / "feat" / "a.vqf");
  CHECK(back.rows() == 7);
  CHECK(back.cols() == 5);
  CHECK((back - f).cwiseAbs().maxCoeff() < 1e-6);
  // Widening float32 values is exact.
  CHECK(read_feature_file(dir / "feat" / "a.vqf") == back);

  std::vector<ManifestEntry> m = {{"a", "feat/a.vqf"}};
  write_manifest(m, dir / "manifest.jsonl");
  const auto store = FeatureStore::load(dir / "manifest.jsonl");
  CHECK(store.contains("a"));
  CHECK(store.feature_dim() == 5);
  CHECK(store.get("a").features == back);
  CHECK_THROWS(store.get("b"));
}

TEST_CASE("feature reader rejects bad magic and non-finite values") {
  const auto dir = scratch_dir("features_bad");
  std::ofstream(dir / "bad.vqf", std::ios::binary) << "XXXX";
  CHECK_THROWS(read_feature_file(dir / "bad.vqf"));
  Matrix f = Matrix::Zero(2, 2);
  f(1, 1) = std::nan("");
  CHECK_THROWS(write_feature_file(f, dir / "nan.vqf"));
}

TEST_CASE("vocabulary file round-trip") {
  const auto dir = scratch_dir("vocab");
  AnswerVocabulary v({"spoon", "brown sugar", "bowl"});
  write_vocabulary(v, dir / "v.txt");
  CHECK(read_vocabulary(dir / "v.txt").entries() == v.entries());
}
