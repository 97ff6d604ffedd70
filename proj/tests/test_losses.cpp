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

#include <cmath>
#include <map>
#include <set>

#include "gradcheck.hpp"
#include "vqat/batching.hpp"
#include "vqat/losses.hpp"
#include "vqat/mlm.hpp"

using namespace vqat;
using namespace vqat::train;
using vqat::testing::random_matrix;

namespace {

// Direct evaluation of the deduplicated in-batch objective, no shifting.
double contrastive_oracle(const Matrix& f, const Matrix& g, const std::vector<std::string>& a) {
  const auto b = f.rows();
  double total = 0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const double pos = f.row(i).dot(g.row(i));
    double denom = std::exp(pos);
    std::set<std::string> used = {a[static_cast<size_t>(i)]};
    for (Eigen::Index j = 0; j < b; ++j) {
      if (used.insert(a[static_cast<size_t>(j)]).second) denom += std::exp(f.row(i).dot(g.row(j)));
    }
    total += std::log(denom) - pos;
  }
  return total / static_cast<double>(b);
}

double ce_oracle(const Vector& s, size_t target) {
  double z = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k) z += std::exp(s(k));
  return -std::log(std::exp(s(static_cast<Eigen::Index>(target))) / z);
}

double bce_oracle(double x, double y) {
  const double p = 1.0 / (1.0 + std::exp(-x));
  return -(y * std::log(p) + (1 - y) * std::log(1 - p));
}

std::vector<std::string> random_answers(Rng& rng, size_t n, size_t pool) {
  std::vector<std::string> out;
  for (size_t i = 0; i < n; ++i) out.push_back("a" + std::to_string(rng.below(pool)));
  return out;
}

}  // namespace

TEST_CASE("contrastive loss worked examples") {
  SUBCASE("single anchor") {
    Matrix f(1, 2), g(1, 2);
    f << 1, 2;
    g << 3, -1;
    CHECK(contrastive_loss(f, g, std::vector<std::string>{"x"}).loss == 0.0);
  }
  SUBCASE("two anchors with unit positives") {
    Matrix f = Matrix::Identity(2, 2), g = Matrix::Identity(2, 2);
    CHECK(contrastive_loss(f, g, std::vector<std::string>{"cat", "dog"}).loss ==
          doctest::Approx(std::log(1 + std::exp(-1.0))).epsilon(1e-12));
    CHECK(contrastive_loss(f, g, std::vector<std::string>{"cat", "dog"}).loss == doctest::Approx(0.31326).epsilon(1e-5));
  }
  SUBCASE("duplicates count once") {
    const auto sets = negative_answer_sets(std::vector<std::string>{"cat", "dog", "dog"});
    CHECK(sets[0] == std::set<std::string>{"dog"});
    CHECK(sets[1] == std::set<std::string>{"cat"});
  }
}

TEST_CASE("contrastive loss equals the direct oracle on random batches") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto b = static_cast<Eigen::Index>(1 + rng.below(8));
    const Matrix f = random_matrix(rng, b, 5), g = random_matrix(rng, b, 5);
    const auto a = random_answers(rng, static_cast<size_t>(b), 4);
    const auto r = contrastive_loss(f, g, a);
    CHECK(r.loss == doctest::Approx(contrastive_oracle(f, g, a)).epsilon(1e-10));
    CHECK(r.loss >= 0.0);
  }
}

TEST_CASE("contrastive loss is finite for dot products up to 1e4") {
  Matrix f(3, 1), g(3, 1);
  f << 100, -100, 100;
  g << 100, 100, -100;
  const auto r = contrastive_loss(f, g, std::vector<std::string>{"a", "b", "c"});
  CHECK(std::isfinite(r.loss));
  CHECK(r.grad_fused.allFinite());
  CHECK(r.loss >= 0.0);
  // Anchor 0 ties one negative (log 2); anchors 1 and 2 trail by 2e4.
  CHECK(r.loss == doctest::Approx((4e4 + 2 * std::log(2.0)) / 3.0).epsilon(1e-12));
}

TEST_CASE("contrastive kernel gradients match central differences") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto b = static_cast<Eigen::Index>(2 + rng.below(5));
    Matrix f = random_matrix(rng, b, 3), g = random_matrix(rng, b, 3);
    const auto a = random_answers(rng, static_cast<size_t>(b), 3);
    const auto r = contrastive_loss(f, g, a);
    const double eps = 1e-6;
    for (Eigen::Index k = 0; k < f.size(); ++k) {
      for (Matrix* m : {&f, &g}) {
        const double saved = m->data()[k];
        m->data()[k] = saved + eps;
        const double up = contrastive_loss(f, g, a).loss;
        m->data()[k] = saved - eps;
        const double down = contrastive_loss(f, g, a).loss;
        m->data()[k] = saved;
        const double analytic = (m == &f ? r.grad_fused : r.grad_answers).data()[k];
        CHECK(vqat::testing::relative_error(analytic, (up - down) / (2 * eps)) <= 1e-5);
      }
    }
  }
}

TEST_CASE("finetune loss is cross-entropy and matches explicit negatives") {
  Vector eq = Vector::Constant(4, 0.7);
  CHECK(finetune_loss(eq, 2).loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  Vector big = Vector::Zero(5);
  big(3) = 60;
  CHECK(finetune_loss(big, 3).loss < 1e-20);
  CHECK_THROWS(finetune_loss(eq, 4));

  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(2 + rng.below(49));
    Vector s = random_matrix(rng, n, 1, 3.0);
    const auto target = static_cast<size_t>(rng.below(static_cast<uint64_t>(n)));
    std::vector<double> neg;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (static_cast<size_t>(k) != target) neg.push_back(s(k));
    }
    const double ce = finetune_loss(s, target).loss;
    CHECK(std::abs(ce - contrastive_term(s(static_cast<Eigen::Index>(target)), neg)) <= 1e-6);
    CHECK(ce == doctest::Approx(ce_oracle(s, target)).epsilon(1e-10));
  }
}

TEST_CASE("multiple-choice loss") {
  CHECK(multiple_choice_loss(Vector::Zero(4), 1).loss == doctest::Approx(std::log(4.0)));
  Vector s(4);
  s << 2, 1, 0, -1;
  CHECK(multiple_choice_loss(s, 0).loss == doctest::Approx(0.4402).epsilon(1e-4));
  Vector d(3);
  d << 50, 0, 0;
  CHECK(multiple_choice_loss(d, 0).loss < 1e-20);
  CHECK_THROWS(multiple_choice_loss(s, 4));
  CHECK_THROWS(multiple_choice_loss(Vector::Zero(1), 0));
}

TEST_CASE("mlm loss") {
  const Matrix z = Matrix::Zero(3, 8);
  CHECK(mlm_loss(z, std::vector<int>{kIgnoreLabel, kIgnoreLabel, kIgnoreLabel}).loss == 0.0);
  CHECK(mlm_loss(z, std::vector<int>{kIgnoreLabel, 5, kIgnoreLabel}).loss == doctest::Approx(std::log(8.0)));

  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix logits = random_matrix(rng, 6, 7, 2.0);
    std::vector<int> labels;
    double sum = 0;
    int n = 0;
    for (Eigen::Index r = 0; r < 6; ++r) {
      if (rng.bernoulli(0.5)) {
        labels.push_back(static_cast<int>(rng.below(7)));
        sum += ce_oracle(logits.row(r).transpose(), static_cast<size_t>(labels.back()));
        ++n;
      } else {
        labels.push_back(kIgnoreLabel);
      }
    }
    const auto r = mlm_loss(logits, labels);
    CHECK(r.loss == doctest::Approx(n ? sum / n : 0.0).epsilon(1e-10));
    CHECK(r.loss >= 0.0);
  }
}

TEST_CASE("matching loss") {
  const std::vector<double> y = {1, 0, 0};
  CHECK(matching_loss(Vector::Zero(3), y).loss == doctest::Approx(std::log(2.0)));
  Vector sep(3);
  sep << 40, -40, -40;
  CHECK(matching_loss(sep, y).loss < 1e-15);

  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector x = random_matrix(rng, 9, 1, 4.0);
    std::vector<double> labels;
    double sum = 0;
    for (Eigen::Index k = 0; k < 9; ++k) {
      labels.push_back(k % 3 == 0 ? 1.0 : 0.0);
      sum += bce_oracle(x(k), labels.back());
    }
    CHECK(matching_loss(x, labels).loss == doctest::Approx(sum / 9).epsilon(1e-10));
  }
}

TEST_CASE("graph wrappers agree with the kernels and have correct gradients") {
  Rng rng(7);
  ad::ParameterSet ps;
  ps.add("f", random_matrix(rng, 4, 3));
  ps.add("g", random_matrix(rng, 4, 3));
  ps.add("s", random_matrix(rng, 3, 5));
  ps.add("l", random_matrix(rng, 4, 6));
  ps.add("m", random_matrix(rng, 6, 1));
  const std::vector<std::string> a = {"x", "y", "x", "z"};
  const std::vector<size_t> targets = {1, 4, 0};
  const std::vector<int> labels = {2, kIgnoreLabel, 5, 0};
  const std::vector<double> y = {1, 0, 0, 1, 0, 0};
  auto build = [&](ad::Graph& g) {
    ad::Var total = contrastive_loss(g, g.param(ps.get("f")), g.param(ps.get("g")), a);
    total = g.add(total, softmax_ce_rows(g, g.param(ps.get("s")), targets));
    total = g.add(total, mlm_loss(g, g.param(ps.get("l")), labels));
    return g.add(total, matching_loss(g, g.param(ps.get("m")), y));
  };
  ad::Graph g(false);
  const double expected = contrastive_loss(ps.get("f").value, ps.get("g").value, a).loss +
                          finetune_loss(ps.get("s").value.row(0).transpose(), 1).loss / 3 +
                          finetune_loss(ps.get("s").value.row(1).transpose(), 4).loss / 3 +
                          finetune_loss(ps.get("s").value.row(2).transpose(), 0).loss / 3 +
                          mlm_loss(ps.get("l").value, labels).loss + matching_loss(ps.get("m").value, y).loss;
  CHECK(g.scalar(build(g)) == doctest::Approx(expected).epsilon(1e-12));
  Rng pick(8);
  CHECK(vqat::testing::check_gradients(ps, build, pick, 100).max_rel <= 1e-6);
}

TEST_CASE("dedup invariance when a duplicate answer is appended") {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    auto a = random_answers(rng, 1 + rng.below(10), 6);
    const auto before = negative_answer_sets(a);
    a.push_back(a[rng.below(a.size())]);
    const auto after = negative_answer_sets(a);
    for (size_t i = 0; i + 1 < a.size(); ++i) CHECK(after[i] == before[i]);
  }
}

TEST_CASE("mlm corruption") {
  const TokenVocabulary v = vqat::testing::toy_tokens();
  const TokenizedText q = tokenize("take the spoon bowl salt", 8, v);
  Rng rng(10);
  SUBCASE("zero probability is the identity") {
    MlmConfig c;
    c.prob = 0;
    const auto s = mlm_corrupt(q, c, v.size(), rng);
    CHECK(s.corrupted == q);
    for (int l : s.labels) CHECK(l == kIgnoreLabel);
  }
  SUBCASE("certain masking masks every word and no special token") {
    MlmConfig c{1.0, 1.0, 0.0, 0.0};
    const auto s = mlm_corrupt(q, c, v.size(), rng);
    for (size_t i = 0; i < q.ids.size(); ++i) {
      if (is_special(q.ids[i])) {
        CHECK(s.corrupted.ids[i] == q.ids[i]);
        CHECK(s.labels[i] == kIgnoreLabel);
      } else {
        CHECK(s.corrupted.ids[i] == kMask);
        CHECK(s.labels[i] == q.ids[i]);
      }
    }
    CHECK(s.corrupted.mask == q.mask);
  }
  SUBCASE("random replacements are never special") {
    MlmConfig c{1.0, 0.0, 0.0, 1.0};
    for (int k = 0; k < 200; ++k) {
      const auto s = mlm_corrupt(q, c, v.size(), rng);
      for (size_t i = 1; i < 6; ++i) CHECK_FALSE(is_special(s.corrupted.ids[i]));
    }
  }
  SUBCASE("shares must sum to one") {
    MlmConfig c{0.15, 0.5, 0.1, 0.1};
    CHECK_THROWS_AS(c.validate(), ValidationError);
  }
}

TEST_CASE("mlm corruption statistics") {
  TokenizedText big;
  for (int i = 0; i < 100000; ++i) {
    big.ids.push_back(kNumSpecialTokens + i % 11);
    big.mask.push_back(1);
  }
  Rng rng(11);
  const auto s = mlm_corrupt(big, MlmConfig{}, kNumSpecialTokens + 11, rng);
  std::map<MlmAction, double> n;
  for (auto a : s.actions) n[a] += 1;
  const double corrupted = 100000 - n[MlmAction::kNone];
  CHECK(corrupted / 100000 >= 0.135);
  CHECK(corrupted / 100000 <= 0.165);
  CHECK(std::abs(n[MlmAction::kMask] / corrupted - 0.8) <= 0.02);
  CHECK(std::abs(n[MlmAction::kKeep] / corrupted - 0.1) <= 0.02);
  CHECK(std::abs(n[MlmAction::kRandom] / corrupted - 0.1) <= 0.02);
}

TEST_CASE("video-grouped batches") {
  std::vector<std::vector<size_t>> by_video;
  for (size_t v = 0; v < 8; ++v) by_video.push_back({4 * v, 4 * v + 1, 4 * v + 2, 4 * v + 3});
  auto video_of = [](size_t clip) { return clip / 4; };

  Rng rng(12);
  const auto batches = make_batches(by_video, 8, 2, rng);
  REQUIRE(batches.size() == 4);
  std::set<size_t> seen_videos;
  for (const auto& b : batches) {
    CHECK(b.size() == 8);
    std::set<size_t> vids;
    for (size_t c : b) vids.insert(video_of(c));
    CHECK(vids.size() == 2);
    for (size_t vid : vids) CHECK(seen_videos.insert(vid).second);
    // Each video has enough clips, so no clip repeats.
    CHECK(std::set<size_t>(b.begin(), b.end()).size() == 8);
  }

  Rng a(13), b(13);
  CHECK(make_batches(by_video, 8, 2, a) == make_batches(by_video, 8, 2, b));

  std::vector<std::vector<size_t>> single = {{7}};
  Rng c(14);
  const auto rep = make_batches(single, 32, 1, c);
  REQUIRE(rep.size() == 1);
  CHECK(rep[0] == std::vector<size_t>(32, 7));

  std::vector<std::string> warnings;
  Rng d(15);
  const auto short_batches = make_batches(by_video, 12, 3, d, &warnings);
  CHECK(short_batches.size() == 3);
  CHECK(short_batches.back().size() == 8);
  CHECK(warnings.size() == 1);

  Rng e(16);
  CHECK_THROWS_AS(make_batches(by_video, 7, 2, e), ValidationError);
}

TEST_CASE("flat batches cover every index once") {
  Rng rng(17);
  const auto batches = make_flat_batches(23, 5, rng);
  CHECK(batches.size() == 5);
  std::multiset<size_t> all;
  for (const auto& b : batches) all.insert(b.begin(), b.end());
  CHECK(all.size() == 23);
  CHECK(std::set<size_t>(all.begin(), all.end()).size() == 23);
}

TEST_CASE("cosine schedule") {
  CHECK(cosine_lr(0, 100, 5e-5) == 5e-5);
  CHECK(cosine_lr(100, 100, 5e-5) == doctest::Approx(0.0));
  CHECK(cosine_lr(50, 100, 5e-5) == doctest::Approx(2.5e-5).epsilon(1e-12));
  double prev = 1;
  for (size_t s = 0; s <= 100; ++s) {
    const double lr = cosine_lr(s, 100, 1.0);
    CHECK(lr <= prev);
    prev = lr;
  }
}
