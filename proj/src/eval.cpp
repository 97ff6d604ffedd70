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

#include "vqat/eval.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <sstream>

namespace vqat::eval {

using nlohmann::json;

double ivqa_accuracy(const std::string& pred, std::span<const std::string> ground_truths) {
  if (ground_truths.size() != 5) {
    throw ValidationError("answers", "consensus accuracy needs exactly 5 annotations, got " +
                                         std::to_string(ground_truths.size()));
  }
  const std::string p = normalize_answer(pred);
  const auto matches = std::count_if(ground_truths.begin(), ground_truths.end(),
                                     [&](const std::string& gt) { return normalize_answer(gt) == p; });
  return std::min(static_cast<double>(matches) / 2.0, 1.0);
}

bool topk_hit(const Vector& scores, size_t target, size_t k) {
  const auto n = static_cast<size_t>(scores.size());
  if (k < 1 || k > n) throw std::invalid_argument("topk_hit: k must lie in [1, |V|]");
  if (target >= n) throw std::out_of_range("topk_hit: target out of range");
  const double t = scores(static_cast<Eigen::Index>(target));
  size_t rank = 0;
  for (size_t j = 0; j < n; ++j) {
    const double s = scores(static_cast<Eigen::Index>(j));
    if (s > t || (s == t && j < target)) ++rank;
  }
  return rank < k;
}

namespace {

// Normalized annotations with their counts, in first-seen order.
std::vector<std::pair<std::string, size_t>> annotation_counts(const AnnotatedExample& ex) {
  std::vector<std::pair<std::string, size_t>> counts;
  for (const auto& raw : ex.answers) {
    const std::string a = normalize_answer(raw);
    auto it = std::find_if(counts.begin(), counts.end(), [&](const auto& c) { return c.first == a; });
    if (it == counts.end()) {
      counts.emplace_back(a, 1);
    } else {
      ++it->second;
    }
  }
  return counts;
}

}  // namespace

std::string primary_answer(const AnnotatedExample& example) {
  const auto counts = annotation_counts(example);
  if (counts.empty()) throw ValidationError("answers", "example has no annotations");
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

std::optional<std::string> primary_in_vocabulary(const AnnotatedExample& example,
                                                 const AnswerVocabulary& vocab) {
  std::optional<std::pair<std::string, size_t>> best;
  for (const auto& c : annotation_counts(example)) {
    if (!vocab.contains(c.first)) continue;
    if (!best || c.second > best->second) best = c;
  }
  if (!best) return std::nullopt;
  return best->first;
}

std::array<std::vector<size_t>, 4> quartile_split(std::span<const AnnotatedExample> test,
                                                  const std::map<std::string, size_t>& train_frequency) {
  struct Key {
    size_t freq;
    std::string answer;
    size_t index;
  };
  std::vector<Key> keys;
  keys.reserve(test.size());
  for (size_t i = 0; i < test.size(); ++i) {
    std::string a = primary_answer(test[i]);
    auto it = train_frequency.find(a);
    keys.push_back({it == train_frequency.end() ? 0 : it->second, std::move(a), i});
  }
  std::sort(keys.begin(), keys.end(), [](const Key& x, const Key& y) {
    if (x.freq != y.freq) return x.freq > y.freq;
    if (x.answer != y.answer) return x.answer < y.answer;
    return x.index < y.index;
  });
  std::array<std::vector<size_t>, 4> out;
  const size_t n = keys.size();
  size_t at = 0;
  for (size_t q = 0; q < 4; ++q) {
    const size_t size = n / 4 + (q < n % 4 ? 1 : 0);
    for (size_t k = 0; k < size; ++k) out[q].push_back(keys[at++].index);
  }
  return out;
}

std::map<std::string, std::vector<size_t>> question_type_split(std::span<const AnnotatedExample> test) {
  static const std::array<std::string, 5> kInterrogatives = {"what", "who", "where", "when", "how"};
  std::map<std::string, std::vector<size_t>> out;
  for (size_t i = 0; i < test.size(); ++i) {
    std::string type;
    if (test[i].answer_type) {
      type = *test[i].answer_type;
      for (char& c : type) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      type = "other";
      for (const auto& tok : split_tokens(test[i].question)) {
        const std::string w = normalize_answer(tok);
        if (std::find(kInterrogatives.begin(), kInterrogatives.end(), w) != kInterrogatives.end()) {
          type = w;
          break;
        }
      }
    }
    out[type].push_back(i);
  }
  return out;
}

const char* protocol_name(Protocol p) { return p == Protocol::kZeroShot ? "zero_shot" : "standard"; }

SampledClip load_clip(const FeatureStore& features, const std::string& video_id,
                      std::optional<double> start_s, std::optional<double> end_s, int video_len) {
  return sample_features(clip_rows(features.get(video_id).features, start_s, end_s), video_len);
}

EvalReport evaluate(const Model& model, std::span<const AnnotatedExample> examples,
                    const FeatureStore& features, const AnswerVocabulary& vocab,
                    const EvalOptions& options) {
  if (examples.empty()) throw ValidationError("eval_set", "evaluation set is empty");
  const FusionMode mode = options.mode.value_or(model.default_mode());
  const int t = model.config().video_len;

  const bool needs_vocab = std::any_of(examples.begin(), examples.end(),
                                       [](const auto& ex) { return ex.candidates.empty(); });
  if (needs_vocab && vocab.empty()) throw ValidationError("vocabulary", "open-ended evaluation needs a vocabulary");
  Matrix answers;
  if (needs_vocab && options.scorer == Scorer::kJoint) answers = model.answer_matrix(vocab.entries());

  std::map<std::string, size_t> freq;
  if (options.train_frequency) {
    freq = *options.train_frequency;
  } else {
    for (size_t i = 0; i < vocab.size(); ++i) freq[vocab[i]] = vocab.size() - i;
  }

  EvalReport report;
  report.protocol = options.protocol;
  report.n_samples = examples.size();
  report.samples.resize(examples.size());

  for (size_t i = 0; i < examples.size(); ++i) {
    const AnnotatedExample& ex = examples[i];
    SampleResult& r = report.samples[i];
    r.video_id = ex.video_id;
    r.question = ex.question;
    const SampledClip clip = load_clip(features, ex.video_id, ex.start_s, ex.end_s, t);

    std::vector<std::string> candidates;
    if (!ex.candidates.empty()) {
      for (const auto& c : ex.candidates) candidates.push_back(normalize_answer(c));
    }
    const std::vector<std::string>& ranked = candidates.empty() ? vocab.entries() : candidates;

    Vector scores(static_cast<Eigen::Index>(ranked.size()));
    if (options.scorer == Scorer::kMatching) {
      for (size_t k = 0; k < ranked.size(); ++k) {
        scores(static_cast<Eigen::Index>(k)) = model.score_concat(clip, ex.question, ranked[k]);
      }
    } else {
      const RowVector f = model.fused_embedding(clip, model.tokenize_question(ex.question), mode);
      scores = candidates.empty() ? score_answers(f, answers) : score_answers(f, model.answer_matrix(candidates));
    }
    const size_t best = argmax_lowest(scores);
    r.pred = ranked[best];
    r.score = scores(static_cast<Eigen::Index>(best));
    const size_t k10 = std::min<size_t>(10, ranked.size());

    std::optional<size_t> target;
    if (!candidates.empty()) {
      auto it = std::find(candidates.begin(), candidates.end(), normalize_answer(ex.answers.front()));
      if (it == candidates.end()) throw ValidationError("candidates", "correct answer missing from candidates");
      target = static_cast<size_t>(it - candidates.begin());
    } else if (auto a = primary_in_vocabulary(ex, vocab)) {
      target = vocab.index_of(*a);
    }
    if (target) {
      r.top1 = topk_hit(scores, *target, 1);
      r.top10 = topk_hit(scores, *target, k10);
    } else {
      r.oov = true;
    }
    if (options.ivqa) r.ivqa = ivqa_accuracy(r.pred, ex.answers);
  }

  auto mean_over = [&](const std::vector<size_t>& idx, auto field) {
    if (idx.empty()) return 0.0;
    double s = 0.0;
    for (size_t i : idx) s += field(report.samples[i]);
    return s / static_cast<double>(idx.size());
  };
  std::vector<size_t> all(examples.size());
  std::iota(all.begin(), all.end(), size_t{0});
  auto top1_of = [](const SampleResult& r) { return r.top1 ? 1.0 : 0.0; };
  report.top1 = mean_over(all, top1_of);
  report.top10 = mean_over(all, [](const SampleResult& r) { return r.top10 ? 1.0 : 0.0; });
  report.oov_fraction = mean_over(all, [](const SampleResult& r) { return r.oov ? 1.0 : 0.0; });
  if (options.ivqa) report.ivqa_acc = mean_over(all, [](const SampleResult& r) { return *r.ivqa; });

  const auto quartiles = quartile_split(examples, freq);
  for (size_t q = 0; q < 4; ++q) {
    const std::string name = "Q" + std::to_string(q + 1);
    report.per_quartile[name] = mean_over(quartiles[q], top1_of);
    report.quartile_sizes[name] = quartiles[q].size();
    for (size_t i : quartiles[q]) report.samples[i].quartile = static_cast<int>(q + 1);
  }
  for (const auto& [type, idx] : question_type_split(examples)) {
    report.per_type[type] = mean_over(idx, top1_of);
    for (size_t i : idx) report.samples[i].type = type;
  }
  return report;
}

json report_to_json(const EvalReport& report) {
  json j;
  j["protocol"] = protocol_name(report.protocol);
  j["top1"] = report.top1;
  j["top10"] = report.top10;
  if (report.ivqa_acc) j["ivqa_acc"] = *report.ivqa_acc;
  j["per_quartile"] = report.per_quartile;
  j["quartile_sizes"] = report.quartile_sizes;
  j["per_type"] = report.per_type;
  j["n_samples"] = report.n_samples;
  j["oov_fraction"] = report.oov_fraction;
  return j;
}

json sample_to_json(const SampleResult& s) {
  return {{"video_id", s.video_id}, {"question", s.question}, {"pred", s.pred}, {"score", s.score}};
}

std::string report_to_text(const EvalReport& report) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  out << "protocol     " << protocol_name(report.protocol) << "\n";
  out << "samples      " << report.n_samples << "\n";
  out << "top-1        " << 100.0 * report.top1 << "%\n";
  out << "top-10       " << 100.0 * report.top10 << "%\n";
  if (report.ivqa_acc) out << "iVQA acc     " << 100.0 * *report.ivqa_acc << "%\n";
  out << "out of vocab " << 100.0 * report.oov_fraction << "%\n";
  for (const auto& [q, v] : report.per_quartile) {
    out << "  " << q << " (" << report.quartile_sizes.at(q) << ")  " << 100.0 * v << "%\n";
  }
  for (const auto& [type, v] : report.per_type) out << "  type " << type << "  " << 100.0 * v << "%\n";
  return out.str();
}

}  // namespace vqat::eval
