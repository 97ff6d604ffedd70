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

#include "vqat/synth.hpp"

#include <array>

#include "vqat/corpus.hpp"
#include "vqat/rng.hpp"

namespace vqat::synth {

namespace {

// Narration templates; every word except {} is on the stoplist, so the
// object is the only answer candidate of its sentence.
constexpr std::array<std::string_view, 8> kStepTemplates = {
    "now we take the {}",     "here you can see the {}", "next we put the {} in there",
    "this is the {} we need", "then we use a {} for it", "let me show you my {}",
    "we just got this {} here", "so we need the {} now",
};

constexpr std::array<std::string_view, 4> kFillers = {
    "okay so here we go", "alright let me see", "so that is it for now", "um okay then",
};

constexpr std::array<std::string_view, 5> kQuestions = {
    "what do we need here?", "what can you see here?", "what is this?",
    "what do you see now?",  "what is here?",
};

struct Step {
  std::string object;
  double start = 0.0;
  double end = 0.0;
};

struct Timeline {
  std::vector<Step> steps;
  std::vector<TranscriptSegment> segments;
  double duration = 0.0;
};

std::string fill(std::string_view tmpl, const std::string& object) {
  std::string out(tmpl);
  out.replace(out.find("{}"), 2, object);
  return out;
}

// Lays out steps separated by short gaps; `pick` chooses each object.
template <typename Pick>
Timeline layout(const SynthConfig& cfg, const std::string& video_id, Rng& rng, Pick pick, bool narrate) {
  Timeline tl;
  double t = 1.0 + static_cast<double>(rng.below(2));
  for (int s = 0; s < cfg.steps_per_video; ++s) {
    Step step;
    step.object = pick();
    step.start = t;
    step.end = t + 3.0 + static_cast<double>(rng.below(4));
    if (narrate) {
      const std::string sentence =
          fill(kStepTemplates[rng.below(kStepTemplates.size())], step.object) + ".";
      const auto words = split_tokens(sentence);
      if (step.end - step.start >= 5.0 && rng.bernoulli(0.5)) {
        // Two ASR segments for one sentence.
        const size_t cut = words.size() / 2;
        const double mid = std::floor((step.start + step.end) / 2.0);
        std::vector<std::string> a(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(cut));
        std::vector<std::string> b(words.begin() + static_cast<std::ptrdiff_t>(cut), words.end());
        tl.segments.push_back({video_id, step.start, mid, join_tokens(a)});
        tl.segments.push_back({video_id, mid, step.end, join_tokens(b)});
      } else {
        tl.segments.push_back({video_id, step.start, step.end, sentence});
        if (rng.bernoulli(0.1)) {
          // Rolling-caption repeat that cleaning should remove.
          tl.segments.push_back({video_id, step.end, step.end + 0.5, sentence});
        }
      }
    }
    t = step.end + 1.0 + static_cast<double>(rng.below(2));
    if (narrate && rng.bernoulli(0.3)) {
      tl.segments.push_back({video_id, t - 1.0, t - 0.2,
                             std::string(kFillers[rng.below(kFillers.size())]) + "."});
    }
    tl.steps.push_back(std::move(step));
  }
  tl.duration = t + 1.0;
  return tl;
}

Matrix render(const SynthConfig& cfg, const Timeline& tl, Rng& rng) {
  const auto rows = static_cast<Eigen::Index>(std::ceil(tl.duration));
  const int d = cfg.feature_dim;
  RowVector bg(d);
  for (int j = 0; j < d; ++j) bg(j) = cfg.background * rng.normal() / std::sqrt(static_cast<double>(d));
  Matrix f(rows, d);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (int j = 0; j < d; ++j) f(r, j) = bg(j) + cfg.noise * rng.normal();
  }
  for (const auto& step : tl.steps) {
    const RowVector v = cfg.signal * hash_to_vector(step.object, d).transpose();
    const auto lo = static_cast<Eigen::Index>(std::floor(step.start));
    const auto hi = std::min(rows, static_cast<Eigen::Index>(std::ceil(step.end)));
    for (Eigen::Index r = lo; r < hi; ++r) f.row(r) += v;
  }
  return f;
}

std::string video_name(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%04d", prefix, i);
  return buf;
}

}  // namespace

const std::vector<std::string>& objects() {
  static const std::vector<std::string> kObjects = {
      "apple",  "banana", "basket", "blender", "bottle", "bowl",   "bread",   "brush",  "bucket", "butter",
      "cable",  "camera", "candle", "carrot",  "chair",  "cheese", "chicken", "drill",  "egg",    "flour",
      "garlic", "glass",  "glue",   "hammer",  "honey",  "kettle", "knife",   "ladder", "lemon",  "mirror",
      "nail",   "onion",  "oven",   "paint",   "pan",    "paper",  "pepper",  "pillow", "plate",  "potato",
      "rope",   "salt",   "saw",    "scissors", "screw", "sponge", "spoon",   "sugar",  "tomato", "towel",
  };
  return kObjects;
}

Vector hash_to_vector(std::string_view word, int dim) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : word) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  Rng rng(h);
  Vector v(dim);
  for (int j = 0; j < dim; ++j) v(j) = rng.normal();
  return v / v.norm();
}

void SynthConfig::validate() const {
  if (videos < 1) throw ValidationError("videos", "must be >= 1");
  if (feature_dim < 1) throw ValidationError("feature_dim", "must be >= 1");
  if (steps_per_video < 1) throw ValidationError("steps_per_video", "must be >= 1");
  if (!(noise >= 0.0)) throw ValidationError("noise", "must be >= 0");
}

SynthSummary write_corpus(const SynthConfig& cfg, const std::filesystem::path& out) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out / "features");
  const auto& objs = objects();
  Rng root(cfg.seed);

  std::vector<Transcript> transcripts;
  std::vector<ManifestEntry> manifest;
  std::vector<AnnotatedExample> eval_split;
  std::vector<AnnotatedExample> downstream;

  auto emit_features = [&](const std::string& id, const Timeline& tl, Rng& rng) {
    write_feature_file(render(cfg, tl, rng), out / "features" / (id + ".vqf"));
    manifest.push_back({id, "features/" + id + ".vqf"});
  };
  auto annotate = [&](const std::string& id, const Timeline& tl, Rng& rng, std::vector<AnnotatedExample>& dst) {
    for (const auto& step : tl.steps) {
      AnnotatedExample ex;
      ex.video_id = id;
      ex.question = std::string(kQuestions[rng.below(kQuestions.size())]);
      ex.answers.assign(5, step.object);
      ex.start_s = step.start;
      ex.end_s = step.end;
      dst.push_back(std::move(ex));
    }
  };

  for (int i = 0; i < cfg.videos; ++i) {
    const std::string id = video_name("vid", i);
    Rng rng = root.fork(static_cast<uint64_t>(i));
    Timeline tl = layout(cfg, id, rng, [&] { return objs[rng.below(objs.size())]; }, true);
    transcripts.push_back({id, tl.segments});
    emit_features(id, tl, rng);
  }

  const int n_eval = std::max(1, cfg.videos / 4);
  for (int i = 0; i < n_eval; ++i) {
    const std::string id = video_name("evl", i);
    Rng rng = root.fork(1000000 + static_cast<uint64_t>(i));
    Timeline tl = layout(cfg, id, rng, [&] { return objs[rng.below(objs.size())]; }, false);
    emit_features(id, tl, rng);
    annotate(id, tl, rng, eval_split);
  }

  // The downstream training split cycles through the objects so the
  // answer vocabulary covers all of them once it is large enough.
  const int n_ds = std::max(1, cfg.videos / 8);
  std::vector<size_t> order(objs.size());
  for (size_t k = 0; k < order.size(); ++k) order[k] = k;
  Rng order_rng = root.fork(2000000);
  order_rng.shuffle(std::span<size_t>(order));
  size_t next = 0;
  for (int i = 0; i < n_ds; ++i) {
    const std::string id = video_name("dst", i);
    Rng rng = root.fork(3000000 + static_cast<uint64_t>(i));
    Timeline tl = layout(cfg, id, rng, [&] { return objs[order[next++ % order.size()]]; }, false);
    emit_features(id, tl, rng);
    annotate(id, tl, rng, downstream);
  }

  std::vector<std::string> answers;
  for (const auto& ex : downstream) answers.push_back(ex.answers.front());
  const AnswerVocabulary vocab = build_vocabulary(answers, 1);

  write_transcripts(transcripts, out / "transcripts.jsonl");
  write_manifest(manifest, out / "manifest.jsonl");
  write_annotated(eval_split, out / "eval.jsonl");
  write_annotated(downstream, out / "downstream_train.jsonl");
  write_vocabulary(vocab, out / "vocab.txt");

  return {transcripts.size(), eval_split.size(), downstream.size(), vocab.size()};
}

}  // namespace vqat::synth
