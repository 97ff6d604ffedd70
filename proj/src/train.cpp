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

#include "vqat/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "vqat/batching.hpp"
#include "vqat/eval.hpp"
#include "vqat/losses.hpp"

namespace vqat::train {

namespace {

constexpr uint64_t kBatchStream = 1;
constexpr uint64_t kDropoutStream = 2;
constexpr uint64_t kMlmStream = 3;
constexpr uint64_t kNegativeStream = 4;
constexpr uint64_t kSplitStream = 5;

void check_probability(const char* field, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(field, "must be in [0, 1]");
}

// Per-example tensors reused every epoch.
struct Item {
  SampledClip clip;
  TokenizedText question;
  std::string answer;        // normalized
  TokenizedText answer_ids;  // pretrain only
  size_t target = 0;         // finetune / probe / multiple_choice
  std::vector<std::string> candidates;
  std::vector<TokenizedText> candidate_ids;
};

std::vector<size_t> all_indices(size_t n) {
  std::vector<size_t> v(n);
  for (size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

// Splits [0, n) into (train, validation) after a seeded shuffle.
std::pair<std::vector<size_t>, std::vector<size_t>> split_holdout(size_t n, double fraction, Rng rng) {
  std::vector<size_t> idx = all_indices(n);
  const auto held = static_cast<size_t>(std::floor(fraction * static_cast<double>(n)));
  if (held == 0 || held >= n) return {idx, {}};
  rng.shuffle(std::span<size_t>(idx));
  std::vector<size_t> val(idx.end() - static_cast<std::ptrdiff_t>(held), idx.end());
  idx.resize(n - held);
  std::sort(idx.begin(), idx.end());
  std::sort(val.begin(), val.end());
  return {idx, val};
}

class Runner {
 public:
  Runner(const TrainConfig& cfg, Model& model, const TrainData& data)
      : cfg_(cfg),
        mode_(cfg.parsed_mode()),
        model_(model),
        data_(data),
        root_(cfg.seed),
        dropout_rng_(root_.fork(kDropoutStream)),
        mlm_rng_(root_.fork(kMlmStream)),
        negative_rng_(root_.fork(kNegativeStream)) {}

  TrainResult run(const MetricSink& sink);

 private:
  void prepare();
  ad::Var batch_loss(ad::Graph& g, const std::vector<size_t>& batch);
  ad::Var mlm_term(ad::Graph& g, const std::vector<size_t>& batch);
  std::optional<double> validate_epoch() const;
  std::vector<std::vector<size_t>> epoch_batches(Rng& rng, std::vector<std::string>* warnings) const;

  bool use_mlm() const { return cfg_.mlm_enabled && mode_ != Mode::kProbe; }

  const TrainConfig& cfg_;
  Mode mode_;
  Model& model_;
  const TrainData& data_;
  Rng root_;
  Rng dropout_rng_;
  Rng mlm_rng_;
  Rng negative_rng_;

  std::vector<Item> items_;
  std::vector<size_t> train_idx_;
  std::vector<std::vector<size_t>> by_video_;  // positions into train_idx_
  std::vector<QATriplet> val_triplets_;
  std::vector<AnnotatedExample> val_examples_;
  size_t skipped_ = 0;
};

void Runner::prepare() {
  if (data_.features == nullptr) throw ValidationError("features", "no feature store supplied");
  const FeatureStore& fs = *data_.features;
  const int t = model_.config().video_len;
  Rng split_rng = root_.fork(kSplitStream);

  switch (mode_) {
    case Mode::kPretrain: {
      if (data_.triplets.empty()) throw ValidationError("triplets", "pretraining needs QA triplets");
      for (const auto& tr : data_.triplets) {
        Item it;
        it.clip = eval::load_clip(fs, tr.video_id, tr.start_s, tr.end_s, t);
        it.question = model_.tokenize_question(tr.question);
        it.answer = normalize_answer(tr.answer);
        it.answer_ids = model_.tokenize_answer(it.answer);
        items_.push_back(std::move(it));
      }
      std::vector<size_t> val;
      if (data_.validation.empty()) {
        std::tie(train_idx_, val) = split_holdout(items_.size(), cfg_.val_fraction, split_rng);
        for (size_t i : val) val_triplets_.push_back(data_.triplets[i]);
      } else {
        train_idx_ = all_indices(items_.size());
        val_examples_ = data_.validation;
      }
      std::map<std::string, std::vector<size_t>> groups;
      for (size_t k = 0; k < train_idx_.size(); ++k) groups[data_.triplets[train_idx_[k]].video_id].push_back(k);
      for (auto& [vid, clips] : groups) by_video_.push_back(std::move(clips));
      break;
    }
    case Mode::kMatchingBaseline: {
      if (data_.pairs.size() < 2) throw ValidationError("pairs", "matching needs at least two video-text pairs");
      for (const auto& p : data_.pairs) {
        Item it;
        it.clip = eval::load_clip(fs, p.video_id, p.start_s, p.end_s, t);
        it.question = model_.tokenize_question(p.text);
        it.answer = p.video_id;
        items_.push_back(std::move(it));
      }
      train_idx_ = all_indices(items_.size());
      val_examples_ = data_.validation;
      break;
    }
    case Mode::kFinetune:
    case Mode::kProbe:
    case Mode::kMultipleChoice: {
      const bool mc = mode_ == Mode::kMultipleChoice;
      if (data_.examples.empty()) throw ValidationError("examples", "finetuning needs annotated examples");
      if (!mc && data_.vocab.empty()) throw ValidationError("vocabulary", "finetuning needs an answer vocabulary");
      std::vector<size_t> usable;
      for (size_t i = 0; i < data_.examples.size(); ++i) {
        const auto& ex = data_.examples[i];
        Item it;
        if (mc) {
          if (ex.candidates.size() < 2) throw ValidationError("candidates", "multiple choice needs K >= 2");
          for (const auto& c : ex.candidates) {
            it.candidates.push_back(normalize_answer(c));
            it.candidate_ids.push_back(model_.tokenize_answer(it.candidates.back()));
          }
          const std::string correct = normalize_answer(ex.answers.at(0));
          auto pos = std::find(it.candidates.begin(), it.candidates.end(), correct);
          if (pos == it.candidates.end()) throw ValidationError("candidates", "correct answer missing from candidates");
          it.target = static_cast<size_t>(pos - it.candidates.begin());
          it.answer = correct;
        } else {
          auto a = eval::primary_in_vocabulary(ex, data_.vocab);
          if (!a) {
            ++skipped_;
            continue;
          }
          it.answer = *a;
          it.target = *data_.vocab.index_of(*a);
        }
        it.clip = eval::load_clip(fs, ex.video_id, ex.start_s, ex.end_s, t);
        it.question = model_.tokenize_question(ex.question);
        usable.push_back(i);
        items_.push_back(std::move(it));
      }
      if (items_.empty()) throw ValidationError("examples", "no training example has an in-vocabulary answer");
      if (data_.validation.empty()) {
        std::vector<size_t> val;
        std::tie(train_idx_, val) = split_holdout(items_.size(), cfg_.val_fraction, split_rng);
        for (size_t k : val) val_examples_.push_back(data_.examples[usable[k]]);
      } else {
        train_idx_ = all_indices(items_.size());
        val_examples_ = data_.validation;
      }
      break;
    }
  }
}

std::vector<std::vector<size_t>> Runner::epoch_batches(Rng& rng, std::vector<std::string>* warnings) const {
  std::vector<std::vector<size_t>> out;
  if (mode_ == Mode::kPretrain) {
    for (auto& b : make_batches(by_video_, cfg_.clips_per_batch, cfg_.videos_per_batch, rng, warnings)) {
      for (auto& k : b) k = train_idx_[k];
      out.push_back(std::move(b));
    }
  } else {
    for (auto& b : make_flat_batches(train_idx_.size(), cfg_.clips_per_batch, rng)) {
      for (auto& k : b) k = train_idx_[k];
      out.push_back(std::move(b));
    }
  }
  return out;
}

ad::Var Runner::mlm_term(ad::Graph& g, const std::vector<size_t>& batch) {
  const MlmConfig mcfg = cfg_.mlm();
  std::vector<ad::Var> logits;
  std::vector<int> labels;
  for (size_t i : batch) {
    const Item& it = items_[i];
    MlmSample s = mlm_corrupt(it.question, mcfg, model_.config().token_vocab_size, mlm_rng_);
    auto fused = model_.fuse(g, it.clip, s.corrupted, model_.default_mode(), &dropout_rng_);
    logits.push_back(model_.mlm_logits(g, fused.token_outputs));
    labels.insert(labels.end(), s.labels.begin(), s.labels.end());
  }
  return mlm_loss(g, g.concat_rows(logits), labels);
}

ad::Var Runner::batch_loss(ad::Graph& g, const std::vector<size_t>& batch) {
  const FusionMode fm = model_.default_mode();
  const auto b = static_cast<double>(batch.size());
  ad::Var loss{};
  switch (mode_) {
    case Mode::kPretrain: {
      std::vector<ad::Var> fused, answers;
      std::vector<std::string> strings;
      for (size_t i : batch) {
        const Item& it = items_[i];
        fused.push_back(model_.fuse(g, it.clip, it.question, fm, &dropout_rng_).embedding);
        answers.push_back(model_.encode_answer(g, it.answer_ids, &dropout_rng_));
        strings.push_back(it.answer);
      }
      loss = contrastive_loss(g, g.concat_rows(fused), g.concat_rows(answers), strings);
      break;
    }
    case Mode::kFinetune:
    case Mode::kProbe: {
      std::vector<ad::Var> fused, answers;
      std::vector<size_t> targets;
      for (size_t i : batch) {
        const Item& it = items_[i];
        fused.push_back(model_.fuse(g, it.clip, it.question, fm, &dropout_rng_).embedding);
        targets.push_back(it.target);
      }
      for (const auto& a : data_.vocab.entries()) {
        answers.push_back(model_.encode_answer(g, model_.tokenize_answer(a), &dropout_rng_));
      }
      loss = softmax_ce_rows(g, g.matmul_nt(g.concat_rows(fused), g.concat_rows(answers)), targets);
      break;
    }
    case Mode::kMultipleChoice: {
      std::vector<ad::Var> terms;
      for (size_t i : batch) {
        const Item& it = items_[i];
        ad::Var f = model_.fuse(g, it.clip, it.question, fm, &dropout_rng_).embedding;
        std::vector<ad::Var> cands;
        for (const auto& c : it.candidate_ids) cands.push_back(model_.encode_answer(g, c, &dropout_rng_));
        const size_t target = it.target;
        terms.push_back(softmax_ce_rows(g, g.matmul_nt(f, g.concat_rows(cands)), std::span(&target, 1)));
      }
      loss = g.scale(g.sum(g.concat_rows(terms)), 1.0 / b);
      break;
    }
    case Mode::kMatchingBaseline: {
      std::vector<ad::Var> logits;
      std::vector<double> labels;
      const size_t n = items_.size();
      for (size_t i : batch) {
        const Item& it = items_[i];
        // One clip from another video and one text from another pair.
        size_t vneg = i;
        for (int tries = 0; tries < 32 && (vneg == i || items_[vneg].answer == it.answer); ++tries) {
          vneg = negative_rng_.below(n);
        }
        if (vneg == i) vneg = (i + 1) % n;
        size_t tneg = negative_rng_.below(n - 1);
        if (tneg >= i) ++tneg;
        logits.push_back(model_.match_score(g, model_.fuse(g, it.clip, it.question, fm, &dropout_rng_).cls));
        logits.push_back(
            model_.match_score(g, model_.fuse(g, items_[vneg].clip, it.question, fm, &dropout_rng_).cls));
        logits.push_back(
            model_.match_score(g, model_.fuse(g, it.clip, items_[tneg].question, fm, &dropout_rng_).cls));
        labels.insert(labels.end(), {1.0, 0.0, 0.0});
      }
      loss = matching_loss(g, g.concat_rows(logits), labels);
      break;
    }
  }
  if (use_mlm()) loss = g.add(loss, g.scale(mlm_term(g, batch), cfg_.mlm_weight));
  return loss;
}

std::optional<double> Runner::validate_epoch() const {
  if (!val_examples_.empty()) {
    eval::EvalOptions opts;
    opts.protocol = mode_ == Mode::kPretrain || mode_ == Mode::kMatchingBaseline ? eval::Protocol::kZeroShot
                                                                                  : eval::Protocol::kStandard;
    opts.scorer = mode_ == Mode::kMatchingBaseline ? eval::Scorer::kMatching : eval::Scorer::kJoint;
    return eval::evaluate(model_, val_examples_, *data_.features, data_.vocab, opts).top1;
  }
  if (!val_triplets_.empty()) return retrieval_top1(model_, val_triplets_, *data_.features);
  return std::nullopt;
}

TrainResult Runner::run(const MetricSink& sink) {
  prepare();
  TrainResult result;
  result.skipped_out_of_vocabulary = skipped_;

  std::set<std::string> trainable;
  if (mode_ == Mode::kProbe) {
    const auto& names = Model::probe_parameter_names();
    trainable.insert(names.begin(), names.end());
  }
  Adam adam(model_.params(), cfg_.adam(), trainable);
  std::optional<ad::ParameterSet> frozen;
  if (mode_ == Mode::kProbe) frozen = model_.params().clone();

  Rng batch_rng = root_.fork(kBatchStream);
  // Epoch batch counts are fixed by the data, so the first epoch's count
  // gives the schedule length.
  Rng count_rng = batch_rng;
  size_t total = epoch_batches(count_rng, nullptr).size() * static_cast<size_t>(cfg_.epochs);
  if (cfg_.max_steps > 0) total = std::min(total, static_cast<size_t>(cfg_.max_steps));

  ad::ParameterSet best = model_.params().clone();
  size_t step = 0;
  for (int epoch = 0; epoch < cfg_.epochs && step < total; ++epoch) {
    const auto batches = epoch_batches(batch_rng, epoch == 0 ? &result.warnings : nullptr);
    double loss_sum = 0.0;
    size_t loss_n = 0;
    for (const auto& batch : batches) {
      if (step >= total) break;
      const double lr = cosine_lr(step, total, cfg_.lr0);
      model_.params().zero_grad();
      ad::Graph g(true);
      const ad::Var loss = batch_loss(g, batch);
      const double value = g.scalar(loss);
      if (!std::isfinite(value)) throw TrainingDiverged(step, model_.params().clone());
      g.backward(loss);
      adam.step(lr);
      loss_sum += value;
      ++loss_n;
      MetricRecord rec{step, epoch, lr, value, std::nullopt};
      ++step;
      if (&batch == &batches.back() || step == total) rec.val_top1 = validate_epoch();
      if (rec.val_top1 && (!result.best_val_top1 || *rec.val_top1 > *result.best_val_top1)) {
        result.best_val_top1 = rec.val_top1;
        result.best_epoch = epoch;
        best = model_.params().clone();
      }
      result.records.push_back(rec);
      if (sink) sink(rec);
    }
    result.epoch_losses.push_back(loss_n ? loss_sum / static_cast<double>(loss_n) : 0.0);
    if (frozen) {
      for (const auto& p : frozen->all()) {
        if (trainable.count(p->name)) continue;
        const Matrix& now = model_.params().get(p->name).value;
        if (!now.cwiseEqual(p->value).all()) {
          throw std::logic_error("probe mode modified frozen tensor " + p->name);
        }
      }
    }
    if (!result.best_val_top1) {
      best = model_.params().clone();
      result.best_epoch = epoch;
    }
  }
  model_.params().assign(best);
  result.steps = step;
  return result;
}

}  // namespace

Mode parse_mode(const std::string& name) {
  if (name == "pretrain") return Mode::kPretrain;
  if (name == "finetune") return Mode::kFinetune;
  if (name == "probe") return Mode::kProbe;
  if (name == "multiple_choice") return Mode::kMultipleChoice;
  if (name == "matching_baseline") return Mode::kMatchingBaseline;
  throw ValidationError("mode", "unknown training mode \"" + name + "\"");
}

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::kPretrain: return "pretrain";
    case Mode::kFinetune: return "finetune";
    case Mode::kProbe: return "probe";
    case Mode::kMultipleChoice: return "multiple_choice";
    case Mode::kMatchingBaseline: return "matching_baseline";
  }
  return "?";
}

TrainConfig TrainConfig::full_pretrain() {
  TrainConfig c;
  c.clips_per_batch = 4096;
  c.videos_per_batch = 128;
  c.lr0 = 5e-5;
  c.epochs = 10;
  c.mode = "pretrain";
  return c;
}

TrainConfig TrainConfig::full_finetune() {
  TrainConfig c;
  c.clips_per_batch = 256;
  c.lr0 = 1e-5;
  c.epochs = 20;
  c.mode = "finetune";
  return c;
}

void TrainConfig::validate() const {
  const Mode m = parsed_mode();
  if (clips_per_batch <= 0) throw ValidationError("clips_per_batch", "must be positive");
  if (epochs <= 0) throw ValidationError("epochs", "must be positive");
  if (!(lr0 > 0.0) || !std::isfinite(lr0)) throw ValidationError("lr0", "must be positive");
  if (max_steps < 0) throw ValidationError("max_steps", "must be >= 0");
  if (m == Mode::kPretrain) {
    if (videos_per_batch <= 0) throw ValidationError("videos_per_batch", "must be positive");
    if (clips_per_batch % videos_per_batch != 0) {
      throw ValidationError("clips_per_batch", "must be divisible by videos_per_batch");
    }
  }
  check_probability("mlm_prob", mlm_prob);
  check_probability("mlm_mask", mlm_mask);
  check_probability("mlm_keep", mlm_keep);
  check_probability("mlm_random", mlm_random);
  check_probability("val_fraction", val_fraction);
  check_probability("adam_beta1", adam_beta1);
  check_probability("adam_beta2", adam_beta2);
  if (!(adam_eps > 0.0)) throw ValidationError("adam_eps", "must be positive");
  if (!(mlm_weight >= 0.0)) throw ValidationError("mlm_weight", "must be >= 0");
  mlm().validate();
}

TrainingDiverged::TrainingDiverged(size_t step, ad::ParameterSet last_good)
    : std::runtime_error("non-finite loss at step " + std::to_string(step)),
      step_(step),
      last_good_(std::move(last_good)) {}

TrainResult train(const TrainConfig& config, Model& model, const TrainData& data, const MetricSink& sink) {
  config.validate();
  Runner runner(config, model, data);
  return runner.run(sink);
}

double retrieval_top1(const Model& model, std::span<const QATriplet> triplets, const FeatureStore& features) {
  if (triplets.empty()) return 0.0;
  std::vector<std::string> distinct;
  for (const auto& t : triplets) {
    const std::string a = normalize_answer(t.answer);
    if (std::find(distinct.begin(), distinct.end(), a) == distinct.end()) distinct.push_back(a);
  }
  const Matrix answers = model.answer_matrix(distinct);
  size_t hits = 0;
  for (const auto& t : triplets) {
    const SampledClip clip = eval::load_clip(features, t.video_id, t.start_s, t.end_s, model.config().video_len);
    const RowVector f = model.fused_embedding(clip, model.tokenize_question(t.question), model.default_mode());
    if (distinct[argmax_lowest(score_answers(f, answers))] == normalize_answer(t.answer)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(triplets.size());
}

}  // namespace vqat::train
