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

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vqat/autograd.hpp"
#include "vqat/corpus.hpp"
#include "vqat/mlm.hpp"
#include "vqat/model.hpp"
#include "vqat/optimizer.hpp"

namespace vqat::train {

enum class Mode { kPretrain, kFinetune, kProbe, kMultipleChoice, kMatchingBaseline };

Mode parse_mode(const std::string& name);
const char* mode_name(Mode mode);

struct TrainConfig {
  int clips_per_batch = 16;  // examples per batch outside pretraining
  int videos_per_batch = 4;
  int epochs = 10;
  double lr0 = 2e-3;
  uint64_t seed = 0;
  std::string mode = "pretrain";
  bool mlm_enabled = true;
  double mlm_prob = 0.15;
  double mlm_mask = 0.8;
  double mlm_keep = 0.1;
  double mlm_random = 0.1;
  double mlm_weight = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  // Share of the training data held out for checkpoint selection when no
  // validation set is supplied.
  double val_fraction = 0.1;
  int max_steps = 0;  // 0: no cap

  static TrainConfig full_pretrain();
  static TrainConfig full_finetune();

  void validate() const;
  Mode parsed_mode() const { return parse_mode(mode); }
  MlmConfig mlm() const { return {mlm_prob, mlm_mask, mlm_keep, mlm_random}; }
  AdamConfig adam() const { return {adam_beta1, adam_beta2, adam_eps}; }

  template <typename V>
  void visit(V&& v) {
    v("clips_per_batch", clips_per_batch);
    v("videos_per_batch", videos_per_batch);
    v("epochs", epochs);
    v("lr0", lr0);
    v("seed", seed);
    v("mode", mode);
    v("mlm_enabled", mlm_enabled);
    v("mlm_prob", mlm_prob);
    v("mlm_mask", mlm_mask);
    v("mlm_keep", mlm_keep);
    v("mlm_random", mlm_random);
    v("mlm_weight", mlm_weight);
    v("adam_beta1", adam_beta1);
    v("adam_beta2", adam_beta2);
    v("adam_eps", adam_eps);
    v("val_fraction", val_fraction);
    v("max_steps", max_steps);
  }
};

// A narrated clip paired with free text, for the matching baseline.
struct TextPair {
  std::string video_id;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string text;
};

// Inputs for one run; which members are read depends on the mode.
struct TrainData {
  const FeatureStore* features = nullptr;
  std::vector<QATriplet> triplets;          // pretrain
  std::vector<TextPair> pairs;              // matching_baseline
  std::vector<AnnotatedExample> examples;   // finetune, probe, multiple_choice
  AnswerVocabulary vocab;                   // finetune, probe
  // Optional explicit validation split; evaluated against `vocab`.
  std::vector<AnnotatedExample> validation;
};

struct MetricRecord {
  size_t step = 0;
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  std::optional<double> val_top1;
};

struct TrainResult {
  std::vector<MetricRecord> records;
  std::vector<double> epoch_losses;  // mean training loss per epoch
  std::optional<double> best_val_top1;
  int best_epoch = -1;
  size_t steps = 0;
  size_t skipped_out_of_vocabulary = 0;
  std::vector<std::string> warnings;
};

// Raised on a non-finite loss. `last_good` holds the parameters before the
// failing update.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(size_t step, ad::ParameterSet last_good);
  size_t step() const { return step_; }
  const ad::ParameterSet& last_good() const { return last_good_; }

 private:
  size_t step_;
  ad::ParameterSet last_good_;
};

using MetricSink = std::function<void(const MetricRecord&)>;

// Optimizes `model` in place. On return the model holds the parameters of
// the epoch with the best validation top-1 (the last epoch when there is
// no validation data).
TrainResult train(const TrainConfig& config, Model& model, const TrainData& data,
                  const MetricSink& sink = {});

// Fraction of triplets whose own answer ranks first among the distinct
// answers of the set (dropout off).
double retrieval_top1(const Model& model, std::span<const QATriplet> triplets,
                      const FeatureStore& features);

}  // namespace vqat::train
