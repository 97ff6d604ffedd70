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

#include "vqat/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

#include "vqat/checkpoint.hpp"
#include "vqat/eval.hpp"
#include "vqat/external_plugin.hpp"
#include "vqat/fields.hpp"
#include "vqat/run_config.hpp"

namespace vqat::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string& require(const std::string& value, const std::string& key) {
  if (value.empty()) throw ValidationError(key, "required but not given");
  return value;
}

fs::path existing(const std::string& value, const std::string& key) {
  const fs::path p = require(value, key);
  if (!fs::exists(p)) throw ValidationError(key, "file not found: " + p.string());
  return p;
}

void echo_config(const RunConfig& cfg) {
  fs::create_directories(cfg.out);
  std::ofstream(fs::path(cfg.out) / "config.echo") << format_config(cfg);
}

json config_json(const RunConfig& cfg) {
  json j = json::object();
  for (const auto& [k, v] : cfg.fields()) j[k] = v;
  return j;
}

void write_json(const json& j, const fs::path& path) { std::ofstream(path) << j.dump(2) << "\n"; }

// ---------------------------------------------------------------------------

int cmd_synth(const RunConfig& cfg) {
  const auto s = synth::write_corpus(cfg.synth, cfg.out);
  echo_config(cfg);
  std::cout << "wrote " << s.narrated_videos << " narrated videos, " << s.eval_examples << " eval and "
            << s.downstream_examples << " downstream examples, |V|=" << s.vocabulary_size << " to " << cfg.out
            << "\n";
  return 0;
}

int cmd_generate(const RunConfig& cfg) {
  cfg.gen.validate();
  const fs::path input = existing(cfg.input, "input");
  qagen::GeneratorPlugins plugins;
  std::shared_ptr<qagen::ExternalCommand> command;
  if (cfg.plugin == "external-command") {
    command = std::make_shared<qagen::ExternalCommand>(require(cfg.plugin_command, "plugin_command"));
    plugins = qagen::make_external_plugins(command, cfg.gen);
  } else if (cfg.plugin != "fallback") {
    throw ValidationError("plugin", "expected fallback or external-command, got '" + cfg.plugin + "'");
  }

  std::vector<QATriplet> triplets;
  qagen::GenerationReport report;
  if (cfg.gen_mode == "transcript") {
    for (const auto& t : read_transcripts(input)) {
      auto out = qagen::generate_from_transcript(t.segments, cfg.gen, plugins, &report);
      triplets.insert(triplets.end(), out.begin(), out.end());
    }
  } else if (cfg.gen_mode == "caption") {
    for (const auto& c : read_captions(input)) {
      auto out = qagen::generate_from_caption(c, cfg.gen, plugins, &report);
      triplets.insert(triplets.end(), out.begin(), out.end());
    }
  } else {
    throw ValidationError("gen_mode", "expected transcript or caption, got '" + cfg.gen_mode + "'");
  }

  const fs::path output = cfg.output.empty() ? fs::path(cfg.out) / "triplets.jsonl" : fs::path(cfg.output);
  write_triplets(triplets, output);
  echo_config(cfg);
  write_json({{"videos", report.videos},
              {"sentences", report.sentences},
              {"skipped_sentences", report.skipped_sentences},
              {"skipped_answers", report.skipped_answers},
              {"dropped_segments", report.dropped_segments},
              {"punctuator_fallbacks", report.punctuator_fallbacks},
              {"triplets", report.triplets},
              {"stoplist", std::string(qagen::kStoplistVersion)}},
             fs::path(cfg.out) / "generate_report.json");
  std::cout << "generated " << triplets.size() << " triplets from " << report.videos << " videos -> "
            << output.string() << "\n";
  return 0;
}

// Sentences of each cleaned transcript, for the matching objective.
std::vector<train::TextPair> transcript_pairs(const fs::path& path) {
  std::vector<train::TextPair> pairs;
  for (const auto& t : read_transcripts(path)) {
    const auto segs = qagen::dedup_adjacent_repetitions(qagen::normalize_segments(t.segments));
    for (const auto& s : qagen::punctuate(segs, qagen::GeneratorPlugins::fallback())) {
      pairs.push_back({t.video_id, s.start_s, s.end_s, s.text});
    }
  }
  return pairs;
}

bool is_downstream(const std::string& mode) {
  return mode == "finetune" || mode == "probe" || mode == "multiple_choice";
}

int cmd_train(RunConfig cfg) {
  const train::Mode mode = cfg.train.parsed_mode();
  const std::string& sub = cfg.subcommand;
  const bool ok = (sub == "pretrain" && (mode == train::Mode::kPretrain || mode == train::Mode::kMatchingBaseline)) ||
                  (sub == "finetune" && (mode == train::Mode::kFinetune || mode == train::Mode::kMultipleChoice)) ||
                  (sub == "probe" && mode == train::Mode::kProbe);
  if (!ok) throw ValidationError("mode", "mode " + cfg.train.mode + " does not belong to `" + sub + "`");
  cfg.train.seed = cfg.seed;
  cfg.train.validate();

  const FeatureStore features = FeatureStore::load(existing(cfg.features, "features"));
  train::TrainData data;
  data.features = &features;
  std::vector<std::string> texts;
  switch (mode) {
    case train::Mode::kPretrain:
      data.triplets = read_triplets(existing(cfg.triplets, "triplets"));
      for (const auto& t : data.triplets) {
        texts.push_back(t.question);
        texts.push_back(t.answer);
      }
      break;
    case train::Mode::kMatchingBaseline:
      data.pairs = transcript_pairs(existing(cfg.transcripts, "transcripts"));
      for (const auto& p : data.pairs) texts.push_back(p.text);
      break;
    default:
      data.examples = read_annotated(existing(cfg.examples, "examples"));
      for (const auto& ex : data.examples) {
        texts.push_back(ex.question);
        texts.insert(texts.end(), ex.candidates.begin(), ex.candidates.end());
      }
      break;
  }
  if (!cfg.validation.empty()) data.validation = read_annotated(existing(cfg.validation, "validation"));
  const bool needs_vocab = mode == train::Mode::kFinetune || mode == train::Mode::kProbe ||
                           (!data.validation.empty() && mode != train::Mode::kMultipleChoice);
  if (needs_vocab) {
    data.vocab = read_vocabulary(existing(cfg.vocab, "vocab"));
    texts.insert(texts.end(), data.vocab.entries().begin(), data.vocab.entries().end());
  }

  json history = json::array();
  std::string objective = "contrastive";
  std::unique_ptr<Model> model;
  if (!cfg.checkpoint.empty()) {
    auto loaded = load_checkpoint(existing(cfg.checkpoint, "checkpoint"));
    if (loaded.metadata.contains("history")) history = loaded.metadata["history"];
    objective = loaded.metadata.value("objective", objective);
    model = std::make_unique<Model>(std::move(loaded.model));
    for (const auto& [k, v] : to_fields(ModelConfig{})) {
      if (cfg.explicit_keys.count(k)) {
        std::cerr << "vqat: note: model key " << k << " ignored; the checkpoint fixes the architecture\n";
      }
    }
  } else {
    const TokenVocabulary tokens = TokenVocabulary::build(texts, 1);
    cfg.model.token_vocab_size = tokens.size();
    if (!cfg.explicit_keys.count("video_dim")) cfg.model.video_dim = features.feature_dim();
    model = std::make_unique<Model>(cfg.model, tokens, cfg.seed);
  }
  if (mode == train::Mode::kMatchingBaseline) objective = "matching_baseline";
  history.push_back(cfg.train.mode);

  echo_config(cfg);
  const fs::path out(cfg.out);
  std::ofstream metrics(out / "metrics.jsonl");
  auto sink = [&](const train::MetricRecord& r) {
    json j = {{"step", r.step}, {"epoch", r.epoch}, {"lr", r.lr}, {"loss", r.loss}};
    if (r.val_top1) j["val_top1"] = *r.val_top1;
    metrics << j.dump() << "\n";
    metrics.flush();
  };

  json meta = {{"history", history}, {"objective", objective}, {"run_config", config_json(cfg)}};
  try {
    const train::TrainResult result = train::train(cfg.train, *model, data, sink);
    json summary = {{"steps", result.steps},
                    {"best_epoch", result.best_epoch},
                    {"epoch_losses", result.epoch_losses},
                    {"skipped_out_of_vocabulary", result.skipped_out_of_vocabulary},
                    {"warnings", result.warnings}};
    if (result.best_val_top1) summary["best_val_top1"] = *result.best_val_top1;
    meta["train"] = summary;
    save_checkpoint(*model, meta, out / "checkpoint.vqck");
    write_json(summary, out / "train_summary.json");
    for (const auto& w : result.warnings) std::cerr << "vqat: warning: " << w << "\n";
    std::cout << cfg.train.mode << ": " << result.steps << " steps";
    if (result.best_val_top1) std::cout << ", best val top-1 " << *result.best_val_top1 << " (epoch " << result.best_epoch << ")";
    std::cout << " -> " << (out / "checkpoint.vqck").string() << "\n";
  } catch (const train::TrainingDiverged& e) {
    Model last(model->config(), model->tokens(), e.last_good().clone());
    meta["diverged_at_step"] = e.step();
    save_checkpoint(last, meta, out / "checkpoint.vqck");
    throw;
  }
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  const fs::path ckpt = existing(cfg.checkpoint, "checkpoint");
  const auto examples = read_annotated(existing(cfg.eval_set, "eval_set"));
  const FeatureStore features = FeatureStore::load(existing(cfg.features, "features"));
  const bool open_ended = std::any_of(examples.begin(), examples.end(), [](const auto& e) { return e.candidates.empty(); });
  AnswerVocabulary vocab;
  if (open_ended || !cfg.vocab.empty()) vocab = read_vocabulary(existing(cfg.vocab, "vocab"));
  auto loaded = load_checkpoint(ckpt);

  eval::EvalOptions opts;
  if (cfg.protocol == "zero_shot") {
    opts.protocol = eval::Protocol::kZeroShot;
    for (const auto& h : loaded.metadata.value("history", json::array())) {
      if (is_downstream(h.get<std::string>())) {
        throw ValidationError("protocol", "zero_shot needs a checkpoint without downstream training, found " +
                                              h.get<std::string>() + " in its history");
      }
    }
  } else if (cfg.protocol != "standard") {
    throw ValidationError("protocol", "expected zero_shot or standard, got '" + cfg.protocol + "'");
  }
  bool fine_tuned = false;
  for (const auto& h : loaded.metadata.value("history", json::array())) fine_tuned = fine_tuned || is_downstream(h.get<std::string>());
  if (loaded.metadata.value("objective", std::string()) == "matching_baseline" && !fine_tuned) {
    opts.scorer = eval::Scorer::kMatching;
  }
  opts.ivqa = cfg.ivqa;
  if (!cfg.examples.empty()) {
    std::map<std::string, size_t> freq;
    for (const auto& ex : read_annotated(existing(cfg.examples, "examples"))) ++freq[eval::primary_answer(ex)];
    opts.train_frequency = freq;
  }

  const eval::EvalReport report = eval::evaluate(loaded.model, examples, features, vocab, opts);
  echo_config(cfg);
  const fs::path out(cfg.out);
  write_json(eval::report_to_json(report), out / "report.json");
  const std::string text = eval::report_to_text(report);
  std::ofstream(out / "report.txt") << text;
  if (cfg.predictions) {
    std::ofstream pred(out / "predictions.jsonl");
    for (const auto& s : report.samples) pred << eval::sample_to_json(s).dump() << "\n";
  }
  std::cout << text;
  return 0;
}

int dispatch(const RunConfig& cfg) {
  if (cfg.subcommand == "synth") return cmd_synth(cfg);
  if (cfg.subcommand == "generate") return cmd_generate(cfg);
  if (cfg.subcommand == "eval") return cmd_eval(cfg);
  return cmd_train(cfg);
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"vqat: video question answering from narrated videos"};
  app.require_subcommand(1);
  const std::vector<std::pair<std::string, std::string>> subcommands = {
      {"synth", "write a synthetic narrated-video corpus"},
      {"generate", "generate question-answer triplets from transcripts or captions"},
      {"pretrain", "contrastive (or matching) pretraining on generated triplets"},
      {"finetune", "finetune on an annotated training set"},
      {"probe", "train only the output heads"},
      {"eval", "evaluate a checkpoint on an annotated set"},
  };
  struct Flags {
    std::string config;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
  };
  std::map<std::string, Flags> flags;
  for (const auto& [name, help] : subcommands) {
    CLI::App* sub = app.add_subcommand(name, help);
    Flags& f = flags[name];
    sub->add_option("--config", f.config, "flat key = value config file");
    for (const auto& key : RunConfig::keys()) {
      std::string spec = "--" + key;
      std::string dashed = key;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      if (dashed != key) spec += ",--" + dashed;
      f.options[key] = sub->add_option(spec, f.values[key]);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    for (const auto& [name, help] : subcommands) {
      if (!app.got_subcommand(name)) continue;
      const Flags& f = flags[name];
      KeyValues kv;
      for (const auto& [key, opt] : f.options) {
        if (opt->count() > 0) kv.emplace_back(key, f.values.at(key));
      }
      std::optional<fs::path> file;
      if (!f.config.empty()) file = f.config;
      return dispatch(resolve_config(name, file, kv));
    }
  } catch (const std::exception& e) {
    std::cerr << "vqat: error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace vqat::cli
