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

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "test_util.hpp"
#include "vqat/cli.hpp"
#include "vqat/run_config.hpp"

using namespace vqat;
using namespace vqat::cli;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "vqat");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream err, out;
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  const int code = run(static_cast<int>(argv.size()), argv.data());
  std::cerr.rdbuf(old_err);
  std::cout.rdbuf(old_out);
  return {code, err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("config text parsing") {
  const auto kv = parse_config_text("# comment\nepochs = 3\n\nlr0=0.5  # trailing\n", "f");
  REQUIRE(kv.size() == 2);
  CHECK(kv[0] == std::pair<std::string, std::string>{"epochs", "3"});
  CHECK(kv[1] == std::pair<std::string, std::string>{"lr0", "0.5"});
  CHECK_THROWS_AS(parse_config_text("just words\n", "f"), ValidationError);
}

TEST_CASE("resolution order: defaults, file, flags") {
  const auto dir = vqat::testing::scratch_dir("cfg");
  std::ofstream(dir / "run.cfg") << "epochs = 3\nlr0 = 0.25\nseed = 9\nout = " << (dir / "o").string() << "\n";
  const RunConfig c = resolve_config("pretrain", dir / "run.cfg", {{"lr0", "0.5"}});
  CHECK(c.train.epochs == 3);
  CHECK(c.train.lr0 == 0.5);
  CHECK(c.seed == 9);
  CHECK(c.train.seed == 9);
  CHECK(c.synth.seed == 9);
  CHECK(c.model.joint_dim == ModelConfig{}.joint_dim);

  try {
    resolve_config("pretrain", std::nullopt, {{"epochz", "3"}});
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "epochz");
  }
  CHECK_THROWS_AS(resolve_config("pretrain", std::nullopt, {{"epochs", "three"}}), ValidationError);
  CHECK(resolve_config("probe", std::nullopt, {}).train.mode == "probe");

  const RunConfig full = resolve_config("pretrain", std::nullopt, {{"preset", "full"}});
  CHECK(full.train.clips_per_batch == 4096);
  CHECK(full.model.joint_dim == 512);
}

TEST_CASE("config echo round-trips") {
  const RunConfig c = resolve_config("finetune", std::nullopt,
                                     {{"lr0", "0.123456789012345"}, {"qa_only", "true"}, {"out", "x"}, {"examples", "e.jsonl"}});
  const std::string echo = format_config(c);
  const RunConfig back = resolve_config("finetune", std::nullopt, parse_config_text(echo, "echo"));
  CHECK(back.fields() == c.fields());
  CHECK(back.train.lr0 == c.train.lr0);
}

TEST_CASE("default output root comes from the environment") {
  setenv("VQAT_OUT_ROOT", "/tmp/vqat_root", 1);
  CHECK(resolve_config("eval", std::nullopt, {}).out == "/tmp/vqat_root/eval");
  unsetenv("VQAT_OUT_ROOT");
  CHECK(resolve_config("eval", std::nullopt, {}).out == "runs/eval");
}

TEST_CASE("exit codes") {
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({"eval", "--no-such-flag", "1"}).code == 2);
  const auto dir = vqat::testing::scratch_dir("exit");
  const CliResult missing = run_cli({"eval", "--out", (dir / "e").string()});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("checkpoint") != std::string::npos);
  const CliResult absent = run_cli({"eval", "--checkpoint", (dir / "nope.vqck").string(), "--out", (dir / "e").string()});
  CHECK(absent.code == 1);
  CHECK(absent.err.find("checkpoint") != std::string::npos);
  CHECK(run_cli({"pretrain", "--epochs", "0", "--out", (dir / "p").string()}).code == 1);
}

TEST_CASE("synth is deterministic and small corpora validate") {
  const auto dir = vqat::testing::scratch_dir("synth");
  REQUIRE(run_cli({"synth", "--videos", "5", "--seed", "3", "--out", (dir / "a").string()}).code == 0);
  REQUIRE(run_cli({"synth", "--videos", "5", "--seed", "3", "--out", (dir / "b").string()}).code == 0);
  for (const char* f : {"transcripts.jsonl", "manifest.jsonl", "eval.jsonl", "downstream_train.jsonl", "vocab.txt",
                        "features/vid0000.vqf", "features/evl0000.vqf"}) {
    CHECK_MESSAGE(slurp(dir / "a" / f) == slurp(dir / "b" / f), f);
  }

  REQUIRE(run_cli({"synth", "--videos", "1", "--out", (dir / "one").string()}).code == 0);
  CHECK(read_transcripts(dir / "one" / "transcripts.jsonl").size() == 1);
  CHECK(FeatureStore::load(dir / "one" / "manifest.jsonl").size() >= 1);
  const auto ev = read_annotated(dir / "one" / "eval.jsonl");
  REQUIRE(!ev.empty());
  for (const auto& e : ev) CHECK(e.answers.size() == 5);
  CHECK(run_cli({"synth", "--videos", "0", "--out", (dir / "zero").string()}).code == 1);
}

TEST_CASE("generate, pretrain, finetune and eval compose") {
  const auto dir = vqat::testing::scratch_dir("pipeline");
  const std::string data = (dir / "data").string();
  REQUIRE(run_cli({"synth", "--videos", "12", "--seed", "1", "--out", data}).code == 0);
  REQUIRE(run_cli({"generate", "--input", data + "/transcripts.jsonl", "--out", (dir / "gen").string()}).code == 0);
  REQUIRE(run_cli({"generate", "--input", data + "/transcripts.jsonl", "--out", (dir / "gen2").string()}).code == 0);
  CHECK(slurp(dir / "gen" / "triplets.jsonl") == slurp(dir / "gen2" / "triplets.jsonl"));
  CHECK(!read_triplets(dir / "gen" / "triplets.jsonl").empty());

  const std::vector<std::string> pretrain = {"pretrain", "--triplets", (dir / "gen" / "triplets.jsonl").string(),
                                             "--features", data + "/manifest.jsonl", "--epochs", "2", "--joint_dim",
                                             "16", "--hidden_dim", "32", "--seed", "4"};
  auto p1 = pretrain;
  p1.insert(p1.end(), {"--out", (dir / "pt").string()});
  auto p2 = pretrain;
  p2.insert(p2.end(), {"--out", (dir / "pt").string()});
  REQUIRE(run_cli(p1).code == 0);
  const std::string first = slurp(dir / "pt" / "checkpoint.vqck");
  REQUIRE(run_cli(p2).code == 0);
  CHECK(slurp(dir / "pt" / "checkpoint.vqck") == first);

  // The echo reproduces the run.
  const auto echo = parse_config_text(slurp(dir / "pt" / "config.echo"), "echo");
  const RunConfig from_echo = resolve_config("pretrain", std::nullopt, echo);
  CHECK(from_echo.model.joint_dim == 16);
  CHECK(from_echo.seed == 4);

  std::ifstream metrics(dir / "pt" / "metrics.jsonl");
  std::string line;
  size_t n = 0;
  while (std::getline(metrics, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("step"));
    CHECK(j.contains("lr"));
    CHECK(j.contains("loss"));
    ++n;
  }
  CHECK(n > 0);

  const std::vector<std::string> eval_base = {"eval", "--checkpoint", (dir / "pt" / "checkpoint.vqck").string(),
                                              "--eval_set", data + "/eval.jsonl", "--vocab", data + "/vocab.txt",
                                              "--features", data + "/manifest.jsonl", "--ivqa", "true",
                                              "--predictions", "true"};
  auto zs = eval_base;
  zs.insert(zs.end(), {"--protocol", "zero_shot", "--out", (dir / "ev").string()});
  REQUIRE(run_cli(zs).code == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "ev" / "report.json"));
  CHECK(report["protocol"] == "zero_shot");
  CHECK(report.contains("ivqa_acc"));
  CHECK(report["n_samples"].get<size_t>() == read_annotated(data + "/eval.jsonl").size());
  std::ifstream preds(dir / "ev" / "predictions.jsonl");
  REQUIRE(std::getline(preds, line));
  const auto pj = nlohmann::json::parse(line);
  for (const char* k : {"video_id", "question", "pred", "score"}) CHECK(pj.contains(k));

  REQUIRE(run_cli({"finetune", "--checkpoint", (dir / "pt" / "checkpoint.vqck").string(), "--examples",
                   data + "/downstream_train.jsonl", "--vocab", data + "/vocab.txt", "--features",
                   data + "/manifest.jsonl", "--epochs", "1", "--out", (dir / "ft").string()})
              .code == 0);
  auto bad = eval_base;
  bad[2] = (dir / "ft" / "checkpoint.vqck").string();
  bad.insert(bad.end(), {"--protocol", "zero_shot", "--out", (dir / "ev2").string()});
  const CliResult rejected = run_cli(bad);
  CHECK(rejected.code == 1);
  CHECK(rejected.err.find("protocol") != std::string::npos);
  auto std_eval = eval_base;
  std_eval[2] = (dir / "ft" / "checkpoint.vqck").string();
  std_eval.insert(std_eval.end(), {"--protocol", "standard", "--examples", data + "/downstream_train.jsonl", "--out",
                                   (dir / "ev3").string()});
  CHECK(run_cli(std_eval).code == 0);

  CHECK(run_cli({"probe", "--checkpoint", (dir / "pt" / "checkpoint.vqck").string(), "--examples",
                 data + "/downstream_train.jsonl", "--vocab", data + "/vocab.txt", "--features",
                 data + "/manifest.jsonl", "--epochs", "1", "--out", (dir / "pr").string()})
            .code == 0);
  CHECK(run_cli({"pretrain", "--mode", "matching_baseline", "--transcripts", data + "/transcripts.jsonl", "--features",
                 data + "/manifest.jsonl", "--epochs", "1", "--out", (dir / "mb").string()})
            .code == 0);
  auto mb = eval_base;
  mb[2] = (dir / "mb" / "checkpoint.vqck").string();
  mb.insert(mb.end(), {"--protocol", "zero_shot", "--out", (dir / "ev4").string()});
  CHECK(run_cli(mb).code == 0);
  CHECK(run_cli({"pretrain", "--mode", "finetune", "--out", (dir / "x").string()}).code == 1);
}

TEST_CASE("caption mode and plug-in selection") {
  const auto dir = vqat::testing::scratch_dir("captions");
  std::vector<CaptionRecord> caps = {{"c1", "woman slicing fresh bread", 4.0}, {"c2", "a man with a hammer", 6.0}};
  write_captions(caps, dir / "caps.jsonl");
  REQUIRE(run_cli({"generate", "--input", (dir / "caps.jsonl").string(), "--gen_mode", "caption", "--out",
                   (dir / "g").string()})
              .code == 0);
  const auto t = read_triplets(dir / "g" / "triplets.jsonl");
  CHECK(!t.empty());
  for (const auto& x : t) {
    CHECK(x.question.find(x.answer) == std::string::npos);
    CHECK(x.start_s == 0.0);
  }
  CHECK(run_cli({"generate", "--input", (dir / "caps.jsonl").string(), "--plugin", "neural", "--out",
                 (dir / "g2").string()})
            .code == 1);
  CHECK(run_cli({"generate", "--input", (dir / "caps.jsonl").string(), "--plugin", "external-command", "--out",
                 (dir / "g3").string()})
            .code == 1);
}
