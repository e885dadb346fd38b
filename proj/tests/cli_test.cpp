/* Copyright 2026 The ATD Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <sys/wait.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kFixtures = ATD_FIXTURE_DIR;

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("atd_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  // Runs the CLI; stdout and stderr land in out_ and err_.
  int Run(const std::string& args) {
    const std::string cmd = std::string("'") + ATD_CLI_PATH + "' " + args + " >'" +
                            (dir_ / "stdout").string() + "' 2>'" + (dir_ / "stderr").string() + "'";
    const int status = std::system(cmd.c_str());
    out_ = Slurp(dir_ / "stdout");
    err_ = Slurp(dir_ / "stderr");
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string P(const std::string& name) const { return "'" + (dir_ / name).string() + "'"; }

  void TinyCorpus() {
    ASSERT_EQ(Run("synth --n 60 --seed 1 --output " + P("raw.txt")), 0) << err_;
    ASSERT_EQ(Run("prepare --input " + P("raw.txt") + " --output " + P("train.tsv")), 0) << err_;
  }

  fs::path dir_;
  std::string out_;
  std::string err_;
};

TEST_F(CliTest, HelpListsEveryKey) {
  ASSERT_EQ(Run("finetune --help"), 0);
  for (const char* key : {"--corpus", "--run_dir", "--arch", "--init", "--lr", "--weight_decay",
                          "--batch_size", "--max_epochs", "--patience", "--seed", "--config",
                          "--profile", "--dropout", "--n_layers_decoder"}) {
    EXPECT_NE(out_.find(key), std::string::npos) << key;
  }
  ASSERT_EQ(Run("--help"), 0);
  for (const char* cmd : {"prepare", "pretrain", "finetune", "pseudo-label", "train-student",
                          "diacritize", "evaluate", "export-classes"}) {
    EXPECT_NE(out_.find(cmd), std::string::npos) << cmd;
  }
}

TEST_F(CliTest, ConfigErrorsExitThree) {
  EXPECT_EQ(Run(""), 3);
  EXPECT_EQ(Run("prepare --no_such_flag 1"), 3);
  EXPECT_EQ(Run("prepare --output x"), 3);  // required key missing
  std::ofstream(dir_ / "bad.json") << R"({"input": "a", "output": "b", "learning_rat": 0.1})";
  EXPECT_EQ(Run("prepare --config " + P("bad.json")), 3);
  EXPECT_NE(err_.find("learning_rat"), std::string::npos) << err_;
  std::ofstream(dir_ / "typed.json") << R"({"input": "a", "output": "b", "min_chars": "six"})";
  EXPECT_EQ(Run("prepare --config " + P("typed.json")), 3);
  EXPECT_EQ(Run("prepare --input a --output b --profile lab"), 3);
  EXPECT_EQ(Run("prepare --input a --output b --min_dtl abc"), 3);
}

TEST_F(CliTest, MissingInputExitsOneAndNamesThePath) {
  EXPECT_EQ(Run("prepare --input " + P("absent.txt") + " --output " + P("o.tsv")), 1);
  EXPECT_NE(err_.find("absent.txt"), std::string::npos) << err_;
}

TEST_F(CliTest, EmptyResultExitsTwo) {
  std::ofstream(dir_ / "short.txt") << "\xd8\xa8\n\n";
  EXPECT_EQ(Run("prepare --input " + P("short.txt") + " --output " + P("o.tsv")), 2);
}

TEST_F(CliTest, NumericalFailureExitsFour) {
  ASSERT_EQ(Run("synth --format skeleton --n 20 --output " + P("plain.txt")), 0);
  EXPECT_EQ(Run("pretrain --corpus " + P("plain.txt") + " --run_dir " + P("run") +
                " --mask_prob 0 --max_epochs 1"),
            4);
}

TEST_F(CliTest, PrepareMatchesTheFilterFixture) {
  const std::string out = (dir_ / "kept.tsv").string();
  ASSERT_EQ(Run("prepare --input '" + (kFixtures / "filter_20.txt").string() + "' --output '" + out + "'"), 0)
      << err_;
  const json stats = json::parse(Slurp(out + ".stats.json"));
  EXPECT_EQ(stats["total_in"], 20);
  EXPECT_EQ(stats["kept"], 11);
  EXPECT_EQ(stats["dropped_length"], 3);
  EXPECT_EQ(stats["dropped_dtl"], 4);
  EXPECT_EQ(stats["dropped_encode_error"], 2);
  EXPECT_EQ(stats["chars_kept"], 2113);
  EXPECT_EQ(stats["words_kept"], 13);
  const json snapshot = json::parse(Slurp(out + ".config.json"));
  EXPECT_EQ(snapshot["min_dtl"], 0.6);
  EXPECT_EQ(snapshot["command"], "prepare");
}

TEST_F(CliTest, ExportClassesMatchesTheFixture) {
  ASSERT_EQ(Run("export-classes --output -"), 0);
  EXPECT_EQ(out_, Slurp(kFixtures / "class_table.tsv"));
}

TEST_F(CliTest, FlagsOverrideConfigFile) {
  TinyCorpus();
  std::ofstream(dir_ / "cfg.json") << R"({"max_epochs": 1, "lr": 0.002})";
  ASSERT_EQ(Run("finetune --config " + P("cfg.json") + " --corpus " + P("train.tsv") +
                " --run_dir " + P("run") + " --lr 0.003"),
            0)
      << err_;
  const json snapshot = json::parse(Slurp(dir_ / "run" / "config.json"));
  EXPECT_EQ(snapshot["max_epochs"], 1);
  EXPECT_EQ(snapshot["lr"], 0.003);
  EXPECT_EQ(snapshot["batch_size"], 16);  // desk default
}

TEST_F(CliTest, RerunFromSnapshotIsIdentical) {
  TinyCorpus();
  ASSERT_EQ(Run("finetune --corpus " + P("train.tsv") + " --run_dir " + P("a") +
                " --max_epochs 2 --arch ed"),
            0)
      << err_;
  fs::copy_file(dir_ / "a" / "config.json", dir_ / "snap.json");
  json snap = json::parse(Slurp(dir_ / "snap.json"));
  snap["run_dir"] = (dir_ / "b").string();
  std::ofstream(dir_ / "snap.json", std::ios::trunc) << snap.dump();
  ASSERT_EQ(Run("finetune --config " + P("snap.json")), 0) << err_;
  EXPECT_EQ(Slurp(dir_ / "a" / "metrics.jsonl"), Slurp(dir_ / "b" / "metrics.jsonl"));
  EXPECT_EQ(Slurp(dir_ / "a" / "best" / "params.bin"), Slurp(dir_ / "b" / "best" / "params.bin"));
}

TEST_F(CliTest, DiacritizeAndEvaluate) {
  TinyCorpus();
  ASSERT_EQ(Run("finetune --corpus " + P("train.tsv") + " --run_dir " + P("run") + " --max_epochs 1"),
            0)
      << err_;
  ASSERT_EQ(Run("synth --n 5 --seed 9 --output " + P("ref.txt")), 0);
  std::string ref = Slurp(dir_ / "ref.txt");
  ref.insert(ref.find('\n') + 1, "\n");  // an empty line in the middle
  std::ofstream(dir_ / "ref.txt", std::ios::trunc) << ref;
  ASSERT_EQ(Run("diacritize --checkpoint " + P("run/best") + " --input " + P("ref.txt") +
                " --output " + P("hyp.txt")),
            0)
      << err_;
  const std::string hyp = Slurp(dir_ / "hyp.txt");
  std::vector<std::string> lines;
  std::istringstream ss(hyp);
  for (std::string l; std::getline(ss, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 6u);
  EXPECT_TRUE(lines[1].empty());

  ASSERT_EQ(Run("evaluate --reference " + P("ref.txt") + " --hypothesis " + P("ref.txt") +
                " --report " + P("self.json")),
            0)
      << err_;
  const json self = json::parse(Slurp(dir_ / "self.json"));
  for (const char* k : {"der_ce", "wer_ce", "der_noce", "wer_noce"}) {
    ASSERT_TRUE(self["exact"].contains(k)) << self.dump();
    EXPECT_EQ(self["exact"][k], 0.0) << k;
  }
  EXPECT_FALSE(out_.empty());

  ASSERT_EQ(Run("evaluate --reference " + P("ref.txt") + " --hypothesis " + P("hyp.txt") +
                " --report " + P("r1.json")),
            0);
  ASSERT_EQ(Run("evaluate --reference " + P("ref.txt") + " --hypothesis " + P("hyp.txt") +
                " --report " + P("r2.json")),
            0);
  EXPECT_EQ(Slurp(dir_ / "r1.json"), Slurp(dir_ / "r2.json"));

  std::ofstream(dir_ / "short.txt") << "x\n";
  EXPECT_EQ(Run("evaluate --reference " + P("ref.txt") + " --hypothesis " + P("short.txt") +
                " --report " + P("r3.json")),
            1);
}

TEST_F(CliTest, RunLockRejectsALiveOwner) {
  TinyCorpus();
  fs::create_directories(dir_ / "run");
  std::ofstream(dir_ / "run" / "run.lock") << ::getppid();
  EXPECT_EQ(Run("finetune --corpus " + P("train.tsv") + " --run_dir " + P("run") + " --max_epochs 1"),
            1);
  std::ofstream(dir_ / "run" / "run.lock", std::ios::trunc) << 999999999;
  EXPECT_EQ(Run("finetune --corpus " + P("train.tsv") + " --run_dir " + P("run") + " --max_epochs 1"),
            0)
      << err_;
  EXPECT_FALSE(fs::exists(dir_ / "run" / "run.lock"));
}

}  // namespace
