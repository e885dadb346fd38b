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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "atd/error.hpp"
#include "atd/inference.hpp"
#include "atd/model/checkpoint.hpp"
#include "atd/model/forward.hpp"
#include "atd/synthetic.hpp"

namespace atd::model {
namespace {

namespace fs = std::filesystem;

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void Spit(const fs::path& p, const std::string& data) {
  std::ofstream(p, std::ios::binary | std::ios::trunc) << data;
}

class CheckpointTest : public ::testing::TestWithParam<Arch> {
 protected:
  void SetUp() override {
    const synth::RuleLanguage lang(7);
    corpus_ = lang.Corpus(20, 1);
    std::vector<std::u32string> sk;
    for (const auto& s : corpus_) sk.push_back(s.letters);
    ckpt_.vocab = corpus::CharVocab::Build(sk);
    ckpt_.config = ModelConfig::Desk(GetParam(), ckpt_.vocab.size());
    ckpt_.config.max_len = 64;
    ckpt_.params = InitParameters<float>(ckpt_.config, 3);
    ckpt_.info = {{"epoch", 4}, {"note", "x"}};
    dir_ = fs::temp_directory_path() /
           ("atd_ckpt_" + std::to_string(static_cast<int>(GetParam())));
    fs::remove_all(dir_);
    SaveCheckpoint(dir_, ckpt_);
  }

  void ExpectCorrupt() {
    try {
      LoadCheckpoint(dir_);
      FAIL() << "load succeeded";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kCorruptCheckpoint) << e.what();
    }
  }

  std::vector<text::LabeledSequence> corpus_;
  Checkpoint ckpt_;
  fs::path dir_;
};

TEST_P(CheckpointTest, RoundTripIsExact) {
  const Checkpoint back = LoadCheckpoint(dir_);
  EXPECT_EQ(back.config, ckpt_.config);
  EXPECT_EQ(back.vocab, ckpt_.vocab);
  EXPECT_TRUE(back.params == ckpt_.params);
  EXPECT_EQ(back.info, ckpt_.info);
  EXPECT_EQ(ParametersHash(back.params), ParametersHash(ckpt_.params));
  if (GetParam() == Arch::kBert) return;
  std::vector<std::u32string> sk;
  for (const auto& s : corpus_) sk.push_back(s.letters);
  EXPECT_EQ(Predict(back.params, back.config, back.vocab, sk),
            Predict(ckpt_.params, ckpt_.config, ckpt_.vocab, sk));
}

TEST_P(CheckpointTest, FlippedParameterByteIsDetected) {
  std::string data = Slurp(dir_ / "params.bin");
  data[data.size() - 3] ^= 0x10;
  Spit(dir_ / "params.bin", data);
  ExpectCorrupt();
}

TEST_P(CheckpointTest, TruncatedParametersAreDetected) {
  const std::string data = Slurp(dir_ / "params.bin");
  Spit(dir_ / "params.bin", data.substr(0, data.size() / 2));
  ExpectCorrupt();
  Spit(dir_ / "params.bin", "NOPE");
  ExpectCorrupt();
}

TEST_P(CheckpointTest, VocabularyMismatchIsDetected) {
  const auto a = ckpt_.vocab.CharOf(corpus::CharVocab::kNumSpecials);
  const auto b = ckpt_.vocab.CharOf(corpus::CharVocab::kNumSpecials + 1);
  std::u32string swapped;
  for (int id = corpus::CharVocab::kNumSpecials; id < ckpt_.vocab.size(); ++id) {
    const char32_t c = ckpt_.vocab.CharOf(id);
    swapped.push_back(c == a ? b : c == b ? a : c);
  }
  std::vector<std::pair<char32_t, std::size_t>> counts;
  for (std::size_t i = 0; i < swapped.size(); ++i) counts.emplace_back(swapped[i], 1000 - i);
  Spit(dir_ / "vocab.tsv", corpus::CharVocab::FromCounts(counts).Serialize());
  ExpectCorrupt();
}

TEST_P(CheckpointTest, ManifestMismatchesAreDetected) {
  const auto manifest = nlohmann::json::parse(Slurp(dir_ / "manifest.json"));

  auto table = manifest;
  table["class_table_hash"] = "0000000000000000";
  Spit(dir_ / "manifest.json", table.dump());
  ExpectCorrupt();

  auto wider = manifest;
  wider["config"]["d_model"] = manifest["config"]["d_model"].get<int>() * 2;
  wider["config"]["ffn_dim"] = manifest["config"]["ffn_dim"].get<int>() * 2;
  Spit(dir_ / "manifest.json", wider.dump());
  ExpectCorrupt();

  Spit(dir_ / "manifest.json", "{ not json");
  ExpectCorrupt();
}

TEST_P(CheckpointTest, MissingDirectoryIsAnIoError) {
  try {
    LoadCheckpoint(dir_ / "nowhere");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

INSTANTIATE_TEST_SUITE_P(AllArchs, CheckpointTest,
                         ::testing::Values(Arch::kEncoderOnly, Arch::kEncoderDecoder, Arch::kBert));

}  // namespace
}  // namespace atd::model
