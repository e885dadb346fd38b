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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "atd/error.hpp"
#include "atd/model/forward.hpp"
#include "atd/synthetic.hpp"
#include "atd/train/adamw.hpp"
#include "atd/train/loss.hpp"
#include "atd/train/mlm.hpp"
#include "atd/train/trainer.hpp"

namespace atd::train {
namespace {

namespace fs = std::filesystem;

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("atd_training_test_" + name);
  fs::remove_all(dir);
  return dir;
}

TEST(MlmMask, ZeroProbabilityChangesNothing) {
  std::mt19937_64 rng(1);
  const IdMatrix tokens = IdMatrix::Constant(4, 10, 7);
  const IdMatrix mask = IdMatrix::Ones(4, 10);
  const auto m = MlmMask(tokens, mask, 0.0, 20, rng);
  EXPECT_TRUE(m.tokens == tokens);
  EXPECT_EQ(m.loss_mask.sum(), 0);
}

TEST(MlmMask, SelectionRateAndRecipe) {
  std::mt19937_64 rng(2);
  const int rows = 400;
  const int cols = 300;
  IdMatrix tokens = IdMatrix::Constant(rows, cols, 9);
  IdMatrix mask = IdMatrix::Ones(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 250; c < cols; ++c) {
      mask(r, c) = 0;
      tokens(r, c) = corpus::CharVocab::kPad;
    }
  }
  const auto m = MlmMask(tokens, mask, 0.15, 40, rng);
  const double real = static_cast<double>(mask.sum());
  ASSERT_GE(real, 1e5);
  const double selected = static_cast<double>(m.loss_mask.sum());
  EXPECT_NEAR(selected / real, 0.15, 0.02);
  std::size_t masked = 0;
  std::size_t kept = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!mask(r, c)) {
        EXPECT_EQ(m.loss_mask(r, c), 0);
        EXPECT_EQ(m.tokens(r, c), corpus::CharVocab::kPad);
        continue;
      }
      EXPECT_EQ(m.loss_mask(r, c) == 1, m.targets(r, c) != kIgnore);
      if (!m.loss_mask(r, c)) {
        EXPECT_EQ(m.tokens(r, c), 9);
        continue;
      }
      EXPECT_EQ(m.targets(r, c), 9);
      masked += m.tokens(r, c) == corpus::CharVocab::kMask;
      kept += m.tokens(r, c) == 9;
    }
  }
  EXPECT_NEAR(static_cast<double>(masked) / selected, 0.8, 0.02);
  // Unchanged tokens: the 10% "keep" share plus random draws that hit 9.
  EXPECT_NEAR(static_cast<double>(kept) / selected, 0.1 + 0.1 / 36, 0.02);
}

TEST(CrossEntropy, UniformAndConfident) {
  std::vector<model::Matrix<double>> logits = {model::Matrix<double>::Zero(3, 15)};
  IdMatrix targets(1, 3);
  targets << 2, kIgnore, 14;
  const auto ce = CrossEntropy(logits, targets);
  EXPECT_NEAR(ce.loss, std::log(15.0), 1e-12);
  EXPECT_EQ(ce.counted, 2u);
  EXPECT_TRUE(ce.dlogits[0].row(1).isZero());
  logits[0](0, 2) = 100.0;
  logits[0](2, 14) = 100.0;
  EXPECT_LT(CrossEntropy(logits, targets).loss, 1e-30);
  try {
    CrossEntropy(logits, IdMatrix::Constant(1, 3, kIgnore));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kAllIgnored);
  }
}

model::Parameters<double> Scalar(double v) {
  model::Parameters<double> p;
  p.Add("w", 1, 1);
  p[0](0, 0) = v;
  return p;
}

TEST(AdamW, DecoupledDecayAndHandTrace) {
  AdamWConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.0;
  auto p = Scalar(1.5);
  auto state = InitAdamW(p);
  AdamWStep(p, Scalar(0.0), state, cfg);
  EXPECT_EQ(p[0](0, 0), 1.5);

  cfg.weight_decay = 0.01;
  AdamWStep(p, Scalar(0.0), state, cfg);
  EXPECT_DOUBLE_EQ(p[0](0, 0), 1.5 * (1 - 0.1 * 0.01));

  auto w = Scalar(1.0);
  auto s = InitAdamW(w);
  const double expected[] = {0.899000002, 0.9347113542385653, 0.8918110813618659};
  const double grads[] = {0.5, -1.0, 2.0};
  for (int t = 0; t < 3; ++t) {
    AdamWStep(w, Scalar(grads[t]), s, cfg);
    EXPECT_NEAR(w[0](0, 0), expected[t], 1e-15);
  }
  EXPECT_EQ(s.step, 3);
}

TEST(AdamW, NonFiniteGradientLeavesEverythingAlone) {
  model::Parameters<double> p;
  p.Add("good", 1, 2);
  p.Add("bad", 1, 1);
  auto grads = p.ZerosLike();
  grads[1](0, 0) = std::nan("");
  auto state = InitAdamW(p);
  const auto before = p;
  try {
    AdamWStep(p, grads, state, AdamWConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNonFiniteGradient);
    EXPECT_NE(std::string(e.what()).find("bad"), std::string::npos);
  }
  EXPECT_TRUE(p == before);
  EXPECT_EQ(state.step, 0);
}

TEST(EarlyStopping, StopsPatienceEpochsAfterBest) {
  EarlyStopping es(3);
  const double metrics[] = {0.5, 0.4, 0.3, 0.35, 0.4, 0.45, 0.5, 0.6};
  int stopped_at = 0;
  for (int e = 0; e < 8; ++e) {
    es.Update(metrics[e]);
    if (es.ShouldStop()) {
      stopped_at = e + 1;
      break;
    }
  }
  EXPECT_EQ(es.best_epoch(), 3);
  EXPECT_EQ(stopped_at, 3 + 3);
  // Ties are not improvements.
  EarlyStopping tie(1);
  EXPECT_TRUE(tie.Update(1.0));
  EXPECT_FALSE(tie.Update(1.0));
  EXPECT_TRUE(tie.ShouldStop());
}

TEST(TrainConfig, Validation) {
  TrainConfig c = TrainConfig::Desk();
  EXPECT_NO_THROW(c.Validate());
  c.eval_fraction = 0.6;
  EXPECT_THROW(c.Validate(), Error);
  c = TrainConfig::Desk();
  c.patience = 0;
  EXPECT_THROW(c.Validate(), Error);
  EXPECT_EQ(TrainConfigFromJson(ToJson(TrainConfig::Paper())), TrainConfig::Paper());
}

struct Toy {
  std::vector<LabeledSequence> corpus;
  corpus::CharVocab vocab;
};

Toy MakeToy(std::size_t n, std::uint64_t seed) {
  const synth::RuleLanguage lang(7);
  Toy t;
  t.corpus = lang.Corpus(n, seed);
  std::vector<std::u32string> sk;
  for (const auto& s : t.corpus) sk.push_back(s.letters);
  t.vocab = corpus::CharVocab::Build(sk);
  return t;
}

FinetuneSpec ToySpec(model::Arch arch, const Toy& toy, int epochs) {
  FinetuneSpec spec;
  spec.arch = arch;
  spec.vocab = toy.vocab;
  spec.model = model::ModelConfig::Desk(arch, toy.vocab.size());
  spec.model.max_len = 64;
  spec.train = TrainConfig::Desk();
  spec.train.max_epochs = epochs;
  spec.corpus = toy.corpus;
  return spec;
}

TEST(Finetune, EoLossCountsExactlyTheLetters) {
  const Toy toy = MakeToy(10, 3);
  const auto batches = corpus::MakeBatches(toy.corpus, toy.vocab, 10, 64, std::nullopt);
  ASSERT_EQ(batches.size(), 1u);
  auto cfg = model::ModelConfig::Desk(model::Arch::kEncoderOnly, toy.vocab.size());
  cfg.max_len = 64;
  const auto p = model::InitParameters<float>(cfg, 1);
  const auto out = model::EoForward(p, cfg, batches[0].token_ids, batches[0].attention_mask, false);
  std::size_t letters = 0;
  for (const auto& s : toy.corpus) letters += s.LetterCount();
  const auto ce = CrossEntropy(out.logits, batches[0].label_ids);
  EXPECT_EQ(ce.counted, letters);
  for (std::size_t r = 0; r < toy.corpus.size(); ++r) {
    const auto src = batches[0].source_index[r];
    for (int c = 0; c < batches[0].cols(); ++c) {
      const bool letter = c < static_cast<int>(toy.corpus[src].size()) &&
                          toy.corpus[src].letters[static_cast<std::size_t>(c)] != U' ';
      EXPECT_EQ(!ce.dlogits[r].row(c).isZero(), letter);
    }
  }
}

TEST(Finetune, DeterministicResumableAndSnapshotted) {
  const Toy toy = MakeToy(60, 4);
  for (auto arch : {model::Arch::kEncoderOnly, model::Arch::kEncoderDecoder}) {
    auto spec = ToySpec(arch, toy, 6);
    spec.train.patience = 50;
    spec.run_dir = TempDir("full");
    const auto full = Finetune(spec);
    ASSERT_EQ(full.history.size(), 6u);
    ASSERT_TRUE(full.snapshot);
    EXPECT_EQ(full.snapshot->info["epoch"], 5);
    EXPECT_TRUE(fs::exists(spec.run_dir / "epoch_5" / "manifest.json"));
    EXPECT_TRUE(fs::exists(spec.run_dir / "best" / "manifest.json"));

    auto again = spec;
    again.run_dir.clear();
    EXPECT_EQ(Finetune(again).history, full.history);

    auto part = spec;
    part.run_dir = TempDir("part");
    part.train.max_epochs = 3;
    Finetune(part);
    part.train.max_epochs = 6;
    part.resume = true;
    const auto resumed = Finetune(part);
    EXPECT_EQ(resumed.history, full.history);
    EXPECT_TRUE(resumed.last.params == full.last.params);
    std::ifstream a(spec.run_dir / "metrics.jsonl");
    std::ifstream b(part.run_dir / "metrics.jsonl");
    EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}),
              std::string(std::istreambuf_iterator<char>(b), {}));
  }
}

TEST(Finetune, ValidationSplitIsSeeded) {
  const Toy toy = MakeToy(100, 5);
  std::vector<LabeledSequence> t1, v1, t2, v2, t3, v3;
  SplitValidation(toy.corpus, 0.02, 1, &t1, &v1);
  SplitValidation(toy.corpus, 0.02, 1, &t2, &v2);
  SplitValidation(toy.corpus, 0.02, 2, &t3, &v3);
  EXPECT_EQ(v1.size(), 2u);
  EXPECT_EQ(t1.size(), 98u);
  EXPECT_EQ(v1, v2);
  EXPECT_NE(v1, v3);
}

TEST(Finetune, CheckpointRoundTripKeepsValidationDer) {
  const Toy toy = MakeToy(40, 6);
  auto spec = ToySpec(model::Arch::kEncoderDecoder, toy, 2);
  spec.run_dir = TempDir("roundtrip");
  const auto result = Finetune(spec);
  const auto loaded = model::LoadCheckpoint(spec.run_dir / "best");
  std::vector<LabeledSequence> train_set, val;
  SplitValidation(toy.corpus, spec.train.eval_fraction, spec.train.seed, &train_set, &val);
  EXPECT_EQ(EvaluateEpoch(loaded.params, loaded.config, loaded.vocab, val),
            *result.history[static_cast<std::size_t>(result.best_epoch - 1)].val_der);
}

TEST(EvaluateEpoch, AllBarePredictionsScoreTheMarkedShare) {
  const Toy toy = MakeToy(30, 8);
  auto cfg = model::ModelConfig::Desk(model::Arch::kEncoderOnly, toy.vocab.size());
  cfg.max_len = 64;
  auto p = model::InitParameters<float>(cfg, 1);
  p.at("diacritic_head.weight").setZero();
  p.at("diacritic_head.bias")(0, 14) = 10.0f;
  std::size_t letters = 0;
  std::size_t marked = 0;
  for (const auto& s : toy.corpus) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s.letters[i] == U' ') continue;
      ++letters;
      marked += s.labels[i] != text::DiacriticClass::kNoTashkeel;
    }
  }
  const double der = EvaluateEpoch(p, cfg, toy.vocab, toy.corpus);
  EXPECT_DOUBLE_EQ(der, static_cast<double>(marked) / static_cast<double>(letters));
  EXPECT_EQ(der, EvaluateEpoch(p, cfg, toy.vocab, toy.corpus));
}

TEST(Pretrain, MaskedLossFallsAndResumes) {
  const Toy toy = MakeToy(1000, 9);
  PretrainSpec spec;
  spec.vocab = toy.vocab;
  spec.model = model::ModelConfig::Desk(model::Arch::kBert, toy.vocab.size());
  spec.model.max_len = 64;
  spec.train = TrainConfig::Desk();
  spec.train.max_epochs = 3;
  for (const auto& s : toy.corpus) spec.corpus.push_back(s.letters);
  std::vector<std::vector<double>> curves;
  for (std::uint64_t seed : {1, 2, 3}) {
    spec.train.seed = seed;
    const auto r = PretrainMlm(spec);
    std::vector<double> curve;
    for (const auto& e : r.history) curve.push_back(e.train_loss);
    curves.push_back(curve);
  }
  for (int e = 1; e < 3; ++e) {
    std::vector<double> drops;
    for (const auto& c : curves) drops.push_back(c[static_cast<std::size_t>(e - 1)] - c[static_cast<std::size_t>(e)]);
    std::sort(drops.begin(), drops.end());
    EXPECT_GT(drops[1], 0.0) << "epoch " << e + 1;
  }

  spec.train.seed = 1;
  spec.run_dir = TempDir("pretrain_part");
  spec.train.max_epochs = 1;
  PretrainMlm(spec);
  spec.train.max_epochs = 3;
  spec.resume = true;
  const auto resumed = PretrainMlm(spec);
  ASSERT_EQ(resumed.history.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) EXPECT_EQ(resumed.history[e].train_loss, curves[0][e]);
}

TEST(Pretrain, ZeroMaskProbabilitySurfacesAllIgnored) {
  const Toy toy = MakeToy(20, 10);
  PretrainSpec spec;
  spec.vocab = toy.vocab;
  spec.model = model::ModelConfig::Desk(model::Arch::kBert, toy.vocab.size());
  spec.model.max_len = 64;
  spec.train = TrainConfig::Desk();
  spec.train.max_epochs = 1;
  spec.train.mask_prob = 0.0;
  for (const auto& s : toy.corpus) spec.corpus.push_back(s.letters);
  try {
    PretrainMlm(spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kAllIgnored);
  }
}

}  // namespace
}  // namespace atd::train
