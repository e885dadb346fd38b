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

#include <gtest/gtest.h>

#include "atd/error.hpp"
#include "atd/inference.hpp"
#include "atd/noisy_student.hpp"
#include "atd/synthetic.hpp"
#include "atd/utf8.hpp"

namespace atd::ns {
namespace {

namespace fs = std::filesystem;
using text::DiacriticClass;
using text::LabeledSequence;

const synth::RuleLanguage& Language() {
  static const synth::RuleLanguage lang(7);
  return lang;
}

// A small EO teacher trained on the rule language until it is nearly exact.
const model::Checkpoint& Teacher() {
  static const model::Checkpoint teacher = [] {
    const auto corpus = Language().Corpus(1000, 1);
    std::vector<std::u32string> sk;
    for (const auto& s : corpus) sk.push_back(s.letters);
    train::FinetuneSpec spec;
    spec.arch = model::Arch::kEncoderOnly;
    spec.vocab = corpus::CharVocab::Build(sk);
    spec.model = model::ModelConfig::Desk(spec.arch, spec.vocab.size());
    spec.model.max_len = 64;
    spec.train = train::TrainConfig::Desk();
    spec.train.max_epochs = 10;
    spec.corpus = corpus;
    return train::Finetune(spec).best;
  }();
  return teacher;
}

model::Checkpoint BareTeacher() {
  model::Checkpoint t = Teacher();
  t.params.at("diacritic_head.weight").setZero();
  t.params.at("diacritic_head.bias").setZero();
  t.params.at("diacritic_head.bias")(0, 14) = 10.0f;
  return t;
}

std::vector<LabeledRecord> Gold(std::size_t n, std::uint64_t seed) {
  std::vector<LabeledRecord> out;
  for (auto& s : Language().Corpus(n, seed)) out.push_back({std::move(s), corpus::Provenance::kGold});
  return out;
}

TEST(PseudoLabel, TeacherRecoversTheRule) {
  const auto gold = Language().Corpus(200, 99);
  std::vector<std::string> lines;
  for (const auto& s : gold) lines.push_back(text::Decode(s));
  lines.insert(lines.begin() + 3, "");
  PseudoLabelStats stats;
  const auto out = PseudoLabel(Teacher(), lines, &stats);
  EXPECT_EQ(stats.lines_in, 201u);
  EXPECT_EQ(stats.skipped_empty, 1u);
  EXPECT_EQ(stats.labeled, 200u);
  ASSERT_EQ(out.size(), 200u);
  std::size_t letters = 0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i].provenance, corpus::Provenance::kPseudo);
    ASSERT_EQ(out[i].seq.letters, gold[i].letters);
    for (std::size_t k = 0; k < gold[i].size(); ++k) {
      if (gold[i].letters[k] == U' ') continue;
      ++letters;
      wrong += out[i].seq.labels[k] != gold[i].labels[k];
    }
  }
  EXPECT_LT(static_cast<double>(wrong) / static_cast<double>(letters), 0.02);
}

TEST(PseudoLabel, LongLinesAreChunkedAndKeepTheirSkeleton) {
  std::mt19937_64 rng(5);
  std::string line;
  for (int i = 0; i < 6; ++i) {
    if (i) line += i % 2 ? "، " : " ";
    line += text::Decode(Language().Sample(rng));
  }
  const auto skeleton = text::StripDiacritics(utf8::Decode(line));
  ASSERT_GT(skeleton.size(), 64u);
  PseudoLabelStats stats;
  const std::vector<std::string> lines = {line};
  const auto out = PseudoLabel(Teacher(), lines, &stats);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(stats.chunked, 1u);
  EXPECT_EQ(out[0].seq.letters, skeleton);
  EXPECT_EQ(text::StripDiacritics(utf8::Decode(text::Decode(out[0].seq))), skeleton);
}

TEST(CombineAndFilter, DropsLowDtlPseudoLinesAndAddsUp) {
  const auto gold = Gold(50, 3);
  std::vector<std::string> lines;
  for (const auto& r : Gold(30, 4)) lines.push_back(text::Decode(r.seq));
  const auto bare = PseudoLabel(BareTeacher(), lines);
  const auto good = PseudoLabel(Teacher(), lines);
  std::vector<LabeledRecord> pseudo = good;
  pseudo.insert(pseudo.end(), bare.begin(), bare.end());

  const corpus::FilterConfig filters;
  const auto combined = CombineAndFilter(gold, pseudo, filters);
  std::vector<std::string> gold_raw;
  for (const auto& r : gold) gold_raw.push_back(text::Decode(r.seq));
  corpus::CorpusStats gold_direct;
  corpus::FilterFinetune(gold_raw, filters, &gold_direct);
  EXPECT_EQ(combined.gold, gold_direct);
  EXPECT_EQ(combined.pseudo.dropped_dtl, 30u);
  EXPECT_EQ(combined.pseudo.kept, 30u);
  EXPECT_EQ(combined.merged.kept, combined.gold.kept + combined.pseudo.kept);
  EXPECT_EQ(combined.merged.chars_kept, combined.gold.chars_kept + combined.pseudo.chars_kept);
  EXPECT_TRUE(combined.merged.Balanced());
  EXPECT_EQ(combined.filter_hash, filters.Hash());
  const std::size_t n_gold = combined.gold.kept;
  ASSERT_EQ(combined.records.size(), n_gold + 30);
  for (std::size_t i = 0; i < combined.records.size(); ++i) {
    EXPECT_EQ(combined.records[i].provenance,
              i < n_gold ? corpus::Provenance::kGold : corpus::Provenance::kPseudo);
  }

  // The same filter on raw text keeps the same lines.
  std::vector<std::string> raw = gold_raw;
  for (const auto& r : pseudo) raw.push_back(text::Decode(r.seq));
  corpus::CorpusStats direct;
  corpus::FilterFinetune(raw, filters, &direct);
  EXPECT_EQ(direct, combined.merged);

  const fs::path file = fs::temp_directory_path() / "atd_ns_gold.tsv";
  corpus::WriteLabeledCorpus(file, gold);
  EXPECT_EQ(CombineAndFilter(file, pseudo, filters).merged, combined.merged);
}

TEST(SampleIndices, SeededSortedAndBounded) {
  const auto a = SampleIndices(1000, 100, 7);
  EXPECT_EQ(a, SampleIndices(1000, 100, 7));
  EXPECT_NE(a, SampleIndices(1000, 100, 8));
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(std::adjacent_find(a.begin(), a.end()), a.end());
  EXPECT_TRUE(SampleIndices(5, 0, 1).empty());
  EXPECT_THROW(SampleIndices(5, 6, 1), Error);
}

NsRoundSpec RoundSpec() {
  NsRoundSpec spec;
  spec.teacher = &Teacher();
  for (const auto& s : Language().Corpus(300, 11)) {
    spec.unlabeled.push_back(utf8::Encode(text::StripDiacritics(text::DecodeCodepoints(s))));
  }
  spec.labeled = Gold(100, 12);
  spec.train = train::TrainConfig::Desk();
  spec.train.max_epochs = 2;
  spec.validation = Language().Corpus(50, 13);
  return spec;
}

TEST(RunNsRound, ZeroSampleIsAPlainWarmStart) {
  auto spec = RoundSpec();
  spec.sample_size = 0;
  const auto round = RunNsRound(spec);

  train::FinetuneSpec ft;
  ft.arch = model::Arch::kEncoderOnly;
  ft.init = train::InitMode::kWarmStart;
  ft.init_checkpoint = &Teacher();
  ft.model = Teacher().config;
  ft.model.dropout = spec.dropout;
  ft.train = spec.train;
  for (const auto& r : spec.labeled) ft.corpus.push_back(r.seq);
  ft.validation = spec.validation;
  const auto plain = train::Finetune(ft);
  EXPECT_EQ(round.student.history, plain.history);
  EXPECT_TRUE(round.student.best.params == plain.best.params);
}

TEST(RunNsRound, SeededAndReported) {
  auto spec = RoundSpec();
  spec.sample_size = 120;
  spec.seed = 4;
  spec.run_dir = fs::temp_directory_path() / "atd_ns_round";
  fs::remove_all(spec.run_dir);
  const auto a = RunNsRound(spec);
  spec.run_dir.clear();
  const auto b = RunNsRound(spec);
  EXPECT_EQ(a.sampled, b.sampled);
  EXPECT_EQ(a.sampled.size(), 120u);
  EXPECT_EQ(a.student.history, b.student.history);
  EXPECT_EQ(a.report, b.report);
  EXPECT_EQ(a.report["pseudo_label"]["labeled"], 120);
  EXPECT_EQ(a.report["combine"]["merged"]["kept"], 220);
  EXPECT_NE(a.report["teacher_params_hash"], a.report["student_params_hash"]);
  EXPECT_TRUE(fs::exists(fs::temp_directory_path() / "atd_ns_round" / "round_report.json"));
  EXPECT_EQ(corpus::ReadLabeledCorpus(fs::temp_directory_path() / "atd_ns_round" /
                                      "pseudo_labeled.tsv")
                .size(),
            120u);
}

TEST(RunNsRound, RejectsOversizedSample) {
  auto spec = RoundSpec();
  spec.sample_size = 301;
  try {
    RunNsRound(spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidConfig);
  }
}

}  // namespace
}  // namespace atd::ns
