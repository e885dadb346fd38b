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
#include <random>

#include <gtest/gtest.h>

#include "atd/error.hpp"
#include "atd/evaluation.hpp"
#include "metric_oracle.hpp"

namespace atd::eval {
namespace {

const std::string kFixture = std::string(ATD_FIXTURE_DIR) + "/class_table.tsv";

TEST(Der, HandCounts) {
  // Ten letters, one wrong in the middle of a word.
  const std::string ref = "بَتَثَجَحَ خَدَذَرَزَ";
  const std::string hyp = "بَتَثِجَحَ خَدَذَرَزَ";
  const auto a = Align(ref, hyp);
  EXPECT_DOUBLE_EQ(Der(a, Mode::kCaseEnding), 0.10);
  EXPECT_DOUBLE_EQ(Wer(a, Mode::kCaseEnding), 0.5);
  EXPECT_DOUBLE_EQ(Der(Align(ref, ref), Mode::kCaseEnding), 0.0);
}

TEST(Der, FinalLetterOnlyMattersWithCaseEnding) {
  const auto a = Align("بَتَثَ جَحَ", "بَتَثُ جَحَ");
  EXPECT_GT(Der(a, Mode::kCaseEnding), 0.0);
  EXPECT_EQ(Der(a, Mode::kNoCaseEnding), 0.0);
  EXPECT_DOUBLE_EQ(Wer(a, Mode::kCaseEnding), 0.5);
  EXPECT_EQ(Wer(a, Mode::kNoCaseEnding), 0.0);
}

TEST(Wer, TwoMistakesInOneOfFourWords) {
  const auto a = Align("بَتَ ثَجَ حَخَ دَذَ", "بُتُ ثَجَ حَخَ دَذَ");
  EXPECT_DOUBLE_EQ(Wer(a, Mode::kCaseEnding), 0.25);
}

TEST(Wer, SingleLetterWordsLeaveNoCeDenominator) {
  const auto counts = Count(Align("بَ تَ", "بُ تَ"));
  EXPECT_EQ(counts.words_noce, 0u);
  EXPECT_EQ(counts.positions_noce, 0u);
  EXPECT_THROW(Wer(counts, Mode::kNoCaseEnding), Error);
  EXPECT_DOUBLE_EQ(Wer(counts, Mode::kCaseEnding), 0.5);
}

TEST(Align, Errors) {
  try {
    Align("بَتَثَ", "بَتَ");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSkeletonMismatch);
  }
  // Swapped shadda / vowel order in the hypothesis is the same class.
  const auto a = Align("بَّتَ", "بَّتَ");
  EXPECT_EQ(Der(a, Mode::kCaseEnding), 0.0);
  // NoTashkeel is an ordinary class.
  EXPECT_DOUBLE_EQ(Der(Align("بَت", "بَتَ"), Mode::kCaseEnding), 0.5);
}

TEST(Corpus, StrippedHypothesisGivesMarkedFraction) {
  const std::vector<std::string> ref = {"بَتْث جَح", "خُدّ"};
  const std::vector<std::string> hyp = {"بتث جح", "خد"};
  const auto r = EvaluateLines(ref, hyp);
  // Reference letters 7; without NoTashkeel: ب ت ج خ د -> 5.
  EXPECT_NEAR(r.der_ce, 100.0 * 5 / 7, 1e-12);
  EXPECT_EQ(r.positions_ce, 7u);
  const auto same = EvaluateLines(ref, ref);
  EXPECT_EQ(same.der_ce, 0.0);
  EXPECT_EQ(same.wer_ce, 0.0);
  EXPECT_EQ(same.der_noce, 0.0);
  EXPECT_EQ(same.wer_noce, 0.0);
}

TEST(Corpus, SkipsAndMismatches) {
  const std::vector<std::string> ref = {"بَتَ", "ثَجَ", "\xff"};
  const std::vector<std::string> hyp = {"بَتَ", "ثَ", "بَ"};
  const auto r = EvaluateLines(ref, hyp);
  EXPECT_EQ(r.sentences, 1u);
  EXPECT_EQ(r.sentences_skipped, 2u);
  EXPECT_EQ(r.skip_reasons.at("skeleton_mismatch"), 1u);
  EXPECT_THROW(EvaluateLines(ref, std::vector<std::string>{"x"}), Error);
  EXPECT_THROW(EvaluateLines(std::vector<std::string>{}, std::vector<std::string>{}), Error);
}

TEST(Corpus, OptionExcludesBareReferenceLetters) {
  EvalOptions opt;
  opt.count_bare_reference_letters = false;
  const auto r = EvaluateLines(std::vector<std::string>{"بَت"}, std::vector<std::string>{"بَتَ"}, opt);
  EXPECT_EQ(r.positions_ce, 1u);
  EXPECT_EQ(r.der_ce, 0.0);
}

TEST(Oracle, RandomPairsMatchBruteForce) {
  const auto table = oracle::Table::Load(kFixture);
  std::mt19937_64 rng(2024);
  std::vector<std::string> refs;
  std::vector<std::string> hyps;
  oracle::Counts total;
  for (int i = 0; i < 200; ++i) {
    auto [ref, hyp] = oracle::RandomPair(rng, table, 0.2, i % 2 ? 1 : 2);
    oracle::Score(ref, hyp, table, total);
    const auto single = EvaluateLines(std::vector<std::string>{ref}, std::vector<std::string>{hyp});
    if (i % 2 == 0) {
      EXPECT_EQ(single.positions_noce + single.words, single.positions_ce);
    }
    refs.push_back(std::move(ref));
    hyps.push_back(std::move(hyp));
  }
  const auto r = EvaluateLines(refs, hyps);
  EXPECT_NEAR(r.der_ce, total.DerCe(), 1e-12);
  EXPECT_NEAR(r.wer_ce, total.WerCe(), 1e-12);
  EXPECT_NEAR(r.der_noce, total.DerNoCe(), 1e-12);
  EXPECT_NEAR(r.wer_noce, total.WerNoCe(), 1e-12);
  EXPECT_EQ(r.positions_ce, total.pos_ce);
  EXPECT_EQ(r.positions_noce, total.pos_noce);
}

TEST(Properties, FlippingMoreLabelsNeverLowersDer) {
  const auto table = oracle::Table::Load(kFixture);
  std::mt19937_64 rng(8);
  const auto [ref, unused] = oracle::RandomPair(rng, table, 0.0, 2);
  auto letters = Align(ref, ref);
  double previous = 0.0;
  for (auto& word : letters) {
    for (auto& pair : word) {
      pair.hypothesis = pair.reference == text::DiacriticClass::kFatha ? text::DiacriticClass::kKasra
                                                                       : text::DiacriticClass::kFatha;
      const double der = Der(letters, Mode::kCaseEnding);
      EXPECT_GE(der, previous);
      previous = der;
    }
  }
  EXPECT_DOUBLE_EQ(previous, 1.0);
}

TEST(Report, ThreeDecimalPercentages) {
  const auto r = EvaluateLines(std::vector<std::string>{"بَتَث"}, std::vector<std::string>{"بَتِث"});
  const auto j = r.ToJson();
  EXPECT_DOUBLE_EQ(j["metrics"]["der_ce"].get<double>(), 33.333);
  EXPECT_NE(r.ToText().find("33.333"), std::string::npos);
}

}  // namespace
}  // namespace atd::eval
