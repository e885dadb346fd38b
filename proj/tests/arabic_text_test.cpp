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

#include <fstream>
#include <set>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "atd/arabic_text.hpp"
#include "atd/error.hpp"
#include "atd/synthetic.hpp"
#include "atd/utf8.hpp"

namespace atd::text {
namespace {

std::string U8(std::u32string_view s) { return utf8::Encode(s); }

TEST(Classify, KnownCodepoints) {
  EXPECT_EQ(Classify(0x0628), CodepointKind::kArabicLetter);
  EXPECT_EQ(Classify(0x064E), CodepointKind::kDiacriticMark);
  EXPECT_EQ(Classify(U'3'), CodepointKind::kOther);
  EXPECT_EQ(Classify(U' '), CodepointKind::kSpace);
  EXPECT_EQ(Classify(0x0640), CodepointKind::kOther);  // tatweel
  for (char32_t cp = 0x064B; cp <= 0x0652; ++cp) EXPECT_EQ(Classify(cp), CodepointKind::kDiacriticMark);
}

TEST(ClassTable, FifteenUniqueClasses) {
  const auto table = ClassTable();
  ASSERT_EQ(table.size(), 15u);
  std::set<std::u32string> marks;
  for (std::size_t i = 0; i < table.size(); ++i) {
    EXPECT_EQ(ClassId(table[i].cls), static_cast<int>(i));
    marks.insert(std::u32string(CanonicalMarks(table[i].cls)));
  }
  EXPECT_EQ(marks.size(), 15u);
  EXPECT_TRUE(CanonicalMarks(DiacriticClass::kNoTashkeel).empty());
  EXPECT_THROW(ClassFromId(15), Error);
}

TEST(ClassTable, ExportMatchesFixture) {
  std::ifstream in(std::string(ATD_FIXTURE_DIR) + "/class_table.tsv");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ExportClassTable(), ss.str());
}

TEST(Normalize, Examples) {
  EXPECT_EQ(Normalize(std::string("abcبَ")), "بَ");
  EXPECT_EQ(Normalize(std::string("  بَ \t  تِ  ")), "بَ تِ");
  // Shadda moves in front of the vowel; repeated marks collapse.
  EXPECT_EQ(Normalize(U8(U"\u0628\u064E\u0651")), U8(U"\u0628\u0651\u064E"));
  EXPECT_EQ(Normalize(U8(U"\u0628\u064E\u064E")), U8(U"\u0628\u064E"));
  EXPECT_EQ(Normalize(std::string("123 abc")), "");
}

TEST(Encode, ShaddaVowelOrderIsIrrelevant) {
  const auto a = Encode(U8(U"\u0628\u064E\u0651"), EncodeMode::kStrict);
  const auto b = Encode(U8(U"\u0628\u0651\u064E"), EncodeMode::kStrict);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.labels.size(), 1u);
  EXPECT_EQ(a.labels[0], DiacriticClass::kShaddaFatha);
}

TEST(Encode, SpacesCarryNoTashkeel) {
  const auto s = Encode(std::string("بَ تِ"), EncodeMode::kStrict);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.labels[1], DiacriticClass::kNoTashkeel);
  EXPECT_EQ(s.LetterCount(), 2u);
  EXPECT_NO_THROW(s.Validate());
}

TEST(Encode, StrictRejectsAndRepairFixesBadRuns) {
  const std::string two_vowels = U8(U"\u0628\u064E\u064F");
  EXPECT_THROW(Encode(two_vowels, EncodeMode::kStrict), Error);
  EncodeReport report;
  const auto fixed = Encode(two_vowels, EncodeMode::kRepair, &report);
  EXPECT_EQ(fixed.labels[0], DiacriticClass::kDhamma);
  EXPECT_EQ(report.repaired_runs, 1u);
  const auto shadda_sukun = Encode(U8(U"\u0628\u0651\u0652"), EncodeMode::kRepair);
  EXPECT_EQ(shadda_sukun.labels[0], DiacriticClass::kShadda);
}

TEST(Encode, OrphanMarks) {
  const std::string orphan = U8(U"\u064E\u0628");
  try {
    Encode(orphan, EncodeMode::kStrict);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidMarkCombination);
  }
  EncodeReport report;
  const auto s = Encode(orphan, EncodeMode::kRepair, &report);
  EXPECT_EQ(s.letters, U"ب");
  EXPECT_EQ(report.orphan_marks, 1u);
}

TEST(Encode, MalformedUtf8) {
  try {
    Encode(std::string("\xff\xfe"), EncodeMode::kRepair);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMalformedUtf8);
  }
}

TEST(Codec, RoundTripOnRandomSequences) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const auto seq = synth::RandomSequence(rng, 40);
    ASSERT_NO_THROW(seq.Validate());
    const std::string text = Decode(seq);
    EXPECT_EQ(Encode(text, EncodeMode::kStrict), seq);
    EXPECT_EQ(Decode(Encode(text, EncodeMode::kStrict)), text);
  }
}

TEST(Strip, RemovesOnlyMarks) {
  EXPECT_EQ(StripDiacritics(std::string("بَّ تِ")), "ب ت");
  EXPECT_EQ(StripDiacritics(std::string("")), "");
}

TEST(Dtl, CountsMarkCodepointsPerLetter) {
  const auto s = Encode(U8(U"\u0628\u0651\u064E\u062A \u062B\u0652"), EncodeMode::kStrict);
  EXPECT_DOUBLE_EQ(DtlRatio(s), 3.0 / 3.0);
  EXPECT_THROW(DtlRatio(LabeledSequence{}), Error);
}

}  // namespace
}  // namespace atd::text
