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

#ifndef ATD_ARABIC_TEXT_HPP_
#define ATD_ARABIC_TEXT_HPP_

// Codec between diacritized Arabic text and aligned (letters, labels) pairs.
//
// Every letter owns the run of diacritic marks that follows it. A run maps to
// exactly one of 15 label classes; the empty run is NoTashkeel. Spaces are the
// only separators kept, and they always carry NoTashkeel.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace atd::text {

enum class DiacriticClass : std::uint8_t {
  kFatha = 0,
  kKasra,
  kDhamma,
  kTanweenFath,
  kTanweenKasr,
  kTanweenDhamm,
  kShadda,
  kShaddaFatha,
  kShaddaKasra,
  kShaddaDhamma,
  kShaddaTanweenFath,
  kShaddaTanweenKasr,
  kShaddaTanweenDhamm,
  kSukoon,
  kNoTashkeel,
};

inline constexpr int kNumClasses = 15;

namespace mark {
inline constexpr char32_t kFathatan = 0x064B;
inline constexpr char32_t kDammatan = 0x064C;
inline constexpr char32_t kKasratan = 0x064D;
inline constexpr char32_t kFatha = 0x064E;
inline constexpr char32_t kDamma = 0x064F;
inline constexpr char32_t kKasra = 0x0650;
inline constexpr char32_t kShadda = 0x0651;
inline constexpr char32_t kSukun = 0x0652;
}  // namespace mark

inline constexpr char32_t kSpace = U' ';

enum class CodepointKind { kArabicLetter, kDiacriticMark, kSpace, kOther };

struct ClassInfo {
  DiacriticClass cls;
  std::string_view name;
  std::u32string_view marks;  // canonical order, shadda first
};

std::span<const ClassInfo> ClassTable();

constexpr int ClassId(DiacriticClass c) { return static_cast<int>(c); }
DiacriticClass ClassFromId(int id);  // throws kInvalidConfig when out of range
std::string_view ClassName(DiacriticClass c);
std::u32string_view CanonicalMarks(DiacriticClass c);
std::size_t MarkCount(DiacriticClass c);
// Exact lookup on a canonical (shadda-first, deduplicated) run.
std::optional<DiacriticClass> ClassFromMarks(std::u32string_view run);

// Tab-separated id, name, space-separated U+XXXX codepoints; one header line.
std::string ExportClassTable();

CodepointKind Classify(char32_t cp);

struct LabeledSequence {
  std::u32string letters;  // Arabic letters and single interior spaces
  std::vector<DiacriticClass> labels;

  std::size_t size() const { return letters.size(); }
  bool empty() const { return letters.empty(); }
  std::size_t LetterCount() const;
  // Throws kInvalidMarkCombination describing the broken invariant.
  void Validate() const;

  friend bool operator==(const LabeledSequence&, const LabeledSequence&) = default;
};

enum class EncodeMode {
  kStrict,  // any run outside the class table is an error
  kRepair,  // keep shadda, keep the last other mark, drop the rest
};

struct EncodeReport {
  std::size_t orphan_marks = 0;   // marks with no letter to attach to
  std::size_t repaired_runs = 0;  // runs rewritten in repair mode
};

std::u32string Normalize(std::u32string_view text);
std::string Normalize(std::string_view utf8);

// Normalizes first, so raw text is accepted too.
LabeledSequence Encode(std::u32string_view text, EncodeMode mode,
                       EncodeReport* report = nullptr);
LabeledSequence Encode(std::string_view utf8, EncodeMode mode,
                       EncodeReport* report = nullptr);

std::u32string DecodeCodepoints(const LabeledSequence& seq);
std::string Decode(const LabeledSequence& seq);

std::u32string StripDiacritics(std::u32string_view text);
std::string StripDiacritics(std::string_view utf8);

// Mark codepoints of the canonical decoding over Arabic letter positions.
// Throws kNoLetters for sequences without letters.
double DtlRatio(const LabeledSequence& seq);

}  // namespace atd::text

#endif  // ATD_ARABIC_TEXT_HPP_
