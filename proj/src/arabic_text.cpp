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

#include "atd/arabic_text.hpp"

#include <algorithm>
#include <cstdio>

#include "atd/error.hpp"
#include "atd/utf8.hpp"

namespace atd::text {
namespace {

using namespace std::string_view_literals;

constexpr std::array<ClassInfo, kNumClasses> kClassTable{{
    {DiacriticClass::kFatha, "Fatha", U"َ"sv},
    {DiacriticClass::kKasra, "Kasra", U"ِ"sv},
    {DiacriticClass::kDhamma, "Dhamma", U"ُ"sv},
    {DiacriticClass::kTanweenFath, "TanweenFath", U"ً"sv},
    {DiacriticClass::kTanweenKasr, "TanweenKasr", U"ٍ"sv},
    {DiacriticClass::kTanweenDhamm, "TanweenDhamm", U"ٌ"sv},
    {DiacriticClass::kShadda, "Shadda", U"ّ"sv},
    {DiacriticClass::kShaddaFatha, "ShaddaFatha", U"َّ"sv},
    {DiacriticClass::kShaddaKasra, "ShaddaKasra", U"ِّ"sv},
    {DiacriticClass::kShaddaDhamma, "ShaddaDhamma", U"ُّ"sv},
    {DiacriticClass::kShaddaTanweenFath, "ShaddaTanweenFath", U"ًّ"sv},
    {DiacriticClass::kShaddaTanweenKasr, "ShaddaTanweenKasr", U"ٍّ"sv},
    {DiacriticClass::kShaddaTanweenDhamm, "ShaddaTanweenDhamm", U"ٌّ"sv},
    {DiacriticClass::kSukoon, "Sukoon", U"ْ"sv},
    {DiacriticClass::kNoTashkeel, "NoTashkeel", U""sv},
}};

bool IsAsciiWhitespace(char32_t cp) {
  return cp == U'\t' || cp == U'\n' || cp == U'\v' || cp == U'\f' || cp == U'\r';
}

// Shadda first, then the remaining marks in arrival order, first occurrence
// of each mark kept.
void CanonicalizeRun(std::u32string& run) {
  std::u32string out;
  if (run.find(mark::kShadda) != std::u32string::npos) out.push_back(mark::kShadda);
  for (char32_t m : run) {
    if (m == mark::kShadda) continue;
    if (out.find(m) == std::u32string::npos) out.push_back(m);
  }
  run = std::move(out);
}

std::string Hex(char32_t cp) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "U+%04X", static_cast<unsigned>(cp));
  return buf;
}

}  // namespace

std::span<const ClassInfo> ClassTable() { return kClassTable; }

DiacriticClass ClassFromId(int id) {
  if (id < 0 || id >= kNumClasses) {
    throw Error(ErrorKind::kInvalidConfig, "class id out of range: " + std::to_string(id));
  }
  return static_cast<DiacriticClass>(id);
}

std::string_view ClassName(DiacriticClass c) { return kClassTable[ClassId(c)].name; }

std::u32string_view CanonicalMarks(DiacriticClass c) { return kClassTable[ClassId(c)].marks; }

std::size_t MarkCount(DiacriticClass c) { return CanonicalMarks(c).size(); }

std::optional<DiacriticClass> ClassFromMarks(std::u32string_view run) {
  for (const auto& info : kClassTable) {
    if (info.marks == run) return info.cls;
  }
  return std::nullopt;
}

std::string ExportClassTable() {
  std::string out = "id\tname\tcodepoints\n";
  for (const auto& info : kClassTable) {
    out += std::to_string(ClassId(info.cls));
    out += '\t';
    out += info.name;
    out += '\t';
    for (std::size_t i = 0; i < info.marks.size(); ++i) {
      if (i) out += ' ';
      out += Hex(info.marks[i]);
    }
    out += '\n';
  }
  return out;
}

CodepointKind Classify(char32_t cp) {
  if (cp >= 0x064B && cp <= 0x0652) return CodepointKind::kDiacriticMark;
  if ((cp >= 0x0621 && cp <= 0x063A) || (cp >= 0x0641 && cp <= 0x064A)) {
    return CodepointKind::kArabicLetter;
  }
  if (cp == kSpace) return CodepointKind::kSpace;
  return CodepointKind::kOther;
}

std::size_t LabeledSequence::LetterCount() const {
  return static_cast<std::size_t>(
      std::count_if(letters.begin(), letters.end(),
                    [](char32_t c) { return Classify(c) == CodepointKind::kArabicLetter; }));
}

void LabeledSequence::Validate() const {
  auto fail = [](const std::string& why) {
    throw Error(ErrorKind::kInvalidMarkCombination, "invalid labeled sequence: " + why);
  };
  if (letters.size() != labels.size()) fail("length mismatch");
  if (letters.empty()) return;
  if (letters.front() == kSpace || letters.back() == kSpace) fail("leading or trailing space");
  for (std::size_t i = 0; i < letters.size(); ++i) {
    const auto kind = Classify(letters[i]);
    if (kind == CodepointKind::kSpace) {
      if (labels[i] != DiacriticClass::kNoTashkeel) fail("space carries a diacritic");
      if (i > 0 && letters[i - 1] == kSpace) fail("consecutive spaces");
    } else if (kind != CodepointKind::kArabicLetter) {
      fail("non-letter codepoint " + Hex(letters[i]));
    }
    if (ClassId(labels[i]) < 0 || ClassId(labels[i]) >= kNumClasses) fail("label out of range");
  }
}

std::u32string Normalize(std::u32string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::u32string run;
  bool pending_space = false;

  auto flush_run = [&] {
    if (run.empty()) return;
    CanonicalizeRun(run);
    out += run;
    run.clear();
  };

  for (char32_t cp : text) {
    if (IsAsciiWhitespace(cp)) cp = kSpace;
    switch (Classify(cp)) {
      case CodepointKind::kOther:
        break;
      case CodepointKind::kDiacriticMark:
        // A mark after a pending space belongs to no letter; it is kept as an
        // orphan run after the space so Encode can count it.
        if (pending_space) {
          flush_run();
          if (!out.empty()) out.push_back(kSpace);
          pending_space = false;
        }
        run.push_back(cp);
        break;
      case CodepointKind::kSpace:
        flush_run();
        pending_space = true;
        break;
      case CodepointKind::kArabicLetter:
        flush_run();
        if (pending_space && !out.empty()) out.push_back(kSpace);
        pending_space = false;
        out.push_back(cp);
        break;
    }
  }
  flush_run();
  return out;
}

std::string Normalize(std::string_view utf8) {
  return utf8::Encode(Normalize(utf8::Decode(utf8)));
}

LabeledSequence Encode(std::u32string_view text, EncodeMode mode, EncodeReport* report) {
  const std::u32string norm = Normalize(text);
  EncodeReport local;
  LabeledSequence seq;
  seq.letters.reserve(norm.size());
  seq.labels.reserve(norm.size());

  std::size_t i = 0;
  while (i < norm.size()) {
    const char32_t cp = norm[i];
    const auto kind = Classify(cp);
    if (kind == CodepointKind::kDiacriticMark) {
      // Orphan run: leading, or directly after a space.
      std::size_t j = i;
      while (j < norm.size() && Classify(norm[j]) == CodepointKind::kDiacriticMark) ++j;
      if (mode == EncodeMode::kStrict) {
        throw Error(ErrorKind::kInvalidMarkCombination,
                    "diacritic without a base letter at offset " + std::to_string(i));
      }
      local.orphan_marks += j - i;
      i = j;
      continue;
    }
    if (kind == CodepointKind::kSpace) {
      // Orphan marks may leave a dangling or doubled space behind.
      if (!seq.letters.empty() && seq.letters.back() != kSpace) {
        seq.letters.push_back(kSpace);
        seq.labels.push_back(DiacriticClass::kNoTashkeel);
      }
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < norm.size() && Classify(norm[j]) == CodepointKind::kDiacriticMark) ++j;
    std::u32string run(norm.begin() + i + 1, norm.begin() + j);
    auto cls = ClassFromMarks(run);
    if (!cls) {
      if (mode == EncodeMode::kStrict) {
        std::string desc;
        for (char32_t m : run) desc += Hex(m) + " ";
        throw Error(ErrorKind::kInvalidMarkCombination,
                    "mark run [" + desc + "] at offset " + std::to_string(i) +
                        " is not a diacritic class");
      }
      std::u32string repaired;
      const bool shadda = run.find(mark::kShadda) != std::u32string::npos;
      if (shadda) repaired.push_back(mark::kShadda);
      for (auto it = run.rbegin(); it != run.rend(); ++it) {
        if (*it == mark::kShadda) continue;
        // Shadda with sukun has no class; the shadda wins.
        if (!(shadda && *it == mark::kSukun)) repaired.push_back(*it);
        break;
      }
      cls = ClassFromMarks(repaired);
      ++local.repaired_runs;
    }
    seq.letters.push_back(cp);
    seq.labels.push_back(*cls);
    i = j;
  }
  if (!seq.letters.empty() && seq.letters.back() == kSpace) {
    seq.letters.pop_back();
    seq.labels.pop_back();
  }
  if (report) *report = local;
  return seq;
}

LabeledSequence Encode(std::string_view utf8, EncodeMode mode, EncodeReport* report) {
  return Encode(utf8::Decode(utf8), mode, report);
}

std::u32string DecodeCodepoints(const LabeledSequence& seq) {
  std::u32string out;
  out.reserve(seq.letters.size() * 2);
  for (std::size_t i = 0; i < seq.letters.size(); ++i) {
    out.push_back(seq.letters[i]);
    if (i < seq.labels.size()) out += CanonicalMarks(seq.labels[i]);
  }
  return out;
}

std::string Decode(const LabeledSequence& seq) { return utf8::Encode(DecodeCodepoints(seq)); }

std::u32string StripDiacritics(std::u32string_view text) {
  const std::u32string norm = Normalize(text);
  std::u32string out;
  out.reserve(norm.size());
  for (char32_t cp : norm) {
    if (Classify(cp) == CodepointKind::kDiacriticMark) continue;
    if (cp == kSpace && (out.empty() || out.back() == kSpace)) continue;
    out.push_back(cp);
  }
  if (!out.empty() && out.back() == kSpace) out.pop_back();
  return out;
}

std::string StripDiacritics(std::string_view utf8) {
  return utf8::Encode(StripDiacritics(utf8::Decode(utf8)));
}

double DtlRatio(const LabeledSequence& seq) {
  std::size_t letters = 0;
  std::size_t marks = 0;
  for (std::size_t i = 0; i < seq.letters.size(); ++i) {
    if (Classify(seq.letters[i]) != CodepointKind::kArabicLetter) continue;
    ++letters;
    marks += MarkCount(seq.labels[i]);
  }
  if (letters == 0) throw Error(ErrorKind::kNoLetters, "DTL ratio of a sequence without letters");
  return static_cast<double>(marks) / static_cast<double>(letters);
}

}  // namespace atd::text
