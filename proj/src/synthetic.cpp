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

#include "atd/synthetic.hpp"

#include <algorithm>

#include "atd/error.hpp"
#include "atd/utf8.hpp"

namespace atd::synth {
namespace {

std::u32string ArabicLetters() {
  std::u32string out;
  for (char32_t c = 0x0621; c <= 0x063A; ++c) out.push_back(c);
  for (char32_t c = 0x0641; c <= 0x064A; ++c) out.push_back(c);
  return out;
}

int Uniform(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

RuleLanguage::RuleLanguage(std::uint64_t seed, int alphabet_size, double bare_rate) {
  const std::u32string letters = ArabicLetters();
  if (alphabet_size < 1 || alphabet_size > static_cast<int>(letters.size())) {
    throw Error(ErrorKind::kInvalidConfig, "alphabet_size out of range");
  }
  std::mt19937_64 rng(seed);
  std::u32string pool = letters;
  std::shuffle(pool.begin(), pool.end(), rng);
  alphabet_ = pool.substr(0, static_cast<std::size_t>(alphabet_size));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = alphabet_size + 1;
  table_.resize(static_cast<std::size_t>(n * n));
  for (auto& cls : table_) {
    cls = unit(rng) < bare_rate ? DiacriticClass::kNoTashkeel
                                : text::ClassFromId(Uniform(rng, 0, text::kNumClasses - 2));
  }
}

DiacriticClass RuleLanguage::Rule(int left, int right) const {
  const int n = static_cast<int>(alphabet_.size()) + 1;
  return table_[static_cast<std::size_t>(left * n + right)];
}

int RuleLanguage::Index(char32_t letter) const {
  const auto pos = alphabet_.find(letter);
  if (pos == std::u32string::npos) {
    throw Error(ErrorKind::kInvalidConfig, "letter outside the rule alphabet");
  }
  return static_cast<int>(pos);
}

LabeledSequence RuleLanguage::Label(const std::u32string& skeleton) const {
  const int edge = static_cast<int>(alphabet_.size());
  LabeledSequence seq{skeleton, std::vector<DiacriticClass>(skeleton.size(), DiacriticClass::kNoTashkeel)};
  for (std::size_t i = 0; i < skeleton.size(); ++i) {
    if (skeleton[i] == text::kSpace) continue;
    const bool first = i == 0 || skeleton[i - 1] == text::kSpace;
    const bool last = i + 1 == skeleton.size() || skeleton[i + 1] == text::kSpace;
    seq.labels[i] = Rule(first ? edge : Index(skeleton[i - 1]), last ? edge : Index(skeleton[i + 1]));
  }
  return seq;
}

LabeledSequence RuleLanguage::Sample(std::mt19937_64& rng, int min_words, int max_words,
                                     int min_word_len, int max_word_len) const {
  std::u32string skeleton;
  const int words = Uniform(rng, min_words, max_words);
  for (int w = 0; w < words; ++w) {
    if (w) skeleton.push_back(text::kSpace);
    const int len = Uniform(rng, min_word_len, max_word_len);
    for (int k = 0; k < len; ++k) {
      skeleton.push_back(alphabet_[static_cast<std::size_t>(Uniform(rng, 0, static_cast<int>(alphabet_.size()) - 1))]);
    }
  }
  return Label(skeleton);
}

std::vector<LabeledSequence> RuleLanguage::Corpus(std::size_t n, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::vector<LabeledSequence> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(Sample(rng));
  return out;
}

LabeledSequence RandomSequence(std::mt19937_64& rng, std::size_t max_len) {
  static const std::u32string letters = ArabicLetters();
  LabeledSequence seq;
  const auto len = static_cast<std::size_t>(Uniform(rng, 1, static_cast<int>(std::max<std::size_t>(max_len, 1))));
  for (std::size_t i = 0; i < len; ++i) {
    const bool space = i > 0 && i + 1 < len && seq.letters.back() != text::kSpace && Uniform(rng, 0, 4) == 0;
    if (space) {
      seq.letters.push_back(text::kSpace);
      seq.labels.push_back(DiacriticClass::kNoTashkeel);
    } else {
      seq.letters.push_back(letters[static_cast<std::size_t>(Uniform(rng, 0, static_cast<int>(letters.size()) - 1))]);
      seq.labels.push_back(text::ClassFromId(Uniform(rng, 0, text::kNumClasses - 1)));
    }
  }
  return seq;
}

std::string RandomMixedText(std::mt19937_64& rng, std::size_t max_len) {
  static const std::u32string letters = ArabicLetters();
  static const std::u32string punct = U".,;:!?،؛؟";
  static const std::u32string other = U"abcXYZ0123456789-()\"'";
  static const std::u32string blank = U" \t";
  std::u32string out;
  const auto len = static_cast<std::size_t>(Uniform(rng, 0, static_cast<int>(max_len)));
  for (std::size_t i = 0; i < len; ++i) {
    const int pick = Uniform(rng, 0, 19);
    if (pick < 11) {
      out.push_back(letters[static_cast<std::size_t>(Uniform(rng, 0, static_cast<int>(letters.size()) - 1))]);
    } else if (pick < 13) {
      out.push_back(static_cast<char32_t>(Uniform(rng, 0x064B, 0x0652)));
    } else if (pick < 16) {
      out.push_back(blank[static_cast<std::size_t>(Uniform(rng, 0, 1))]);
    } else if (pick < 18) {
      out.push_back(punct[static_cast<std::size_t>(Uniform(rng, 0, static_cast<int>(punct.size()) - 1))]);
    } else {
      out.push_back(other[static_cast<std::size_t>(Uniform(rng, 0, static_cast<int>(other.size()) - 1))]);
    }
  }
  return utf8::Encode(out);
}

}  // namespace atd::synth
