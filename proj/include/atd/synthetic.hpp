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

#ifndef ATD_SYNTHETIC_HPP_
#define ATD_SYNTHETIC_HPP_

// Generated corpora for tests and the acceptance suite.

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "atd/arabic_text.hpp"

namespace atd::synth {

using text::DiacriticClass;
using text::LabeledSequence;

// A toy language whose diacritic at each letter is a fixed function of the
// letter's left and right neighbours inside the word (word edges count as a
// neighbour of their own).
class RuleLanguage {
 public:
  // `bare_rate` is the share of neighbour contexts mapped to NoTashkeel.
  RuleLanguage(std::uint64_t seed, int alphabet_size = 8, double bare_rate = 0.1);

  const std::u32string& alphabet() const { return alphabet_; }
  DiacriticClass Rule(int left, int right) const;  // indices; alphabet_size = word edge

  // Labels a skeleton by the rule; every non-space letter must be in the alphabet.
  LabeledSequence Label(const std::u32string& skeleton) const;

  LabeledSequence Sample(std::mt19937_64& rng, int min_words = 3, int max_words = 6,
                         int min_word_len = 2, int max_word_len = 6) const;
  std::vector<LabeledSequence> Corpus(std::size_t n, std::uint64_t seed) const;

 private:
  int Index(char32_t letter) const;

  std::u32string alphabet_;
  std::vector<DiacriticClass> table_;  // (size+1) x (size+1)
};

// Uniformly random valid sequence over the Arabic letter set, with spaces.
LabeledSequence RandomSequence(std::mt19937_64& rng, std::size_t max_len);

// Raw text mixing Arabic letters, marks, Latin, digits, punctuation and
// whitespace runs.
std::string RandomMixedText(std::mt19937_64& rng, std::size_t max_len);

}  // namespace atd::synth

#endif  // ATD_SYNTHETIC_HPP_
