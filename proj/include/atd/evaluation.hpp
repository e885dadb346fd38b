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

#ifndef ATD_EVALUATION_HPP_
#define ATD_EVALUATION_HPP_

// Diacritic and word error rates, with case ending (every letter counts) and
// without (the last letter of each word is excluded).

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "atd/arabic_text.hpp"
#include "json.hpp"

namespace atd::eval {

using text::DiacriticClass;
using text::LabeledSequence;

enum class Mode { kCaseEnding, kNoCaseEnding };

struct LetterPair {
  DiacriticClass reference;
  DiacriticClass hypothesis;
};

using AlignedWord = std::vector<LetterPair>;
using Alignment = std::vector<AlignedWord>;

struct EvalOptions {
  // Letters whose reference label is NoTashkeel are scored like any other.
  bool count_bare_reference_letters = true;
};

// Reference is encoded strictly, hypothesis in repair mode; both go through
// the same normalization. Throws kSkeletonMismatch (with the first divergent
// letter index) when the letter sequences differ.
Alignment Align(std::string_view reference, std::string_view hypothesis);
Alignment Align(const LabeledSequence& reference, const LabeledSequence& hypothesis);

struct ErrorCounts {
  std::size_t positions_ce = 0;
  std::size_t errors_ce = 0;
  std::size_t positions_noce = 0;
  std::size_t errors_noce = 0;
  std::size_t words_ce = 0;
  std::size_t wrong_words_ce = 0;
  std::size_t words_noce = 0;  // words with at least one counted letter
  std::size_t wrong_words_noce = 0;

  ErrorCounts& operator+=(const ErrorCounts& other);
  friend bool operator==(const ErrorCounts&, const ErrorCounts&) = default;
};

ErrorCounts Count(const Alignment& alignment, const EvalOptions& options = {});

// Fractions in [0, 1]. Throw kEmptyEvaluationSet on an empty denominator.
double Der(const ErrorCounts& counts, Mode mode);
double Wer(const ErrorCounts& counts, Mode mode);
double Der(const Alignment& alignment, Mode mode, const EvalOptions& options = {});
double Wer(const Alignment& alignment, Mode mode, const EvalOptions& options = {});

// Label-level scoring of already encoded sequences (training-time metric).
ErrorCounts ScoreSequences(std::span<const LabeledSequence> references,
                           std::span<const LabeledSequence> hypotheses,
                           const EvalOptions& options = {});

struct EvalReport {
  double der_ce = 0.0;  // percentages
  double wer_ce = 0.0;
  double der_noce = 0.0;
  double wer_noce = 0.0;
  std::size_t positions_ce = 0;
  std::size_t positions_noce = 0;
  std::size_t words = 0;
  std::size_t words_noce = 0;
  std::size_t sentences = 0;
  std::size_t sentences_skipped = 0;
  std::map<std::string, std::size_t> skip_reasons;
  ErrorCounts counts;

  nlohmann::json ToJson() const;
  std::string ToText() const;
};

// Line-aligned reference / hypothesis texts. Unalignable pairs are skipped
// and counted. Throws kLineCountMismatch and kEmptyEvaluationSet.
EvalReport EvaluateLines(std::span<const std::string> references,
                         std::span<const std::string> hypotheses,
                         const EvalOptions& options = {});
EvalReport EvaluateCorpus(const std::filesystem::path& reference_file,
                          const std::filesystem::path& hypothesis_file,
                          const EvalOptions& options = {});

}  // namespace atd::eval

#endif  // ATD_EVALUATION_HPP_
