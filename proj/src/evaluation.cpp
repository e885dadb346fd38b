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

#include "atd/evaluation.hpp"

#include <cmath>
#include <cstdio>

#include "atd/corpus.hpp"
#include "atd/error.hpp"
#include "atd/utf8.hpp"

namespace atd::eval {

Alignment Align(const LabeledSequence& reference, const LabeledSequence& hypothesis) {
  const std::size_t n = std::min(reference.size(), hypothesis.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (reference.letters[i] != hypothesis.letters[i]) {
      throw Error(ErrorKind::kSkeletonMismatch,
                  "letter skeletons diverge at position " + std::to_string(i));
    }
  }
  if (reference.size() != hypothesis.size()) {
    throw Error(ErrorKind::kSkeletonMismatch,
                "letter skeletons diverge at position " + std::to_string(n));
  }
  Alignment out;
  AlignedWord word;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (reference.letters[i] == text::kSpace) {
      if (!word.empty()) out.push_back(std::move(word));
      word.clear();
      continue;
    }
    word.push_back({reference.labels[i], hypothesis.labels[i]});
  }
  if (!word.empty()) out.push_back(std::move(word));
  return out;
}

Alignment Align(std::string_view reference, std::string_view hypothesis) {
  return Align(text::Encode(reference, text::EncodeMode::kStrict),
               text::Encode(hypothesis, text::EncodeMode::kRepair));
}

ErrorCounts& ErrorCounts::operator+=(const ErrorCounts& o) {
  positions_ce += o.positions_ce;
  errors_ce += o.errors_ce;
  positions_noce += o.positions_noce;
  errors_noce += o.errors_noce;
  words_ce += o.words_ce;
  wrong_words_ce += o.wrong_words_ce;
  words_noce += o.words_noce;
  wrong_words_noce += o.wrong_words_noce;
  return *this;
}

ErrorCounts Count(const Alignment& alignment, const EvalOptions& options) {
  ErrorCounts c;
  for (const auto& word : alignment) {
    bool counted_ce = false, wrong_ce = false;
    bool counted_noce = false, wrong_noce = false;
    for (std::size_t i = 0; i < word.size(); ++i) {
      const auto& pair = word[i];
      if (!options.count_bare_reference_letters &&
          pair.reference == DiacriticClass::kNoTashkeel) {
        continue;
      }
      const bool error = pair.reference != pair.hypothesis;
      ++c.positions_ce;
      counted_ce = true;
      if (error) {
        ++c.errors_ce;
        wrong_ce = true;
      }
      if (i + 1 == word.size()) continue;  // case ending
      ++c.positions_noce;
      counted_noce = true;
      if (error) {
        ++c.errors_noce;
        wrong_noce = true;
      }
    }
    if (counted_ce) {
      ++c.words_ce;
      if (wrong_ce) ++c.wrong_words_ce;
    }
    if (counted_noce) {
      ++c.words_noce;
      if (wrong_noce) ++c.wrong_words_noce;
    }
  }
  return c;
}

namespace {

double Ratio(std::size_t num, std::size_t den, const char* what) {
  if (den == 0) throw Error(ErrorKind::kEmptyEvaluationSet, std::string("no ") + what + " to score");
  return static_cast<double>(num) / static_cast<double>(den);
}

double Round3(double v) { return std::round(v * 1000.0) / 1000.0; }

}  // namespace

double Der(const ErrorCounts& c, Mode mode) {
  return mode == Mode::kCaseEnding ? Ratio(c.errors_ce, c.positions_ce, "letters")
                                   : Ratio(c.errors_noce, c.positions_noce, "letters");
}

double Wer(const ErrorCounts& c, Mode mode) {
  return mode == Mode::kCaseEnding ? Ratio(c.wrong_words_ce, c.words_ce, "words")
                                   : Ratio(c.wrong_words_noce, c.words_noce, "words");
}

double Der(const Alignment& a, Mode mode, const EvalOptions& options) {
  return Der(Count(a, options), mode);
}

double Wer(const Alignment& a, Mode mode, const EvalOptions& options) {
  return Wer(Count(a, options), mode);
}

ErrorCounts ScoreSequences(std::span<const LabeledSequence> references,
                           std::span<const LabeledSequence> hypotheses,
                           const EvalOptions& options) {
  if (references.size() != hypotheses.size()) {
    throw Error(ErrorKind::kLineCountMismatch, "reference and hypothesis counts differ");
  }
  ErrorCounts total;
  for (std::size_t i = 0; i < references.size(); ++i) {
    total += Count(Align(references[i], hypotheses[i]), options);
  }
  return total;
}

nlohmann::json EvalReport::ToJson() const {
  return {{"metrics",
           {{"der_ce", Round3(der_ce)},
            {"wer_ce", Round3(wer_ce)},
            {"der_noce", Round3(der_noce)},
            {"wer_noce", Round3(wer_noce)}}},
          {"exact", {{"der_ce", der_ce}, {"wer_ce", wer_ce}, {"der_noce", der_noce}, {"wer_noce", wer_noce}}},
          {"positions_ce", positions_ce},
          {"positions_noce", positions_noce},
          {"words", words},
          {"words_noce", words_noce},
          {"errors_ce", counts.errors_ce},
          {"errors_noce", counts.errors_noce},
          {"wrong_words_ce", counts.wrong_words_ce},
          {"wrong_words_noce", counts.wrong_words_noce},
          {"sentences", sentences},
          {"sentences_skipped", sentences_skipped},
          {"skip_reasons", skip_reasons}};
}

std::string EvalReport::ToText() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%-8s %10s %10s\n"
                "%-8s %10.3f %10.3f\n"
                "%-8s %10.3f %10.3f\n"
                "letters %zu (no CE %zu), words %zu, sentences %zu, skipped %zu\n",
                "", "DER%", "WER%", "CE", der_ce, wer_ce, "No CE", der_noce, wer_noce,
                positions_ce, positions_noce, words, sentences, sentences_skipped);
  return buf;
}

EvalReport EvaluateLines(std::span<const std::string> references,
                         std::span<const std::string> hypotheses, const EvalOptions& options) {
  if (references.size() != hypotheses.size()) {
    throw Error(ErrorKind::kLineCountMismatch,
                std::to_string(references.size()) + " reference lines vs " +
                    std::to_string(hypotheses.size()) + " hypothesis lines");
  }
  EvalReport report;
  for (std::size_t i = 0; i < references.size(); ++i) {
    auto skip = [&](const std::string& reason) {
      ++report.sentences_skipped;
      ++report.skip_reasons[reason];
    };
    if (!utf8::TryDecode(references[i]) || !utf8::TryDecode(hypotheses[i])) {
      skip("malformed_utf8");
      continue;
    }
    LabeledSequence ref;
    try {
      ref = text::Encode(references[i], text::EncodeMode::kStrict);
    } catch (const Error&) {
      skip("invalid_reference");
      continue;
    }
    if (ref.LetterCount() == 0) {
      skip("empty");
      continue;
    }
    const LabeledSequence hyp = text::Encode(hypotheses[i], text::EncodeMode::kRepair);
    try {
      report.counts += Count(Align(ref, hyp), options);
      ++report.sentences;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kSkeletonMismatch) throw;
      skip("skeleton_mismatch");
    }
  }
  const auto& c = report.counts;
  report.der_ce = 100.0 * Der(c, Mode::kCaseEnding);
  report.wer_ce = 100.0 * Wer(c, Mode::kCaseEnding);
  report.der_noce = c.positions_noce ? 100.0 * Der(c, Mode::kNoCaseEnding) : 0.0;
  report.wer_noce = c.words_noce ? 100.0 * Wer(c, Mode::kNoCaseEnding) : 0.0;
  report.positions_ce = c.positions_ce;
  report.positions_noce = c.positions_noce;
  report.words = c.words_ce;
  report.words_noce = c.words_noce;
  return report;
}

EvalReport EvaluateCorpus(const std::filesystem::path& reference_file,
                          const std::filesystem::path& hypothesis_file,
                          const EvalOptions& options) {
  const auto refs = corpus::ReadLines(reference_file);
  const auto hyps = corpus::ReadLines(hypothesis_file);
  return EvaluateLines(refs, hyps, options);
}

}  // namespace atd::eval
