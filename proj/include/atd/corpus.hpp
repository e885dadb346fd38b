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

#ifndef ATD_CORPUS_HPP_
#define ATD_CORPUS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "atd/arabic_text.hpp"
#include "atd/types.hpp"
#include "json.hpp"

namespace atd::corpus {

using text::LabeledSequence;

// Thresholds of the fine-tuning corpus filter. Character counts include
// letters, marks and spaces of the normalized line.
struct FilterConfig {
  std::size_t min_chars = 6;
  std::size_t max_chars = 1024;
  double min_dtl = 0.60;

  std::uint64_t Hash() const;
  friend bool operator==(const FilterConfig&, const FilterConfig&) = default;
};

struct CorpusStats {
  std::size_t total_in = 0;
  std::size_t kept = 0;
  std::size_t dropped_length = 0;
  std::size_t dropped_dtl = 0;
  std::size_t dropped_encode_error = 0;
  std::size_t chars_kept = 0;
  std::size_t words_kept = 0;

  bool Balanced() const {
    return total_in == kept + dropped_length + dropped_dtl + dropped_encode_error;
  }
  CorpusStats& operator+=(const CorpusStats& other);
  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

nlohmann::json ToJson(const CorpusStats& stats);

enum class FilterOutcome { kKept, kDroppedLength, kDroppedDtl, kDroppedEncodeError };

// Filters one raw line. On kKept, *out holds the repaired encoding.
FilterOutcome FilterLine(std::string_view line, const FilterConfig& config,
                         LabeledSequence* out);

// Adds one filtered line to `stats`; `seq` is only read when kept.
void Tally(FilterOutcome outcome, const LabeledSequence& seq, CorpusStats& stats);

std::vector<LabeledSequence> FilterFinetune(std::span<const std::string> lines,
                                            const FilterConfig& config, CorpusStats* stats);

// Streaming form; returns the stats of everything read from `in`.
CorpusStats FilterFinetune(std::istream& in, const FilterConfig& config,
                           const std::function<void(LabeledSequence&&)>& sink);

struct PretrainStats {
  std::size_t total_in = 0;
  std::size_t kept = 0;
  std::size_t truncated = 0;
  std::size_t dropped_empty = 0;
  std::size_t dropped_malformed = 0;
};

// Normalized, undiacritized line, cut at the last space at or before
// max_len codepoints (hard cut when there is none). nullopt for empty
// results and malformed UTF-8.
std::optional<std::u32string> PreparePretrainLine(std::string_view line,
                                                  std::size_t max_len = 512,
                                                  bool* truncated = nullptr);

PretrainStats PreparePretrain(std::istream& in, std::size_t max_len,
                              const std::function<void(std::u32string&&)>& sink);

// Separators: . , ; : ! ? U+060C U+061B U+061F and newline.
bool IsSegmentPunctuation(char32_t cp);

struct Chunk {
  std::string segment;
  std::string separator;
};

// Splits raw text for inference. Each separator is a maximal run of
// punctuation and whitespace that holds at least one punctuation mark;
// segments longer than max_len codepoints are split again at their last
// space within the limit (separator " "), or hard-cut (separator "").
// Concatenating segment + separator over the result reproduces `text`.
std::vector<Chunk> ChunkForInference(std::string_view text, std::size_t max_len = 1024);

// Throws kCountMismatch when the two lists differ in length.
std::string Recombine(std::span<const std::string> segments,
                      std::span<const std::string> separators);

class CharVocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kMask = 1;
  static constexpr int kBos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumSpecials = 4;

  // Descending frequency, ties by codepoint. Diacritics and non-letters are
  // not part of the input alphabet. Throws kEmptyCorpus.
  static CharVocab Build(std::span<const std::u32string> corpus);
  static CharVocab FromCounts(const std::vector<std::pair<char32_t, std::size_t>>& counts);

  int IdOf(char32_t cp) const;
  // Throws kInvalidConfig for special or out-of-range ids.
  char32_t CharOf(int id) const;
  bool Contains(char32_t cp) const;
  int size() const { return kNumSpecials + static_cast<int>(chars_.size()); }
  int SpaceId() const { return IdOf(text::kSpace); }

  std::string Serialize() const;
  static CharVocab Parse(std::string_view serialized);
  std::uint64_t Hash() const;

  friend bool operator==(const CharVocab& a, const CharVocab& b) { return a.chars_ == b.chars_; }

 private:
  std::vector<char32_t> chars_;  // id - kNumSpecials -> codepoint
};

// Accumulates codepoint frequencies over several corpora.
class VocabBuilder {
 public:
  void Add(std::u32string_view normalized);
  CharVocab Finish() const;

 private:
  std::vector<std::pair<char32_t, std::size_t>> counts_;
};

using atd::IdMatrix;
using atd::kIgnore;

struct Batch {
  IdMatrix token_ids;
  IdMatrix label_ids;       // class id, or kIgnore at spaces and padding
  IdMatrix attention_mask;  // 1 for real tokens, 0 for padding
  std::vector<std::size_t> source_index;

  int rows() const { return static_cast<int>(token_ids.rows()); }
  int cols() const { return static_cast<int>(token_ids.cols()); }
};

std::vector<int> TokenIds(std::u32string_view letters, const CharVocab& vocab);

// Order is the input order, or a seeded shuffle. Each batch is padded to its
// longest member. Throws kSequenceTooLong when an input exceeds max_len.
std::vector<Batch> MakeBatches(std::span<const LabeledSequence> seqs, const CharVocab& vocab,
                               int batch_size, int max_len,
                               std::optional<std::uint64_t> shuffle_seed);

// Unlabeled variant for pretraining: label_ids are all kIgnore.
std::vector<Batch> MakeTextBatches(std::span<const std::u32string> lines, const CharVocab& vocab,
                                   int batch_size, int max_len,
                                   std::optional<std::uint64_t> shuffle_seed);

enum class Provenance { kGold, kPseudo };

struct LabeledRecord {
  LabeledSequence seq;
  Provenance provenance = Provenance::kGold;
};

// "<skeleton>\t<id id ...>[\tpseudo]"
std::string FormatRecord(const LabeledRecord& record);
LabeledRecord ParseRecord(std::string_view line);

std::vector<std::string> ReadLines(const std::filesystem::path& path);
void WriteLines(const std::filesystem::path& path, std::span<const std::string> lines);
std::vector<LabeledRecord> ReadLabeledCorpus(const std::filesystem::path& path);
void WriteLabeledCorpus(const std::filesystem::path& path, std::span<const LabeledRecord> records);

std::size_t CountWords(std::u32string_view letters);

}  // namespace atd::corpus

#endif  // ATD_CORPUS_HPP_
