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

#ifndef ATD_NOISY_STUDENT_HPP_
#define ATD_NOISY_STUDENT_HPP_

// One self-training round. Teacher labels on unlabeled text join the gold
// corpus under the same filter; a student warm-started from the teacher
// then trains on the union, with dropout as its noise.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "atd/corpus.hpp"
#include "atd/model/checkpoint.hpp"
#include "atd/train/trainer.hpp"
#include "json.hpp"

namespace atd::ns {

using corpus::LabeledRecord;

struct PseudoLabelStats {
  std::size_t lines_in = 0;
  std::size_t labeled = 0;
  std::size_t skipped_empty = 0;
  std::size_t skipped_error = 0;
  std::size_t chunked = 0;  // lines longer than max_len, labeled in pieces

  nlohmann::json ToJson() const;
};

// Labels the stripped skeleton of each line. Lines longer than the teacher's
// max_len are labeled in chunks that are joined back, so output skeletons
// equal the stripped input. Failed lines are skipped and counted.
std::vector<LabeledRecord> PseudoLabel(const model::Checkpoint& teacher,
                                       std::span<const std::string> lines,
                                       PseudoLabelStats* stats = nullptr, int batch_size = 64);

struct CombineResult {
  std::vector<LabeledRecord> records;  // gold first, then pseudo, each in input order
  corpus::CorpusStats gold;
  corpus::CorpusStats pseudo;
  corpus::CorpusStats merged;
  std::uint64_t filter_hash = 0;

  nlohmann::json ToJson() const;
};

// Re-applies the fine-tuning filter (length and DTL) to both sources.
CombineResult CombineAndFilter(std::span<const LabeledRecord> labeled,
                               std::span<const LabeledRecord> pseudo,
                               const corpus::FilterConfig& filters);
CombineResult CombineAndFilter(const std::filesystem::path& labeled,
                               std::span<const LabeledRecord> pseudo,
                               const corpus::FilterConfig& filters);

// Sorted, seeded subset of k indices out of n. Throws kInvalidConfig for k > n.
std::vector<std::size_t> SampleIndices(std::size_t n, std::size_t k, std::uint64_t seed);

struct NsRoundSpec {
  const model::Checkpoint* teacher = nullptr;
  std::vector<std::string> unlabeled;
  std::size_t sample_size = 0;
  std::vector<LabeledRecord> labeled;
  corpus::FilterConfig filters;
  train::TrainConfig train;
  double dropout = 0.10;
  // Empty: the student holds out a split of the merged corpus.
  std::vector<text::LabeledSequence> validation;
  std::filesystem::path run_dir;
  std::uint64_t seed = 0;
  int batch_size = 64;  // pseudo-labeling batch
};

struct NsRoundResult {
  train::FinetuneResult student;
  std::vector<std::size_t> sampled;
  nlohmann::json report;
};

NsRoundResult RunNsRound(const NsRoundSpec& spec);

}  // namespace atd::ns

#endif  // ATD_NOISY_STUDENT_HPP_
