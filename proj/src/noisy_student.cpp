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

#include "atd/noisy_student.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "atd/error.hpp"
#include "atd/hash.hpp"
#include "atd/inference.hpp"
#include "atd/utf8.hpp"

namespace atd::ns {

namespace fs = std::filesystem;
using nlohmann::json;
using text::DiacriticClass;
using text::LabeledSequence;

json PseudoLabelStats::ToJson() const {
  return {{"lines_in", lines_in},
          {"labeled", labeled},
          {"skipped_empty", skipped_empty},
          {"skipped_error", skipped_error},
          {"chunked", chunked}};
}

std::vector<LabeledRecord> PseudoLabel(const model::Checkpoint& teacher,
                                       std::span<const std::string> lines,
                                       PseudoLabelStats* stats, int batch_size) {
  PseudoLabelStats local;
  local.lines_in = lines.size();
  const auto max_len = static_cast<std::size_t>(teacher.config.max_len);

  // Skeleton pieces of every usable line, labeled together.
  struct Line {
    std::size_t first_piece = 0;
    std::size_t pieces = 0;
    std::u32string skeleton;
  };
  std::vector<Line> usable;
  std::vector<std::u32string> pieces;
  std::vector<std::string> separators;
  for (const auto& raw : lines) {
    std::u32string skeleton;
    std::vector<corpus::Chunk> chunks;
    try {
      skeleton = text::StripDiacritics(utf8::Decode(raw));
      if (skeleton.empty()) {
        ++local.skipped_empty;
        continue;
      }
      chunks = corpus::ChunkForInference(utf8::Encode(skeleton), max_len);
    } catch (const Error& e) {
      spdlog::debug("pseudo-label skip: {}", e.what());
      ++local.skipped_error;
      continue;
    }
    if (chunks.size() > 1) ++local.chunked;
    usable.push_back({pieces.size(), chunks.size(), std::move(skeleton)});
    for (auto& c : chunks) {
      pieces.push_back(utf8::Decode(c.segment));
      separators.push_back(std::move(c.separator));
    }
  }
  const auto labeled = Predict(teacher.params, teacher.config, teacher.vocab, pieces, batch_size);

  std::vector<LabeledRecord> out;
  for (const auto& line : usable) {
    LabeledSequence seq;
    for (std::size_t k = line.first_piece; k < line.first_piece + line.pieces; ++k) {
      seq.letters += labeled[k].letters;
      seq.labels.insert(seq.labels.end(), labeled[k].labels.begin(), labeled[k].labels.end());
      for (char32_t cp : utf8::Decode(separators[k])) {
        seq.letters.push_back(cp);
        seq.labels.push_back(DiacriticClass::kNoTashkeel);
      }
    }
    // Labeling never edits letters.
    if (seq.letters != line.skeleton) {
      ++local.skipped_error;
      continue;
    }
    out.push_back({std::move(seq), corpus::Provenance::kPseudo});
  }
  local.labeled = out.size();
  if (stats) *stats = local;
  return out;
}

json CombineResult::ToJson() const {
  return {{"gold", corpus::ToJson(gold)},
          {"pseudo", corpus::ToJson(pseudo)},
          {"merged", corpus::ToJson(merged)},
          {"filter_hash", HexDigest(filter_hash)}};
}

namespace {

void FilterInto(std::span<const LabeledRecord> records, const corpus::FilterConfig& filters,
                corpus::CorpusStats& stats, std::vector<LabeledRecord>& kept) {
  for (const auto& r : records) {
    LabeledSequence seq;
    const auto outcome = corpus::FilterLine(text::Decode(r.seq), filters, &seq);
    corpus::Tally(outcome, seq, stats);
    if (outcome == corpus::FilterOutcome::kKept) kept.push_back({std::move(seq), r.provenance});
  }
}

}  // namespace

CombineResult CombineAndFilter(std::span<const LabeledRecord> labeled,
                               std::span<const LabeledRecord> pseudo,
                               const corpus::FilterConfig& filters) {
  CombineResult result;
  result.filter_hash = filters.Hash();
  FilterInto(labeled, filters, result.gold, result.records);
  FilterInto(pseudo, filters, result.pseudo, result.records);
  result.merged = result.gold;
  result.merged += result.pseudo;
  return result;
}

CombineResult CombineAndFilter(const fs::path& labeled, std::span<const LabeledRecord> pseudo,
                               const corpus::FilterConfig& filters) {
  const auto gold = corpus::ReadLabeledCorpus(labeled);
  return CombineAndFilter(gold, pseudo, filters);
}

std::vector<std::size_t> SampleIndices(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k > n) {
    throw Error(ErrorKind::kInvalidConfig, "sample_size " + std::to_string(k) + " exceeds the " +
                                               std::to_string(n) + " available lines");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

NsRoundResult RunNsRound(const NsRoundSpec& spec) {
  if (!spec.teacher) throw Error(ErrorKind::kInvalidConfig, "noisy-student round needs a teacher");
  if (spec.teacher->config.arch == model::Arch::kBert) {
    throw Error(ErrorKind::kInvalidConfig, "teacher must be an eo or ed checkpoint");
  }
  NsRoundResult result;
  result.sampled = SampleIndices(spec.unlabeled.size(), spec.sample_size, spec.seed);
  std::vector<std::string> sample;
  sample.reserve(result.sampled.size());
  for (std::size_t i : result.sampled) sample.push_back(spec.unlabeled[i]);

  PseudoLabelStats pl_stats;
  const auto pseudo = PseudoLabel(*spec.teacher, sample, &pl_stats, spec.batch_size);
  // The pseudo data goes through the very filter the gold corpus went through.
  const CombineResult combined = CombineAndFilter(spec.labeled, pseudo, spec.filters);
  spdlog::info("noisy student: {} sampled, {} pseudo-labeled, {} kept after filtering ({} gold)",
               sample.size(), pseudo.size(), combined.merged.kept, combined.gold.kept);

  train::FinetuneSpec ft;
  ft.arch = spec.teacher->config.arch;
  ft.init = train::InitMode::kWarmStart;
  ft.init_checkpoint = spec.teacher;
  ft.model = spec.teacher->config;
  ft.model.dropout = spec.dropout;
  ft.train = spec.train;
  for (const auto& r : combined.records) ft.corpus.push_back(r.seq);
  ft.validation = spec.validation;
  ft.run_dir = spec.run_dir.empty() ? fs::path() : spec.run_dir / "student";
  result.student = train::Finetune(ft);

  const auto& best = result.student.best;
  result.report = {
      {"unlabeled_available", spec.unlabeled.size()},
      {"sample_size", spec.sample_size},
      {"seed", spec.seed},
      {"pseudo_label", pl_stats.ToJson()},
      {"combine", combined.ToJson()},
      {"teacher_params_hash", model::ParametersHash(spec.teacher->params)},
      {"student_params_hash", model::ParametersHash(best.params)},
      {"student_best_epoch", result.student.best_epoch},
      {"student_best_val_der",
       result.student.history.empty()
           ? json(nullptr)
           : json(*result.student.history[static_cast<std::size_t>(result.student.best_epoch - 1)].val_der)}};
  if (!spec.run_dir.empty()) {
    fs::create_directories(spec.run_dir);
    std::vector<std::string> lines;
    for (const auto& r : pseudo) lines.push_back(corpus::FormatRecord(r));
    corpus::WriteLines(spec.run_dir / "pseudo_labeled.tsv", lines);
    std::ofstream(spec.run_dir / "round_report.json") << result.report.dump(2) << '\n';
  }
  return result;
}

}  // namespace atd::ns
