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

#include "atd/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "atd/error.hpp"
#include "atd/hash.hpp"
#include "atd/utf8.hpp"

namespace atd::corpus {

using text::Classify;
using text::CodepointKind;

std::uint64_t FilterConfig::Hash() const {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "min_chars=%zu;max_chars=%zu;min_dtl=%.17g", min_chars,
                max_chars, min_dtl);
  return Fnv1a(buf);
}

CorpusStats& CorpusStats::operator+=(const CorpusStats& o) {
  total_in += o.total_in;
  kept += o.kept;
  dropped_length += o.dropped_length;
  dropped_dtl += o.dropped_dtl;
  dropped_encode_error += o.dropped_encode_error;
  chars_kept += o.chars_kept;
  words_kept += o.words_kept;
  return *this;
}

nlohmann::json ToJson(const CorpusStats& s) {
  return {{"total_in", s.total_in},
          {"kept", s.kept},
          {"dropped_length", s.dropped_length},
          {"dropped_dtl", s.dropped_dtl},
          {"dropped_encode_error", s.dropped_encode_error},
          {"chars_kept", s.chars_kept},
          {"words_kept", s.words_kept}};
}

std::size_t CountWords(std::u32string_view letters) {
  std::size_t words = 0;
  bool in_word = false;
  for (char32_t c : letters) {
    const bool letter = c != text::kSpace;
    if (letter && !in_word) ++words;
    in_word = letter;
  }
  return words;
}

FilterOutcome FilterLine(std::string_view line, const FilterConfig& config,
                         LabeledSequence* out) {
  auto decoded = utf8::TryDecode(line);
  if (!decoded) return FilterOutcome::kDroppedEncodeError;
  const std::u32string norm = text::Normalize(*decoded);
  if (norm.size() < config.min_chars || norm.size() > config.max_chars) {
    return FilterOutcome::kDroppedLength;
  }
  LabeledSequence seq = text::Encode(norm, text::EncodeMode::kRepair);
  if (seq.LetterCount() == 0) return FilterOutcome::kDroppedEncodeError;
  if (text::DtlRatio(seq) < config.min_dtl) return FilterOutcome::kDroppedDtl;
  if (out) *out = std::move(seq);
  return FilterOutcome::kKept;
}

void Tally(FilterOutcome outcome, const LabeledSequence& seq, CorpusStats& stats) {
  ++stats.total_in;
  switch (outcome) {
    case FilterOutcome::kKept:
      ++stats.kept;
      stats.chars_kept += text::DecodeCodepoints(seq).size();
      stats.words_kept += CountWords(seq.letters);
      break;
    case FilterOutcome::kDroppedLength: ++stats.dropped_length; break;
    case FilterOutcome::kDroppedDtl: ++stats.dropped_dtl; break;
    case FilterOutcome::kDroppedEncodeError: ++stats.dropped_encode_error; break;
  }
}

std::vector<LabeledSequence> FilterFinetune(std::span<const std::string> lines,
                                            const FilterConfig& config, CorpusStats* stats) {
  std::vector<LabeledSequence> kept;
  CorpusStats local;
  for (const auto& line : lines) {
    LabeledSequence seq;
    const auto outcome = FilterLine(line, config, &seq);
    Tally(outcome, seq, local);
    if (outcome == FilterOutcome::kKept) kept.push_back(std::move(seq));
  }
  if (stats) *stats = local;
  return kept;
}

CorpusStats FilterFinetune(std::istream& in, const FilterConfig& config,
                           const std::function<void(LabeledSequence&&)>& sink) {
  CorpusStats stats;
  std::string line;
  while (std::getline(in, line)) {
    LabeledSequence seq;
    const auto outcome = FilterLine(line, config, &seq);
    Tally(outcome, seq, stats);
    if (outcome == FilterOutcome::kKept) sink(std::move(seq));
  }
  if (in.bad()) throw Error(ErrorKind::kIo, "read failure while filtering corpus");
  return stats;
}

std::optional<std::u32string> PreparePretrainLine(std::string_view line, std::size_t max_len,
                                                  bool* truncated) {
  if (truncated) *truncated = false;
  auto decoded = utf8::TryDecode(line);
  if (!decoded) return std::nullopt;
  std::u32string bare = text::StripDiacritics(*decoded);
  if (bare.size() > max_len) {
    if (truncated) *truncated = true;
    // Last space at index <= max_len; cutting there keeps whole words only.
    const std::size_t space = bare.rfind(text::kSpace, max_len);
    bare.resize(space == std::u32string::npos ? max_len : space);
  }
  if (bare.empty()) return std::nullopt;
  return bare;
}

PretrainStats PreparePretrain(std::istream& in, std::size_t max_len,
                              const std::function<void(std::u32string&&)>& sink) {
  PretrainStats stats;
  std::string line;
  while (std::getline(in, line)) {
    ++stats.total_in;
    if (!utf8::TryDecode(line)) {
      ++stats.dropped_malformed;
      continue;
    }
    bool truncated = false;
    auto out = PreparePretrainLine(line, max_len, &truncated);
    if (!out) {
      ++stats.dropped_empty;
      continue;
    }
    ++stats.kept;
    if (truncated) ++stats.truncated;
    sink(*std::move(out));
  }
  if (in.bad()) throw Error(ErrorKind::kIo, "read failure while preparing pretraining corpus");
  return stats;
}

bool IsSegmentPunctuation(char32_t cp) {
  switch (cp) {
    case U'.': case U',': case U';': case U':': case U'!': case U'?':
    case 0x060C: case 0x061B: case 0x061F: case U'\n':
      return true;
    default:
      return false;
  }
}

namespace {

bool IsChunkWhitespace(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\r' || cp == U'\v' || cp == U'\f';
}

void SplitLong(std::u32string_view segment, std::u32string_view separator, std::size_t max_len,
               std::vector<Chunk>& out) {
  while (segment.size() > max_len) {
    const std::size_t space = segment.substr(0, max_len + 1).rfind(U' ');
    if (space == std::u32string_view::npos) {
      out.push_back({utf8::Encode(segment.substr(0, max_len)), ""});
      segment.remove_prefix(max_len);
    } else {
      out.push_back({utf8::Encode(segment.substr(0, space)), " "});
      segment.remove_prefix(space + 1);
    }
  }
  out.push_back({utf8::Encode(segment), utf8::Encode(separator)});
}

}  // namespace

std::vector<Chunk> ChunkForInference(std::string_view raw, std::size_t max_len) {
  if (max_len == 0) throw Error(ErrorKind::kInvalidConfig, "chunk max_len must be positive");
  const std::u32string text = utf8::Decode(raw);
  std::vector<Chunk> out;
  std::size_t seg_begin = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!IsSegmentPunctuation(text[i]) && !IsChunkWhitespace(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    bool has_punct = false;
    while (j < text.size() && (IsSegmentPunctuation(text[j]) || IsChunkWhitespace(text[j]))) {
      has_punct = has_punct || IsSegmentPunctuation(text[j]);
      ++j;
    }
    if (has_punct) {
      SplitLong(std::u32string_view(text).substr(seg_begin, i - seg_begin),
                std::u32string_view(text).substr(i, j - i), max_len, out);
      seg_begin = j;
    }
    i = j;
  }
  if (seg_begin < text.size() || out.empty()) {
    SplitLong(std::u32string_view(text).substr(seg_begin), U"", max_len, out);
  }
  return out;
}

std::string Recombine(std::span<const std::string> segments,
                      std::span<const std::string> separators) {
  if (segments.size() != separators.size()) {
    throw Error(ErrorKind::kCountMismatch, std::to_string(segments.size()) + " segments vs " +
                                               std::to_string(separators.size()) + " separators");
  }
  std::string out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    out += segments[i];
    out += separators[i];
  }
  return out;
}

void VocabBuilder::Add(std::u32string_view normalized) {
  for (char32_t cp : normalized) {
    const auto kind = Classify(cp);
    if (kind != CodepointKind::kArabicLetter && kind != CodepointKind::kSpace) continue;
    auto it = std::lower_bound(counts_.begin(), counts_.end(), cp,
                               [](const auto& e, char32_t c) { return e.first < c; });
    if (it != counts_.end() && it->first == cp) {
      ++it->second;
    } else {
      counts_.insert(it, {cp, 1});
    }
  }
}

CharVocab VocabBuilder::Finish() const { return CharVocab::FromCounts(counts_); }

CharVocab CharVocab::FromCounts(const std::vector<std::pair<char32_t, std::size_t>>& counts) {
  if (counts.empty()) throw Error(ErrorKind::kEmptyCorpus, "no letters to build a vocabulary");
  auto sorted = counts;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  CharVocab vocab;
  for (const auto& [cp, n] : sorted) vocab.chars_.push_back(cp);
  return vocab;
}

CharVocab CharVocab::Build(std::span<const std::u32string> corpus) {
  VocabBuilder builder;
  for (const auto& line : corpus) builder.Add(line);
  return builder.Finish();
}

int CharVocab::IdOf(char32_t cp) const {
  const auto it = std::find(chars_.begin(), chars_.end(), cp);
  if (it == chars_.end()) return kUnk;
  return kNumSpecials + static_cast<int>(it - chars_.begin());
}

bool CharVocab::Contains(char32_t cp) const {
  return std::find(chars_.begin(), chars_.end(), cp) != chars_.end();
}

char32_t CharVocab::CharOf(int id) const {
  if (id < kNumSpecials || id >= size()) {
    throw Error(ErrorKind::kInvalidConfig, "vocab id has no codepoint: " + std::to_string(id));
  }
  return chars_[static_cast<std::size_t>(id - kNumSpecials)];
}

std::string CharVocab::Serialize() const {
  std::string out;
  const char* specials[] = {"<pad>", "<mask>", "<bos>", "<unk>"};
  for (int i = 0; i < kNumSpecials; ++i) {
    out += std::to_string(i) + "\t" + specials[i] + "\n";
  }
  for (std::size_t i = 0; i < chars_.size(); ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "U+%04X", static_cast<unsigned>(chars_[i]));
    out += std::to_string(kNumSpecials + static_cast<int>(i)) + "\t" + buf + "\n";
  }
  return out;
}

CharVocab CharVocab::Parse(std::string_view serialized) {
  CharVocab vocab;
  std::istringstream in{std::string(serialized)};
  std::string line;
  int expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error(ErrorKind::kCorruptCheckpoint, "bad vocab line");
    const int id = std::stoi(line.substr(0, tab));
    if (id != expected++) throw Error(ErrorKind::kCorruptCheckpoint, "vocab ids not dense");
    const std::string value = line.substr(tab + 1);
    if (id < kNumSpecials) continue;
    if (value.rfind("U+", 0) != 0) throw Error(ErrorKind::kCorruptCheckpoint, "bad codepoint");
    vocab.chars_.push_back(static_cast<char32_t>(std::stoul(value.substr(2), nullptr, 16)));
  }
  return vocab;
}

std::uint64_t CharVocab::Hash() const { return Fnv1a(Serialize()); }

std::vector<int> TokenIds(std::u32string_view letters, const CharVocab& vocab) {
  std::vector<int> ids;
  ids.reserve(letters.size());
  for (char32_t c : letters) ids.push_back(vocab.IdOf(c));
  return ids;
}

namespace {

std::vector<std::size_t> Order(std::size_t n, std::optional<std::uint64_t> seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (seed) {
    std::mt19937_64 rng(*seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  return order;
}

template <typename LengthFn, typename FillFn>
std::vector<Batch> Assemble(std::size_t n, int batch_size, int max_len,
                            std::optional<std::uint64_t> seed, LengthFn length, FillFn fill) {
  if (batch_size < 1) throw Error(ErrorKind::kInvalidConfig, "batch_size must be >= 1");
  for (std::size_t i = 0; i < n; ++i) {
    if (length(i) > static_cast<std::size_t>(max_len)) {
      throw Error(ErrorKind::kSequenceTooLong, "sequence " + std::to_string(i) + " has length " +
                                                   std::to_string(length(i)) + " > " +
                                                   std::to_string(max_len));
    }
  }
  const auto order = Order(n, seed);
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(n, start + static_cast<std::size_t>(batch_size));
    std::size_t width = 1;
    for (std::size_t k = start; k < end; ++k) width = std::max(width, length(order[k]));
    Batch b;
    const auto rows = static_cast<Eigen::Index>(end - start);
    const auto cols = static_cast<Eigen::Index>(width);
    b.token_ids = IdMatrix::Constant(rows, cols, CharVocab::kPad);
    b.label_ids = IdMatrix::Constant(rows, cols, kIgnore);
    b.attention_mask = IdMatrix::Zero(rows, cols);
    for (std::size_t k = start; k < end; ++k) {
      fill(order[k], static_cast<Eigen::Index>(k - start), b);
      b.source_index.push_back(order[k]);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace

std::vector<Batch> MakeBatches(std::span<const LabeledSequence> seqs, const CharVocab& vocab,
                               int batch_size, int max_len,
                               std::optional<std::uint64_t> shuffle_seed) {
  return Assemble(
      seqs.size(), batch_size, max_len, shuffle_seed,
      [&](std::size_t i) { return seqs[i].size(); },
      [&](std::size_t i, Eigen::Index row, Batch& b) {
        const auto& s = seqs[i];
        for (std::size_t t = 0; t < s.size(); ++t) {
          const auto col = static_cast<Eigen::Index>(t);
          b.token_ids(row, col) = vocab.IdOf(s.letters[t]);
          b.attention_mask(row, col) = 1;
          if (s.letters[t] != text::kSpace) b.label_ids(row, col) = text::ClassId(s.labels[t]);
        }
      });
}

std::vector<Batch> MakeTextBatches(std::span<const std::u32string> lines, const CharVocab& vocab,
                                   int batch_size, int max_len,
                                   std::optional<std::uint64_t> shuffle_seed) {
  return Assemble(
      lines.size(), batch_size, max_len, shuffle_seed,
      [&](std::size_t i) { return lines[i].size(); },
      [&](std::size_t i, Eigen::Index row, Batch& b) {
        for (std::size_t t = 0; t < lines[i].size(); ++t) {
          const auto col = static_cast<Eigen::Index>(t);
          b.token_ids(row, col) = vocab.IdOf(lines[i][t]);
          b.attention_mask(row, col) = 1;
        }
      });
}

std::string FormatRecord(const LabeledRecord& record) {
  std::string out = utf8::Encode(record.seq.letters);
  out += '\t';
  for (std::size_t i = 0; i < record.seq.labels.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(text::ClassId(record.seq.labels[i]));
  }
  if (record.provenance == Provenance::kPseudo) out += "\tpseudo";
  return out;
}

LabeledRecord ParseRecord(std::string_view line) {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorKind::kIo, "malformed labeled record (" + why + ")");
  };
  const auto tab = line.find('\t');
  if (tab == std::string_view::npos) fail("missing tab");
  LabeledRecord rec;
  rec.seq.letters = utf8::Decode(line.substr(0, tab));
  std::string_view rest = line.substr(tab + 1);
  const auto tab2 = rest.find('\t');
  if (tab2 != std::string_view::npos) {
    const std::string_view flag = rest.substr(tab2 + 1);
    if (flag == "pseudo") {
      rec.provenance = Provenance::kPseudo;
    } else if (flag != "gold") {
      fail("unknown provenance");
    }
    rest = rest.substr(0, tab2);
  }
  std::istringstream ids{std::string(rest)};
  int id;
  while (ids >> id) rec.seq.labels.push_back(text::ClassFromId(id));
  if (!ids.eof()) fail("non-numeric label");
  try {
    rec.seq.Validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  return rec;
}

std::vector<std::string> ReadLines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  if (in.bad()) throw Error(ErrorKind::kIo, "read failure on " + path.string());
  return lines;
}

void WriteLines(const std::filesystem::path& path, std::span<const std::string> lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw Error(ErrorKind::kIo, "write failure on " + path.string());
}

std::vector<LabeledRecord> ReadLabeledCorpus(const std::filesystem::path& path) {
  std::vector<LabeledRecord> records;
  for (const auto& line : ReadLines(path)) {
    if (line.empty()) continue;
    records.push_back(ParseRecord(line));
  }
  return records;
}

void WriteLabeledCorpus(const std::filesystem::path& path,
                        std::span<const LabeledRecord> records) {
  std::vector<std::string> lines;
  lines.reserve(records.size());
  for (const auto& r : records) lines.push_back(FormatRecord(r));
  WriteLines(path, lines);
}

}  // namespace atd::corpus
