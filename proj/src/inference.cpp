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

#include "atd/inference.hpp"

#include <algorithm>

#include "atd/error.hpp"
#include "atd/model/forward.hpp"
#include "atd/utf8.hpp"

namespace atd {
namespace {

using text::DiacriticClass;

// Row r's predicted class at column c: argmax with ties to the lowest id.
int Argmax(const model::Matrix<float>& logits, Eigen::Index c) {
  int best = 0;
  for (Eigen::Index k = 1; k < logits.cols(); ++k) {
    if (logits(c, k) > logits(c, best)) best = static_cast<int>(k);
  }
  return best;
}

}  // namespace

std::vector<text::LabeledSequence> Predict(const model::Parameters<float>& params,
                                           const model::ModelConfig& config,
                                           const corpus::CharVocab& vocab,
                                           std::span<const std::u32string> skeletons,
                                           int batch_size) {
  if (batch_size < 1) throw Error(ErrorKind::kInvalidConfig, "batch_size must be positive");
  if (config.arch == model::Arch::kBert) {
    throw Error(ErrorKind::kInvalidConfig, "a bert checkpoint cannot diacritize");
  }
  std::vector<text::LabeledSequence> out(skeletons.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < skeletons.size(); ++i) {
    out[i].letters = skeletons[i];
    out[i].labels.assign(skeletons[i].size(), DiacriticClass::kNoTashkeel);
    if (static_cast<int>(skeletons[i].size()) > config.max_len) {
      throw Error(ErrorKind::kLengthExceeded, "skeleton of " + std::to_string(skeletons[i].size()) +
                                                  " characters exceeds max_len " +
                                                  std::to_string(config.max_len));
    }
    if (!skeletons[i].empty()) pending.push_back(i);
  }
  const int no_tashkeel = text::ClassId(DiacriticClass::kNoTashkeel);
  for (std::size_t begin = 0; begin < pending.size(); begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(pending.size(), begin + static_cast<std::size_t>(batch_size));
    std::size_t longest = 0;
    for (std::size_t k = begin; k < end; ++k) longest = std::max(longest, skeletons[pending[k]].size());
    const auto rows = static_cast<Eigen::Index>(end - begin);
    const auto cols = static_cast<Eigen::Index>(longest);
    IdMatrix tokens = IdMatrix::Constant(rows, cols, corpus::CharVocab::kPad);
    IdMatrix mask = IdMatrix::Zero(rows, cols);
    IdMatrix forced = IdMatrix::Constant(rows, cols, kIgnore);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto& s = skeletons[pending[begin + static_cast<std::size_t>(r)]];
      for (std::size_t t = 0; t < s.size(); ++t) {
        const auto c = static_cast<Eigen::Index>(t);
        tokens(r, c) = vocab.IdOf(s[t]);
        mask(r, c) = 1;
        if (s[t] == text::kSpace) forced(r, c) = no_tashkeel;
      }
    }
    IdMatrix labels;
    if (config.arch == model::Arch::kEncoderDecoder) {
      labels = model::GreedyDecode(params, config, tokens, mask, &forced);
    } else {
      const auto fwd = model::EoForward(params, config, tokens, mask, false);
      labels = forced;
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          if (mask(r, c) && labels(r, c) == kIgnore) {
            labels(r, c) = Argmax(fwd.logits[static_cast<std::size_t>(r)], c);
          }
        }
      }
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      auto& seq = out[pending[begin + static_cast<std::size_t>(r)]];
      for (std::size_t t = 0; t < seq.letters.size(); ++t) {
        seq.labels[t] = text::ClassFromId(labels(r, static_cast<Eigen::Index>(t)));
      }
    }
  }
  return out;
}

namespace {

// A segment's model view: Arabic letters, with every non-letter run between
// two letters collapsed to one space. letter_at[i] is the segment index of
// model position i, or npos for a space.
struct SegmentView {
  std::u32string skeleton;
  std::vector<std::size_t> letter_at;
};

SegmentView ViewOf(const std::u32string& segment) {
  SegmentView view;
  bool gap = false;
  for (std::size_t i = 0; i < segment.size(); ++i) {
    if (text::Classify(segment[i]) != text::CodepointKind::kArabicLetter) {
      gap = true;
      continue;
    }
    if (gap && !view.skeleton.empty()) {
      view.skeleton.push_back(text::kSpace);
      view.letter_at.push_back(std::u32string::npos);
    }
    gap = false;
    view.skeleton.push_back(segment[i]);
    view.letter_at.push_back(i);
  }
  return view;
}

}  // namespace

std::vector<std::string> DiacritizeLines(const model::Checkpoint& checkpoint,
                                         std::span<const std::string> lines, int batch_size) {
  struct Piece {
    std::size_t line;
    std::u32string segment;
    std::string separator;
    SegmentView view;
  };
  std::vector<Piece> pieces;
  for (std::size_t l = 0; l < lines.size(); ++l) {
    // Existing marks are removed before anything else; everything else stays.
    std::u32string bare;
    for (char32_t cp : utf8::Decode(lines[l])) {
      if (text::Classify(cp) != text::CodepointKind::kDiacriticMark) bare.push_back(cp);
    }
    for (auto& chunk : corpus::ChunkForInference(utf8::Encode(bare),
                                                 static_cast<std::size_t>(checkpoint.config.max_len))) {
      Piece p{l, utf8::Decode(chunk.segment), std::move(chunk.separator), {}};
      p.view = ViewOf(p.segment);
      pieces.push_back(std::move(p));
    }
  }
  std::vector<std::u32string> skeletons;
  skeletons.reserve(pieces.size());
  for (const auto& p : pieces) skeletons.push_back(p.view.skeleton);
  const auto predicted =
      Predict(checkpoint.params, checkpoint.config, checkpoint.vocab, skeletons, batch_size);

  std::vector<std::vector<std::string>> segments(lines.size());
  std::vector<std::vector<std::string>> separators(lines.size());
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    const auto& p = pieces[k];
    std::vector<DiacriticClass> mark_after(p.segment.size(), DiacriticClass::kNoTashkeel);
    for (std::size_t i = 0; i < p.view.letter_at.size(); ++i) {
      if (p.view.letter_at[i] != std::u32string::npos) {
        mark_after[p.view.letter_at[i]] = predicted[k].labels[i];
      }
    }
    std::u32string out;
    for (std::size_t i = 0; i < p.segment.size(); ++i) {
      out.push_back(p.segment[i]);
      out += text::CanonicalMarks(mark_after[i]);
    }
    segments[p.line].push_back(utf8::Encode(out));
    separators[p.line].push_back(p.separator);
  }
  std::vector<std::string> result;
  result.reserve(lines.size());
  for (std::size_t l = 0; l < lines.size(); ++l) {
    result.push_back(corpus::Recombine(segments[l], separators[l]));
  }
  return result;
}

}  // namespace atd
