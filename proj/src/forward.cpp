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

#include "atd/model/forward.hpp"

#include "atd/arabic_text.hpp"

namespace atd::model {

SequenceInput RowInput(const IdMatrix& tokens, const IdMatrix& mask, const IdMatrix* prefix,
                       Eigen::Index row) {
  SequenceInput in;
  for (Eigen::Index c = 0; c < tokens.cols(); ++c) {
    if (mask(row, c) == 0) continue;
    in.tokens.push_back(tokens(row, c));
    in.positions.push_back(static_cast<int>(c));
    if (prefix) in.prefix.push_back((*prefix)(row, c));
  }
  return in;
}

void CheckBatchShape(const ModelConfig& config, const IdMatrix& tokens, const IdMatrix& mask) {
  if (mask.rows() != tokens.rows() || mask.cols() != tokens.cols()) {
    throw Error(ErrorKind::kShapeMismatch, "attention mask shape differs from token batch");
  }
  if (tokens.cols() > config.max_len) {
    throw Error(ErrorKind::kLengthExceeded, "batch length " + std::to_string(tokens.cols()) +
                                                " exceeds max_len " +
                                                std::to_string(config.max_len));
  }
}

IdMatrix TeacherForcingPrefix(const IdMatrix& labels, const IdMatrix& mask) {
  IdMatrix prefix = IdMatrix::Constant(labels.rows(), labels.cols(), kDecoderBos);
  const int space_label = text::ClassId(text::DiacriticClass::kNoTashkeel);
  for (Eigen::Index r = 0; r < labels.rows(); ++r) {
    int previous = kDecoderBos;
    for (Eigen::Index c = 0; c < labels.cols(); ++c) {
      if (mask(r, c) == 0) continue;
      prefix(r, c) = previous;
      previous = labels(r, c) == kIgnore ? space_label : labels(r, c);
    }
  }
  return prefix;
}

}  // namespace atd::model
