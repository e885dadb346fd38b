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

#ifndef ATD_ERROR_HPP_
#define ATD_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace atd {

enum class ErrorKind {
  kMalformedUtf8,
  kInvalidMarkCombination,
  kNoLetters,
  kEmptyCorpus,
  kSequenceTooLong,
  kCountMismatch,
  kLengthExceeded,
  kPrefixLengthMismatch,
  kShapeMismatch,
  kAllIgnored,
  kNonFiniteGradient,
  kSkeletonMismatch,
  kEmptyEvaluationSet,
  kLineCountMismatch,
  kInvalidConfig,
  kIo,
  kCorruptCheckpoint,
};

std::string_view ErrorKindName(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMalformedUtf8: return "MalformedUtf8";
    case ErrorKind::kInvalidMarkCombination: return "InvalidMarkCombination";
    case ErrorKind::kNoLetters: return "NoLetters";
    case ErrorKind::kEmptyCorpus: return "EmptyCorpus";
    case ErrorKind::kSequenceTooLong: return "SequenceTooLong";
    case ErrorKind::kCountMismatch: return "CountMismatch";
    case ErrorKind::kLengthExceeded: return "LengthExceeded";
    case ErrorKind::kPrefixLengthMismatch: return "PrefixLengthMismatch";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kAllIgnored: return "AllIgnored";
    case ErrorKind::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::kSkeletonMismatch: return "SkeletonMismatch";
    case ErrorKind::kEmptyEvaluationSet: return "EmptyEvaluationSet";
    case ErrorKind::kLineCountMismatch: return "LineCountMismatch";
    case ErrorKind::kInvalidConfig: return "InvalidConfig";
    case ErrorKind::kIo: return "IoError";
    case ErrorKind::kCorruptCheckpoint: return "CorruptCheckpoint";
  }
  return "Unknown";
}

}  // namespace atd

#endif  // ATD_ERROR_HPP_
