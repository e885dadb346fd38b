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

#ifndef ATD_MODEL_CHECKPOINT_HPP_
#define ATD_MODEL_CHECKPOINT_HPP_

// Checkpoint directory:
//   manifest.json  config, vocab hash, class-table hash, training info
//   vocab.tsv      id -> codepoint (CharVocab::Serialize)
//   params.bin     "ATDP" u32 version u32 count, then per array:
//                  u32 name_len, name bytes, u32 rows, u32 cols,
//                  rows*cols little-endian float32 in row-major order

#include <cstdint>
#include <filesystem>
#include <string>

#include "atd/corpus.hpp"
#include "atd/model/config.hpp"
#include "atd/model/parameters.hpp"
#include "json.hpp"

namespace atd::model {

struct Checkpoint {
  ModelConfig config;
  corpus::CharVocab vocab;
  Parameters<float> params;
  nlohmann::json info = nlohmann::json::object();  // step, epoch, metric history, ...
};

void SaveCheckpoint(const std::filesystem::path& dir, const Checkpoint& ckpt);
// Verifies vocab and class-table hashes and the array layout against the
// config. Throws kCorruptCheckpoint or kIo.
Checkpoint LoadCheckpoint(const std::filesystem::path& dir);

void WriteArrays(const std::filesystem::path& file, const Parameters<float>& arrays);
Parameters<float> ReadArrays(const std::filesystem::path& file);

std::string ClassTableHash();
std::string ParametersHash(const Parameters<float>& params);

}  // namespace atd::model

#endif  // ATD_MODEL_CHECKPOINT_HPP_
