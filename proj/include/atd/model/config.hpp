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

#ifndef ATD_MODEL_CONFIG_HPP_
#define ATD_MODEL_CONFIG_HPP_

#include <string>
#include <string_view>

#include "json.hpp"

namespace atd::model {

enum class Arch {
  kBert,            // encoder + masked-character head
  kEncoderOnly,     // encoder + diacritic classifier
  kEncoderDecoder,  // encoder + causal label decoder + diacritic classifier
};

std::string_view ArchName(Arch arch);
Arch ParseArch(std::string_view name);  // "bert" | "eo" | "ed"

// Decoder input alphabet: the 15 class ids plus BOS.
inline constexpr int kDecoderBos = 15;
inline constexpr int kDecoderVocab = 16;

struct ModelConfig {
  Arch arch = Arch::kEncoderOnly;
  int d_model = 64;
  int n_heads = 4;
  int n_layers_encoder = 2;
  int n_layers_decoder = 0;
  int ffn_dim = 256;
  double dropout = 0.10;
  int max_len = 1024;
  int vocab_size = 0;
  int n_classes = 15;

  // Throws kInvalidConfig naming the offending field.
  void Validate() const;
  int head_dim() const { return d_model / n_heads; }

  // Full-size setup: d_model 512, 16 heads, EO 6 layers,
  // ED 3 + 3, BERT 6.
  static ModelConfig Paper(Arch arch, int vocab_size);
  // Toy sizes used by tests: d_model 64, 4 heads, EO 2 layers, ED 1 + 1.
  static ModelConfig Desk(Arch arch, int vocab_size);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::json ToJson(const ModelConfig& config);
ModelConfig ModelConfigFromJson(const nlohmann::json& j);

}  // namespace atd::model

#endif  // ATD_MODEL_CONFIG_HPP_
