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

#include "atd/model/config.hpp"

#include "atd/error.hpp"

namespace atd::model {

std::string_view ArchName(Arch arch) {
  switch (arch) {
    case Arch::kBert: return "bert";
    case Arch::kEncoderOnly: return "eo";
    case Arch::kEncoderDecoder: return "ed";
  }
  return "?";
}

Arch ParseArch(std::string_view name) {
  if (name == "bert") return Arch::kBert;
  if (name == "eo") return Arch::kEncoderOnly;
  if (name == "ed") return Arch::kEncoderDecoder;
  throw Error(ErrorKind::kInvalidConfig, "unknown architecture '" + std::string(name) + "'");
}

void ModelConfig::Validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kInvalidConfig, what); };
  if (d_model < 1) fail("d_model must be positive");
  if (n_heads < 1 || d_model % n_heads != 0) fail("d_model must be divisible by n_heads");
  if (n_layers_encoder < 0 || n_layers_decoder < 0) fail("layer counts must be >= 0");
  if (arch == Arch::kEncoderDecoder && n_layers_decoder < 1) {
    fail("encoder-decoder needs n_layers_decoder >= 1");
  }
  if (arch != Arch::kEncoderDecoder && n_layers_decoder != 0) {
    fail("n_layers_decoder must be 0 without a decoder");
  }
  if (ffn_dim < 1) fail("ffn_dim must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
  if (max_len < 1) fail("max_len must be >= 1");
  if (vocab_size < 5) fail("vocab_size must cover the special tokens and one character");
  if (n_classes != 15) fail("n_classes must be 15");
}

ModelConfig ModelConfig::Paper(Arch arch, int vocab_size) {
  ModelConfig c;
  c.arch = arch;
  c.d_model = 512;
  c.n_heads = 16;
  c.ffn_dim = 4 * 512;
  c.n_layers_encoder = arch == Arch::kEncoderDecoder ? 3 : 6;
  c.n_layers_decoder = arch == Arch::kEncoderDecoder ? 3 : 0;
  c.max_len = 1024;
  c.vocab_size = vocab_size;
  return c;
}

ModelConfig ModelConfig::Desk(Arch arch, int vocab_size) {
  ModelConfig c;
  c.arch = arch;
  c.d_model = 64;
  c.n_heads = 4;
  c.ffn_dim = 4 * 64;
  c.n_layers_encoder = arch == Arch::kEncoderDecoder ? 1 : 2;
  c.n_layers_decoder = arch == Arch::kEncoderDecoder ? 1 : 0;
  c.max_len = 1024;
  c.vocab_size = vocab_size;
  return c;
}

nlohmann::json ToJson(const ModelConfig& c) {
  return {{"arch", ArchName(c.arch)},         {"d_model", c.d_model},
          {"n_heads", c.n_heads},             {"n_layers_encoder", c.n_layers_encoder},
          {"n_layers_decoder", c.n_layers_decoder}, {"ffn_dim", c.ffn_dim},
          {"dropout", c.dropout},             {"max_len", c.max_len},
          {"vocab_size", c.vocab_size},       {"n_classes", c.n_classes}};
}

ModelConfig ModelConfigFromJson(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.arch = ParseArch(j.at("arch").get<std::string>());
    c.d_model = j.at("d_model").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.n_layers_encoder = j.at("n_layers_encoder").get<int>();
    c.n_layers_decoder = j.at("n_layers_decoder").get<int>();
    c.ffn_dim = j.at("ffn_dim").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.max_len = j.at("max_len").get<int>();
    c.vocab_size = j.at("vocab_size").get<int>();
    c.n_classes = j.at("n_classes").get<int>();
    c.Validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kInvalidConfig, std::string("model config: ") + e.what());
  }
}

}  // namespace atd::model
