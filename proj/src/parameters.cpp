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

#include "atd/model/parameters.hpp"

#include <string>

namespace atd::model {
namespace {

void AddNorm(std::vector<ParamSpec>& out, const std::string& prefix, int d) {
  out.push_back({prefix + ".gain", 1, d, InitKind::kOnes});
  out.push_back({prefix + ".bias", 1, d, InitKind::kZeros});
}

void AddLinear(std::vector<ParamSpec>& out, const std::string& prefix, int in, int outdim) {
  out.push_back({prefix + ".weight", in, outdim, InitKind::kNormal});
  out.push_back({prefix + ".bias", 1, outdim, InitKind::kZeros});
}

void AddAttention(std::vector<ParamSpec>& out, const std::string& prefix, int d) {
  for (const char* proj : {"query", "key", "value", "output"}) {
    AddLinear(out, prefix + "." + proj, d, d);
  }
}

void AddFfn(std::vector<ParamSpec>& out, const std::string& prefix, int d, int f) {
  AddLinear(out, prefix + ".up", d, f);
  AddLinear(out, prefix + ".down", f, d);
}

}  // namespace

std::vector<ParamSpec> ParameterLayout(const ModelConfig& c) {
  c.Validate();
  const int d = c.d_model;
  std::vector<ParamSpec> out;
  out.push_back({"embed.token", c.vocab_size, d, InitKind::kNormal});
  out.push_back({"embed.position", c.max_len, d, InitKind::kNormal});
  for (int l = 0; l < c.n_layers_encoder; ++l) {
    const std::string p = "encoder." + std::to_string(l);
    AddNorm(out, p + ".attn_norm", d);
    AddAttention(out, p + ".self_attn", d);
    AddNorm(out, p + ".ffn_norm", d);
    AddFfn(out, p + ".ffn", d, c.ffn_dim);
  }
  AddNorm(out, "encoder.final_norm", d);
  if (c.arch == Arch::kBert) AddLinear(out, "mlm_head", d, c.vocab_size);
  if (c.arch == Arch::kEncoderDecoder) {
    out.push_back({"decoder.embed.label", kDecoderVocab, d, InitKind::kNormal});
    out.push_back({"decoder.embed.position", c.max_len, d, InitKind::kNormal});
    for (int l = 0; l < c.n_layers_decoder; ++l) {
      const std::string p = "decoder." + std::to_string(l);
      AddNorm(out, p + ".self_attn_norm", d);
      AddAttention(out, p + ".self_attn", d);
      AddNorm(out, p + ".cross_attn_norm", d);
      AddAttention(out, p + ".cross_attn", d);
      AddNorm(out, p + ".ffn_norm", d);
      AddFfn(out, p + ".ffn", d, c.ffn_dim);
    }
    AddNorm(out, "decoder.final_norm", d);
  }
  if (c.arch != Arch::kBert) AddLinear(out, "diacritic_head", d, c.n_classes);
  return out;
}

}  // namespace atd::model
