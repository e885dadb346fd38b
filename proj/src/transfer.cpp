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

#include "atd/model/transfer.hpp"

#include "atd/error.hpp"

namespace atd::model {
namespace {

void Mismatch(const std::string& what) { throw Error(ErrorKind::kShapeMismatch, what); }

void MapLinear(std::vector<std::pair<std::string, std::string>>& out, const std::string& dst,
               const std::string& src) {
  out.emplace_back(dst + ".weight", src + ".weight");
  out.emplace_back(dst + ".bias", src + ".bias");
}

void MapNorm(std::vector<std::pair<std::string, std::string>>& out, const std::string& dst,
             const std::string& src) {
  out.emplace_back(dst + ".gain", src + ".gain");
  out.emplace_back(dst + ".bias", src + ".bias");
}

void MapAttention(std::vector<std::pair<std::string, std::string>>& out, const std::string& dst,
                  const std::string& src) {
  for (const char* proj : {".query", ".key", ".value", ".output"}) {
    MapLinear(out, dst + proj, src + proj);
  }
}

void MapFfn(std::vector<std::pair<std::string, std::string>>& out, const std::string& dst,
            const std::string& src) {
  MapLinear(out, dst + ".up", src + ".up");
  MapLinear(out, dst + ".down", src + ".down");
}

}  // namespace

nlohmann::json TransferReport::ToJson() const {
  nlohmann::json copied_json = nlohmann::json::array();
  for (const auto& [dst, src] : copied) copied_json.push_back({{"target", dst}, {"source", src}});
  return {{"copied", copied_json}, {"fresh", fresh}};
}

std::vector<std::pair<std::string, std::string>> TransferMapping(const ModelConfig& bert,
                                                                 const ModelConfig& target) {
  bert.Validate();
  target.Validate();
  if (bert.arch != Arch::kBert) Mismatch("transfer source must be a BERT model");
  if (target.arch == Arch::kBert) Mismatch("transfer target must be EO or ED");
  if (bert.d_model != target.d_model) Mismatch("d_model differs");
  if (bert.n_heads != target.n_heads) Mismatch("n_heads differs");
  if (bert.ffn_dim != target.ffn_dim) Mismatch("ffn_dim differs");
  if (bert.vocab_size != target.vocab_size) Mismatch("vocab_size differs");
  if (bert.max_len != target.max_len) Mismatch("max_len differs");
  if (target.n_layers_encoder + target.n_layers_decoder != bert.n_layers_encoder) {
    Mismatch("target has " + std::to_string(target.n_layers_encoder + target.n_layers_decoder) +
             " layers, pretrained model has " + std::to_string(bert.n_layers_encoder));
  }

  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("embed.token", "embed.token");
  out.emplace_back("embed.position", "embed.position");
  for (int l = 0; l < target.n_layers_encoder; ++l) {
    const std::string p = "encoder." + std::to_string(l);
    MapNorm(out, p + ".attn_norm", p + ".attn_norm");
    MapAttention(out, p + ".self_attn", p + ".self_attn");
    MapNorm(out, p + ".ffn_norm", p + ".ffn_norm");
    MapFfn(out, p + ".ffn", p + ".ffn");
  }
  MapNorm(out, "encoder.final_norm", "encoder.final_norm");
  if (target.arch == Arch::kEncoderDecoder) {
    out.emplace_back("decoder.embed.position", "embed.position");
    for (int l = 0; l < target.n_layers_decoder; ++l) {
      const std::string dst = "decoder." + std::to_string(l);
      const std::string src = "encoder." + std::to_string(target.n_layers_encoder + l);
      MapNorm(out, dst + ".self_attn_norm", src + ".attn_norm");
      MapAttention(out, dst + ".self_attn", src + ".self_attn");
      MapNorm(out, dst + ".ffn_norm", src + ".ffn_norm");
      MapFfn(out, dst + ".ffn", src + ".ffn");
    }
    MapNorm(out, "decoder.final_norm", "encoder.final_norm");
  }
  return out;
}

}  // namespace atd::model
