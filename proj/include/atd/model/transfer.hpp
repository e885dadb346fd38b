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

#ifndef ATD_MODEL_TRANSFER_HPP_
#define ATD_MODEL_TRANSFER_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "atd/model/config.hpp"
#include "atd/model/parameters.hpp"
#include "json.hpp"

namespace atd::model {

struct TransferReport {
  std::vector<std::pair<std::string, std::string>> copied;  // (target, source)
  std::vector<std::string> fresh;                           // kept from a seeded init

  nlohmann::json ToJson() const;
};

// Which pretrained arrays seed which target arrays.
//   EO: embeddings, every encoder layer and the final norm; new classifier.
//   ED: embeddings; encoder layers <- the first n_layers_encoder BERT layers;
//       decoder self-attention / FFN (and their norms) <- the remaining
//       layers; decoder positions and final norm <- BERT's. Label embedding,
//       cross-attention and classifier start fresh.
// Throws kShapeMismatch when the configurations cannot be mapped.
std::vector<std::pair<std::string, std::string>> TransferMapping(const ModelConfig& bert,
                                                                 const ModelConfig& target);

template <typename Scalar>
Parameters<Scalar> TransferPretrained(const Parameters<Scalar>& bert_params,
                                      const ModelConfig& bert, const ModelConfig& target,
                                      std::uint64_t seed, TransferReport* report = nullptr) {
  const auto mapping = TransferMapping(bert, target);
  Parameters<Scalar> out = InitParameters<Scalar>(target, seed);
  TransferReport local;
  std::vector<bool> copied(out.size(), false);
  for (const auto& [dst, src] : mapping) {
    auto& to = out.at(dst);
    const auto& from = bert_params.at(src);
    if (to.rows() != from.rows() || to.cols() != from.cols()) {
      throw Error(ErrorKind::kShapeMismatch, "cannot copy " + src + " into " + dst);
    }
    to = from;
    copied[out.IndexOf(dst)] = true;
    local.copied.emplace_back(dst, src);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!copied[i]) local.fresh.push_back(out.name(i));
  }
  if (report) *report = std::move(local);
  return out;
}

}  // namespace atd::model

#endif  // ATD_MODEL_TRANSFER_HPP_
