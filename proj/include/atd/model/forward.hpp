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

#ifndef ATD_MODEL_FORWARD_HPP_
#define ATD_MODEL_FORWARD_HPP_

// Batched entry points. A batch is [B x L] token ids with a 0/1 attention
// mask; each row is reduced to its unmasked positions before the model runs,
// so outputs at real positions never depend on what sits under the padding.
// Masked positions get all-zero outputs.

#include <cstdint>
#include <random>
#include <vector>

#include "atd/error.hpp"
#include "atd/model/transformer.hpp"
#include "atd/types.hpp"

namespace atd::model {

template <typename Scalar>
struct ForwardOutput {
  std::vector<Matrix<Scalar>> logits;  // one [L x classes-or-vocab] block per row
};

inline std::uint64_t RowSeed(std::uint64_t seed, std::size_t row) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(row) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Unmasked columns of row r, with the tokens (and decoder inputs) there.
SequenceInput RowInput(const IdMatrix& tokens, const IdMatrix& mask, const IdMatrix* prefix,
                       Eigen::Index row);

void CheckBatchShape(const ModelConfig& config, const IdMatrix& tokens, const IdMatrix& mask);

template <typename Scalar>
Matrix<Scalar> Scatter(const Matrix<Scalar>& compact, const std::vector<int>& columns,
                       Eigen::Index length) {
  Matrix<Scalar> full = Matrix<Scalar>::Zero(length, compact.cols());
  for (std::size_t i = 0; i < columns.size(); ++i) {
    full.row(columns[i]) = compact.row(static_cast<Eigen::Index>(i));
  }
  return full;
}

template <typename Scalar>
Matrix<Scalar> Gather(const Matrix<Scalar>& full, const std::vector<int>& columns) {
  Matrix<Scalar> compact(static_cast<Eigen::Index>(columns.size()), full.cols());
  for (std::size_t i = 0; i < columns.size(); ++i) {
    compact.row(static_cast<Eigen::Index>(i)) = full.row(columns[i]);
  }
  return compact;
}

// Hidden states [L x d_model] per row.
template <typename Scalar>
std::vector<Matrix<Scalar>> EncoderForward(const Parameters<Scalar>& params,
                                           const ModelConfig& config, const IdMatrix& tokens,
                                           const IdMatrix& mask, bool train_mode,
                                           std::uint64_t dropout_seed = 0) {
  CheckBatchShape(config, tokens, mask);
  const Transformer<Scalar> model(config, params);
  std::vector<Matrix<Scalar>> out;
  for (Eigen::Index r = 0; r < tokens.rows(); ++r) {
    const SequenceInput in = RowInput(tokens, mask, nullptr, r);
    std::mt19937_64 rng(RowSeed(dropout_seed, static_cast<std::size_t>(r)));
    out.push_back(Scatter<Scalar>(model.Encode(in, train_mode ? &rng : nullptr, nullptr),
                                  in.positions, tokens.cols()));
  }
  return out;
}

namespace detail {

template <typename Scalar>
ForwardOutput<Scalar> RunHead(const Parameters<Scalar>& params, const ModelConfig& config,
                              const IdMatrix& tokens, const IdMatrix& mask,
                              const IdMatrix* prefix, bool train_mode,
                              std::uint64_t dropout_seed) {
  CheckBatchShape(config, tokens, mask);
  const Transformer<Scalar> model(config, params);
  ForwardOutput<Scalar> out;
  for (Eigen::Index r = 0; r < tokens.rows(); ++r) {
    const SequenceInput in = RowInput(tokens, mask, prefix, r);
    std::mt19937_64 rng(RowSeed(dropout_seed, static_cast<std::size_t>(r)));
    out.logits.push_back(Scatter<Scalar>(model.Forward(in, train_mode ? &rng : nullptr, nullptr),
                                         in.positions, tokens.cols()));
  }
  return out;
}

inline void RequireArch(const ModelConfig& config, Arch arch) {
  if (config.arch != arch) {
    throw Error(ErrorKind::kInvalidConfig, "operation needs a '" + std::string(ArchName(arch)) +
                                               "' model, got '" +
                                               std::string(ArchName(config.arch)) + "'");
  }
}

}  // namespace detail

// Per-position diacritic logits conditioned on the whole input.
template <typename Scalar>
ForwardOutput<Scalar> EoForward(const Parameters<Scalar>& params, const ModelConfig& config,
                                const IdMatrix& tokens, const IdMatrix& mask, bool train_mode,
                                std::uint64_t dropout_seed = 0) {
  detail::RequireArch(config, Arch::kEncoderOnly);
  return detail::RunHead(params, config, tokens, mask, nullptr, train_mode, dropout_seed);
}

// Vocabulary logits at every position.
template <typename Scalar>
ForwardOutput<Scalar> MlmForward(const Parameters<Scalar>& params, const ModelConfig& config,
                                 const IdMatrix& tokens, const IdMatrix& mask, bool train_mode,
                                 std::uint64_t dropout_seed = 0) {
  detail::RequireArch(config, Arch::kBert);
  return detail::RunHead(params, config, tokens, mask, nullptr, train_mode, dropout_seed);
}

// Teacher-forced decoder logits; label_prefix holds BOS-shifted class ids.
template <typename Scalar>
ForwardOutput<Scalar> EdForward(const Parameters<Scalar>& params, const ModelConfig& config,
                                const IdMatrix& tokens, const IdMatrix& mask,
                                const IdMatrix& label_prefix, bool train_mode,
                                std::uint64_t dropout_seed = 0) {
  detail::RequireArch(config, Arch::kEncoderDecoder);
  if (label_prefix.rows() != tokens.rows() || label_prefix.cols() != tokens.cols()) {
    throw Error(ErrorKind::kPrefixLengthMismatch, "label prefix shape differs from token batch");
  }
  return detail::RunHead(params, config, tokens, mask, &label_prefix, train_mode, dropout_seed);
}

// Greedy decoding, lowest class id on ties. Masked positions get kIgnore.
// forced(r, c) >= 0 pins the label at that position (and feeds it forward).
template <typename Scalar>
IdMatrix GreedyDecode(const Parameters<Scalar>& params, const ModelConfig& config,
                      const IdMatrix& tokens, const IdMatrix& mask,
                      const IdMatrix* forced = nullptr,
                      std::vector<Matrix<Scalar>>* step_logits = nullptr) {
  detail::RequireArch(config, Arch::kEncoderDecoder);
  CheckBatchShape(config, tokens, mask);
  const Transformer<Scalar> model(config, params);
  IdMatrix labels = IdMatrix::Constant(tokens.rows(), tokens.cols(), kIgnore);
  if (step_logits) step_logits->clear();
  for (Eigen::Index r = 0; r < tokens.rows(); ++r) {
    const SequenceInput in = RowInput(tokens, mask, nullptr, r);
    std::vector<int> pinned;
    if (forced) {
      for (int c : in.positions) pinned.push_back((*forced)(r, c));
    }
    const auto result = model.GreedyDecode(in, forced ? &pinned : nullptr);
    for (std::size_t i = 0; i < in.positions.size(); ++i) {
      labels(r, in.positions[i]) = result.labels[i];
    }
    if (step_logits) step_logits->push_back(Scatter<Scalar>(result.logits, in.positions, tokens.cols()));
  }
  return labels;
}

// Decoder inputs for teacher forcing: BOS, then each position's label shifted
// right by one. Ignored labels at real positions are spaces, fed as
// NoTashkeel.
IdMatrix TeacherForcingPrefix(const IdMatrix& labels, const IdMatrix& mask);

// Forward pass that keeps per-row activations for a later Backward.
template <typename Scalar>
class BatchGraph {
 public:
  BatchGraph(const Parameters<Scalar>& params, const ModelConfig& config)
      : model_(config, params) {}

  std::vector<Matrix<Scalar>> Forward(const IdMatrix& tokens, const IdMatrix& mask,
                                      const IdMatrix* prefix, bool train_mode,
                                      std::uint64_t dropout_seed) {
    CheckBatchShape(model_.config(), tokens, mask);
    if (model_.config().arch == Arch::kEncoderDecoder) {
      if (!prefix || prefix->rows() != tokens.rows() || prefix->cols() != tokens.cols()) {
        throw Error(ErrorKind::kPrefixLengthMismatch, "label prefix shape differs from token batch");
      }
    }
    length_ = tokens.cols();
    caches_.assign(static_cast<std::size_t>(tokens.rows()), {});
    std::vector<Matrix<Scalar>> logits;
    for (Eigen::Index r = 0; r < tokens.rows(); ++r) {
      const SequenceInput in = RowInput(tokens, mask, prefix, r);
      std::mt19937_64 rng(RowSeed(dropout_seed, static_cast<std::size_t>(r)));
      auto& cache = caches_[static_cast<std::size_t>(r)];
      logits.push_back(Scatter<Scalar>(model_.Forward(in, train_mode ? &rng : nullptr, &cache),
                                       in.positions, length_));
    }
    return logits;
  }

  // Accumulates into `grads`, which must share the parameter layout.
  void Backward(const std::vector<Matrix<Scalar>>& dlogits, Parameters<Scalar>& grads) const {
    for (std::size_t r = 0; r < caches_.size(); ++r) {
      const auto& cache = caches_[r];
      model_.Backward(cache, Gather<Scalar>(dlogits[r], cache.input.positions), grads);
    }
  }

 private:
  Transformer<Scalar> model_;
  std::vector<typename Transformer<Scalar>::SequenceCache> caches_;
  Eigen::Index length_ = 0;
};

}  // namespace atd::model

#endif  // ATD_MODEL_FORWARD_HPP_
