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

#ifndef ATD_TRAIN_LOSS_HPP_
#define ATD_TRAIN_LOSS_HPP_

#include <cmath>
#include <vector>

#include "atd/error.hpp"
#include "atd/model/parameters.hpp"
#include "atd/types.hpp"

namespace atd::train {

using model::Matrix;

template <typename Scalar>
struct CrossEntropyResult {
  double loss = 0.0;             // mean NLL over counted positions
  std::size_t counted = 0;
  std::vector<Matrix<Scalar>> dlogits;
};

// Mean negative log-likelihood over positions whose target is not kIgnore.
// d loss / d logits = (softmax - onehot) / counted at counted positions and
// zero elsewhere. Throws kAllIgnored when nothing is counted.
template <typename Scalar>
CrossEntropyResult<Scalar> CrossEntropy(const std::vector<Matrix<Scalar>>& logits,
                                        const IdMatrix& targets) {
  if (static_cast<Eigen::Index>(logits.size()) != targets.rows()) {
    throw Error(ErrorKind::kShapeMismatch, "logits and targets differ in batch size");
  }
  CrossEntropyResult<Scalar> out;
  for (Eigen::Index r = 0; r < targets.rows(); ++r) {
    if (logits[static_cast<std::size_t>(r)].rows() != targets.cols()) {
      throw Error(ErrorKind::kShapeMismatch, "logits and targets differ in length");
    }
    for (Eigen::Index c = 0; c < targets.cols(); ++c) {
      if (targets(r, c) != kIgnore) ++out.counted;
    }
  }
  if (out.counted == 0) throw Error(ErrorKind::kAllIgnored, "no target positions to score");
  const Scalar inv = static_cast<Scalar>(1.0 / static_cast<double>(out.counted));
  double total = 0.0;
  for (Eigen::Index r = 0; r < targets.rows(); ++r) {
    const auto& z = logits[static_cast<std::size_t>(r)];
    Matrix<Scalar> grad = Matrix<Scalar>::Zero(z.rows(), z.cols());
    for (Eigen::Index c = 0; c < targets.cols(); ++c) {
      const int t = targets(r, c);
      if (t == kIgnore) continue;
      if (t < 0 || t >= z.cols()) throw Error(ErrorKind::kShapeMismatch, "target id out of range");
      const Scalar max = z.row(c).maxCoeff();
      const auto shifted = (z.row(c).array() - max).eval();
      const Scalar sum = shifted.exp().sum();
      total -= static_cast<double>(shifted(t)) - std::log(static_cast<double>(sum));
      grad.row(c) = shifted.exp() / sum;
      grad(c, t) -= Scalar(1);
      grad.row(c) *= inv;
    }
    out.dlogits.push_back(std::move(grad));
  }
  out.loss = total / static_cast<double>(out.counted);
  return out;
}

}  // namespace atd::train

#endif  // ATD_TRAIN_LOSS_HPP_
