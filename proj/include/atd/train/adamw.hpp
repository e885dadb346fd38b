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

#ifndef ATD_TRAIN_ADAMW_HPP_
#define ATD_TRAIN_ADAMW_HPP_

#include <cmath>
#include <cstdint>

#include "atd/error.hpp"
#include "atd/model/parameters.hpp"

namespace atd::train {

using model::Parameters;

struct AdamWConfig {
  double lr = 3e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-2;
};

template <typename Scalar>
struct AdamWState {
  std::int64_t step = 0;
  Parameters<Scalar> first_moment;
  Parameters<Scalar> second_moment;
};

template <typename Scalar>
AdamWState<Scalar> InitAdamW(const Parameters<Scalar>& params) {
  return {0, params.ZerosLike(), params.ZerosLike()};
}

// Decoupled weight decay:
//   w <- w (1 - lr wd) - lr m_hat / (sqrt(v_hat) + eps)
// A non-finite gradient aborts before anything is modified.
template <typename Scalar>
void AdamWStep(Parameters<Scalar>& params, const Parameters<Scalar>& grads,
               AdamWState<Scalar>& state, const AdamWConfig& config) {
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i].allFinite()) {
      throw Error(ErrorKind::kNonFiniteGradient, "non-finite gradient in " + grads.name(i));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const auto b1 = static_cast<Scalar>(config.beta1);
  const auto b2 = static_cast<Scalar>(config.beta2);
  const auto c1 = static_cast<Scalar>(1.0 / (1.0 - std::pow(config.beta1, t)));
  const auto c2 = static_cast<Scalar>(1.0 / (1.0 - std::pow(config.beta2, t)));
  const auto lr = static_cast<Scalar>(config.lr);
  const auto decay = static_cast<Scalar>(1.0 - config.lr * config.weight_decay);
  const auto eps = static_cast<Scalar>(config.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    const auto& g = grads[i];
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
    params[i] = decay * params[i] -
                lr * ((m * c1).array() / ((v * c2).array().sqrt() + eps)).matrix();
  }
}

}  // namespace atd::train

#endif  // ATD_TRAIN_ADAMW_HPP_
