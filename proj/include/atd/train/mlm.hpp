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

#ifndef ATD_TRAIN_MLM_HPP_
#define ATD_TRAIN_MLM_HPP_

#include <random>

#include "atd/types.hpp"

namespace atd::train {

struct MaskedBatch {
  IdMatrix tokens;     // corrupted input
  IdMatrix targets;    // original id at selected positions, kIgnore elsewhere
  IdMatrix loss_mask;  // 1 exactly at selected positions
};

// Each unpadded position is selected with probability mask_prob; a selected
// token becomes MASK (80%), a random character id (10%) or stays (10%).
MaskedBatch MlmMask(const IdMatrix& tokens, const IdMatrix& attention_mask, double mask_prob,
                    int vocab_size, std::mt19937_64& rng);

}  // namespace atd::train

#endif  // ATD_TRAIN_MLM_HPP_
