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

#ifndef ATD_INFERENCE_HPP_
#define ATD_INFERENCE_HPP_

#include <span>
#include <string>
#include <vector>

#include "atd/arabic_text.hpp"
#include "atd/corpus.hpp"
#include "atd/model/checkpoint.hpp"
#include "atd/model/config.hpp"
#include "atd/model/parameters.hpp"

namespace atd {

// Labels for undiacritized skeletons (letters and single spaces). EO takes
// the per-position argmax, ED decodes greedily; spaces are always
// NoTashkeel. Skeletons must fit in max_len.
std::vector<text::LabeledSequence> Predict(const model::Parameters<float>& params,
                                           const model::ModelConfig& config,
                                           const corpus::CharVocab& vocab,
                                           std::span<const std::u32string> skeletons,
                                           int batch_size = 64);

// Full inference on raw lines. Existing marks are dropped and every
// punctuation-delimited segment is diacritized on its own (long segments are
// split again at spaces) before the original separators are put back.
std::vector<std::string> DiacritizeLines(const model::Checkpoint& checkpoint,
                                         std::span<const std::string> lines,
                                         int batch_size = 64);

}  // namespace atd

#endif  // ATD_INFERENCE_HPP_
