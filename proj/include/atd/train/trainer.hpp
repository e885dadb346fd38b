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

#ifndef ATD_TRAIN_TRAINER_HPP_
#define ATD_TRAIN_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "atd/arabic_text.hpp"
#include "atd/corpus.hpp"
#include "atd/model/checkpoint.hpp"
#include "atd/model/config.hpp"
#include "atd/train/adamw.hpp"
#include "json.hpp"

namespace atd::train {

using text::LabeledSequence;

struct TrainConfig {
  double lr = 3e-5;
  double weight_decay = 1e-2;
  int batch_size = 32;
  int max_epochs = 200;
  int patience = 5;
  double mask_prob = 0.15;
  std::uint64_t seed = 0;
  double eval_fraction = 0.02;
  int snapshot_epoch = 5;
  int eval_batch_size = 64;

  void Validate() const;  // throws kInvalidConfig
  static TrainConfig Paper();
  static TrainConfig Desk();

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

nlohmann::json ToJson(const TrainConfig& config);
TrainConfig TrainConfigFromJson(const nlohmann::json& j);

// Lower is better. Stops once `patience` epochs pass without a new best.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  // Returns true when `metric` improves on the best so far.
  bool Update(double metric);
  bool ShouldStop() const { return epochs_since_best_ >= patience_; }

  double best() const { return best_; }
  int best_epoch() const { return best_epoch_; }
  int epochs_since_best() const { return epochs_since_best_; }
  int epochs_seen() const { return epochs_seen_; }

  void Restore(double best, int best_epoch, int epochs_since_best, int epochs_seen);

 private:
  int patience_;
  double best_ = std::numeric_limits<double>::infinity();
  int best_epoch_ = 0;
  int epochs_since_best_ = 0;
  int epochs_seen_ = 0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::optional<double> val_der;  // fine-tuning only, CE, as a fraction

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

nlohmann::json ToJson(const EpochRecord& record);
EpochRecord EpochRecordFromJson(const nlohmann::json& j);

enum class InitMode { kScratch, kPretrained, kWarmStart };

InitMode ParseInitMode(std::string_view name);  // scratch | pretrained | warm_start

struct FinetuneSpec {
  model::Arch arch = model::Arch::kEncoderOnly;
  InitMode init = InitMode::kScratch;
  const model::Checkpoint* init_checkpoint = nullptr;  // pretrained BERT or warm-start model
  model::ModelConfig model;  // target architecture; warm starts keep the checkpoint's
  TrainConfig train;
  corpus::CharVocab vocab;  // ignored when a checkpoint supplies one
  std::vector<LabeledSequence> corpus;
  // Empty: a seeded eval_fraction of `corpus` is held out instead.
  std::vector<LabeledSequence> validation;
  std::filesystem::path run_dir;  // empty: nothing is written
  bool resume = false;            // continue from run_dir/last
};

struct FinetuneResult {
  std::vector<EpochRecord> history;
  model::Checkpoint best;
  model::Checkpoint last;
  std::optional<model::Checkpoint> snapshot;  // after snapshot_epoch epochs
  int best_epoch = 0;
  bool stopped_early = false;
};

// EO: cross-entropy at letter positions. ED: teacher forcing on BOS-shifted
// labels. Validation DER (CE) after each epoch drives early stopping and
// best-checkpoint selection. With a run_dir, writes metrics.jsonl,
// timing.jsonl and checkpoints under epoch_<k>/, best/ and last/.
FinetuneResult Finetune(const FinetuneSpec& spec);

struct PretrainSpec {
  model::ModelConfig model;  // arch must be kBert
  TrainConfig train;         // max_epochs is the epoch count
  corpus::CharVocab vocab;
  std::vector<std::u32string> corpus;  // prepared, undiacritized lines
  std::filesystem::path run_dir;
  bool resume = false;
};

struct PretrainResult {
  std::vector<EpochRecord> history;  // val_loss is the held-out masked loss
  model::Checkpoint best;
  model::Checkpoint last;
};

PretrainResult PretrainMlm(const PretrainSpec& spec);

// DER (CE, fraction) of the model's predictions on `validation`.
double EvaluateEpoch(const model::Parameters<float>& params, const model::ModelConfig& config,
                     const corpus::CharVocab& vocab, std::span<const LabeledSequence> validation,
                     int batch_size = 64);

// Eval-mode diacritic loss (teacher-forced for ED).
double ValidationLoss(const model::Parameters<float>& params, const model::ModelConfig& config,
                      const corpus::CharVocab& vocab, std::span<const LabeledSequence> validation,
                      int batch_size = 64);

// Deterministic (training, validation) split by seeded shuffle.
void SplitValidation(const std::vector<LabeledSequence>& corpus, double fraction,
                     std::uint64_t seed, std::vector<LabeledSequence>* train,
                     std::vector<LabeledSequence>* validation);

}  // namespace atd::train

#endif  // ATD_TRAIN_TRAINER_HPP_
