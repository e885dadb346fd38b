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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include <spdlog/spdlog.h>

#include "atd/error.hpp"
#include "atd/evaluation.hpp"
#include "atd/inference.hpp"
#include "atd/model/forward.hpp"
#include "atd/model/transfer.hpp"
#include "atd/train/loss.hpp"
#include "atd/train/mlm.hpp"
#include "atd/train/trainer.hpp"

namespace atd::train {

namespace fs = std::filesystem;
using nlohmann::json;
using model::Checkpoint;
using model::ModelConfig;

MaskedBatch MlmMask(const IdMatrix& tokens, const IdMatrix& attention_mask, double mask_prob,
                    int vocab_size, std::mt19937_64& rng) {
  if (tokens.rows() != attention_mask.rows() || tokens.cols() != attention_mask.cols()) {
    throw Error(ErrorKind::kShapeMismatch, "token and mask shapes differ");
  }
  if (vocab_size <= corpus::CharVocab::kNumSpecials) {
    throw Error(ErrorKind::kInvalidConfig, "vocabulary has no characters to sample from");
  }
  MaskedBatch out{tokens, IdMatrix::Constant(tokens.rows(), tokens.cols(), kIgnore),
                  IdMatrix::Zero(tokens.rows(), tokens.cols())};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> random_char(corpus::CharVocab::kNumSpecials, vocab_size - 1);
  for (Eigen::Index r = 0; r < tokens.rows(); ++r) {
    for (Eigen::Index c = 0; c < tokens.cols(); ++c) {
      if (!attention_mask(r, c)) continue;
      if (unit(rng) >= mask_prob) continue;
      out.targets(r, c) = tokens(r, c);
      out.loss_mask(r, c) = 1;
      const double action = unit(rng);
      if (action < 0.8) {
        out.tokens(r, c) = corpus::CharVocab::kMask;
      } else if (action < 0.9) {
        out.tokens(r, c) = random_char(rng);
      }
    }
  }
  return out;
}

void TrainConfig::Validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kInvalidConfig, what); };
  if (!(lr > 0.0) || !std::isfinite(lr)) fail("lr must be positive");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) fail("weight_decay must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (max_epochs < 1) fail("max_epochs must be >= 1");
  if (patience < 1) fail("patience must be >= 1");
  if (!(mask_prob >= 0.0 && mask_prob <= 1.0)) fail("mask_prob must lie in [0, 1]");
  if (!(eval_fraction > 0.0 && eval_fraction <= 0.5)) fail("eval_fraction must lie in (0, 0.5]");
  if (snapshot_epoch < 0) fail("snapshot_epoch must be >= 0");
  if (eval_batch_size < 1) fail("eval_batch_size must be >= 1");
}

TrainConfig TrainConfig::Paper() {
  TrainConfig c;
  c.lr = 3e-5;
  c.weight_decay = 1e-2;
  c.batch_size = 32;
  c.max_epochs = 200;
  return c;
}

TrainConfig TrainConfig::Desk() {
  TrainConfig c;
  c.lr = 1e-3;
  c.weight_decay = 1e-2;
  c.batch_size = 16;
  c.max_epochs = 200;
  return c;
}

json ToJson(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"mask_prob", c.mask_prob},
          {"seed", c.seed},
          {"eval_fraction", c.eval_fraction},
          {"snapshot_epoch", c.snapshot_epoch},
          {"eval_batch_size", c.eval_batch_size}};
}

TrainConfig TrainConfigFromJson(const json& j) {
  TrainConfig c;
  c.lr = j.at("lr").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.patience = j.at("patience").get<int>();
  c.mask_prob = j.at("mask_prob").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.eval_fraction = j.at("eval_fraction").get<double>();
  c.snapshot_epoch = j.at("snapshot_epoch").get<int>();
  c.eval_batch_size = j.at("eval_batch_size").get<int>();
  return c;
}

bool EarlyStopping::Update(double metric) {
  ++epochs_seen_;
  if (metric < best_) {
    best_ = metric;
    best_epoch_ = epochs_seen_;
    epochs_since_best_ = 0;
    return true;
  }
  ++epochs_since_best_;
  return false;
}

void EarlyStopping::Restore(double best, int best_epoch, int epochs_since_best, int epochs_seen) {
  best_ = best;
  best_epoch_ = best_epoch;
  epochs_since_best_ = epochs_since_best;
  epochs_seen_ = epochs_seen;
}

namespace {

json Number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double Number(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

json ToJson(const EpochRecord& r) {
  json j = {{"epoch", r.epoch}, {"train_loss", Number(r.train_loss)}, {"val_loss", Number(r.val_loss)}};
  if (r.val_der) j["val_der"] = *r.val_der;
  return j;
}

EpochRecord EpochRecordFromJson(const json& j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<int>();
  r.train_loss = Number(j.at("train_loss"));
  r.val_loss = Number(j.at("val_loss"));
  if (j.contains("val_der")) r.val_der = j.at("val_der").get<double>();
  return r;
}

InitMode ParseInitMode(std::string_view name) {
  if (name == "scratch") return InitMode::kScratch;
  if (name == "pretrained") return InitMode::kPretrained;
  if (name == "warm_start") return InitMode::kWarmStart;
  throw Error(ErrorKind::kInvalidConfig, "unknown init mode '" + std::string(name) +
                                             "' (expected scratch, pretrained or warm_start)");
}

namespace {

// Independent streams derived from the run seed, so that resuming needs no
// generator state beyond (seed, epoch, batch).
std::uint64_t Stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t a, std::uint64_t b = 0) {
  return model::RowSeed(model::RowSeed(model::RowSeed(seed, purpose), a), b);
}

enum : std::uint64_t { kShuffle = 1, kDropout = 2, kMasking = 3, kValMask = 4, kSplit = 5, kInit = 6 };

template <typename T>
void SplitBySeed(const std::vector<T>& items, double fraction, std::uint64_t seed,
                 std::vector<T>* train, std::vector<T>* validation) {
  if (items.size() < 2) {
    throw Error(ErrorKind::kEmptyCorpus, "need at least 2 examples to hold out a validation split");
  }
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(Stream(seed, kSplit, 0));
  std::shuffle(order.begin(), order.end(), rng);
  auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(items.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, items.size() - 1);
  std::vector<bool> held(items.size(), false);
  for (std::size_t k = 0; k < n_val; ++k) held[order[k]] = true;
  train->clear();
  validation->clear();
  // Both parts keep corpus order.
  for (std::size_t i = 0; i < items.size(); ++i) (held[i] ? validation : train)->push_back(items[i]);
}

void WriteJsonLines(const fs::path& file, const std::vector<json>& records) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + file.string());
  for (const auto& r : records) out << r.dump() << '\n';
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + file.string());
}

std::vector<json> ReadJsonLines(const fs::path& file) {
  std::vector<json> out;
  std::ifstream in(file, std::ios::binary);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

// Everything a run needs to continue exactly where it stopped.
struct RunState {
  int epoch = 0;
  AdamWState<float> optimizer;
  EarlyStopping stopping{1};
  bool stopped = false;
  std::vector<EpochRecord> history;
  std::vector<json> timing;
};

json StateInfo(const RunState& s, const TrainConfig& train, std::string_view kind) {
  json history = json::array();
  for (const auto& r : s.history) history.push_back(ToJson(r));
  return {{"kind", kind},
          {"epoch", s.epoch},
          {"step", s.optimizer.step},
          {"train_config", ToJson(train)},
          {"best_metric", Number(s.stopping.best())},
          {"best_epoch", s.stopping.best_epoch()},
          {"epochs_since_best", s.stopping.epochs_since_best()},
          {"stopped", s.stopped},
          {"rng", {{"scheme", "splitmix-derived"}, {"seed", train.seed}}},
          {"history", history}};
}

void SaveRunState(const fs::path& run_dir, const Checkpoint& last, const RunState& s) {
  const fs::path dir = run_dir / "last";
  model::SaveCheckpoint(dir, last);
  model::WriteArrays(dir / "adam_first.bin", s.optimizer.first_moment);
  model::WriteArrays(dir / "adam_second.bin", s.optimizer.second_moment);
  std::vector<json> metrics;
  for (const auto& r : s.history) metrics.push_back(ToJson(r));
  WriteJsonLines(run_dir / "metrics.jsonl", metrics);
  WriteJsonLines(run_dir / "timing.jsonl", s.timing);
}

// Restores parameters and state from run_dir/last.
Checkpoint LoadRunState(const fs::path& run_dir, int patience, RunState* s) {
  const fs::path dir = run_dir / "last";
  Checkpoint last = model::LoadCheckpoint(dir);
  const json& info = last.info;
  s->epoch = info.at("epoch").get<int>();
  s->optimizer.step = info.at("step").get<std::int64_t>();
  s->optimizer.first_moment = model::ReadArrays(dir / "adam_first.bin");
  s->optimizer.second_moment = model::ReadArrays(dir / "adam_second.bin");
  if (!s->optimizer.first_moment.SameLayout(last.params) ||
      !s->optimizer.second_moment.SameLayout(last.params)) {
    throw Error(ErrorKind::kCorruptCheckpoint, "optimizer state does not match the parameters");
  }
  s->stopping = EarlyStopping(patience);
  s->stopping.Restore(Number(info.at("best_metric")), info.at("best_epoch").get<int>(),
                      info.at("epochs_since_best").get<int>(), s->epoch);
  s->stopped = info.at("stopped").get<bool>();
  s->history.clear();
  for (const auto& r : info.at("history")) s->history.push_back(EpochRecordFromJson(r));
  s->timing = ReadJsonLines(run_dir / "timing.jsonl");
  s->timing.resize(std::min<std::size_t>(s->timing.size(), s->history.size()));
  return last;
}

struct BatchLoss {
  double loss_sum = 0.0;  // loss * counted
  std::size_t counted = 0;

  void Add(double mean, std::size_t n) {
    loss_sum += mean * static_cast<double>(n);
    counted += n;
  }
  double Mean() const {
    return counted ? loss_sum / static_cast<double>(counted) : std::numeric_limits<double>::quiet_NaN();
  }
};

// One optimizer step on a prepared batch. Returns false when nothing in the
// batch carries a target.
bool Step(model::Parameters<float>& params, const ModelConfig& config, const IdMatrix& tokens,
          const IdMatrix& mask, const IdMatrix* prefix, const IdMatrix& targets,
          std::uint64_t dropout_seed, AdamWState<float>& optimizer, const AdamWConfig& adam,
          model::Parameters<float>& grads, BatchLoss& tally) {
  model::BatchGraph<float> graph(params, config);
  const auto logits = graph.Forward(tokens, mask, prefix, config.dropout > 0.0, dropout_seed);
  CrossEntropyResult<float> ce;
  try {
    ce = CrossEntropy(logits, targets);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kAllIgnored) return false;
    throw;
  }
  grads.SetZero();
  graph.Backward(ce.dlogits, grads);
  AdamWStep(params, grads, optimizer, adam);
  tally.Add(ce.loss, ce.counted);
  return true;
}

AdamWConfig AdamFrom(const TrainConfig& t) {
  AdamWConfig a;
  a.lr = t.lr;
  a.weight_decay = t.weight_decay;
  return a;
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

void SplitValidation(const std::vector<LabeledSequence>& corpus, double fraction,
                     std::uint64_t seed, std::vector<LabeledSequence>* train,
                     std::vector<LabeledSequence>* validation) {
  SplitBySeed(corpus, fraction, seed, train, validation);
}

double EvaluateEpoch(const model::Parameters<float>& params, const ModelConfig& config,
                     const corpus::CharVocab& vocab, std::span<const LabeledSequence> validation,
                     int batch_size) {
  std::vector<std::u32string> skeletons;
  skeletons.reserve(validation.size());
  for (const auto& s : validation) skeletons.push_back(s.letters);
  const auto predicted = Predict(params, config, vocab, skeletons, batch_size);
  return eval::Der(eval::ScoreSequences(validation, predicted), eval::Mode::kCaseEnding);
}

double ValidationLoss(const model::Parameters<float>& params, const ModelConfig& config,
                      const corpus::CharVocab& vocab, std::span<const LabeledSequence> validation,
                      int batch_size) {
  BatchLoss tally;
  for (const auto& b : corpus::MakeBatches(validation, vocab, batch_size, config.max_len, std::nullopt)) {
    std::vector<model::Matrix<float>> logits;
    if (config.arch == model::Arch::kEncoderDecoder) {
      const IdMatrix prefix = model::TeacherForcingPrefix(b.label_ids, b.attention_mask);
      logits = model::EdForward(params, config, b.token_ids, b.attention_mask, prefix, false).logits;
    } else {
      logits = model::EoForward(params, config, b.token_ids, b.attention_mask, false).logits;
    }
    try {
      const auto ce = CrossEntropy(logits, b.label_ids);
      tally.Add(ce.loss, ce.counted);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kAllIgnored) throw;
    }
  }
  if (!tally.counted) throw Error(ErrorKind::kAllIgnored, "validation set has no letter positions");
  return tally.Mean();
}

FinetuneResult Finetune(const FinetuneSpec& spec) {
  spec.train.Validate();
  if (spec.arch == model::Arch::kBert) {
    throw Error(ErrorKind::kInvalidConfig, "fine-tuning needs arch eo or ed");
  }
  const TrainConfig& tc = spec.train;

  // Model configuration, vocabulary and initial weights.
  ModelConfig config = spec.model;
  config.arch = spec.arch;
  corpus::CharVocab vocab = spec.vocab;
  model::Parameters<float> params;
  json init_info = {{"mode", "scratch"}};
  if (spec.init != InitMode::kScratch && !spec.init_checkpoint) {
    throw Error(ErrorKind::kInvalidConfig, "init mode needs a checkpoint");
  }
  if (spec.init == InitMode::kScratch) {
    config.vocab_size = vocab.size();
    config.Validate();
    params = model::InitParameters<float>(config, Stream(tc.seed, kInit, 0));
  } else if (spec.init == InitMode::kPretrained) {
    const Checkpoint& bert = *spec.init_checkpoint;
    if (bert.config.arch != model::Arch::kBert) {
      throw Error(ErrorKind::kInvalidConfig, "pretrained init needs a bert checkpoint");
    }
    vocab = bert.vocab;
    config.vocab_size = bert.config.vocab_size;
    config.max_len = bert.config.max_len;
    config.Validate();
    model::TransferReport report;
    params = model::TransferPretrained(bert.params, bert.config, config, Stream(tc.seed, kInit, 0), &report);
    init_info = {{"mode", "pretrained"},
                 {"source_params_hash", model::ParametersHash(bert.params)},
                 {"transfer", report.ToJson()}};
  } else {
    const Checkpoint& teacher = *spec.init_checkpoint;
    if (teacher.config.arch != spec.arch) {
      throw Error(ErrorKind::kInvalidConfig, "warm start needs a checkpoint of the same arch");
    }
    vocab = teacher.vocab;
    const double dropout = config.dropout;
    config = teacher.config;
    config.dropout = dropout;
    config.Validate();
    params = teacher.params;
    init_info = {{"mode", "warm_start"}, {"source_params_hash", model::ParametersHash(teacher.params)}};
  }

  std::vector<LabeledSequence> train_set;
  std::vector<LabeledSequence> val_set;
  if (spec.validation.empty()) {
    SplitBySeed(spec.corpus, tc.eval_fraction, tc.seed, &train_set, &val_set);
  } else {
    train_set = spec.corpus;
    val_set = spec.validation;
  }
  if (train_set.empty()) throw Error(ErrorKind::kEmptyCorpus, "empty fine-tuning corpus");

  const bool persist = !spec.run_dir.empty();
  if (persist) fs::create_directories(spec.run_dir);

  FinetuneResult result;
  RunState state;
  state.stopping = EarlyStopping(tc.patience);
  if (spec.resume) {
    if (!persist) throw Error(ErrorKind::kInvalidConfig, "resume needs a run directory");
    Checkpoint last = LoadRunState(spec.run_dir, tc.patience, &state);
    if (!(last.config == config) || !(last.vocab == vocab)) {
      throw Error(ErrorKind::kInvalidConfig, "run directory holds a different model configuration");
    }
    params = std::move(last.params);
    result.best = model::LoadCheckpoint(spec.run_dir / "best");
    const fs::path snap = spec.run_dir / ("epoch_" + std::to_string(tc.snapshot_epoch));
    if (tc.snapshot_epoch > 0 && fs::exists(snap / "manifest.json")) {
      result.snapshot = model::LoadCheckpoint(snap);
    }
  } else {
    state.optimizer = InitAdamW(params);
  }

  const AdamWConfig adam = AdamFrom(tc);
  auto grads = params.ZerosLike();
  auto make_checkpoint = [&](std::string_view tag) {
    Checkpoint c{config, vocab, params, StateInfo(state, tc, "finetune")};
    c.info["tag"] = tag;
    c.info["init"] = init_info;
    return c;
  };

  while (!state.stopped && state.epoch < tc.max_epochs) {
    const auto started = std::chrono::steady_clock::now();
    const int epoch = state.epoch + 1;
    BatchLoss tally;
    const auto batches = corpus::MakeBatches(train_set, vocab, tc.batch_size, config.max_len,
                                             Stream(tc.seed, kShuffle, static_cast<std::uint64_t>(epoch)));
    for (std::size_t k = 0; k < batches.size(); ++k) {
      const auto& b = batches[k];
      IdMatrix prefix;
      if (config.arch == model::Arch::kEncoderDecoder) {
        prefix = model::TeacherForcingPrefix(b.label_ids, b.attention_mask);
      }
      Step(params, config, b.token_ids, b.attention_mask,
           config.arch == model::Arch::kEncoderDecoder ? &prefix : nullptr, b.label_ids,
           Stream(tc.seed, kDropout, static_cast<std::uint64_t>(epoch), k), state.optimizer, adam,
           grads, tally);
    }
    if (!tally.counted) throw Error(ErrorKind::kAllIgnored, "training corpus has no letter positions");

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = tally.Mean();
    record.val_loss = ValidationLoss(params, config, vocab, val_set, tc.eval_batch_size);
    record.val_der = EvaluateEpoch(params, config, vocab, val_set, tc.eval_batch_size);
    state.epoch = epoch;
    state.history.push_back(record);
    const bool improved = state.stopping.Update(*record.val_der);
    state.stopped = state.stopping.ShouldStop();
    state.timing.push_back({{"epoch", epoch}, {"wall_seconds", Seconds(started)}});
    spdlog::info("epoch {} train_loss {:.5f} val_loss {:.5f} val_der {:.5f}{}", epoch,
                 record.train_loss, record.val_loss, *record.val_der, improved ? " *" : "");

    if (improved) {
      result.best = make_checkpoint("best");
      if (persist) model::SaveCheckpoint(spec.run_dir / "best", result.best);
    }
    if (epoch == tc.snapshot_epoch) {
      result.snapshot = make_checkpoint("epoch_" + std::to_string(epoch));
      if (persist) model::SaveCheckpoint(spec.run_dir / ("epoch_" + std::to_string(epoch)), *result.snapshot);
    }
    if (persist) SaveRunState(spec.run_dir, make_checkpoint("last"), state);
  }

  result.last = make_checkpoint("last");
  result.history = state.history;
  result.best_epoch = state.stopping.best_epoch();
  result.stopped_early = state.stopped;
  return result;
}

namespace {

// Held-out masked loss with one fixed masking, so epochs are comparable.
double MlmValidationLoss(const model::Parameters<float>& params, const ModelConfig& config,
                         const std::vector<corpus::Batch>& batches, const TrainConfig& tc) {
  BatchLoss tally;
  std::mt19937_64 rng(Stream(tc.seed, kValMask, 0));
  for (const auto& b : batches) {
    const auto masked = MlmMask(b.token_ids, b.attention_mask, tc.mask_prob, config.vocab_size, rng);
    const auto fwd = model::MlmForward(params, config, masked.tokens, b.attention_mask, false);
    try {
      const auto ce = CrossEntropy(fwd.logits, masked.targets);
      tally.Add(ce.loss, ce.counted);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kAllIgnored) throw;
    }
  }
  return tally.Mean();
}

}  // namespace

PretrainResult PretrainMlm(const PretrainSpec& spec) {
  spec.train.Validate();
  const TrainConfig& tc = spec.train;
  ModelConfig config = spec.model;
  config.arch = model::Arch::kBert;
  config.vocab_size = spec.vocab.size();
  config.Validate();

  std::vector<std::u32string> train_lines;
  std::vector<std::u32string> val_lines;
  std::vector<std::u32string> usable;
  for (const auto& l : spec.corpus) {
    if (!l.empty()) usable.push_back(l);
  }
  SplitBySeed(usable, tc.eval_fraction, tc.seed, &train_lines, &val_lines);
  const auto val_batches =
      corpus::MakeTextBatches(val_lines, spec.vocab, tc.eval_batch_size, config.max_len, std::nullopt);

  const bool persist = !spec.run_dir.empty();
  if (persist) fs::create_directories(spec.run_dir);

  PretrainResult result;
  RunState state;
  state.stopping = EarlyStopping(std::numeric_limits<int>::max());
  model::Parameters<float> params;
  if (spec.resume) {
    if (!persist) throw Error(ErrorKind::kInvalidConfig, "resume needs a run directory");
    Checkpoint last = LoadRunState(spec.run_dir, std::numeric_limits<int>::max(), &state);
    if (!(last.config == config) || !(last.vocab == spec.vocab)) {
      throw Error(ErrorKind::kInvalidConfig, "run directory holds a different model configuration");
    }
    params = std::move(last.params);
    if (fs::exists(spec.run_dir / "best" / "manifest.json")) {
      result.best = model::LoadCheckpoint(spec.run_dir / "best");
    }
  } else {
    params = model::InitParameters<float>(config, Stream(tc.seed, kInit, 0));
    state.optimizer = InitAdamW(params);
  }

  const AdamWConfig adam = AdamFrom(tc);
  auto grads = params.ZerosLike();
  auto make_checkpoint = [&](std::string_view tag) {
    Checkpoint c{config, spec.vocab, params, StateInfo(state, tc, "pretrain")};
    c.info["tag"] = tag;
    return c;
  };

  while (state.epoch < tc.max_epochs) {
    const auto started = std::chrono::steady_clock::now();
    const int epoch = state.epoch + 1;
    const auto e = static_cast<std::uint64_t>(epoch);
    BatchLoss tally;
    std::mt19937_64 mask_rng(Stream(tc.seed, kMasking, e));
    const auto batches = corpus::MakeTextBatches(train_lines, spec.vocab, tc.batch_size,
                                                 config.max_len, Stream(tc.seed, kShuffle, e));
    for (std::size_t k = 0; k < batches.size(); ++k) {
      const auto& b = batches[k];
      const auto masked = MlmMask(b.token_ids, b.attention_mask, tc.mask_prob, config.vocab_size, mask_rng);
      Step(params, config, masked.tokens, b.attention_mask, nullptr, masked.targets,
           Stream(tc.seed, kDropout, e, k), state.optimizer, adam, grads, tally);
    }
    if (!tally.counted) {
      throw Error(ErrorKind::kAllIgnored, "no position was selected for masking in epoch " +
                                              std::to_string(epoch));
    }
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = tally.Mean();
    record.val_loss = MlmValidationLoss(params, config, val_batches, tc);
    state.epoch = epoch;
    state.history.push_back(record);
    // Best by held-out masked loss, or by training loss if nothing was held out.
    const double metric = std::isfinite(record.val_loss) ? record.val_loss : record.train_loss;
    const bool improved = state.stopping.Update(metric);
    state.timing.push_back({{"epoch", epoch}, {"wall_seconds", Seconds(started)}});
    spdlog::info("pretrain epoch {} masked_loss {:.5f} val_masked_loss {:.5f}{}", epoch,
                 record.train_loss, record.val_loss, improved ? " *" : "");
    if (improved) {
      result.best = make_checkpoint("best");
      if (persist) model::SaveCheckpoint(spec.run_dir / "best", result.best);
    }
    if (persist) SaveRunState(spec.run_dir, make_checkpoint("last"), state);
  }
  result.last = make_checkpoint("last");
  result.history = state.history;
  return result;
}

}  // namespace atd::train
