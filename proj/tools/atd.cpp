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

// atd: command-line front end for the diacritization toolkit.
//
// Exit codes: 0 success, 1 I/O or input error, 2 empty output corpus,
// 3 configuration error, 4 numerical abort.

#include <fstream>
#include <iostream>
#include <memory>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "atd/arabic_text.hpp"
#include "atd/corpus.hpp"
#include "atd/error.hpp"
#include "atd/evaluation.hpp"
#include "atd/hash.hpp"
#include "atd/inference.hpp"
#include "atd/model/checkpoint.hpp"
#include "atd/noisy_student.hpp"
#include "atd/synthetic.hpp"
#include "atd/train/trainer.hpp"
#include "atd/utf8.hpp"
#include "run_config.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using atd::Error;
using atd::ErrorKind;
using atd::cli::KeySpec;
using atd::cli::KeyType;
using atd::cli::RunConfig;

constexpr int kExitIo = 1;
constexpr int kExitEmpty = 2;
constexpr int kExitConfig = 3;
constexpr int kExitNumeric = 4;

struct EmptyOutput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidConfig:
    case ErrorKind::kShapeMismatch:
      return kExitConfig;
    case ErrorKind::kNonFiniteGradient:
    case ErrorKind::kAllIgnored:
      return kExitNumeric;
    case ErrorKind::kEmptyCorpus:
      return kExitEmpty;
    default:
      return kExitIo;
  }
}

// ---- key groups ---------------------------------------------------------

std::vector<KeySpec> ModelKeys(bool decoder) {
  std::vector<KeySpec> keys = {
      {"d_model", KeyType::kInt, "model width"},
      {"n_heads", KeyType::kInt, "attention heads"},
      {"n_layers_encoder", KeyType::kInt, "encoder layers (default from profile and arch)"},
      {"ffn_dim", KeyType::kInt, "feed-forward width"},
      {"dropout", KeyType::kDouble, "dropout probability"},
      {"max_len", KeyType::kInt, "maximum sequence length"},
  };
  if (decoder) keys.push_back({"n_layers_decoder", KeyType::kInt, "decoder layers (ed only)"});
  return keys;
}

std::vector<KeySpec> TrainKeys(bool finetune) {
  std::vector<KeySpec> keys = {
      {"lr", KeyType::kDouble, "AdamW learning rate"},
      {"weight_decay", KeyType::kDouble, "decoupled weight decay"},
      {"batch_size", KeyType::kInt, "training batch size"},
      {"max_epochs", KeyType::kInt, "epoch limit"},
      {"seed", KeyType::kUInt, "run seed (init, split, shuffling, dropout)"},
      {"eval_fraction", KeyType::kDouble, "held-out fraction when no validation file is given"},
      {"eval_batch_size", KeyType::kInt, "batch size for validation inference"},
  };
  if (finetune) {
    keys.push_back({"patience", KeyType::kInt, "early-stopping patience in epochs"});
    keys.push_back({"snapshot_epoch", KeyType::kInt, "epoch whose checkpoint is kept (0: none)"});
  } else {
    keys.push_back({"mask_prob", KeyType::kDouble, "MLM selection probability"});
  }
  return keys;
}

std::vector<KeySpec> FilterKeys() {
  return {{"min_chars", KeyType::kUInt, "minimum normalized line length"},
          {"max_chars", KeyType::kUInt, "maximum normalized line length"},
          {"min_dtl", KeyType::kDouble, "minimum diacritics-to-letters ratio"}};
}

template <typename... Groups>
std::vector<KeySpec> Join(std::vector<KeySpec> first, Groups... rest) {
  (first.insert(first.end(), rest.begin(), rest.end()), ...);
  return first;
}

json ModelDefaults(const std::string& profile) {
  const auto m = profile == "paper" ? atd::model::ModelConfig::Paper(atd::model::Arch::kEncoderOnly, 0)
                                    : atd::model::ModelConfig::Desk(atd::model::Arch::kEncoderOnly, 0);
  return {{"d_model", m.d_model}, {"n_heads", m.n_heads}, {"ffn_dim", m.ffn_dim},
          {"dropout", m.dropout}, {"max_len", m.max_len}};
}

json TrainDefaults(const std::string& profile, bool finetune) {
  auto t = profile == "paper" ? atd::train::TrainConfig::Paper() : atd::train::TrainConfig::Desk();
  if (!finetune) {
    // MLM pretraining: 6 epochs at batch 512 in the paper profile.
    t.batch_size = profile == "paper" ? 512 : 16;
    t.max_epochs = profile == "paper" ? 6 : 3;
  }
  json j = atd::train::ToJson(t);
  if (finetune) {
    j.erase("mask_prob");
  } else {
    j.erase("patience");
    j.erase("snapshot_epoch");
  }
  return j;
}

json FilterDefaults() {
  const atd::corpus::FilterConfig f;
  return {{"min_chars", f.min_chars}, {"max_chars", f.max_chars}, {"min_dtl", f.min_dtl}};
}

json Merge(json a, const json& b) {
  for (const auto& [k, v] : b.items()) a[k] = v;
  return a;
}

atd::model::ModelConfig ModelFrom(const json& c, atd::model::Arch arch, const std::string& profile) {
  auto m = profile == "paper" ? atd::model::ModelConfig::Paper(arch, 0) : atd::model::ModelConfig::Desk(arch, 0);
  m.d_model = c.at("d_model").get<int>();
  m.n_heads = c.at("n_heads").get<int>();
  m.ffn_dim = c.at("ffn_dim").get<int>();
  m.dropout = c.at("dropout").get<double>();
  m.max_len = c.at("max_len").get<int>();
  if (!c.at("n_layers_encoder").is_null()) m.n_layers_encoder = c["n_layers_encoder"].get<int>();
  if (c.contains("n_layers_decoder") && !c["n_layers_decoder"].is_null()) {
    m.n_layers_decoder = c["n_layers_decoder"].get<int>();
  }
  if (arch == atd::model::Arch::kBert) m.n_layers_decoder = 0;
  return m;
}

atd::train::TrainConfig TrainFrom(const json& c) {
  atd::train::TrainConfig t;
  t.lr = c.at("lr").get<double>();
  t.weight_decay = c.at("weight_decay").get<double>();
  t.batch_size = c.at("batch_size").get<int>();
  t.max_epochs = c.at("max_epochs").get<int>();
  t.seed = c.at("seed").get<std::uint64_t>();
  t.eval_fraction = c.at("eval_fraction").get<double>();
  t.eval_batch_size = c.at("eval_batch_size").get<int>();
  if (c.contains("patience")) t.patience = c["patience"].get<int>();
  if (c.contains("snapshot_epoch")) t.snapshot_epoch = c["snapshot_epoch"].get<int>();
  if (c.contains("mask_prob")) t.mask_prob = c["mask_prob"].get<double>();
  t.Validate();
  return t;
}

atd::corpus::FilterConfig FilterFrom(const json& c) {
  atd::corpus::FilterConfig f;
  f.min_chars = c.at("min_chars").get<std::size_t>();
  f.max_chars = c.at("max_chars").get<std::size_t>();
  f.min_dtl = c.at("min_dtl").get<double>();
  if (f.min_chars > f.max_chars) throw Error(ErrorKind::kInvalidConfig, "min_chars exceeds max_chars");
  return f;
}

std::string Str(const json& c, const char* key) { return c.at(key).get<std::string>(); }
bool Has(const json& c, const char* key) { return c.contains(key) && !c.at(key).is_null(); }

void RequireFile(const std::string& path) {
  if (!fs::is_regular_file(path)) throw Error(ErrorKind::kIo, "no such file: " + path);
}

std::vector<atd::text::LabeledSequence> Sequences(const std::vector<atd::corpus::LabeledRecord>& records) {
  std::vector<atd::text::LabeledSequence> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.seq);
  return out;
}

// Snapshot written next to a single output file.
fs::path SnapshotFor(const std::string& output) { return fs::path(output + ".config.json"); }

// ---- commands -----------------------------------------------------------

int Prepare(const json& c) {
  const std::string input = Str(c, "input");
  const std::string output = Str(c, "output");
  const std::string mode = Str(c, "mode");
  if (mode != "finetune" && mode != "pretrain") {
    throw Error(ErrorKind::kInvalidConfig, "mode must be finetune or pretrain, got '" + mode + "'");
  }
  atd::cli::WriteJson(SnapshotFor(output), c);
  std::ifstream in(input, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read input " + input);
  std::ofstream out(output, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write output " + output);
  const std::string stats_path = Has(c, "stats") ? Str(c, "stats") : output + ".stats.json";
  std::size_t kept = 0;
  json stats;
  if (mode == "finetune") {
    const auto filters = FilterFrom(c);
    const auto s = atd::corpus::FilterFinetune(in, filters, [&](atd::text::LabeledSequence&& seq) {
      out << atd::corpus::FormatRecord({std::move(seq), atd::corpus::Provenance::kGold}) << '\n';
    });
    kept = s.kept;
    stats = atd::corpus::ToJson(s);
    stats["filter_hash"] = atd::HexDigest(filters.Hash());
  } else {
    const auto max_len = c.at("pretrain_max_len").get<std::size_t>();
    const auto s = atd::corpus::PreparePretrain(in, max_len, [&](std::u32string&& line) {
      out << atd::utf8::Encode(line) << '\n';
    });
    kept = s.kept;
    stats = {{"total_in", s.total_in},           {"kept", s.kept},
             {"truncated", s.truncated},         {"dropped_empty", s.dropped_empty},
             {"dropped_malformed", s.dropped_malformed}};
  }
  out.close();
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + output);
  atd::cli::WriteJson(stats_path, stats);
  spdlog::info("prepare ({}): kept {} lines, stats in {}", mode, kept, stats_path);
  if (kept == 0) throw EmptyOutput("no line survived preparation");
  return 0;
}

int BuildVocab(const json& c) {
  const std::string output = Str(c, "output");
  atd::cli::WriteJson(SnapshotFor(output), c);
  atd::corpus::VocabBuilder builder;
  std::stringstream list(Str(c, "inputs"));
  std::string path;
  while (std::getline(list, path, ',')) {
    RequireFile(path);
    for (const auto& line : atd::corpus::ReadLines(path)) {
      // Labeled records carry the skeleton before the first tab.
      const auto tab = line.find('\t');
      builder.Add(atd::text::StripDiacritics(atd::utf8::Decode(line.substr(0, tab))));
    }
  }
  const auto vocab = builder.Finish();
  std::ofstream(output, std::ios::binary) << vocab.Serialize();
  spdlog::info("vocabulary of {} ids written to {}", vocab.size(), output);
  return 0;
}

atd::corpus::CharVocab ReadVocab(const std::string& path) {
  RequireFile(path);
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return atd::corpus::CharVocab::Parse(ss.str());
}

int Pretrain(const json& c) {
  const fs::path run_dir = Str(c, "run_dir");
  const std::string corpus_path = Str(c, "corpus");
  const auto model = ModelFrom(c, atd::model::Arch::kBert, Str(c, "profile"));
  const auto train = TrainFrom(c);
  RequireFile(corpus_path);
  atd::cli::RunLock lock(run_dir);
  json snapshot = c;
  snapshot["resume"] = false;
  atd::cli::WriteJson(run_dir / "config.json", snapshot);

  atd::train::PretrainSpec spec;
  for (const auto& line : atd::corpus::ReadLines(corpus_path)) {
    auto cps = atd::text::StripDiacritics(atd::utf8::Decode(line));
    if (!cps.empty()) spec.corpus.push_back(std::move(cps));
  }
  if (spec.corpus.empty()) throw EmptyOutput("pretraining corpus is empty");
  spec.vocab = Has(c, "vocab") ? ReadVocab(Str(c, "vocab")) : atd::corpus::CharVocab::Build(spec.corpus);
  spec.model = model;
  spec.train = train;
  spec.run_dir = run_dir;
  spec.resume = c.at("resume").get<bool>();
  const auto result = atd::train::PretrainMlm(spec);
  spdlog::info("pretraining done: {} epochs, checkpoints in {}", result.history.size(), run_dir.string());
  return 0;
}

int Finetune(const json& c) {
  const fs::path run_dir = Str(c, "run_dir");
  const std::string corpus_path = Str(c, "corpus");
  const auto arch = atd::model::ParseArch(Str(c, "arch"));
  if (arch == atd::model::Arch::kBert) throw Error(ErrorKind::kInvalidConfig, "arch must be eo or ed");
  const auto init = atd::train::ParseInitMode(Str(c, "init"));
  const auto model = ModelFrom(c, arch, Str(c, "profile"));
  const auto train = TrainFrom(c);
  if (init != atd::train::InitMode::kScratch && !Has(c, "init_checkpoint")) {
    throw Error(ErrorKind::kInvalidConfig, "init '" + Str(c, "init") + "' needs key 'init_checkpoint'");
  }
  RequireFile(corpus_path);
  atd::cli::RunLock lock(run_dir);
  json snapshot = c;
  snapshot["resume"] = false;
  atd::cli::WriteJson(run_dir / "config.json", snapshot);

  atd::train::FinetuneSpec spec;
  spec.arch = arch;
  spec.init = init;
  std::optional<atd::model::Checkpoint> source;
  if (init != atd::train::InitMode::kScratch) {
    source = atd::model::LoadCheckpoint(Str(c, "init_checkpoint"));
    spec.init_checkpoint = &*source;
  }
  spec.model = model;
  spec.train = train;
  spec.corpus = Sequences(atd::corpus::ReadLabeledCorpus(corpus_path));
  if (spec.corpus.empty()) throw EmptyOutput("fine-tuning corpus is empty");
  if (Has(c, "validation")) {
    RequireFile(Str(c, "validation"));
    spec.validation = Sequences(atd::corpus::ReadLabeledCorpus(Str(c, "validation")));
  }
  if (Has(c, "vocab")) {
    spec.vocab = ReadVocab(Str(c, "vocab"));
  } else {
    std::vector<std::u32string> skeletons;
    for (const auto& s : spec.corpus) skeletons.push_back(s.letters);
    spec.vocab = atd::corpus::CharVocab::Build(skeletons);
  }
  spec.run_dir = run_dir;
  spec.resume = c.at("resume").get<bool>();
  const auto result = atd::train::Finetune(spec);
  spdlog::info("fine-tuning done: {} epochs, best epoch {}{}", result.history.size(), result.best_epoch,
               result.stopped_early ? " (early stop)" : "");
  return 0;
}

int PseudoLabel(const json& c) {
  const std::string output = Str(c, "output");
  const std::string input = Str(c, "input");
  atd::cli::WriteJson(SnapshotFor(output), c);
  RequireFile(input);
  const auto teacher = atd::model::LoadCheckpoint(Str(c, "checkpoint"));
  auto lines = atd::corpus::ReadLines(input);
  const long long sample = c.at("sample_size").get<long long>();
  if (sample >= 0) {
    const auto picked = atd::ns::SampleIndices(lines.size(), static_cast<std::size_t>(sample),
                                               c.at("seed").get<std::uint64_t>());
    std::vector<std::string> subset;
    for (std::size_t i : picked) subset.push_back(lines[i]);
    lines = std::move(subset);
  }
  atd::ns::PseudoLabelStats stats;
  const auto records = atd::ns::PseudoLabel(teacher, lines, &stats, c.at("batch_size").get<int>());
  std::vector<std::string> out;
  for (const auto& r : records) out.push_back(atd::corpus::FormatRecord(r));
  atd::corpus::WriteLines(output, out);
  atd::cli::WriteJson(output + ".stats.json", stats.ToJson());
  spdlog::info("pseudo-labeled {} of {} lines", stats.labeled, stats.lines_in);
  if (records.empty()) throw EmptyOutput("no line could be pseudo-labeled");
  return 0;
}

int TrainStudent(const json& c) {
  const fs::path run_dir = Str(c, "run_dir");
  RequireFile(Str(c, "unlabeled"));
  RequireFile(Str(c, "labeled"));
  const auto train = TrainFrom(c);
  const auto filters = FilterFrom(c);
  atd::cli::RunLock lock(run_dir);
  atd::cli::WriteJson(run_dir / "config.json", c);

  const auto teacher = atd::model::LoadCheckpoint(Str(c, "teacher"));
  atd::ns::NsRoundSpec spec;
  spec.teacher = &teacher;
  spec.unlabeled = atd::corpus::ReadLines(Str(c, "unlabeled"));
  const long long sample = c.at("sample_size").get<long long>();
  spec.sample_size = sample < 0 ? spec.unlabeled.size() : static_cast<std::size_t>(sample);
  spec.labeled = atd::corpus::ReadLabeledCorpus(Str(c, "labeled"));
  spec.filters = filters;
  spec.train = train;
  spec.dropout = c.at("dropout").get<double>();
  if (Has(c, "validation")) {
    RequireFile(Str(c, "validation"));
    spec.validation = Sequences(atd::corpus::ReadLabeledCorpus(Str(c, "validation")));
  }
  spec.run_dir = run_dir;
  spec.seed = train.seed;
  const auto result = atd::ns::RunNsRound(spec);
  spdlog::info("student best epoch {}; report in {}", result.student.best_epoch,
               (run_dir / "round_report.json").string());
  return 0;
}

int Diacritize(const json& c) {
  const std::string output = Str(c, "output");
  atd::cli::WriteJson(SnapshotFor(output), c);
  RequireFile(Str(c, "input"));
  const auto ckpt = atd::model::LoadCheckpoint(Str(c, "checkpoint"));
  const auto lines = atd::corpus::ReadLines(Str(c, "input"));
  const auto out = atd::DiacritizeLines(ckpt, lines, c.at("batch_size").get<int>());
  atd::corpus::WriteLines(output, out);
  spdlog::info("diacritized {} lines into {}", out.size(), output);
  return 0;
}

int Evaluate(const json& c) {
  const std::string report = Str(c, "report");
  atd::cli::WriteJson(SnapshotFor(report), c);
  RequireFile(Str(c, "reference"));
  RequireFile(Str(c, "hypothesis"));
  atd::eval::EvalOptions options;
  options.count_bare_reference_letters = c.at("count_bare_reference_letters").get<bool>();
  const auto r = atd::eval::EvaluateCorpus(Str(c, "reference"), Str(c, "hypothesis"), options);
  atd::cli::WriteJson(report, r.ToJson());
  std::cout << r.ToText();
  if (r.sentences_skipped) spdlog::warn("{} sentence pairs skipped", r.sentences_skipped);
  return 0;
}

int ExportClasses(const json& c) {
  const std::string output = Str(c, "output");
  if (output == "-") {
    std::cout << atd::text::ExportClassTable();
    return 0;
  }
  std::ofstream out(output, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + output);
  out << atd::text::ExportClassTable();
  return 0;
}

int Synth(const json& c) {
  const std::string output = Str(c, "output");
  atd::cli::WriteJson(SnapshotFor(output), c);
  const auto n = c.at("n").get<std::size_t>();
  const auto seed = c.at("seed").get<std::uint64_t>();
  const std::string kind = Str(c, "kind");
  const std::string format = Str(c, "format");
  std::vector<atd::text::LabeledSequence> seqs;
  if (kind == "rule") {
    const atd::synth::RuleLanguage lang(c.at("language_seed").get<std::uint64_t>(),
                                        c.at("alphabet_size").get<int>());
    seqs = lang.Corpus(n, seed);
  } else if (kind == "random") {
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < n; ++i) seqs.push_back(atd::synth::RandomSequence(rng, 60));
  } else {
    throw Error(ErrorKind::kInvalidConfig, "kind must be rule or random, got '" + kind + "'");
  }
  std::vector<std::string> lines;
  for (const auto& s : seqs) {
    if (format == "text") {
      lines.push_back(atd::text::Decode(s));
    } else if (format == "skeleton") {
      lines.push_back(atd::utf8::Encode(s.letters));
    } else if (format == "records") {
      lines.push_back(atd::corpus::FormatRecord({s, atd::corpus::Provenance::kGold}));
    } else {
      throw Error(ErrorKind::kInvalidConfig, "format must be text, skeleton or records");
    }
  }
  atd::corpus::WriteLines(output, lines);
  return 0;
}

struct Command {
  std::string name;
  std::string help;
  std::vector<KeySpec> keys;
  std::function<json(const std::string&)> defaults;
  std::function<int(const json&)> run;
};

std::vector<Command> Commands() {
  std::vector<Command> cmds;
  cmds.push_back({"prepare", "filter a diacritized corpus (finetune) or prepare pretraining text",
                  Join({{"input", KeyType::kString, "raw input corpus", true},
                        {"output", KeyType::kString, "prepared corpus", true},
                        {"mode", KeyType::kString, "finetune or pretrain"},
                        {"stats", KeyType::kString, "stats file (default <output>.stats.json)"},
                        {"pretrain_max_len", KeyType::kUInt, "pretraining truncation length"}},
                       FilterKeys()),
                  [](const std::string&) {
                    return Merge({{"mode", "finetune"}, {"pretrain_max_len", 512}}, FilterDefaults());
                  },
                  Prepare});
  cmds.push_back({"build-vocab", "build a character vocabulary from corpus files",
                  {{"inputs", KeyType::kString, "comma-separated corpus files", true},
                   {"output", KeyType::kString, "vocabulary file", true}},
                  [](const std::string&) { return json::object(); },
                  BuildVocab});
  cmds.push_back({"pretrain", "MLM pretraining of the character model",
                  Join({{"corpus", KeyType::kString, "prepared pretraining text", true},
                        {"run_dir", KeyType::kString, "run directory", true},
                        {"vocab", KeyType::kString, "vocabulary file (default: built from corpus)"},
                        {"resume", KeyType::kBool, "continue from run_dir/last"}},
                       ModelKeys(false), TrainKeys(false)),
                  [](const std::string& p) {
                    return Merge(Merge(ModelDefaults(p), TrainDefaults(p, false)), {{"resume", false}});
                  },
                  Pretrain});
  cmds.push_back({"finetune", "train an eo or ed diacritizer",
                  Join({{"corpus", KeyType::kString, "labeled corpus (prepare output)", true},
                        {"validation", KeyType::kString, "labeled validation corpus (default: held out)"},
                        {"run_dir", KeyType::kString, "run directory", true},
                        {"arch", KeyType::kString, "eo or ed"},
                        {"init", KeyType::kString, "scratch, pretrained or warm_start"},
                        {"init_checkpoint", KeyType::kString, "bert or teacher checkpoint directory"},
                        {"vocab", KeyType::kString, "vocabulary file for scratch init"},
                        {"resume", KeyType::kBool, "continue from run_dir/last"}},
                       ModelKeys(true), TrainKeys(true)),
                  [](const std::string& p) {
                    return Merge(Merge(ModelDefaults(p), TrainDefaults(p, true)),
                                 {{"arch", "eo"}, {"init", "scratch"}, {"resume", false}});
                  },
                  Finetune});
  cmds.push_back({"pseudo-label", "label undiacritized text with a teacher checkpoint",
                  {{"checkpoint", KeyType::kString, "teacher checkpoint directory", true},
                   {"input", KeyType::kString, "unlabeled text", true},
                   {"output", KeyType::kString, "labeled records (pseudo)", true},
                   {"sample_size", KeyType::kInt, "lines to sample (-1: all)"},
                   {"seed", KeyType::kUInt, "sampling seed"},
                   {"batch_size", KeyType::kInt, "inference batch size"}},
                  [](const std::string&) { return json{{"sample_size", -1}, {"seed", 0}, {"batch_size", 64}}; },
                  PseudoLabel});
  cmds.push_back({"train-student", "one noisy-student round",
                  Join({{"teacher", KeyType::kString, "teacher checkpoint directory", true},
                        {"unlabeled", KeyType::kString, "unlabeled text", true},
                        {"labeled", KeyType::kString, "gold labeled corpus", true},
                        {"validation", KeyType::kString, "labeled validation corpus"},
                        {"run_dir", KeyType::kString, "run directory", true},
                        {"sample_size", KeyType::kInt, "unlabeled lines to sample (-1: all)"},
                        {"dropout", KeyType::kDouble, "student dropout (the noise)"}},
                       FilterKeys(), TrainKeys(true)),
                  [](const std::string& p) {
                    return Merge(Merge(FilterDefaults(), TrainDefaults(p, true)),
                                 {{"sample_size", -1}, {"dropout", 0.1}});
                  },
                  TrainStudent});
  cmds.push_back({"diacritize", "diacritize text with a checkpoint",
                  {{"checkpoint", KeyType::kString, "checkpoint directory", true},
                   {"input", KeyType::kString, "input text", true},
                   {"output", KeyType::kString, "output text", true},
                   {"batch_size", KeyType::kInt, "inference batch size"}},
                  [](const std::string&) { return json{{"batch_size", 64}}; },
                  Diacritize});
  cmds.push_back({"evaluate", "DER and WER with and without case ending",
                  {{"reference", KeyType::kString, "reference text", true},
                   {"hypothesis", KeyType::kString, "system output", true},
                   {"report", KeyType::kString, "JSON report path", true},
                   {"count_bare_reference_letters", KeyType::kBool,
                    "score letters whose reference has no diacritic"}},
                  [](const std::string&) { return json{{"count_bare_reference_letters", true}}; },
                  Evaluate});
  cmds.push_back({"export-classes", "write the diacritic class table (TSV)",
                  {{"output", KeyType::kString, "output file or - for stdout"}},
                  [](const std::string&) { return json{{"output", "-"}}; },
                  ExportClasses});
  cmds.push_back({"synth", "generate a synthetic corpus",
                  {{"output", KeyType::kString, "output file", true},
                   {"kind", KeyType::kString, "rule or random"},
                   {"format", KeyType::kString, "text, skeleton or records"},
                   {"n", KeyType::kUInt, "number of sentences"},
                   {"seed", KeyType::kUInt, "sampling seed"},
                   {"language_seed", KeyType::kUInt, "rule table seed"},
                   {"alphabet_size", KeyType::kInt, "letters in the rule language"}},
                  [](const std::string&) {
                    return json{{"kind", "rule"}, {"format", "text"}, {"n", 1000}, {"seed", 1},
                                {"language_seed", 7}, {"alphabet_size", 8}};
                  },
                  Synth});
  return cmds;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("atd"));
  CLI::App app{"Arabic text diacritization toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");
  auto commands = Commands();
  std::vector<std::unique_ptr<RunConfig>> configs;
  std::vector<CLI::App*> subs;
  for (const auto& cmd : commands) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    configs.push_back(std::make_unique<RunConfig>(cmd.name, cmd.keys));
    configs.back()->Attach(sub);
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      const json resolved = configs[i]->Resolve(commands[i].defaults);
      return commands[i].run(resolved);
    } catch (const EmptyOutput& e) {
      spdlog::error("{}", e.what());
      return kExitEmpty;
    } catch (const Error& e) {
      spdlog::error("{}", e.what());
      return ExitCodeFor(e.kind());
    } catch (const fs::filesystem_error& e) {
      spdlog::error("{}", e.what());
      return kExitIo;
    } catch (const nlohmann::json::exception& e) {
      spdlog::error("configuration error: {}", e.what());
      return kExitConfig;
    }
  }
  return kExitConfig;
}
