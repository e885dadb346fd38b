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

#include "atd/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "atd/arabic_text.hpp"
#include "atd/error.hpp"
#include "atd/hash.hpp"

namespace atd::model {

static_assert(std::endian::native == std::endian::little,
              "checkpoint layout assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'A', 'T', 'D', 'P'};
constexpr std::uint32_t kVersion = 1;

void PutU32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t GetU32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw Error(ErrorKind::kCorruptCheckpoint, "truncated array file");
  return v;
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
}

}  // namespace

std::string ClassTableHash() { return HexDigest(Fnv1a(text::ExportClassTable())); }

void WriteArrays(const std::filesystem::path& file, const Parameters<float>& arrays) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + file.string());
  out.write(kMagic, 4);
  PutU32(out, kVersion);
  PutU32(out, static_cast<std::uint32_t>(arrays.size()));
  std::vector<float> row_major;
  for (std::size_t i = 0; i < arrays.size(); ++i) {
    const auto& name = arrays.name(i);
    const auto& m = arrays[i];
    PutU32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    PutU32(out, static_cast<std::uint32_t>(m.rows()));
    PutU32(out, static_cast<std::uint32_t>(m.cols()));
    row_major.resize(static_cast<std::size_t>(m.size()));
    Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        row_major.data(), m.rows(), m.cols()) = m;
    out.write(reinterpret_cast<const char*>(row_major.data()),
              static_cast<std::streamsize>(row_major.size() * sizeof(float)));
  }
  if (!out) throw Error(ErrorKind::kIo, "write failure on " + file.string());
}

Parameters<float> ReadArrays(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + file.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw Error(ErrorKind::kCorruptCheckpoint, file.string() + " is not an array file");
  }
  if (GetU32(in) != kVersion) throw Error(ErrorKind::kCorruptCheckpoint, "unsupported version");
  const std::uint32_t count = GetU32(in);
  Parameters<float> out;
  std::vector<float> buf;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(GetU32(in), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    const auto rows = static_cast<Eigen::Index>(GetU32(in));
    const auto cols = static_cast<Eigen::Index>(GetU32(in));
    buf.resize(static_cast<std::size_t>(rows * cols));
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw Error(ErrorKind::kCorruptCheckpoint, "truncated array " + name);
    auto& m = out[out.Add(name, rows, cols)];
    m = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        buf.data(), rows, cols);
  }
  return out;
}

std::string ParametersHash(const Parameters<float>& params) {
  std::uint64_t h = Fnv1a("");
  for (std::size_t i = 0; i < params.size(); ++i) {
    h = Fnv1a(params.name(i), h);
    const auto& m = params[i];
    h = Fnv1a(std::string_view(reinterpret_cast<const char*>(m.data()),
                               static_cast<std::size_t>(m.size()) * sizeof(float)),
              h);
  }
  return HexDigest(h);
}

void SaveCheckpoint(const std::filesystem::path& dir, const Checkpoint& ckpt) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
  const std::string vocab = ckpt.vocab.Serialize();
  WriteFile(dir / "vocab.tsv", vocab);
  WriteArrays(dir / "params.bin", ckpt.params);
  nlohmann::json arrays = nlohmann::json::array();
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    arrays.push_back({{"name", ckpt.params.name(i)},
                      {"shape", {ckpt.params[i].rows(), ckpt.params[i].cols()}}});
  }
  nlohmann::json manifest = {
      {"format", "atd-checkpoint-v1"},
      {"config", ToJson(ckpt.config)},
      {"vocab_hash", HexDigest(ckpt.vocab.Hash())},
      {"class_table_hash", ClassTableHash()},
      {"params_hash", ParametersHash(ckpt.params)},
      {"info", ckpt.info},
      {"arrays", arrays},
  };
  WriteFile(dir / "manifest.json", manifest.dump(2) + "\n");
}

Checkpoint LoadCheckpoint(const std::filesystem::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(ReadFile(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kCorruptCheckpoint, "manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != "atd-checkpoint-v1") {
    throw Error(ErrorKind::kCorruptCheckpoint, "unknown checkpoint format in " + dir.string());
  }
  Checkpoint ckpt;
  ckpt.config = ModelConfigFromJson(manifest.at("config"));
  const std::string vocab_text = ReadFile(dir / "vocab.tsv");
  ckpt.vocab = corpus::CharVocab::Parse(vocab_text);
  if (HexDigest(ckpt.vocab.Hash()) != manifest.value("vocab_hash", "")) {
    throw Error(ErrorKind::kCorruptCheckpoint, "vocabulary hash mismatch in " + dir.string());
  }
  if (ClassTableHash() != manifest.value("class_table_hash", "")) {
    throw Error(ErrorKind::kCorruptCheckpoint, "class table hash mismatch in " + dir.string());
  }
  if (ckpt.vocab.size() != ckpt.config.vocab_size) {
    throw Error(ErrorKind::kCorruptCheckpoint, "vocabulary size differs from config");
  }
  ckpt.params = ReadArrays(dir / "params.bin");
  if (!ckpt.params.SameLayout(ZeroParameters<float>(ckpt.config))) {
    throw Error(ErrorKind::kCorruptCheckpoint, "parameter arrays do not match the config layout");
  }
  if (ParametersHash(ckpt.params) != manifest.value("params_hash", "")) {
    throw Error(ErrorKind::kCorruptCheckpoint, "parameter hash mismatch in " + dir.string());
  }
  ckpt.info = manifest.value("info", nlohmann::json::object());
  return ckpt;
}

}  // namespace atd::model
