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

#ifndef ATD_TOOLS_RUN_CONFIG_HPP_
#define ATD_TOOLS_RUN_CONFIG_HPP_

// Flat run configuration shared by all subcommands. A value comes from, in
// increasing precedence: the profile defaults, the --config file, then
// command-line flags. The resolved object is what gets snapshotted.

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace atd::cli {

enum class KeyType { kString, kInt, kUInt, kDouble, kBool };

struct KeySpec {
  std::string name;
  KeyType type;
  std::string help;
  bool required = false;
};

class RunConfig {
 public:
  RunConfig(std::string command, std::vector<KeySpec> keys);

  // Registers --config, --profile and one option per key.
  void Attach(CLI::App* app);

  // Merges profile defaults, the config file and flags. Throws
  // atd::Error(kInvalidConfig) naming the first bad or unknown key.
  nlohmann::json Resolve(const std::function<nlohmann::json(const std::string&)>& defaults) const;

  const std::string& command() const { return command_; }

 private:
  nlohmann::json Convert(const KeySpec& key, const std::string& raw) const;
  nlohmann::json Check(const KeySpec& key, const nlohmann::json& value) const;

  std::string command_;
  std::vector<KeySpec> keys_;
  std::map<std::string, std::string> flags_;
  std::string config_path_;
  std::string profile_;
  CLI::App* app_ = nullptr;
};

// Exclusive ownership of a run directory for the life of the object. A lock
// left behind by a process that no longer exists is taken over.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path file_;
};

void WriteJson(const std::filesystem::path& file, const nlohmann::json& value);

}  // namespace atd::cli

#endif  // ATD_TOOLS_RUN_CONFIG_HPP_
