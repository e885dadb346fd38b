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

#include "run_config.hpp"

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <cerrno>
#include <fstream>
#include <sstream>

#include "atd/error.hpp"

namespace atd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void Bad(const std::string& what) { throw Error(ErrorKind::kInvalidConfig, what); }

const char* TypeName(KeyType t) {
  switch (t) {
    case KeyType::kString: return "string";
    case KeyType::kInt: return "integer";
    case KeyType::kUInt: return "unsigned integer";
    case KeyType::kDouble: return "number";
    case KeyType::kBool: return "boolean";
  }
  return "?";
}

}  // namespace

RunConfig::RunConfig(std::string command, std::vector<KeySpec> keys)
    : command_(std::move(command)), keys_(std::move(keys)) {}

void RunConfig::Attach(CLI::App* app) {
  app_ = app;
  app->add_option("--config", config_path_, "flat JSON config file (flags override its keys)");
  app->add_option("--profile", profile_, "built-in defaults: desk or paper (default desk)");
  for (const auto& key : keys_) {
    const std::string help = key.help + " [" + TypeName(key.type) + (key.required ? ", required]" : "]");
    if (key.type == KeyType::kBool) {
      app->add_flag("--" + key.name + "{true}", flags_[key.name], help);
    } else {
      static constexpr const char* kPlaceholder[] = {"TEXT", "INT", "UINT", "FLOAT", ""};
      app->add_option("--" + key.name, flags_[key.name], help)
          ->type_name(kPlaceholder[static_cast<int>(key.type)]);
    }
  }
}

json RunConfig::Convert(const KeySpec& key, const std::string& raw) const {
  auto fail = [&]() -> json { Bad("invalid " + std::string(TypeName(key.type)) + " '" + raw + "' for key '" + key.name + "'"); };
  try {
    std::size_t used = 0;
    switch (key.type) {
      case KeyType::kString: return raw;
      case KeyType::kInt: {
        const long long v = std::stoll(raw, &used);
        return used == raw.size() ? json(v) : fail();
      }
      case KeyType::kUInt: {
        if (!raw.empty() && raw[0] == '-') return fail();
        const unsigned long long v = std::stoull(raw, &used);
        return used == raw.size() ? json(v) : fail();
      }
      case KeyType::kDouble: {
        const double v = std::stod(raw, &used);
        return used == raw.size() ? json(v) : fail();
      }
      case KeyType::kBool:
        if (raw == "true" || raw == "1") return true;
        if (raw == "false" || raw == "0") return false;
        return fail();
    }
  } catch (const std::logic_error&) {
    return fail();
  }
  return fail();
}

json RunConfig::Check(const KeySpec& key, const json& v) const {
  if (v.is_null()) return v;
  bool ok = false;
  switch (key.type) {
    case KeyType::kString: ok = v.is_string(); break;
    case KeyType::kInt: ok = v.is_number_integer(); break;
    case KeyType::kUInt: ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0); break;
    case KeyType::kDouble: ok = v.is_number(); break;
    case KeyType::kBool: ok = v.is_boolean(); break;
  }
  if (!ok) Bad("key '" + key.name + "' must be a " + TypeName(key.type));
  return key.type == KeyType::kDouble ? json(v.get<double>()) : v;
}

json RunConfig::Resolve(const std::function<json(const std::string&)>& defaults) const {
  json file = json::object();
  if (!config_path_.empty()) {
    std::ifstream in(config_path_, std::ios::binary);
    if (!in) throw Error(ErrorKind::kIo, "cannot read config file " + config_path_);
    try {
      file = json::parse(in);
    } catch (const json::parse_error& e) {
      Bad("config file " + config_path_ + " is not valid JSON: " + e.what());
    }
    if (!file.is_object()) Bad("config file " + config_path_ + " must hold a flat JSON object");
  }
  std::string profile = profile_;
  if (profile.empty() && file.contains("profile")) {
    if (!file["profile"].is_string()) Bad("key 'profile' must be a string");
    profile = file["profile"].get<std::string>();
  }
  if (profile.empty()) profile = "desk";
  if (profile != "desk" && profile != "paper") Bad("unknown profile '" + profile + "' (expected desk or paper)");

  json out = defaults(profile);
  for (const auto& key : keys_) {
    if (!out.contains(key.name)) out[key.name] = nullptr;
  }
  for (const auto& [name, value] : file.items()) {
    if (name == "profile") continue;
    if (name == "command") {
      if (value != command_) Bad("config file was written for command '" + value.dump() + "'");
      continue;
    }
    const auto it = std::find_if(keys_.begin(), keys_.end(), [&](const KeySpec& k) { return k.name == name; });
    if (it == keys_.end()) Bad("unknown config key '" + name + "'");
    out[name] = Check(*it, value);
  }
  for (const auto& key : keys_) {
    const auto* opt = app_ ? app_->get_option_no_throw("--" + key.name) : nullptr;
    if (opt && opt->count() > 0) out[key.name] = Convert(key, flags_.at(key.name));
  }
  for (const auto& key : keys_) {
    if (key.required && out[key.name].is_null()) Bad("missing required key '" + key.name + "'");
  }
  out["command"] = command_;
  out["profile"] = profile;
  return out;
}

RunLock::RunLock(const fs::path& dir) : file_(dir / "run.lock") {
  fs::create_directories(dir);
  for (int attempt = 0; attempt < 2; ++attempt) {
    const int fd = ::open(file_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd >= 0) {
      const std::string pid = std::to_string(::getpid()) + "\n";
      [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
      ::close(fd);
      return;
    }
    if (errno != EEXIST) throw Error(ErrorKind::kIo, "cannot create " + file_.string());
    long owner = 0;
    std::ifstream(file_) >> owner;
    if (owner > 0 && (::kill(static_cast<pid_t>(owner), 0) == 0 || errno != ESRCH)) {
      throw Error(ErrorKind::kIo, "run directory " + dir.string() + " is locked by process " +
                                      std::to_string(owner));
    }
    fs::remove(file_);  // stale
  }
  throw Error(ErrorKind::kIo, "cannot lock " + dir.string());
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(file_, ec);
}

void WriteJson(const fs::path& file, const json& value) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + file.string());
  out << value.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + file.string());
}

}  // namespace atd::cli
