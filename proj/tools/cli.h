// Copyright 2026 The Stash Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef STASH_TOOLS_CLI_H_
#define STASH_TOOLS_CLI_H_

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "stash/limits.h"
#include "stash/retrieval.h"

namespace stash::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitMissingComponent = 3;

struct CliConfig {
  std::string store_path;
  std::map<std::string, std::string> profiles;
  std::string embedder = "test";
  FusionConfig fusion;
  Limits limits;
  int max_tokens = 1024;
  int overlap = 128;
  std::vector<std::string> warnings;
};

// Reads an explicit config file, or the per-user one when present.
CliConfig LoadConfig(const std::optional<std::filesystem::path> &explicit_path);
CliConfig ParseConfig(const nlohmann::json &j);

std::filesystem::path DefaultConfigPath();
std::filesystem::path DefaultStorePath();

// Executable used by `retrain`, from STASH_TRAINER or PATH.
std::optional<std::filesystem::path> FindTrainer();

int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace stash::cli

#endif  // STASH_TOOLS_CLI_H_
