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

#include "stash/types.h"

#include <chrono>
#include <cmath>
#include <ctime>

#include "stash/error.h"

namespace stash {

std::string_view ErrcName(Errc code) {
  switch (code) {
    case Errc::kIoFailure: return "io_failure";
    case Errc::kCorruptFile: return "corrupt_file";
    case Errc::kSchemaVersionUnknown: return "schema_version_unknown";
    case Errc::kDimensionMismatch: return "dimension_mismatch";
    case Errc::kEmptyDocument: return "empty_document";
    case Errc::kEmptyInput: return "empty_input";
    case Errc::kUnknownText: return "unknown_text";
    case Errc::kParseFailure: return "parse_failure";
    case Errc::kMissingChunk: return "missing_chunk";
    case Errc::kEmptyStore: return "empty_store";
    case Errc::kEmptyQuery: return "empty_query";
    case Errc::kEmptyIndex: return "empty_index";
    case Errc::kMissingFile: return "missing_file";
    case Errc::kDanglingQrel: return "dangling_qrel";
    case Errc::kEmptyBundle: return "empty_bundle";
    case Errc::kEmptyPool: return "empty_pool";
    case Errc::kAllProfilesEmpty: return "all_profiles_empty";
    case Errc::kMissingPositive: return "missing_positive";
    case Errc::kLimitExceeded: return "limit_exceeded";
    case Errc::kInvalidArgument: return "invalid_argument";
    case Errc::kMissingComponent: return "missing_component";
  }
  return "unknown";
}

UnixTime SystemNow() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

std::string FormatUtc(UnixTime t) {
  std::time_t secs = static_cast<std::time_t>(std::floor(t));
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string_view ToString(SourceType v) {
  switch (v) {
    case SourceType::kText: return "text";
    case SourceType::kCode: return "code";
    case SourceType::kImported: return "imported";
  }
  return "text";
}

std::string_view ToString(ChunkKind v) {
  switch (v) {
    case ChunkKind::kProse: return "prose";
    case ChunkKind::kCodeDefinition: return "code_definition";
    case ChunkKind::kCodeFallback: return "code_fallback";
  }
  return "prose";
}

std::string_view ToString(Tier v) {
  switch (v) {
    case Tier::kHigh: return "high";
    case Tier::kMedium: return "medium";
    case Tier::kLow: return "low";
  }
  return "low";
}

std::string_view ToString(SearchMode v) {
  switch (v) {
    case SearchMode::kVector: return "vector";
    case SearchMode::kFts: return "fts";
    case SearchMode::kHybrid: return "hybrid";
  }
  return "hybrid";
}

std::optional<SourceType> ParseSourceType(std::string_view s) {
  for (auto v : {SourceType::kText, SourceType::kCode, SourceType::kImported}) {
    if (ToString(v) == s) return v;
  }
  return std::nullopt;
}

std::optional<ChunkKind> ParseChunkKind(std::string_view s) {
  for (auto v : {ChunkKind::kProse, ChunkKind::kCodeDefinition, ChunkKind::kCodeFallback}) {
    if (ToString(v) == s) return v;
  }
  return std::nullopt;
}

std::optional<Tier> ParseTier(std::string_view s) {
  for (auto v : {Tier::kHigh, Tier::kMedium, Tier::kLow}) {
    if (ToString(v) == s) return v;
  }
  return std::nullopt;
}

std::optional<SearchMode> ParseSearchMode(std::string_view s) {
  for (auto v : {SearchMode::kVector, SearchMode::kFts, SearchMode::kHybrid}) {
    if (ToString(v) == s) return v;
  }
  return std::nullopt;
}

}  // namespace stash
