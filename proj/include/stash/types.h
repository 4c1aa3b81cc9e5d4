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

#ifndef STASH_TYPES_H_
#define STASH_TYPES_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace stash {

// Row ids are opaque to callers. They stay valid until the owning document
// is re-ingested; ids are never reused.
enum class ChunkId : std::int64_t {};
enum class DocId : std::int64_t {};

inline std::int64_t raw(ChunkId id) { return static_cast<std::int64_t>(id); }
inline std::int64_t raw(DocId id) { return static_cast<std::int64_t>(id); }

// Seconds since the Unix epoch, UTC.
using UnixTime = double;

inline constexpr double kSecondsPerDay = 86400.0;

UnixTime SystemNow();
std::string FormatUtc(UnixTime t);

enum class SourceType { kText, kCode, kImported };
enum class ChunkKind { kProse, kCodeDefinition, kCodeFallback };
enum class Tier { kHigh, kMedium, kLow };
enum class SearchMode { kVector, kFts, kHybrid };

std::string_view ToString(SourceType v);
std::string_view ToString(ChunkKind v);
std::string_view ToString(Tier v);
std::string_view ToString(SearchMode v);

std::optional<SourceType> ParseSourceType(std::string_view s);
std::optional<ChunkKind> ParseChunkKind(std::string_view s);
std::optional<Tier> ParseTier(std::string_view s);
std::optional<SearchMode> ParseSearchMode(std::string_view s);

}  // namespace stash

#endif  // STASH_TYPES_H_
