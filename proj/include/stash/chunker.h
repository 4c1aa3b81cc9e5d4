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

#ifndef STASH_CHUNKER_H_
#define STASH_CHUNKER_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "stash/types.h"

namespace stash {

// A token is a whitespace-delimited word.
struct ChunkSpan {
  std::string text;
  int token_count = 0;
  int seq = 0;
  ChunkKind kind = ChunkKind::kProse;
};

enum class Language { kPython, kJsTs, kGo, kRust, kJava, kUnknown };

std::string_view ToString(Language lang);
Language LanguageFromPath(const std::filesystem::path &path);

inline constexpr int kDefaultMaxTokens = 1024;
inline constexpr int kDefaultOverlap = 128;

// Sliding token windows of max_tokens sharing `overlap` tokens. A window
// that can end on a paragraph break (blank line) in its second half ends
// there instead, and the next window starts at the paragraph with no
// overlap.
std::vector<ChunkSpan> SemanticChunk(std::string_view text, int max_tokens = kDefaultMaxTokens,
                                     int overlap = kDefaultOverlap);

// Column-0 definition splitting. Spans start at top-level definitions, with
// directly preceding decorator/annotation lines attached; indented
// definitions never start a span. Spans over max_tokens are re-split on
// blank lines, then into line windows, and marked kCodeFallback. Unknown
// languages go through SemanticChunk.
std::vector<ChunkSpan> CodeChunk(std::string_view source, Language language,
                                 int max_tokens = kDefaultMaxTokens);

// True if `line` starts a top-level definition for `language`.
bool IsDefinitionStart(std::string_view line, Language language);

}  // namespace stash

#endif  // STASH_CHUNKER_H_
