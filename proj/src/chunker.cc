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

#include "stash/chunker.h"

#include <algorithm>
#include <cctype>
#include <array>

#include "stash/error.h"
#include "stash/text_index.h"

namespace stash {
namespace {

struct Word {
  size_t begin;
  size_t end;
  bool starts_paragraph;
};

bool IsBlank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
  });
}

std::vector<Word> ScanWords(std::string_view text) {
  std::vector<Word> words;
  int newlines = 0;
  size_t i = 0;
  auto space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  while (i < text.size()) {
    while (i < text.size() && space(text[i])) {
      if (text[i] == '\n') ++newlines;
      ++i;
    }
    if (i >= text.size()) break;
    size_t start = i;
    while (i < text.size() && !space(text[i])) ++i;
    words.push_back({start, i, !words.empty() && newlines >= 2});
    newlines = 0;
  }
  return words;
}

int CountTokens(std::string_view text) { return static_cast<int>(SplitWords(text).size()); }

std::vector<std::string_view> SplitLines(std::string_view text) {
  std::vector<std::string_view> lines;
  size_t start = 0;
  while (start <= text.size()) {
    size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::string JoinLines(const std::vector<std::string_view> &lines, size_t begin, size_t end) {
  std::string out;
  for (size_t i = begin; i < end; ++i) {
    if (i > begin) out += '\n';
    out += lines[i];
  }
  return out;
}

bool IsDecorator(std::string_view line, Language language) {
  switch (language) {
    case Language::kPython:
    case Language::kJava:
    case Language::kJsTs:
      return line.starts_with("@");
    case Language::kRust:
      return line.starts_with("#[");
    default:
      return false;
  }
}

// Line windows of at most max_tokens, zero overlap. A single line longer
// than the window is cut by words.
void FixedWindows(const std::vector<std::string_view> &lines, size_t begin, size_t end,
                  int max_tokens, std::vector<ChunkSpan> &out) {
  size_t cur = begin;
  while (cur < end) {
    size_t stop = cur;
    int tokens = 0;
    while (stop < end) {
      int t = CountTokens(lines[stop]);
      if (tokens + t > max_tokens && stop > cur) break;
      tokens += t;
      ++stop;
      if (tokens >= max_tokens) break;
    }
    if (tokens > max_tokens) {
      // One oversized line.
      auto line = lines[cur];
      auto words = ScanWords(line);
      for (size_t w = 0; w < words.size(); w += max_tokens) {
        size_t last = std::min(words.size(), w + max_tokens) - 1;
        ChunkSpan s;
        s.text = std::string(line.substr(words[w].begin, words[last].end - words[w].begin));
        s.token_count = static_cast<int>(last - w + 1);
        s.kind = ChunkKind::kCodeFallback;
        out.push_back(std::move(s));
      }
    } else if (tokens > 0) {
      ChunkSpan s;
      s.text = JoinLines(lines, cur, stop);
      s.token_count = tokens;
      s.kind = ChunkKind::kCodeFallback;
      out.push_back(std::move(s));
    }
    cur = stop;
  }
}

// Blank-line paragraphs packed greedily up to max_tokens; a paragraph that
// alone exceeds the window goes to FixedWindows.
void ParagraphFallback(const std::vector<std::string_view> &lines, size_t begin, size_t end,
                       int max_tokens, std::vector<ChunkSpan> &out) {
  std::vector<std::pair<size_t, size_t>> paragraphs;
  size_t i = begin;
  while (i < end) {
    while (i < end && IsBlank(lines[i])) ++i;
    if (i >= end) break;
    size_t start = i;
    while (i < end && !IsBlank(lines[i])) ++i;
    paragraphs.emplace_back(start, i);
  }
  size_t p = 0;
  while (p < paragraphs.size()) {
    int tokens = 0;
    size_t q = p;
    while (q < paragraphs.size()) {
      int t = 0;
      for (size_t l = paragraphs[q].first; l < paragraphs[q].second; ++l) t += CountTokens(lines[l]);
      if (tokens + t > max_tokens) break;
      tokens += t;
      ++q;
    }
    if (q == p) {
      FixedWindows(lines, paragraphs[p].first, paragraphs[p].second, max_tokens, out);
      ++p;
      continue;
    }
    ChunkSpan s;
    s.text = JoinLines(lines, paragraphs[p].first, paragraphs[q - 1].second);
    s.token_count = tokens;
    s.kind = ChunkKind::kCodeFallback;
    out.push_back(std::move(s));
    p = q;
  }
}

}  // namespace

std::string_view ToString(Language lang) {
  switch (lang) {
    case Language::kPython: return "python";
    case Language::kJsTs: return "js_ts";
    case Language::kGo: return "go";
    case Language::kRust: return "rust";
    case Language::kJava: return "java";
    case Language::kUnknown: return "unknown";
  }
  return "unknown";
}

Language LanguageFromPath(const std::filesystem::path &path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".py" || ext == ".pyi") return Language::kPython;
  if (ext == ".js" || ext == ".jsx" || ext == ".ts" || ext == ".tsx" || ext == ".mjs" ||
      ext == ".cjs")
    return Language::kJsTs;
  if (ext == ".go") return Language::kGo;
  if (ext == ".rs") return Language::kRust;
  if (ext == ".java") return Language::kJava;
  return Language::kUnknown;
}

bool IsDefinitionStart(std::string_view line, Language language) {
  static constexpr std::array<std::string_view, 3> kPython = {"def ", "class ", "async def "};
  static constexpr std::array<std::string_view, 3> kJsTs = {"function ", "class ", "export "};
  static constexpr std::array<std::string_view, 1> kGo = {"func "};
  static constexpr std::array<std::string_view, 5> kRust = {"fn ", "pub fn ", "impl ", "struct ",
                                                            "enum "};
  static constexpr std::array<std::string_view, 4> kJava = {"public ", "private ", "protected ",
                                                            "class "};
  auto match = [line](const auto &prefixes) {
    return std::any_of(prefixes.begin(), prefixes.end(),
                       [line](std::string_view p) { return line.starts_with(p); });
  };
  switch (language) {
    case Language::kPython: return match(kPython);
    case Language::kJsTs: return match(kJsTs);
    case Language::kGo: return match(kGo);
    case Language::kRust: return match(kRust);
    case Language::kJava: return match(kJava);
    case Language::kUnknown: return false;
  }
  return false;
}

std::vector<ChunkSpan> SemanticChunk(std::string_view text, int max_tokens, int overlap) {
  if (max_tokens <= 0 || overlap < 0 || overlap >= max_tokens) {
    throw Error(Errc::kInvalidArgument, "need max_tokens > overlap >= 0");
  }
  auto words = ScanWords(text);
  if (words.empty()) throw Error(Errc::kEmptyInput, "nothing to chunk");

  std::vector<ChunkSpan> out;
  const size_t n = words.size();
  size_t start = 0;
  for (;;) {
    size_t end = std::min(n, start + static_cast<size_t>(max_tokens));
    size_t next = end - static_cast<size_t>(overlap);
    if (end < n) {
      const size_t min_len = std::max<size_t>(1, static_cast<size_t>(max_tokens) / 2);
      for (size_t p = end; p > start + min_len; --p) {
        if (p < n && words[p].starts_paragraph) {
          end = p;
          next = p;
          break;
        }
      }
    }
    ChunkSpan s;
    s.text = std::string(text.substr(words[start].begin, words[end - 1].end - words[start].begin));
    s.token_count = static_cast<int>(end - start);
    s.seq = static_cast<int>(out.size());
    s.kind = ChunkKind::kProse;
    out.push_back(std::move(s));
    if (end >= n) break;
    start = next;
  }
  return out;
}

std::vector<ChunkSpan> CodeChunk(std::string_view source, Language language, int max_tokens) {
  if (max_tokens <= 0) throw Error(Errc::kInvalidArgument, "max_tokens must be positive");
  if (CountTokens(source) == 0) throw Error(Errc::kEmptyInput, "nothing to chunk");
  if (language == Language::kUnknown) {
    return SemanticChunk(source, max_tokens, std::min(kDefaultOverlap, max_tokens / 8));
  }

  auto lines = SplitLines(source);
  // Segment starts: each definition line, pulled back over its decorators.
  std::vector<size_t> starts;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (!IsDefinitionStart(lines[i], language)) continue;
    size_t s = i;
    while (s > 0 && IsDecorator(lines[s - 1], language)) --s;
    if (!starts.empty() && s <= starts.back()) continue;
    starts.push_back(s);
  }

  std::vector<ChunkSpan> out;
  auto emit = [&](size_t begin, size_t end, ChunkKind kind) {
    std::string text = JoinLines(lines, begin, end);
    int tokens = CountTokens(text);
    if (tokens == 0) return;
    if (tokens <= max_tokens) {
      out.push_back({std::move(text), tokens, 0, kind});
    } else {
      ParagraphFallback(lines, begin, end, max_tokens, out);
    }
  };

  size_t first = starts.empty() ? lines.size() : starts.front();
  if (first > 0) emit(0, first, ChunkKind::kCodeFallback);
  for (size_t i = 0; i < starts.size(); ++i) {
    size_t end = i + 1 < starts.size() ? starts[i + 1] : lines.size();
    emit(starts[i], end, ChunkKind::kCodeDefinition);
  }
  for (size_t i = 0; i < out.size(); ++i) out[i].seq = static_cast<int>(i);
  return out;
}

}  // namespace stash
