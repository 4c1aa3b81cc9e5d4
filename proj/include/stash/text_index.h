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

#ifndef STASH_TEXT_INDEX_H_
#define STASH_TEXT_INDEX_H_

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stash/types.h"

namespace stash {

// Lowercase, split on non-alphanumerics, Porter-stem. Bytes >= 0x80 are
// kept inside tokens so UTF-8 words survive intact.
std::vector<std::string> TokenizeStem(std::string_view text);

// Whitespace-separated raw words (used for word counts and query clauses).
std::vector<std::string_view> SplitWords(std::string_view text);

// One literal clause per whitespace word of the raw query. Operator-looking
// words ("OR", "NOT", quotes, parentheses, '*') are just more literal terms.
struct QueryClause {
  std::string word;
  std::vector<std::string> terms;
};

struct CompiledQuery {
  std::vector<QueryClause> clauses;
  // Distinct stemmed terms across all clauses, first-seen order.
  std::vector<std::string> terms;

  bool empty() const { return terms.empty(); }
  // Display form: every term double-quoted, joined with OR.
  std::string Render() const;
};

CompiledQuery CompileQuery(std::string_view raw);

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

// ln(1 + (N - df + 0.5) / (df + 0.5))
double Idf(std::int64_t total_chunks, std::int64_t document_frequency);

struct ScoredChunk {
  ChunkId chunk_id;
  double score;
};

// Per-chunk term statistics as persisted by the store (one entry per chunk).
struct TermEntry {
  std::vector<std::pair<std::string, int>> term_freqs;  // sorted by term
  int length = 0;                                       // stemmed tokens
};

TermEntry BuildTermEntry(std::string_view text);
std::string SerializeTermEntry(const TermEntry &entry);
std::optional<TermEntry> ParseTermEntry(std::string_view data);

// In-memory inverted index. Writes are exclusive; concurrent readers are
// fine once writes have stopped.
class TextIndex {
 public:
  TextIndex();
  ~TextIndex();
  TextIndex(TextIndex &&) noexcept;
  TextIndex &operator=(TextIndex &&) noexcept;

  void Add(ChunkId id, const TermEntry &entry);
  void Add(ChunkId id, std::string_view text) { Add(id, BuildTermEntry(text)); }
  bool Remove(ChunkId id);

  std::int64_t size() const { return static_cast<std::int64_t>(lengths_.size()); }
  double average_length() const;

  // Descending score, ties by ascending chunk id; only chunks matching at
  // least one term.
  std::vector<ScoredChunk> Bm25Search(const CompiledQuery &query, int n,
                                      Bm25Params params = {}) const;

  // Chunk ids containing at least one of the query's terms.
  std::vector<ChunkId> Matching(const CompiledQuery &query) const;

  std::int64_t DocumentFrequency(const std::string &term) const;

  // Mean idf over the stemmed query terms (repeats included). Served from
  // the lazily built vocabulary cache.
  double MeanIdf(std::string_view raw_query) const;

  // Mean idf over the whole vocabulary; the default sigmoid midpoint.
  double CorpusMeanIdf() const;

  // Number of times the vocabulary cache has been (re)built.
  int vocabulary_builds() const;

 private:
  struct Posting {
    ChunkId chunk_id;
    int term_frequency;
  };
  struct Vocabulary {
    std::unordered_map<std::string, std::int64_t> df;
    double mean_idf = 0.0;
  };

  const Vocabulary &Vocab() const;
  void Invalidate();

  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::unordered_map<std::int64_t, std::vector<std::string>> forward_;
  std::unordered_map<std::int64_t, int> lengths_;
  std::int64_t total_length_ = 0;

  mutable std::unique_ptr<std::mutex> vocab_mu_;
  mutable std::shared_ptr<const Vocabulary> vocab_;
  mutable int vocab_builds_ = 0;
};

}  // namespace stash

#endif  // STASH_TEXT_INDEX_H_
