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

#ifndef STASH_MINER_H_
#define STASH_MINER_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stash/embedder.h"
#include "stash/store.h"
#include "stash/retrieval.h"
#include "stash/text_index.h"

namespace stash {

inline constexpr FusionWeights kVecHeavy{0.95, 0.05};
inline constexpr FusionWeights kFtsHeavy{0.05, 0.95};
inline constexpr int kTripleWindow = 5;
inline constexpr int kMaxPseudoQueryWords = 64;

enum class Direction { kDenseBlindSpot, kLexicalBlindSpot };
std::string_view ToString(Direction d);
std::optional<Direction> ParseDirection(std::string_view s);

struct DisagreementRecord {
  std::string query;
  std::vector<ChunkId> vec_heavy_top;
  std::vector<ChunkId> fts_heavy_top;
  bool disagrees = false;
};

struct DisagreementTriple {
  std::string query;
  std::string positive;
  std::string negative;
  Direction direction = Direction::kDenseBlindSpot;
  std::string source;

  bool operator==(const DisagreementTriple &) const = default;
};

struct MiningOutcome {
  DisagreementRecord record;
  std::vector<DisagreementTriple> triples;
};

// Raw fusion (no cutoff, no MMR) under the vector-heavy and fts-heavy
// weightings. A chunk in one top-5 but not the other becomes a negative.
// `swap_weights` exchanges the two weightings.
MiningOutcome MineDisagreement(Store &store, const EmbeddingProvider &embedder,
                               std::string_view query, ChunkId positive, int top_k = 10,
                               std::string_view source = "", bool swap_weights = false);

std::vector<std::string> SplitSentences(std::string_view text);

// First sentence, plus the sentence with the highest mean idf when it
// differs. Each query is capped at 64 words.
std::vector<std::string> GeneratePseudoQueries(std::string_view chunk_text,
                                               const TextIndex &index, int max_queries = 2);

struct MiningQuery {
  std::string query;
  ChunkId positive{};
  std::string source;
};

struct SourceRate {
  std::int64_t queries = 0;
  std::int64_t disagreements = 0;
  double rate() const { return queries ? static_cast<double>(disagreements) / queries : 0.0; }
};

struct MiningSummary {
  std::int64_t queries = 0;
  std::int64_t disagreements = 0;
  std::map<std::string, SourceRate> per_source;
  std::vector<DisagreementTriple> triples;
  std::int64_t dense_blind_spots = 0;
  std::int64_t lexical_blind_spots = 0;

  // Disagreements over all queries.
  double aggregate_rate() const;
  // Unweighted mean of the per-source rates.
  double mean_source_rate() const;
};

MiningSummary MineQueries(Store &store, const EmbeddingProvider &embedder,
                          std::span<const MiningQuery> queries, int top_k = 10);

// Pseudo-queries from every chunk, each mined with its source chunk as the
// positive. Source is the document's collection.
MiningSummary MineStore(Store &store, const EmbeddingProvider &embedder, int max_queries = 2,
                        int top_k = 10);

// One JSON object per line. Returns the number of lines written.
size_t ExportTriples(std::span<const DisagreementTriple> triples,
                     const std::filesystem::path &path, bool append = false);
std::vector<DisagreementTriple> ReadTriples(const std::filesystem::path &path);

}  // namespace stash

#endif  // STASH_MINER_H_
