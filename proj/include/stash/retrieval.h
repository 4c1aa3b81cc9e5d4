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

#ifndef STASH_RETRIEVAL_H_
#define STASH_RETRIEVAL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "stash/embedder.h"
#include "stash/metrics.h"
#include "stash/store.h"
#include "stash/types.h"

namespace stash {

struct FusionConfig {
  int rrf_k = 60;
  double w_vec = 0.6;
  double w_fts = 0.4;
  bool adaptive = true;
  // Unset means the corpus mean idf of the current index.
  std::optional<double> sigmoid_midpoint;
  double sigmoid_slope = 1.0;
  double w_fts_min = 0.2;
  double w_fts_max = 0.6;
  double cutoff_short = 1.15;
  double cutoff_long = 5.0;
  int long_query_words = 50;
  int candidate_pool = 50;
  double mmr_lambda = 0.5;
  int context_window = 1;

  void Validate() const;
};

enum class Elimination { kDistanceCutoff, kMmrStop, kBelowK };
std::string_view ToString(Elimination e);

struct RankedCandidate {
  ChunkId chunk_id{};
  std::optional<int> rank_vec;
  std::optional<int> rank_fts;
  std::optional<double> distance;
  double rrf_score = 0.0;
  // rrf_score after boosts and rescoring; what MMR and the output see.
  double score = 0.0;
  std::optional<Elimination> elimination;
};

struct SearchResult {
  ChunkId chunk_id{};
  DocId doc_id{};
  double score = 0.0;
  std::string text;
  std::string context;
  std::string content_digest;
  Tier tier = Tier::kLow;
  RankedCandidate diagnostics;
};

struct AccessStats {
  std::int64_t access_count = 0;
  double days_ago = 0.0;
};

struct FusionWeights {
  double w_vec;
  double w_fts;
};

// Weighted reciprocal rank fusion. Lists are 1-ranked in the given order;
// a repeated id keeps its first rank.
std::vector<RankedCandidate> RrfFuse(std::span<const ChunkId> vec_list,
                                     std::span<const ChunkId> fts_list, double w_vec,
                                     double w_fts, int rrf_k = 60);

// Sigmoid over mean idf. corpus_midpoint is used when cfg has no midpoint.
FusionWeights AdaptiveWeights(double mean_idf, const FusionConfig &cfg,
                              double corpus_midpoint = 0.0);

double SelectCutoffMultiplier(int query_word_count, const FusionConfig &cfg);

struct CutoffOutcome {
  std::vector<RankedCandidate> kept;
  std::vector<RankedCandidate> dropped;  // marked kDistanceCutoff
  std::optional<double> best_distance;
  double threshold = 0.0;
};
CutoffOutcome DistanceCutoffFilter(std::vector<RankedCandidate> candidates, double multiplier);

struct MmrItem {
  std::int64_t group = 0;  // document
  double norm_score = 0.0;
  std::span<const float> vector;
};

struct MmrOutcome {
  std::vector<size_t> selected;  // indices into the input, in pick order
  bool stopped = false;          // halted on a negative MMR value
};

// Greedy selection; the similarity penalty only applies within a group.
MmrOutcome MmrSelect(std::span<const MmrItem> items, double lambda, int k);

// Min-max scaling to [0, 1]; a constant input maps to all ones.
std::vector<double> MinMaxNormalize(std::span<const double> values);

Tier RelevanceTier(double best_distance);
double RecencyBoost(double score, double days_ago, double B);
double FrequencyDecayScore(double s_rrf_norm, const AccessStats &stats, double a, double b,
                           double L, int S = 100);
double MaturityGate(std::span<const std::int64_t> access_counts, double threshold = 8.0);

// Chunks seq-window .. seq+window of the chunk's document, newline-joined.
std::string ExpandContext(const Store &store, ChunkId chunk_id, int window = 1);

struct FrequencyDecayParams {
  double a = 1.0;
  double b = 0.0;
  double L = 0.05;
  int S = 100;
};

struct SearchOptions {
  SearchMode mode = SearchMode::kHybrid;
  int k = 10;
  FusionConfig cfg;
  double boost_B = 0.0;
  // Fixed weights that bypass both cfg weights and the adaptive sigmoid.
  std::optional<FusionWeights> weights;
  bool apply_cutoff = true;
  bool apply_mmr = true;
  bool expand = true;
  // Access-count and event writes. Off for evaluation and diagnostics.
  bool record_telemetry = true;
  std::optional<FrequencyDecayParams> frequency_decay;
};

struct SearchTrace {
  int query_words = 0;
  double mean_idf = 0.0;
  FusionWeights weights{0.0, 0.0};
  double cutoff_multiplier = 0.0;
  std::optional<double> best_distance;
  Tier tier = Tier::kLow;
  std::vector<ChunkId> vec_pool;
  std::vector<ChunkId> fts_pool;
  // Every fused candidate in fused order, with its elimination if any.
  std::vector<RankedCandidate> candidates;
  std::vector<StageTiming> stages;
  double total_ms = 0.0;
};

struct SearchResponse {
  std::vector<SearchResult> results;
  SearchTrace trace;
  std::int64_t event_id = 0;
};

SearchResponse Search(Store &store, const EmbeddingProvider &embedder, std::string_view query,
                      const SearchOptions &options = {});

struct FederatedHit {
  std::string content_digest;
  double score = 0.0;
  // (profile index, result) for every profile that returned this content.
  std::vector<std::pair<int, SearchResult>> sources;
};

std::vector<FederatedHit> FederatedSearch(std::span<Store *const> profiles,
                                          const EmbeddingProvider &embedder,
                                          std::string_view query, const SearchOptions &options);

nlohmann::json ToJson(const SearchResult &result);
nlohmann::json ToJson(const std::vector<SearchResult> &results);

}  // namespace stash

#endif  // STASH_RETRIEVAL_H_
