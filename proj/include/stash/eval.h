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

#ifndef STASH_EVAL_H_
#define STASH_EVAL_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "stash/chunker.h"
#include "stash/embedder.h"
#include "stash/retrieval.h"
#include "stash/store.h"

namespace stash {

struct BeirDoc {
  std::string id;
  std::string title;
  std::string text;
};

struct BeirQuery {
  std::string id;
  std::string text;
};

using Qrels = std::map<std::string, int>;  // doc id -> grade

struct EvalBundle {
  std::vector<BeirDoc> corpus;
  std::vector<BeirQuery> queries;
  std::map<std::string, Qrels> qrels;  // query id -> judgments
};

// corpus.jsonl, queries.jsonl and qrels.tsv (header row, then
// query-id, corpus-id, score).
EvalBundle LoadBeir(const std::filesystem::path &dir);
void WriteBeir(const EvalBundle &bundle, const std::filesystem::path &dir);

double NdcgAtK(std::span<const std::string> ranked, const Qrels &qrels, int k);
double PrecisionAtK(std::span<const std::string> ranked, const Qrels &qrels, int k);
double ReciprocalRank(std::span<const std::string> ranked, const Qrels &qrels);

// Nearest-rank percentile of an ascending sample, p in (0, 100].
double Percentile(std::span<const double> sorted, double p);

struct IngestOptions {
  std::string collection = "beir";
  int max_tokens = kDefaultMaxTokens;
  int overlap = kDefaultOverlap;
  size_t batch_docs = 256;
};

// Each corpus entry becomes one document whose source_uri is its id.
// Entries with no words are skipped and counted.
struct IngestSummary {
  std::int64_t documents = 0;
  std::int64_t chunks = 0;
  std::int64_t skipped = 0;
};
IngestSummary IngestBundle(Store &store, const EmbeddingProvider &embedder,
                           const EvalBundle &bundle, const IngestOptions &options = {});

struct EvalOptions {
  SearchOptions search;
  std::vector<int> ks = {1, 3, 5, 10};
};

struct MetricsReport {
  std::map<int, double> ndcg_at;
  std::map<int, double> precision_at;
  double mrr = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double p99_ms = 0.0;
  std::int64_t queries = 0;
  std::string label;
};

// Evaluates every query that has judgments. A document ranks at its best
// chunk's position.
MetricsReport RunEval(Store &store, const EmbeddingProvider &embedder, const EvalBundle &bundle,
                      const EvalOptions &options = {});

// Ranked source_uris for one query, best chunk rank per document.
std::vector<std::string> RankDocuments(const Store &store, const SearchResponse &response);

struct SweepRow {
  double threshold = 0.0;
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  double best_threshold = 0.0;
  double best_f1 = 0.0;
};

// A query is predicted to have relevant content iff its best vector
// distance is below the threshold.
SweepReport RelevanceSweep(const Store &store, const EmbeddingProvider &embedder,
                           std::span<const std::string> relevant_queries,
                           std::span<const std::string> irrelevant_queries,
                           std::span<const double> thresholds);
SweepReport SweepDistances(std::span<const double> relevant, std::span<const double> irrelevant,
                           std::span<const double> thresholds);
std::vector<double> DefaultSweepThresholds();

enum class AccessPattern { kUniform, kRecentFocused, kFrequencySkewed, kMixed, kBenchmarkFocused };
std::string_view ToString(AccessPattern p);
std::optional<AccessPattern> ParseAccessPattern(std::string_view s);
inline constexpr AccessPattern kAllPatterns[] = {
    AccessPattern::kUniform, AccessPattern::kRecentFocused, AccessPattern::kFrequencySkewed,
    AccessPattern::kMixed, AccessPattern::kBenchmarkFocused};

struct SimulationOptions {
  std::uint64_t seed = 7;
  double zipf_exponent = 0.3;
  // benchmark_focused targets these source_uris; empty picks a seeded 10%
  // of the documents.
  std::vector<std::string> focus_uris;
};

// Resets all access state, then replays `rounds` rounds of the pattern.
void SimulateAccessPattern(Store &store, AccessPattern pattern, int rounds,
                           const SimulationOptions &options = {});

struct ScoringConfig {
  double a = 1.0;
  double b = 0.0;
  double L = 0.05;
};
std::vector<ScoringConfig> DefaultScoringGrid();

struct GridRow {
  ScoringConfig config;
  std::map<std::string, double> ndcg;   // pattern -> NDCG@10
  std::map<std::string, double> delta;  // pattern -> NDCG@10 minus baseline
  double avg_ndcg = 0.0;
  double avg_delta = 0.0;
};

struct GridReport {
  double baseline_ndcg = 0.0;
  std::map<std::string, double> gate;            // pattern -> maturity gate
  std::map<std::string, double> max_mean_ratio;  // pattern -> access max/mean
  std::vector<GridRow> rows;
  bool any_beats_baseline = false;
};

GridReport ScoringGridSearch(Store &store, const EmbeddingProvider &embedder,
                             const EvalBundle &bundle, std::span<const AccessPattern> patterns,
                             std::span<const ScoringConfig> grid, int rounds = 30,
                             const SimulationOptions &sim = {}, const EvalOptions &eval = {});

struct SyntheticOptions {
  std::uint64_t seed = 42;
  int topics = 8;
  int docs_per_topic = 12;
  int words_per_doc = 60;
  int topic_vocab = 40;
  int common_vocab = 300;
  int key_words_per_doc = 3;
  int queries = 100;
  int query_topic_words = 4;
};

// Seeded topic-clustered corpus. Each query targets one document (grade 1)
// through one of its key words plus words from its topic.
EvalBundle MakeSyntheticBundle(const SyntheticOptions &options = {});

// Words from an alphabet disjoint from MakeSyntheticBundle's.
std::vector<std::string> MakeOffTopicQueries(std::uint64_t seed, int n, int words = 5);

struct ScaleRow {
  std::int64_t n_chunks = 0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double p99_ms = 0.0;
  double ndcg10 = 0.0;
};

struct ScaleOptions {
  std::vector<std::int64_t> sizes = {10000, 50000};
  int dimension = kDefaultDimension;
  int queries = 100;
  std::uint64_t seed = 42;
  std::filesystem::path store_path;  // a temporary file when empty
};

struct ScaleReport {
  std::vector<ScaleRow> rows;
  double max_ndcg_drift = 0.0;
  std::string provenance;
};

// Pads a synthetic fixture store with distractor chunks whose vectors are
// orthogonal to every fixture query and whose words never occur in it.
ScaleReport ScaleBenchmark(const ScaleOptions &options = {});

nlohmann::json ToJson(const MetricsReport &r);
nlohmann::json ToJson(const SweepReport &r);
nlohmann::json ToJson(const GridReport &r);
nlohmann::json ToJson(const ScaleReport &r);
std::string FormatText(const MetricsReport &r);
std::string FormatText(const SweepReport &r);
std::string FormatText(const GridReport &r);
std::string FormatText(const ScaleReport &r);

}  // namespace stash

#endif  // STASH_EVAL_H_
