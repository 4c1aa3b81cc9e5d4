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

#include "stash/miss_analysis.h"

#include <algorithm>
#include <cstdio>
#include <unordered_set>

namespace stash {
namespace {

using json = nlohmann::json;

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// How far a candidate got; larger is later in the pipeline.
int Progress(const RankedCandidate &c) {
  if (!c.elimination) return 4;
  switch (*c.elimination) {
    case Elimination::kDistanceCutoff: return 1;
    case Elimination::kMmrStop: return 2;
    case Elimination::kBelowK: return 3;
  }
  return 0;
}

}  // namespace

std::string_view ToString(MissVerdict v) {
  switch (v) {
    case MissVerdict::kNotInCorpus: return "not_in_corpus";
    case MissVerdict::kNoChunkInVectorPool: return "no_chunk_in_vector_pool";
    case MissVerdict::kNoChunkInFtsPool: return "no_chunk_in_fts_pool";
    case MissVerdict::kEliminatedByCutoff: return "eliminated_by_cutoff";
    case MissVerdict::kEliminatedByMmr: return "eliminated_by_mmr";
    case MissVerdict::kBelowRankK: return "below_rank_k";
    case MissVerdict::kRetrieved: return "retrieved";
  }
  return "?";
}

MissReport MissAnalysis(Store &store, const EmbeddingProvider &embedder, std::string_view query,
                        DocId expected, const SearchOptions &options) {
  MissReport report;
  report.query = std::string(query);
  report.expected = std::to_string(raw(expected));
  auto doc = store.GetDocument(expected);
  if (!doc) {
    report.verdict = MissVerdict::kNotInCorpus;
    report.suggestions.push_back("the document is not in the store; ingest it first");
    return report;
  }
  report.expected = doc->meta.source_uri;

  SearchOptions opt = options;
  opt.record_telemetry = false;
  auto resp = Search(store, embedder, query, opt);
  const auto &tr = resp.trace;
  const auto &cfg = opt.cfg;

  auto snap = store.Snapshot();
  std::unordered_set<std::int64_t> mine;
  if (auto it = snap->doc_chunks.find(raw(expected)); it != snap->doc_chunks.end()) {
    for (ChunkId id : it->second) mine.insert(raw(id));
  }
  auto any_in = [&](const std::vector<ChunkId> &pool) {
    return std::any_of(pool.begin(), pool.end(), [&](ChunkId id) { return mine.count(raw(id)); });
  };
  bool in_vec = any_in(tr.vec_pool);
  bool in_fts = any_in(tr.fts_pool);

  json chunks = json::array();
  const RankedCandidate *furthest = nullptr;
  for (const auto &c : tr.candidates) {
    if (!mine.count(raw(c.chunk_id))) continue;
    auto info = snap->Info(c.chunk_id);
    chunks.push_back({{"chunk_id", raw(c.chunk_id)},
                      {"seq", info ? info->seq : -1},
                      {"rank_vec", c.rank_vec ? json(*c.rank_vec) : json(nullptr)},
                      {"rank_fts", c.rank_fts ? json(*c.rank_fts) : json(nullptr)},
                      {"distance", c.distance ? json(*c.distance) : json(nullptr)},
                      {"score", c.score},
                      {"elimination", c.elimination ? json(ToString(*c.elimination))
                                                    : json("returned")}});
    if (!furthest || Progress(c) > Progress(*furthest)) furthest = &c;
  }

  double threshold = tr.best_distance ? tr.cutoff_multiplier * *tr.best_distance : 0.0;
  report.details = {
      {"mode", ToString(opt.mode)},
      {"k", opt.k},
      {"candidate_pool", cfg.candidate_pool},
      {"query_words", tr.query_words},
      {"mean_idf", tr.mean_idf},
      {"w_vec", tr.weights.w_vec},
      {"w_fts", tr.weights.w_fts},
      {"best_distance", tr.best_distance ? json(*tr.best_distance) : json(nullptr)},
      {"cutoff_multiplier", tr.cutoff_multiplier},
      {"cutoff_threshold", threshold},
      {"in_vector_pool", in_vec},
      {"in_fts_pool", in_fts},
      {"document_chunks", static_cast<std::int64_t>(mine.size())},
      {"candidates", chunks},
  };

  bool vec_used = opt.mode != SearchMode::kFts;
  bool fts_used = opt.mode != SearchMode::kVector;
  if (fts_used && !in_fts) {
    report.suggestions.push_back("no query term matches the document vocabulary");
  }
  if (vec_used && !in_vec) {
    report.suggestions.push_back("no chunk of the document is among the " +
                                 std::to_string(cfg.candidate_pool) +
                                 " nearest vectors; raise candidate_pool or rephrase the query");
  }

  if (!furthest) {
    report.verdict = vec_used ? MissVerdict::kNoChunkInVectorPool : MissVerdict::kNoChunkInFtsPool;
    return report;
  }
  switch (Progress(*furthest)) {
    case 4:
      report.verdict = MissVerdict::kRetrieved;
      break;
    case 3: {
      report.verdict = MissVerdict::kBelowRankK;
      auto pos = std::find_if(tr.candidates.begin(), tr.candidates.end(),
                              [&](const RankedCandidate &c) { return &c == furthest; }) -
                 tr.candidates.begin();
      report.details["fused_rank"] = pos + 1;
      report.suggestions.push_back("the document's best chunk survived every filter but ranked below k=" +
                                   std::to_string(opt.k) + "; increase k");
      break;
    }
    case 2:
      report.verdict = MissVerdict::kEliminatedByMmr;
      report.suggestions.push_back(
          "selection stopped on a negative MMR value before reaching this document; raise "
          "mmr_lambda (now " + Num(cfg.mmr_lambda) + ")");
      break;
    default:
      report.verdict = MissVerdict::kEliminatedByCutoff;
      report.suggestions.push_back(
          "best chunk distance " + Num(furthest->distance.value_or(0.0)) + " exceeds " +
          Num(threshold) + "; query may be long; cutoff multiplier was " +
          Num(tr.cutoff_multiplier) + " (" + std::to_string(tr.query_words) +
          " words, long-query threshold " + std::to_string(cfg.long_query_words) + ")");
      break;
  }
  return report;
}

MissReport MissAnalysis(Store &store, const EmbeddingProvider &embedder, std::string_view query,
                        std::string_view source_uri, std::string_view collection,
                        const SearchOptions &options) {
  auto doc = store.FindDocument(source_uri, collection);
  if (!doc) {
    MissReport report;
    report.query = std::string(query);
    report.expected = std::string(source_uri);
    report.verdict = MissVerdict::kNotInCorpus;
    report.suggestions.push_back("the document is not in the store; ingest it first");
    return report;
  }
  return MissAnalysis(store, embedder, query, doc->doc_id, options);
}

json ToJson(const MissReport &report) {
  return json{{"query", report.query},
              {"expected_doc", report.expected},
              {"verdict", ToString(report.verdict)},
              {"details", report.details},
              {"suggestions", report.suggestions}};
}

}  // namespace stash
