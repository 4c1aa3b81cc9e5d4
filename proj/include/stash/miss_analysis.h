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

#ifndef STASH_MISS_ANALYSIS_H_
#define STASH_MISS_ANALYSIS_H_

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stash/embedder.h"
#include "stash/retrieval.h"
#include "stash/store.h"

namespace stash {

enum class MissVerdict {
  kNotInCorpus,
  kNoChunkInVectorPool,
  kNoChunkInFtsPool,
  kEliminatedByCutoff,
  kEliminatedByMmr,
  kBelowRankK,
  kRetrieved,
};
std::string_view ToString(MissVerdict v);

struct MissReport {
  std::string query;
  std::string expected;  // source_uri, or the numeric doc id
  MissVerdict verdict = MissVerdict::kNotInCorpus;
  nlohmann::json details = nlohmann::json::object();
  std::vector<std::string> suggestions;
};

// Replays the search without telemetry writes and reports the first
// pipeline stage that lost the expected document.
MissReport MissAnalysis(Store &store, const EmbeddingProvider &embedder, std::string_view query,
                        DocId expected, const SearchOptions &options = {});
MissReport MissAnalysis(Store &store, const EmbeddingProvider &embedder, std::string_view query,
                        std::string_view source_uri, std::string_view collection,
                        const SearchOptions &options = {});

nlohmann::json ToJson(const MissReport &report);

}  // namespace stash

#endif  // STASH_MISS_ANALYSIS_H_
