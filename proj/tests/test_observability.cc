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

#include <limits>
#include <set>

#include "doctest.h"
#include "stash/metrics.h"
#include "stash/miss_analysis.h"
#include "test_util.h"

namespace stash {
namespace {

using testing::AddDoc;
using testing::AtDistance;
using testing::MapEmbedder;
using testing::NewStore;
using testing::TempDir;

constexpr int kDim = 32;

// "probe" sits at e0. "anchor" is nearest at 0.30 and its second chunk
// duplicates the first's direction, "far" lies at 1.3x the best distance and shares no
// words with the probe, "lexical" matches the probe word but points away.
struct MissFixture {
  TempDir dir;
  MapEmbedder emb{kDim};
  std::unique_ptr<Store> store = NewStore(dir / "s.db", kDim);
  MissFixture() {
    emb.Set("probe", testing::Basis(kDim, 0));
    emb.Set("anchor words", AtDistance(kDim, 0.30, 1));
    auto copy = AtDistance(kDim, 0.3002, 1);
    copy[20] = 0.0005f;
    emb.Set("copy words", copy);
    emb.Set("near one", AtDistance(kDim, 0.31, 2));
    emb.Set("near two", AtDistance(kDim, 0.32, 3));
    emb.Set("far words", AtDistance(kDim, 0.39, 4));
    emb.Set("probe lexical", AtDistance(kDim, 0.95, 5));
    AddDoc(*store, emb, "anchor", {"anchor words", "copy words"});
    AddDoc(*store, emb, "near1", {"near one"});
    AddDoc(*store, emb, "near2", {"near two"});
    AddDoc(*store, emb, "far", {"far words"});
    AddDoc(*store, emb, "lexical", {"probe lexical"});
  }
  MissReport Miss(std::string_view query, std::string_view uri, SearchOptions opt = {}) {
    return MissAnalysis(*store, emb, query, uri, "default", opt);
  }
};

TEST_SUITE("observability") {
  TEST_CASE("counters and snapshots") {
    MissFixture fx;
    auto &m = fx.store->metrics();
    auto before = m.Snapshot();
    CHECK(m.Snapshot() == before);
    for (int i = 0; i < 3; ++i) Search(*fx.store, fx.emb, "probe");
    auto after = m.Snapshot();
    CHECK(after.counters.at("searches") == before.counters.at("searches") + 3);
    CHECK(after.counters.at("search_events") == before.counters.at("search_events") + 3);
    CHECK(after.histograms.at("total").count == before.histograms.at("total").count + 3);
    for (const char *stage : {"embed", "knn", "bm25", "fuse", "cutoff", "boost", "mmr", "expand"}) {
      CHECK(after.histograms.at(stage).count == before.histograms.at(stage).count + 3);
    }
    CHECK(m.Snapshot() == after);

    std::vector<ChunkId> ids;
    for (int i = 0; i < 1800; ++i) ids.push_back(ChunkId{i + 1});
    auto lookups = m.Get(Counter::kBatchLookups);
    fx.store->GetChunks(ids);
    CHECK(m.Get(Counter::kBatchLookups) == lookups + 2);
  }

  TEST_CASE("stage timings cover the pipeline") {
    MissFixture fx;
    auto r = Search(*fx.store, fx.emb, "probe");
    std::set<std::string> seen;
    for (const auto &s : r.trace.stages) {
      CHECK(s.ms >= 0.0);
      seen.insert(std::string(ToString(s.stage)));
    }
    CHECK(seen.size() == kStageCount);
    CHECK(r.trace.total_ms >= 0.0);
  }

  TEST_CASE("histogram buckets") {
    CHECK(HistogramBound(0) == 0.25);
    CHECK(HistogramBound(2) == 1.0);
    CHECK(HistogramBound(12) == 1024.0);
    CHECK(std::isinf(HistogramBound(13)));
    MetricsRegistry m;
    m.Observe(Stage::kKnn, 0.1);
    m.Observe(Stage::kKnn, 0.25);
    m.Observe(Stage::kKnn, 0.3);
    m.Observe(Stage::kKnn, 5000.0);
    auto h = m.Snapshot().histograms.at("knn");
    CHECK(h.counts[0] == 2);
    CHECK(h.counts[1] == 1);
    CHECK(h.counts[13] == 1);
    CHECK(h.count == 4);
    CHECK(h.sum_ms == doctest::Approx(5000.65));
  }

  TEST_CASE("slow query log") {
    MissFixture fx;
    auto &log = fx.store->slow_log();
    log.set_threshold_ms(std::numeric_limits<double>::infinity());
    for (int i = 0; i < 5; ++i) Search(*fx.store, fx.emb, "probe");
    CHECK(log.Entries().empty());

    log.set_threshold_ms(0.0);
    Search(*fx.store, fx.emb, "probe");
    REQUIRE(log.Entries().size() == 1);
    CHECK(log.Entries()[0].query == "probe");
    CHECK(log.Entries()[0].stages.size() == kStageCount);

    log.Clear();
    for (int i = 0; i < 300; ++i) {
      SearchOptions opt;
      opt.record_telemetry = false;
      Search(*fx.store, fx.emb, "probe " + std::to_string(i), opt);
    }
    auto entries = log.Entries();
    CHECK(entries.size() == SlowQueryLog::kCapacity);
    CHECK(entries.front().query == "probe 44");
    CHECK(entries.back().query == "probe 299");
  }

  TEST_CASE("miss: not in corpus") {
    MissFixture fx;
    auto r = fx.Miss("probe", "nowhere");
    CHECK(r.verdict == MissVerdict::kNotInCorpus);
    auto by_id = MissAnalysis(*fx.store, fx.emb, "probe", DocId{999});
    CHECK(by_id.verdict == MissVerdict::kNotInCorpus);
  }

  TEST_CASE("miss: distance cutoff") {
    MissFixture fx;
    auto r = fx.Miss("probe", "far");
    CHECK(r.verdict == MissVerdict::kEliminatedByCutoff);
    CHECK(r.details["best_distance"].get<double>() == doctest::Approx(0.30).epsilon(1e-5));
    CHECK(r.details["cutoff_multiplier"].get<double>() == 1.15);
    CHECK(r.details["cutoff_threshold"].get<double>() == doctest::Approx(0.345).epsilon(1e-5));
    CHECK(r.details["candidates"][0]["distance"].get<double>() ==
          doctest::Approx(0.39).epsilon(1e-5));
    bool mentions = false;
    for (const auto &s : r.suggestions) mentions |= s.find("multiplier was 1.15") != std::string::npos;
    CHECK(mentions);
    CHECK_FALSE(r.details["in_fts_pool"].get<bool>());
    CHECK(r.details["in_vector_pool"].get<bool>());
    bool vocab = false;
    for (const auto &s : r.suggestions) vocab |= s.find("no query term matches") != std::string::npos;
    CHECK(vocab);
  }

  TEST_CASE("miss: a long query widens the cutoff") {
    MissFixture fx;
    std::string q = "probe";
    for (int i = 0; i < 55; ++i) q += " filler";
    fx.emb.Set(q, testing::Basis(kDim, 0));
    auto r = fx.Miss(q, "far");
    CHECK(r.details["cutoff_multiplier"].get<double>() == 5.0);
    CHECK(r.verdict == MissVerdict::kRetrieved);
  }

  TEST_CASE("miss: rank and retrieved verdicts") {
    MissFixture fx;
    SearchOptions opt;
    opt.k = 10;
    // The duplicate chunk stops selection, yet its document was already chosen.
    auto anchor = fx.Miss("probe", "anchor", opt);
    CHECK(anchor.verdict == MissVerdict::kRetrieved);
    std::set<std::string> fates;
    for (const auto &c : anchor.details["candidates"]) fates.insert(c["elimination"].get<std::string>());
    CHECK(fates == std::set<std::string>{"returned", "mmr_stop"});
    opt.k = 1;
    opt.apply_mmr = false;
    auto below = fx.Miss("probe", "near2", opt);
    CHECK(below.verdict == MissVerdict::kBelowRankK);
    CHECK(below.details.contains("fused_rank"));
    SearchOptions fts;
    fts.mode = SearchMode::kFts;
    CHECK(fx.Miss("probe", "anchor", fts).verdict == MissVerdict::kNoChunkInFtsPool);
  }

  TEST_CASE("miss analysis is reproducible and writes nothing") {
    MissFixture fx;
    auto events = fx.store->SearchEvents().size();
    auto access = fx.store->GetChunks(fx.store->AllChunkIds()).records;
    auto a = ToJson(fx.Miss("probe", "far")).dump();
    auto b = ToJson(fx.Miss("probe", "far")).dump();
    CHECK(a == b);
    CHECK(fx.store->SearchEvents().size() == events);
    auto later = fx.store->GetChunks(fx.store->AllChunkIds()).records;
    REQUIRE(later.size() == access.size());
    for (size_t i = 0; i < later.size(); ++i) CHECK(later[i].access_count == access[i].access_count);
    auto j = nlohmann::json::parse(a);
    for (const char *key : {"query", "expected_doc", "verdict", "details", "suggestions"}) {
      CHECK(j.contains(key));
    }
  }
}

}  // namespace
}  // namespace stash
