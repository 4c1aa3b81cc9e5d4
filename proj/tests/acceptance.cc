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

// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <sqlite3.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "cli.h"
#include "stash/digest.h"
#include "stash/error.h"
#include "stash/eval.h"
#include "stash/miner.h"
#include "stash/retrieval.h"
#include "stash/text_index.h"
#include "test_util.h"

namespace stash {
namespace {

using testing::AddDoc;
using testing::AtDistance;
using testing::MapEmbedder;
using testing::NewStore;
using testing::TempDir;

struct Outcome {
  bool pass = true;
  std::string detail;

  void Expect(bool ok, const std::string &what) {
    if (!ok) {
      if (pass) detail = what;
      pass = false;
    }
  }
};

// ---------------------------------------------------------------- fusion

Outcome RrfOracle() {
  Outcome o;
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> w(0.0, 1.0);
  auto random_list = [&](int universe, int max_len) {
    std::vector<ChunkId> ids;
    for (int i = 1; i <= universe; ++i) ids.push_back(ChunkId{i});
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(rng() % (max_len + 1));
    return ids;
  };
  int ties = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto v = random_list(40, 30), f = random_list(40, 30);
    // Every fifth trial uses equal weights so mirrored ranks tie.
    double wv = trial % 5 == 0 ? 0.5 : w(rng);
    double wf = trial % 5 == 0 ? 0.5 : w(rng);
    int k = trial % 2 == 0 ? 60 : 1 + static_cast<int>(rng() % 100);
    std::map<std::int64_t, double> score;
    for (size_t i = 0; i < v.size(); ++i) score[raw(v[i])] += wv / (k + static_cast<double>(i + 1));
    for (size_t i = 0; i < f.size(); ++i) score[raw(f[i])] += wf / (k + static_cast<double>(i + 1));
    std::vector<std::pair<std::int64_t, double>> want(score.begin(), score.end());
    std::sort(want.begin(), want.end(), [](const auto &a, const auto &b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    for (size_t i = 0; i + 1 < want.size(); ++i) ties += want[i].second == want[i + 1].second;
    auto got = RrfFuse(v, f, wv, wf, k);
    o.Expect(got.size() == want.size(), "size mismatch in trial " + std::to_string(trial));
    if (!o.pass) return o;
    for (size_t i = 0; i < got.size(); ++i) {
      o.Expect(raw(got[i].chunk_id) == want[i].first,
               "order mismatch in trial " + std::to_string(trial));
      o.Expect(std::abs(got[i].rrf_score - want[i].second) <= 1e-12,
               "score mismatch in trial " + std::to_string(trial));
    }
  }
  o.Expect(ties > 0, "no ties exercised");
  if (o.pass) o.detail = "1000 pairs, " + std::to_string(ties) + " tied neighbours";
  return o;
}

// --------------------------------------------------------------- metrics

Outcome MetricOracles() {
  Outcome o;
  Qrels one = {{"a", 1}};
  std::vector<std::string> first = {"a", "b"}, second = {"b", "a"}, none = {"b", "c"};
  o.Expect(NdcgAtK(first, one, 2) == 1.0, "perfect ranking is not 1.0");
  o.Expect(NdcgAtK(second, one, 2) == 1.0 / std::log2(3.0), "rank-2 fixture is not 1/log2(3)");
  o.Expect(std::abs(NdcgAtK(second, one, 2) - 0.6309) < 5e-5, "rank-2 fixture is not ~0.6309");
  o.Expect(NdcgAtK(none, one, 2) == 0.0, "no-hit fixture is not 0");

  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> len(0, 15), grade(0, 3), doc(0, 19), kk(1, 12);
  for (int c = 0; c < 1000; ++c) {
    std::vector<std::string> ids;
    for (int i = 0; i < 20; ++i) ids.push_back("d" + std::to_string(i));
    std::shuffle(ids.begin(), ids.end(), rng);
    std::vector<std::string> ranked(ids.begin(), ids.begin() + len(rng));
    Qrels q;
    for (int i = 0, n = len(rng); i < n; ++i) q["d" + std::to_string(doc(rng))] = grade(rng);
    int k = kk(rng);
    auto g = [&](const std::string &d) { return q.count(d) ? q.at(d) : 0; };
    double dcg = 0, idcg = 0, hits = 0, rr = 0;
    for (int i = 0; i < k && i < static_cast<int>(ranked.size()); ++i) {
      dcg += (std::pow(2.0, g(ranked[i])) - 1) / std::log2(i + 2.0);
      hits += g(ranked[i]) > 0;
    }
    for (size_t i = 0; i < ranked.size(); ++i) {
      if (g(ranked[i]) > 0) {
        rr = 1.0 / static_cast<double>(i + 1);
        break;
      }
    }
    std::vector<int> grades;
    for (const auto &[d, gr] : q) grades.push_back(gr);
    std::sort(grades.rbegin(), grades.rend());
    for (int i = 0; i < k && i < static_cast<int>(grades.size()); ++i) {
      idcg += (std::pow(2.0, grades[i]) - 1) / std::log2(i + 2.0);
    }
    double ndcg = idcg > 0 ? dcg / idcg : 0.0;
    o.Expect(std::abs(NdcgAtK(ranked, q, k) - ndcg) <= 1e-9, "ndcg case " + std::to_string(c));
    o.Expect(std::abs(PrecisionAtK(ranked, q, k) - hits / k) <= 1e-9, "p@k case " + std::to_string(c));
    o.Expect(std::abs(ReciprocalRank(ranked, q) - rr) <= 1e-9, "mrr case " + std::to_string(c));
  }
  if (o.pass) o.detail = "3 fixtures + 1000 random cases";
  return o;
}

Outcome AdaptiveWeightProperties() {
  Outcome o;
  FusionConfig cfg;
  cfg.sigmoid_midpoint = 3.0;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> idf(0.0, 25.0);
  std::vector<double> xs(10000);
  for (auto &x : xs) x = idf(rng);
  std::sort(xs.begin(), xs.end());
  double prev = -1.0;
  for (double x : xs) {
    auto w = AdaptiveWeights(x, cfg);
    o.Expect(w.w_fts >= prev, "not monotone at idf " + std::to_string(x));
    o.Expect(w.w_fts >= 0.2 && w.w_fts <= 0.6, "out of bounds at idf " + std::to_string(x));
    o.Expect(std::abs(w.w_vec + w.w_fts - 1.0) < 1e-12, "weights do not sum to 1");
    prev = w.w_fts;
  }
  o.Expect(std::abs(AdaptiveWeights(3.0, cfg).w_fts - 0.4) < 1e-15, "midpoint is not 0.4");
  o.Expect(std::abs(AdaptiveWeights(1e3, cfg).w_fts - 0.6) < 1e-12, "upper asymptote");
  FusionConfig far;
  far.sigmoid_midpoint = 60.0;
  o.Expect(std::abs(AdaptiveWeights(0.0, far).w_fts - 0.2) < 1e-12, "lower asymptote");
  FusionConfig corpus;
  o.Expect(std::abs(AdaptiveWeights(2.2, corpus, 2.2).w_fts - 0.4) < 1e-15,
           "corpus midpoint is not 0.4");
  if (o.pass) o.detail = "10000 sampled idf values";
  return o;
}

Outcome CutoffBoundaries() {
  Outcome o;
  FusionConfig cfg;
  o.Expect(SelectCutoffMultiplier(50, cfg) == 1.15, "50 words");
  o.Expect(SelectCutoffMultiplier(51, cfg) == 5.0, "51 words");
  auto cands = [] {
    RankedCandidate best, other;
    best.chunk_id = ChunkId{1};
    best.distance = 0.50;
    other.chunk_id = ChunkId{2};
    other.distance = 0.58;
    return std::vector<RankedCandidate>{best, other};
  };
  auto wide = DistanceCutoffFilter(cands(), 5.0);
  auto tight = DistanceCutoffFilter(cands(), 1.15);
  o.Expect(wide.kept.size() == 2, "5.0 drops the 0.58 candidate");
  o.Expect(tight.kept.size() == 1 && tight.dropped.size() == 1 &&
               tight.dropped[0].chunk_id == ChunkId{2},
           "1.15 keeps the 0.58 candidate");

  // The same boundary observed through a full search.
  TempDir dir;
  TestEmbedder emb(64);
  auto store = NewStore(dir / "s.db", 64);
  AddDoc(*store, emb, "a", {"plain words for the cutoff check"});
  for (int words : {50, 51}) {
    std::string q = "plain";
    for (int i = 1; i < words; ++i) q += " word";
    SearchOptions opt;
    opt.record_telemetry = false;
    auto r = Search(*store, emb, q, opt);
    o.Expect(r.trace.cutoff_multiplier == (words > 50 ? 5.0 : 1.15),
             "pipeline multiplier for " + std::to_string(words) + " words");
  }
  if (o.pass) o.detail = "{50,51} -> {1.15,5.0}; 0.58 kept/dropped";
  return o;
}

Outcome MmrCriterion() {
  Outcome o;
  const int dim = 32;
  TempDir dir;
  MapEmbedder emb(dim);
  auto store = NewStore(dir / "s.db", dim);
  emb.Set("probe", testing::Basis(dim, 0));
  std::vector<std::string> dups = {"dup one", "dup two", "dup three"};
  for (int i = 0; i < 3; ++i) {
    Vector v = AtDistance(dim, 0.40 + 0.001 * i, 1);
    v[9] = 0.001f * static_cast<float>(i);
    emb.Set(dups[i], v);
  }
  AddDoc(*store, emb, "dup", dups);
  const char *names[] = {"bravo", "charlie", "delta", "echo"};
  for (int i = 0; i < 4; ++i) {
    std::string text = std::string(names[i]) + " text";
    emb.Set(text, AtDistance(dim, 0.41 + 0.01 * i, 2 + i));
    AddDoc(*store, emb, names[i], {text});
  }
  auto unique_docs = [](const SearchResponse &r) {
    std::set<std::int64_t> docs;
    for (const auto &x : r.results) docs.insert(raw(x.doc_id));
    return docs.size();
  };
  SearchOptions opt;
  opt.k = 5;
  opt.record_telemetry = false;
  size_t with = unique_docs(Search(*store, emb, "probe", opt));
  opt.apply_mmr = false;
  size_t without = unique_docs(Search(*store, emb, "probe", opt));
  o.Expect(with == 5, "MMR top-5 has " + std::to_string(with) + " unique docs");
  o.Expect(without <= 3, "plain top-5 has " + std::to_string(without) + " unique docs");

  Vector e0 = testing::Basis(4, 0);
  std::vector<MmrItem> items = {{1, 1.0, e0}, {1, 0.9, e0}};
  auto stop = MmrSelect(items, 0.5, 5);
  o.Expect(stop.stopped && stop.selected == std::vector<size_t>{0}, "stop rule did not halt");
  o.Expect(std::abs(0.5 * 0.9 - 0.5 * 1.0 - (-0.05)) < 1e-15, "stop-rule arithmetic");
  if (o.pass) {
    o.detail = "unique docs " + std::to_string(with) + " vs " + std::to_string(without) +
               "; stop at -0.05";
  }
  return o;
}

Outcome Tiers() {
  Outcome o;
  const double d[] = {0.50, 0.95, 0.96, 0.98, 0.99};
  const Tier want[] = {Tier::kHigh, Tier::kHigh, Tier::kMedium, Tier::kMedium, Tier::kLow};
  for (int i = 0; i < 5; ++i) {
    o.Expect(RelevanceTier(d[i]) == want[i], "distance " + std::to_string(d[i]));
  }
  if (o.pass) o.detail = "5 boundaries";
  return o;
}

Outcome Sweep() {
  Outcome o;
  TempDir dir;
  TestEmbedder emb(384);
  auto store = NewStore(dir / "s.db", 384);
  auto b = MakeSyntheticBundle();
  IngestBundle(*store, emb, b);
  std::vector<std::string> rel;
  for (const auto &q : b.queries) rel.push_back(q.text);
  auto irr = MakeOffTopicQueries(11, 100);
  auto thresholds = DefaultSweepThresholds();
  auto r = RelevanceSweep(*store, emb, rel, irr, thresholds);
  o.Expect(r.best_f1 >= 0.95, "best F1 " + std::to_string(r.best_f1));
  for (const auto &row : r.rows) o.Expect(r.best_f1 >= row.f1, "argmax property");
  char buf[96];
  std::snprintf(buf, sizeof buf, "best F1 %.4f at %.2f", r.best_f1, r.best_threshold);
  if (o.pass) o.detail = buf;
  return o;
}

// ------------------------------------------------------------- integrity

void RawSql(const std::filesystem::path &path, const std::string &sql) {
  sqlite3 *db = nullptr;
  sqlite3_open(path.c_str(), &db);
  char *msg = nullptr;
  int rc = sqlite3_exec(db, sql.c_str(), nullptr, nullptr, &msg);
  std::string err = msg ? msg : "";
  sqlite3_free(msg);
  sqlite3_close(db);
  if (rc != SQLITE_OK) throw std::runtime_error(err);
}

Outcome Integrity() {
  Outcome o;
  const int dim = 32;
  TestEmbedder emb(dim);
  auto seed = [&](const std::filesystem::path &p) {
    auto s = NewStore(p, dim);
    AddDoc(*s, emb, "a.txt", {"first part apples", "second part apples", "third part apples"});
    AddDoc(*s, emb, "b.txt", {"first part boats", "second part boats", "third part boats"});
    return s;
  };
  struct Case {
    std::string_view invariant;
    std::function<void(Store &, const std::filesystem::path &)> inject;
    bool reopen = false;
  };
  std::vector<Case> cases = {
      {kInvChunkCount,
       [](Store &s, const std::filesystem::path &) {
         s.ExecRawForTesting("UPDATE documents SET chunk_count = 9 WHERE doc_id = 1");
       }},
      {kInvVectorParity,
       [](Store &s, const std::filesystem::path &) {
         s.ExecRawForTesting("DELETE FROM chunk_vectors WHERE chunk_id = 2");
       }},
      {kInvTextIndex,
       [](Store &s, const std::filesystem::path &) { s.ExecRawForTesting("DELETE FROM text_index WHERE chunk_id = 4"); }},
      {kInvOrphans,
       [](Store &s, const std::filesystem::path &) {
         s.ExecRawForTesting(
             "INSERT INTO chunks(doc_id, seq, text, token_count, kind, content_digest) "
             "VALUES(777, 0, 'lost', 1, 'prose', '" + ContentDigest("lost") + "')");
       }},
      {kInvStorage,
       [](Store &, const std::filesystem::path &p) {
         RawSql(p,
                "PRAGMA writable_schema=ON;"
                "UPDATE sqlite_master SET sql='CREATE INDEX idx_chunks_doc_seq ON chunks(seq, "
                "doc_id)' WHERE name='idx_chunks_doc_seq';"
                "PRAGMA writable_schema=OFF;");
       },
       true},
  };
  for (const auto &c : cases) {
    TempDir dir;
    auto path = dir / "s.db";
    auto store = seed(path);
    std::string name(c.invariant);
    if (c.reopen) {
      store.reset();
      c.inject(*store, path);
      store = Store::Open(path, StoreOptions{});
    } else {
      c.inject(*store, path);
    }
    auto found = store->IntegrityCheck();
    o.Expect(!found.Get(c.invariant).pass, name + " not detected");
    auto repaired = store->IntegrityRepair(&emb);
    o.Expect(repaired.total_changes() > 0, name + " repair made no change");
    o.Expect(store->IntegrityCheck().ok(), name + " still failing after repair");
    o.Expect(store->IntegrityRepair(&emb).total_changes() == 0, name + " repair not idempotent");
  }
  if (o.pass) o.detail = "5 invariants injected, detected, repaired";
  return o;
}

Outcome InjectionFuzz() {
  Outcome o;
  TempDir dir;
  TestEmbedder emb(32);
  auto store = NewStore(dir / "s.db", 32);
  std::mt19937_64 rng(99);
  const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "and", "or",
                                          "not", "near", "col", "other"};
  std::map<std::int64_t, std::set<std::string>> terms_of;
  for (int i = 0; i < 60; ++i) {
    std::string text;
    for (int j = 0; j < 4; ++j) text += words[rng() % words.size()] + " ";
    DocId d = AddDoc(*store, emb, "d" + std::to_string(i), {text});
    auto stems = TokenizeStem(text);
    terms_of[raw(store->DocumentChunks(d)[0].chunk_id)] = {stems.begin(), stems.end()};
  }
  const std::vector<std::string> pieces = {"AND", "OR", "NOT", "NEAR", "\"", "(", ")", "*",
                                           "^", ":", "-", "+", "{", "}", "'", "alpha",
                                           "beta", "gamma", "delta", "col:", "NEAR/2", "*)"};
  int matched = 0;
  for (int q = 0; q < 1000; ++q) {
    std::string query;
    for (int j = 0, n = 1 + static_cast<int>(rng() % 6); j < n; ++j) {
      query += pieces[rng() % pieces.size()];
      if (rng() % 2) query += ' ';
    }
    auto qterms = TokenizeStem(query);
    std::set<std::string> literal(qterms.begin(), qterms.end());
    SearchOptions opt;
    opt.mode = SearchMode::kFts;
    opt.k = 60;
    opt.apply_mmr = false;
    opt.expand = false;
    opt.record_telemetry = false;
    try {
      for (const auto &r : Search(*store, emb, query, opt).results) {
        const auto &have = terms_of[raw(r.chunk_id)];
        bool shares = std::any_of(literal.begin(), literal.end(),
                                  [&](const std::string &t) { return have.count(t) > 0; });
        o.Expect(shares, "query '" + query + "' matched a chunk without its terms");
        ++matched;
      }
    } catch (const Error &e) {
      o.Expect(e.code() == Errc::kEmptyQuery, "query '" + query + "' raised " + e.what());
    }
  }
  if (o.pass) o.detail = "1000 queries, " + std::to_string(matched) + " literal matches";
  return o;
}

// ---------------------------------------------------------------- mining

Outcome Mining() {
  Outcome o;
  const int dim = 32;
  {
    TempDir dir;
    MapEmbedder emb(dim);
    auto store = NewStore(dir / "s.db", dim);
    auto fx = testing::BuildTwoCluster(*store, emb);
    auto out = MineDisagreement(*store, emb, testing::kClusterQuery, fx.semantic[0]);
    std::set<Direction> dirs;
    for (const auto &t : out.triples) {
      dirs.insert(t.direction);
      o.Expect(t.negative != t.positive, "negative equals positive");
    }
    o.Expect(dirs.size() == 2, "two-cluster fixture did not yield both directions");
    auto path = dir / "t.jsonl";
    ExportTriples(out.triples, path);
    o.Expect(ReadTriples(path) == out.triples, "jsonl round trip differs");
    o.detail = std::to_string(out.triples.size()) + " triples, both directions";
  }
  {
    TempDir dir;
    TestEmbedder emb(dim);
    auto store = NewStore(dir / "s.db", dim);
    DocId d = AddDoc(*store, emb, "only", {"zircon quartz alone"});
    auto single = MineDisagreement(*store, emb, "zircon quartz", store->DocumentChunks(d)[0].chunk_id);
    o.Expect(single.triples.empty(), "single-chunk store produced triples");
  }
  {
    TempDir dir;
    MapEmbedder emb(dim);
    emb.Set("zircon", testing::Basis(dim, 0));
    auto store = NewStore(dir / "s.db", dim);
    ChunkId first{};
    for (int i = 0; i < 8; ++i) {
      std::string text;
      for (int j = 0; j < 9 - i; ++j) text += "zircon ";
      for (int j = 0; j < i; ++j) text += "pad ";
      emb.Set(text, AtDistance(dim, 0.1 + 0.05 * i, 1 + i));
      DocId doc = AddDoc(*store, emb, "d" + std::to_string(i), {text});
      if (i == 0) first = store->DocumentChunks(doc)[0].chunk_id;
    }
    auto same = MineDisagreement(*store, emb, "zircon", first);
    o.Expect(same.triples.empty() && !same.record.disagrees,
             "identical rankings produced triples");
  }
  return o;
}

// -------------------------------------------------------- negative result

Outcome NegativeResult() {
  Outcome o;
  TempDir dir;
  TestEmbedder emb(384);
  auto store = NewStore(dir / "s.db", 384);
  SyntheticOptions so;
  so.topics = 4;
  so.docs_per_topic = 10;
  so.words_per_doc = 12;
  so.key_words_per_doc = 1;
  so.query_topic_words = 0;
  so.queries = 40;
  auto b = MakeSyntheticBundle(so);
  IngestBundle(*store, emb, b);
  EvalOptions eval;
  eval.search.apply_cutoff = false;
  auto g = ScoringGridSearch(*store, emb, b, kAllPatterns, DefaultScoringGrid(), 30, {}, eval);
  double worst = 0.0;
  for (const auto &row : g.rows) {
    if (row.config.b <= 0) continue;
    for (const auto &[pattern, delta] : row.delta) {
      o.Expect(delta <= 0.0, "b>0 config beat pure RRF under " + pattern);
      worst = std::min(worst, delta);
    }
  }
  for (const auto &[pattern, ratio] : g.max_mean_ratio) {
    if (ratio <= 8.0) o.Expect(g.gate.at(pattern) == 0.0, "gate opened under " + pattern);
  }

  TempDir big_dir;
  TestEmbedder small(16);
  auto big = NewStore(big_dir / "s.db", 16);
  for (int i = 0; i < 919; ++i) AddDoc(*big, small, "doc" + std::to_string(i), {"chunk " + std::to_string(i)});
  SimulateAccessPattern(*big, AccessPattern::kFrequencySkewed, 30);
  std::vector<std::int64_t> counts;
  for (const auto &r : big->GetChunks(big->AllChunkIds()).records) counts.push_back(r.access_count);
  double mean = 0;
  for (auto c : counts) mean += static_cast<double>(c);
  mean /= static_cast<double>(counts.size());
  double ratio = static_cast<double>(*std::max_element(counts.begin(), counts.end())) / mean;
  o.Expect(ratio <= 8.0, "frequency_skewed max/mean " + std::to_string(ratio));
  o.Expect(MaturityGate(counts) == 0.0, "gate opened on 919 chunks");
  char buf[128];
  std::snprintf(buf, sizeof buf, "baseline %.4f, worst delta %.4f, 919-chunk max/mean %.2f",
                g.baseline_ndcg, worst, ratio);
  if (o.pass) o.detail = buf;
  return o;
}

Outcome Scale() {
  Outcome o;
  ScaleOptions so;
  so.sizes = {10000, 50000};
  so.dimension = 384;
  so.queries = 100;
  auto r = ScaleBenchmark(so);
  const auto &last = r.rows.back();
  o.Expect(last.n_chunks == 50000, "largest size is not 50000");
  o.Expect(last.p50_ms < 50.0, "p50 " + std::to_string(last.p50_ms) + " ms");
  o.Expect(r.max_ndcg_drift < 0.02, "ndcg drift " + std::to_string(r.max_ndcg_drift));
  for (const auto &row : r.rows) o.Expect(row.p50_ms <= row.p95_ms && row.p95_ms <= row.p99_ms, "percentile order");
  char buf[128];
  std::snprintf(buf, sizeof buf, "50K x 384 p50 %.2f ms, p99 %.2f ms, drift %.4f", last.p50_ms,
                last.p99_ms, r.max_ndcg_drift);
  if (o.pass) o.detail = buf;
  return o;
}

Outcome Determinism() {
  Outcome o;
  TempDir dir;
  auto bundle = MakeSyntheticBundle();
  std::vector<std::string> args = {"--store", (dir / "base.db").string(), "ingest"};
  std::filesystem::create_directories(dir / "corpus");
  for (size_t i = 0; i < 30; ++i) {
    auto p = dir / "corpus" / (bundle.corpus[i].id + ".txt");
    std::ofstream(p) << bundle.corpus[i].text;
    args.push_back(p.string());
  }
  std::ostringstream sink;
  if (cli::RunCli(args, sink, sink) != 0) {
    o.Expect(false, "ingest failed: " + sink.str());
    return o;
  }
  std::vector<std::string> outputs;
  for (int run = 0; run < 3; ++run) {
    auto copy = dir / ("run" + std::to_string(run) + ".db");
    std::filesystem::copy_file(dir / "base.db", copy);
    std::string all;
    for (const auto &q : {bundle.queries[0].text, bundle.queries[1].text}) {
      for (const char *mode : {"hybrid", "vector", "fts"}) {
        std::ostringstream out, err;
        cli::RunCli({"--store", copy.string(), "search", q, "--mode", mode, "--json"}, out, err);
        all += out.str();
      }
    }
    outputs.push_back(all);
  }
  o.Expect(outputs[0] == outputs[1] && outputs[1] == outputs[2], "outputs differ across runs");
  o.Expect(outputs[0].size() > 100, "empty output");
  if (o.pass) o.detail = "3 runs x 6 searches, " + std::to_string(outputs[0].size()) + " bytes each";
  return o;
}

struct Criterion {
  const char *name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace stash

int main() {
  using namespace stash;
  // Keep CLI runs away from any per-user config or store.
  auto home = std::filesystem::temp_directory_path() / "stash-acceptance-home";
  std::filesystem::create_directories(home);
  ::setenv("XDG_CONFIG_HOME", home.c_str(), 1);
  ::setenv("XDG_DATA_HOME", home.c_str(), 1);
  ::unsetenv("STASH_STORE");

  const Criterion criteria[] = {
      {"rrf_oracle", 5, RrfOracle},
      {"metric_oracles", 5, MetricOracles},
      {"adaptive_weights", 1, AdaptiveWeightProperties},
      {"cutoff_boundaries", 5, CutoffBoundaries},
      {"mmr", 5, MmrCriterion},
      {"relevance_tiers", 1, Tiers},
      {"relevance_sweep", 30, Sweep},
      {"integrity", 10, Integrity},
      {"injection_safety", 10, InjectionFuzz},
      {"disagreement_mining", 10, Mining},
      {"negative_result", 60, NegativeResult},
      {"scale_latency", 600, Scale},
      {"determinism", 60, Determinism},
  };
  int failed = 0;
  for (const auto &c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.pass && s > c.budget_s) {
      o.pass = false;
      o.detail += "; over time budget";
    }
    failed += !o.pass;
    std::printf("%s %-20s %.2fs  %s\n", o.pass ? "PASS" : "FAIL", c.name, s, o.detail.c_str());
    std::fflush(stdout);
  }
  std::filesystem::remove_all(home);
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed,
              std::size(criteria));
  return failed == 0 ? 0 : 1;
}
