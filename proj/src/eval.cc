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

#include "stash/eval.h"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "stash/chunker.h"
#include "stash/error.h"
#include "stash/text_index.h"

namespace stash {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string IdField(const json &j, const std::string &where) {
  auto it = j.find("_id");
  if (it == j.end()) throw Error(Errc::kParseFailure, where + ": missing _id");
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
  throw Error(Errc::kParseFailure, where + ": _id is not a string");
}

std::string StringField(const json &j, const char *key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return "";
  if (!it->is_string()) return it->dump();
  return it->get<std::string>();
}

std::ifstream OpenRequired(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kMissingFile, path.string());
  return in;
}

std::vector<json> ReadJsonl(const std::filesystem::path &path) {
  auto in = OpenRequired(path);
  std::vector<json> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = json::parse(line, nullptr, false);
    if (!j.is_object()) {
      throw Error(Errc::kParseFailure, path.string() + ":" + std::to_string(lineno));
    }
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<std::string> SplitTabs(const std::string &line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, '\t')) out.push_back(cur);
  return out;
}

std::string Trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  size_t i = 0;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

std::unordered_map<std::int64_t, std::string> UriMap(const Store &store) {
  std::unordered_map<std::int64_t, std::string> out;
  for (const auto &d : store.ListDocuments()) out.emplace(raw(d.doc_id), d.meta.source_uri);
  return out;
}

std::vector<std::string> RankWith(const std::unordered_map<std::int64_t, std::string> &uris,
                                  const SearchResponse &response) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto &r : response.results) {
    auto it = uris.find(raw(r.doc_id));
    if (it == uris.end()) continue;
    if (seen.insert(it->second).second) out.push_back(it->second);
  }
  return out;
}

class WordMaker {
 public:
  WordMaker(std::string consonants, std::string vowels, int syllables)
      : consonants_(std::move(consonants)), vowels_(std::move(vowels)), syllables_(syllables) {}

  // A word not produced before by this maker.
  std::string Next(std::mt19937_64 &rng) {
    std::uniform_int_distribution<size_t> c(0, consonants_.size() - 1);
    std::uniform_int_distribution<size_t> v(0, vowels_.size() - 1);
    for (;;) {
      std::string w;
      for (int i = 0; i < syllables_; ++i) {
        w += consonants_[c(rng)];
        w += vowels_[v(rng)];
      }
      if (used_.insert(w).second) return w;
    }
  }

 private:
  std::string consonants_;
  std::string vowels_;
  int syllables_;
  std::set<std::string> used_;
};

template <typename T>
const T &Pick(std::mt19937_64 &rng, const std::vector<T> &v) {
  std::uniform_int_distribution<size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

std::string Join(const std::vector<std::string> &words) {
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::string Fmt(const char *fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

EvalBundle LoadBeir(const std::filesystem::path &dir) {
  EvalBundle bundle;
  std::set<std::string> doc_ids, query_ids;
  auto corpus_path = dir / "corpus.jsonl";
  auto queries_path = dir / "queries.jsonl";
  auto qrels_path = dir / "qrels.tsv";
  for (const auto &p : {corpus_path, queries_path, qrels_path}) {
    if (!std::filesystem::exists(p)) throw Error(Errc::kMissingFile, p.string());
  }
  int n = 0;
  for (const auto &j : ReadJsonl(corpus_path)) {
    std::string where = corpus_path.string() + " record " + std::to_string(++n);
    BeirDoc d{IdField(j, where), StringField(j, "title"), StringField(j, "text")};
    if (!doc_ids.insert(d.id).second) {
      throw Error(Errc::kParseFailure, where + ": duplicate corpus id " + d.id);
    }
    bundle.corpus.push_back(std::move(d));
  }
  n = 0;
  for (const auto &j : ReadJsonl(queries_path)) {
    std::string where = queries_path.string() + " record " + std::to_string(++n);
    BeirQuery q{IdField(j, where), StringField(j, "text")};
    if (!query_ids.insert(q.id).second) {
      throw Error(Errc::kParseFailure, where + ": duplicate query id " + q.id);
    }
    bundle.queries.push_back(std::move(q));
  }
  auto in = OpenRequired(qrels_path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) continue;  // header
    if (Trim(line).empty()) continue;
    auto cols = SplitTabs(line);
    std::string where = qrels_path.string() + ":" + std::to_string(lineno);
    if (cols.size() < 3) throw Error(Errc::kParseFailure, where + ": expected 3 columns");
    std::string qid = Trim(cols[0]), did = Trim(cols[1]);
    int grade = 0;
    try {
      size_t used = 0;
      std::string g = Trim(cols[2]);
      grade = std::stoi(g, &used);
      if (used != g.size() || grade < 0) throw std::invalid_argument(g);
    } catch (const std::exception &) {
      throw Error(Errc::kParseFailure, where + ": bad grade '" + cols[2] + "'");
    }
    if (!query_ids.count(qid)) throw Error(Errc::kDanglingQrel, where + ": unknown query " + qid);
    if (!doc_ids.count(did)) throw Error(Errc::kDanglingQrel, where + ": unknown document " + did);
    bundle.qrels[qid][did] = grade;
  }
  return bundle;
}

void WriteBeir(const EvalBundle &bundle, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  std::ofstream corpus(dir / "corpus.jsonl"), queries(dir / "queries.jsonl"),
      qrels(dir / "qrels.tsv");
  if (!corpus || !queries || !qrels) throw Error(Errc::kIoFailure, "cannot write " + dir.string());
  for (const auto &d : bundle.corpus) {
    corpus << json{{"_id", d.id}, {"title", d.title}, {"text", d.text}}.dump() << '\n';
  }
  for (const auto &q : bundle.queries) {
    queries << json{{"_id", q.id}, {"text", q.text}}.dump() << '\n';
  }
  qrels << "query-id\tcorpus-id\tscore\n";
  for (const auto &[qid, judged] : bundle.qrels) {
    for (const auto &[did, grade] : judged) qrels << qid << '\t' << did << '\t' << grade << '\n';
  }
}

double NdcgAtK(std::span<const std::string> ranked, const Qrels &qrels, int k) {
  if (k < 1) throw Error(Errc::kInvalidArgument, "k must be >= 1");
  double dcg = 0.0;
  for (size_t i = 0; i < ranked.size() && static_cast<int>(i) < k; ++i) {
    auto it = qrels.find(ranked[i]);
    if (it == qrels.end() || it->second <= 0) continue;
    dcg += (std::pow(2.0, it->second) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
  }
  std::vector<int> grades;
  for (const auto &[doc, g] : qrels) {
    if (g > 0) grades.push_back(g);
  }
  std::sort(grades.rbegin(), grades.rend());
  double idcg = 0.0;
  for (size_t i = 0; i < grades.size() && static_cast<int>(i) < k; ++i) {
    idcg += (std::pow(2.0, grades[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
  }
  return idcg > 0 ? dcg / idcg : 0.0;
}

double PrecisionAtK(std::span<const std::string> ranked, const Qrels &qrels, int k) {
  if (k < 1) throw Error(Errc::kInvalidArgument, "k must be >= 1");
  int hits = 0;
  for (size_t i = 0; i < ranked.size() && static_cast<int>(i) < k; ++i) {
    auto it = qrels.find(ranked[i]);
    if (it != qrels.end() && it->second > 0) ++hits;
  }
  return static_cast<double>(hits) / k;
}

double ReciprocalRank(std::span<const std::string> ranked, const Qrels &qrels) {
  for (size_t i = 0; i < ranked.size(); ++i) {
    auto it = qrels.find(ranked[i]);
    if (it != qrels.end() && it->second > 0) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

double Percentile(std::span<const double> sorted, double p) {
  if (sorted.empty()) return 0.0;
  auto rank = static_cast<size_t>(std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
  rank = std::clamp<size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

IngestSummary IngestBundle(Store &store, const EmbeddingProvider &embedder,
                           const EvalBundle &bundle, const IngestOptions &options) {
  IngestSummary summary;
  std::vector<DocumentInput> batch;
  auto flush = [&] {
    if (batch.empty()) return;
    store.AddDocumentsBatch(batch);
    batch.clear();
  };
  for (const auto &d : bundle.corpus) {
    std::string text = d.title.empty() ? d.text : d.title + "\n\n" + d.text;
    if (SplitWords(text).empty()) {
      ++summary.skipped;
      continue;
    }
    DocumentInput in;
    in.meta.source_uri = d.id;
    in.meta.collection = options.collection;
    in.meta.source_type = SourceType::kImported;
    for (auto &span : SemanticChunk(text, options.max_tokens, options.overlap)) {
      in.chunks.push_back({std::move(span.text), span.token_count, span.kind});
    }
    for (const auto &c : in.chunks) in.vectors.push_back(embedder.EmbedOne(c.text));
    summary.chunks += static_cast<std::int64_t>(in.chunks.size());
    ++summary.documents;
    batch.push_back(std::move(in));
    if (batch.size() >= options.batch_docs) flush();
  }
  flush();
  return summary;
}

std::vector<std::string> RankDocuments(const Store &store, const SearchResponse &response) {
  std::unordered_map<std::int64_t, std::string> uris;
  for (const auto &r : response.results) {
    if (uris.count(raw(r.doc_id))) continue;
    if (auto d = store.GetDocument(r.doc_id)) uris.emplace(raw(r.doc_id), d->meta.source_uri);
  }
  return RankWith(uris, response);
}

MetricsReport RunEval(Store &store, const EmbeddingProvider &embedder, const EvalBundle &bundle,
                      const EvalOptions &options) {
  std::vector<const BeirQuery *> judged;
  for (const auto &q : bundle.queries) {
    if (bundle.qrels.count(q.id)) judged.push_back(&q);
  }
  if (judged.empty()) throw Error(Errc::kEmptyBundle, "no judged queries");
  if (options.ks.empty()) throw Error(Errc::kInvalidArgument, "no cutoffs given");
  SearchOptions search = options.search;
  search.record_telemetry = false;
  int max_k = *std::max_element(options.ks.begin(), options.ks.end());
  search.k = std::max(search.k, max_k);

  auto uris = UriMap(store);
  MetricsReport report;
  for (int k : options.ks) {
    report.ndcg_at[k] = 0.0;
    report.precision_at[k] = 0.0;
  }
  std::vector<double> latencies;
  for (const auto *q : judged) {
    auto t0 = Clock::now();
    auto resp = Search(store, embedder, q->text, search);
    latencies.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    auto ranked = RankWith(uris, resp);
    const Qrels &qrels = bundle.qrels.at(q->id);
    for (int k : options.ks) {
      report.ndcg_at[k] += NdcgAtK(ranked, qrels, k);
      report.precision_at[k] += PrecisionAtK(ranked, qrels, k);
    }
    report.mrr += ReciprocalRank(ranked, qrels);
  }
  double n = static_cast<double>(judged.size());
  for (auto &[k, v] : report.ndcg_at) v /= n;
  for (auto &[k, v] : report.precision_at) v /= n;
  report.mrr /= n;
  report.queries = static_cast<std::int64_t>(judged.size());
  std::sort(latencies.begin(), latencies.end());
  report.p50_ms = Percentile(latencies, 50);
  report.p95_ms = Percentile(latencies, 95);
  report.p99_ms = Percentile(latencies, 99);
  report.label = std::string(ToString(search.mode));
  return report;
}

std::vector<double> DefaultSweepThresholds() {
  std::vector<double> out;
  for (int i = 30; i <= 120; ++i) out.push_back(i / 100.0);
  return out;
}

SweepReport SweepDistances(std::span<const double> relevant, std::span<const double> irrelevant,
                           std::span<const double> thresholds) {
  if (relevant.empty() || irrelevant.empty()) {
    throw Error(Errc::kEmptyPool, "both query pools must be non-empty");
  }
  if (thresholds.empty()) throw Error(Errc::kInvalidArgument, "no thresholds");
  SweepReport report;
  bool first = true;
  for (double t : thresholds) {
    SweepRow row;
    row.threshold = t;
    for (double d : relevant) (d < t ? row.tp : row.fn)++;
    for (double d : irrelevant) (d < t ? row.fp : row.tn)++;
    row.precision = row.tp + row.fp ? static_cast<double>(row.tp) / (row.tp + row.fp) : 0.0;
    row.recall = row.tp + row.fn ? static_cast<double>(row.tp) / (row.tp + row.fn) : 0.0;
    row.f1 = row.precision + row.recall > 0
                 ? 2 * row.precision * row.recall / (row.precision + row.recall)
                 : 0.0;
    if (first || row.f1 > report.best_f1) {
      report.best_f1 = row.f1;
      report.best_threshold = t;
      first = false;
    }
    report.rows.push_back(row);
  }
  return report;
}

SweepReport RelevanceSweep(const Store &store, const EmbeddingProvider &embedder,
                           std::span<const std::string> relevant_queries,
                           std::span<const std::string> irrelevant_queries,
                           std::span<const double> thresholds) {
  if (relevant_queries.empty() || irrelevant_queries.empty()) {
    throw Error(Errc::kEmptyPool, "both query pools must be non-empty");
  }
  auto snap = store.Snapshot();
  if (snap->vectors.size() == 0) throw Error(Errc::kEmptyStore, "store has no vectors");
  auto best = [&](const std::string &q) {
    return snap->vectors.Knn(embedder.EmbedOne(q), 1).front().distance;
  };
  std::vector<double> rel, irr;
  for (const auto &q : relevant_queries) rel.push_back(best(q));
  for (const auto &q : irrelevant_queries) irr.push_back(best(q));
  return SweepDistances(rel, irr, thresholds);
}

std::string_view ToString(AccessPattern p) {
  switch (p) {
    case AccessPattern::kUniform: return "uniform";
    case AccessPattern::kRecentFocused: return "recent_focused";
    case AccessPattern::kFrequencySkewed: return "frequency_skewed";
    case AccessPattern::kMixed: return "mixed";
    case AccessPattern::kBenchmarkFocused: return "benchmark_focused";
  }
  return "?";
}

std::optional<AccessPattern> ParseAccessPattern(std::string_view s) {
  for (auto p : kAllPatterns) {
    if (ToString(p) == s) return p;
  }
  return std::nullopt;
}

void SimulateAccessPattern(Store &store, AccessPattern pattern, int rounds,
                           const SimulationOptions &options) {
  if (rounds < 0) throw Error(Errc::kInvalidArgument, "rounds must be >= 0");
  auto snap = store.Snapshot();
  if (snap->chunks.empty()) throw Error(Errc::kEmptyStore, "store has no chunks");
  auto docs = store.ListDocuments();
  std::stable_sort(docs.begin(), docs.end(), [](const DocumentRecord &a, const DocumentRecord &b) {
    return a.created_at < b.created_at;
  });

  // Chunks grouped by document, oldest document first.
  std::vector<ChunkId> chunks;
  std::vector<size_t> doc_index;
  for (size_t i = 0; i < docs.size(); ++i) {
    auto it = snap->doc_chunks.find(raw(docs[i].doc_id));
    if (it == snap->doc_chunks.end()) continue;
    for (ChunkId id : it->second) {
      chunks.push_back(id);
      doc_index.push_back(i);
    }
  }
  const size_t n = chunks.size();
  std::vector<std::int64_t> counts(n, 0);
  std::vector<std::optional<UnixTime>> last(n);

  std::mt19937_64 rng(options.seed * 1000003 + static_cast<std::uint64_t>(pattern));
  const UnixTime now = store.Now();
  auto touch = [&](size_t i, UnixTime t, std::int64_t times = 1) {
    counts[i] += times;
    last[i] = t;
  };

  std::vector<size_t> zipf_order(n);
  std::iota(zipf_order.begin(), zipf_order.end(), 0);
  std::shuffle(zipf_order.begin(), zipf_order.end(), rng);
  std::vector<double> zipf_w(n);
  for (size_t r = 0; r < n; ++r) zipf_w[r] = 1.0 / std::pow(static_cast<double>(r + 1), options.zipf_exponent);
  std::discrete_distribution<size_t> zipf(zipf_w.begin(), zipf_w.end());

  std::set<std::string> focus(options.focus_uris.begin(), options.focus_uris.end());
  if (pattern == AccessPattern::kBenchmarkFocused && focus.empty()) {
    std::vector<size_t> idx(docs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    size_t take = std::max<size_t>(1, docs.size() / 10);
    for (size_t i = 0; i < take; ++i) focus.insert(docs[idx[i]].meta.source_uri);
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double ndocs = static_cast<double>(std::max<size_t>(1, docs.size()));
  for (int round = 0; round < rounds; ++round) {
    UnixTime t = now - (rounds - 1 - round) * kSecondsPerDay;
    auto recent = [&] {
      for (size_t i = 0; i < n; ++i) {
        if (unit(rng) < (doc_index[i] + 1) / ndocs) touch(i, t);
      }
    };
    auto skewed = [&](size_t draws) {
      for (size_t d = 0; d < draws; ++d) touch(zipf_order[zipf(rng)], t);
    };
    switch (pattern) {
      case AccessPattern::kUniform:
        for (size_t i = 0; i < n; ++i) touch(i, t);
        break;
      case AccessPattern::kRecentFocused: recent(); break;
      case AccessPattern::kFrequencySkewed: skewed(n); break;
      case AccessPattern::kMixed:
        recent();
        skewed(n / 2);
        break;
      case AccessPattern::kBenchmarkFocused:
        for (size_t i = 0; i < n; ++i) {
          if (focus.count(docs[doc_index[i]].meta.source_uri)) {
            touch(i, t, 3);
          } else if (unit(rng) < 0.1) {
            touch(i, t);
          }
        }
        break;
    }
  }

  store.ResetAccess();
  std::vector<Store::AccessUpdate> updates;
  for (size_t i = 0; i < n; ++i) {
    if (counts[i] > 0) updates.push_back({chunks[i], counts[i], last[i]});
  }
  store.SetAccess(updates);
}

std::vector<ScoringConfig> DefaultScoringGrid() {
  std::vector<ScoringConfig> grid;
  const std::pair<double, double> weights[] = {{1.0, 0.0}, {0.8, 0.2}, {0.7, 0.3}, {0.5, 0.5}};
  const double decays[] = {0.03, 0.05, 0.07, 0.10};
  for (auto [a, b] : weights) {
    for (double L : decays) grid.push_back({a, b, L});
  }
  return grid;
}

GridReport ScoringGridSearch(Store &store, const EmbeddingProvider &embedder,
                             const EvalBundle &bundle, std::span<const AccessPattern> patterns,
                             std::span<const ScoringConfig> grid, int rounds,
                             const SimulationOptions &sim, const EvalOptions &eval) {
  EvalOptions base = eval;
  if (std::find(base.ks.begin(), base.ks.end(), 10) == base.ks.end()) base.ks.push_back(10);
  base.search.frequency_decay.reset();

  auto ids = store.AllChunkIds();
  std::vector<Store::AccessUpdate> saved;
  for (const auto &r : store.GetChunks(ids).records) {
    saved.push_back({r.chunk_id, r.access_count, r.last_accessed_at});
  }

  GridReport report;
  report.baseline_ndcg = RunEval(store, embedder, bundle, base).ndcg_at.at(10);
  for (const auto &c : grid) report.rows.push_back(GridRow{c});

  for (AccessPattern p : patterns) {
    std::string name(ToString(p));
    SimulateAccessPattern(store, p, rounds, sim);
    std::vector<std::int64_t> counts;
    for (const auto &r : store.GetChunks(ids).records) counts.push_back(r.access_count);
    double sum = std::accumulate(counts.begin(), counts.end(), 0.0);
    double mean = counts.empty() ? 0.0 : sum / static_cast<double>(counts.size());
    double mx = counts.empty() ? 0.0 : static_cast<double>(*std::max_element(counts.begin(), counts.end()));
    report.max_mean_ratio[name] = mean > 0 ? mx / mean : 0.0;
    report.gate[name] = counts.empty() ? 0.0 : MaturityGate(counts);
    for (auto &row : report.rows) {
      EvalOptions opt = base;
      opt.search.frequency_decay = FrequencyDecayParams{row.config.a, row.config.b, row.config.L};
      double ndcg = RunEval(store, embedder, bundle, opt).ndcg_at.at(10);
      row.ndcg[name] = ndcg;
      row.delta[name] = ndcg - report.baseline_ndcg;
      if (row.config.b > 0 && row.delta[name] > 1e-12) report.any_beats_baseline = true;
    }
  }
  for (auto &row : report.rows) {
    if (row.ndcg.empty()) continue;
    for (const auto &[name, v] : row.ndcg) row.avg_ndcg += v;
    for (const auto &[name, v] : row.delta) row.avg_delta += v;
    row.avg_ndcg /= static_cast<double>(row.ndcg.size());
    row.avg_delta /= static_cast<double>(row.delta.size());
  }

  store.ResetAccess();
  store.SetAccess(saved);
  return report;
}

EvalBundle MakeSyntheticBundle(const SyntheticOptions &o) {
  if (o.topics < 1 || o.docs_per_topic < 1 || o.words_per_doc < 1) {
    throw Error(Errc::kInvalidArgument, "synthetic corpus needs topics, documents and words");
  }
  std::mt19937_64 rng(o.seed);
  WordMaker maker("bdfgklmnprstv", "aeiou", 3);
  std::vector<std::string> common;
  for (int i = 0; i < o.common_vocab; ++i) common.push_back(maker.Next(rng));
  std::vector<std::vector<std::string>> topic_words(o.topics);
  for (auto &tw : topic_words) {
    for (int i = 0; i < o.topic_vocab; ++i) tw.push_back(maker.Next(rng));
  }

  EvalBundle bundle;
  std::vector<std::vector<std::string>> keys;
  std::vector<int> topic_of;
  std::bernoulli_distribution from_topic(0.5);
  for (int t = 0; t < o.topics; ++t) {
    for (int j = 0; j < o.docs_per_topic; ++j) {
      std::vector<std::string> doc_keys;
      for (int k = 0; k < o.key_words_per_doc; ++k) doc_keys.push_back(maker.Next(rng));
      std::vector<std::string> words;
      for (const auto &k : doc_keys) {
        words.push_back(k);
        words.push_back(k);
      }
      while (static_cast<int>(words.size()) < o.words_per_doc) {
        words.push_back(from_topic(rng) ? Pick(rng, topic_words[t]) : Pick(rng, common));
      }
      std::shuffle(words.begin(), words.end(), rng);
      bundle.corpus.push_back(
          {"d" + std::to_string(t) + "_" + std::to_string(j), "", Join(words)});
      keys.push_back(std::move(doc_keys));
      topic_of.push_back(t);
    }
  }
  std::uniform_int_distribution<size_t> doc_pick(0, bundle.corpus.size() - 1);
  for (int q = 0; q < o.queries; ++q) {
    size_t d = doc_pick(rng);
    std::vector<std::string> words = {Pick(rng, keys[d])};
    for (int i = 0; i < o.query_topic_words; ++i) words.push_back(Pick(rng, topic_words[topic_of[d]]));
    std::string qid = "q" + std::to_string(q);
    bundle.queries.push_back({qid, Join(words)});
    bundle.qrels[qid][bundle.corpus[d].id] = 1;
  }
  return bundle;
}

std::vector<std::string> MakeOffTopicQueries(std::uint64_t seed, int n, int words) {
  std::mt19937_64 rng(seed);
  WordMaker maker("cjqwxz", "aeiou", 3);
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) {
    std::vector<std::string> q;
    for (int w = 0; w < words; ++w) q.push_back(maker.Next(rng));
    out.push_back(Join(q));
  }
  return out;
}

ScaleReport ScaleBenchmark(const ScaleOptions &options) {
  if (options.sizes.empty()) throw Error(Errc::kInvalidArgument, "no sizes given");
  std::filesystem::path path = options.store_path;
  bool temporary = path.empty();
  if (temporary) {
    path = std::filesystem::temp_directory_path() /
           ("stash-scale-" + std::to_string(::getpid()) + "-" + std::to_string(options.seed) + ".db");
  }
  auto remove_files = [&] {
    for (const char *suffix : {"", "-wal", "-shm"}) {
      std::filesystem::remove(path.string() + suffix);
    }
  };
  remove_files();

  TestEmbedder embedder(options.dimension);
  SyntheticOptions syn;
  syn.seed = options.seed;
  syn.queries = options.queries;
  EvalBundle bundle = MakeSyntheticBundle(syn);

  ScaleReport report;
  {
    StoreOptions so;
    so.dimension = options.dimension;
    so.model_id = embedder.model_id();
    auto store = Store::Open(path, so);
    IngestBundle(*store, embedder, bundle);

    // Orthonormal basis of the query vectors; distractors live in its
    // orthogonal complement.
    const int dim = options.dimension;
    std::vector<std::vector<double>> basis;
    for (const auto &q : bundle.queries) {
      Vector v = embedder.EmbedOne(q.text);
      std::vector<double> u(v.begin(), v.end());
      for (const auto &b : basis) {
        double dot = std::inner_product(u.begin(), u.end(), b.begin(), 0.0);
        for (int i = 0; i < dim; ++i) u[i] -= dot * b[i];
      }
      double norm = std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0));
      if (norm < 1e-8) continue;
      for (auto &x : u) x /= norm;
      basis.push_back(std::move(u));
    }

    std::mt19937_64 rng(options.seed ^ 0x5ca1eULL);
    std::normal_distribution<double> gauss;
    WordMaker maker("hy", "aeiou", 5);
    std::vector<std::string> vocab;
    for (int i = 0; i < 5000; ++i) vocab.push_back(maker.Next(rng));
    std::int64_t next_id = 0;

    auto pad_to = [&](std::int64_t target) {
      std::int64_t have = store->Stats().chunks;
      std::vector<DocumentInput> batch;
      auto flush = [&] {
        if (!batch.empty()) store->AddDocumentsBatch(batch);
        batch.clear();
      };
      while (have < target) {
        std::vector<double> u(dim);
        for (auto &x : u) x = gauss(rng);
        for (const auto &b : basis) {
          double dot = std::inner_product(u.begin(), u.end(), b.begin(), 0.0);
          for (int i = 0; i < dim; ++i) u[i] -= dot * b[i];
        }
        double norm = std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0));
        Vector v(dim);
        for (int i = 0; i < dim; ++i) v[i] = static_cast<float>(u[i] / norm);
        std::vector<std::string> words;
        for (int w = 0; w < 12; ++w) words.push_back(Pick(rng, vocab));
        DocumentInput in;
        in.meta.source_uri = "distractor/" + std::to_string(next_id++);
        in.meta.collection = "distractors";
        in.meta.source_type = SourceType::kImported;
        in.chunks.push_back({Join(words), 12, ChunkKind::kProse});
        in.vectors.push_back(std::move(v));
        batch.push_back(std::move(in));
        ++have;
        if (batch.size() >= 2000) flush();
      }
      flush();
    };

    std::vector<std::int64_t> sizes = options.sizes;
    std::sort(sizes.begin(), sizes.end());
    for (auto size : sizes) {
      pad_to(size);
      store->Snapshot();  // build outside the timed region
      auto m = RunEval(*store, embedder, bundle);
      report.rows.push_back({store->Stats().chunks, m.p50_ms, m.p95_ms, m.p99_ms, m.ndcg_at.at(10)});
    }
  }
  if (temporary) remove_files();
  for (const auto &r : report.rows) {
    report.max_ndcg_drift =
        std::max(report.max_ndcg_drift, std::abs(r.ndcg10 - report.rows.front().ndcg10));
  }
  report.provenance = "synthetic fixture seed=" + std::to_string(options.seed) +
                      " dim=" + std::to_string(options.dimension) +
                      " queries=" + std::to_string(options.queries) +
                      " fixture_docs=" + std::to_string(bundle.corpus.size()) +
                      " embedder=" + embedder.model_id();
  return report;
}

json ToJson(const MetricsReport &r) {
  json ndcg = json::object(), prec = json::object();
  for (const auto &[k, v] : r.ndcg_at) ndcg[std::to_string(k)] = v;
  for (const auto &[k, v] : r.precision_at) prec[std::to_string(k)] = v;
  return json{{"label", r.label},
              {"queries", r.queries},
              {"ndcg_at", ndcg},
              {"precision_at", prec},
              {"mrr", r.mrr},
              {"latency_ms", {{"p50", r.p50_ms}, {"p95", r.p95_ms}, {"p99", r.p99_ms}}}};
}

json ToJson(const SweepReport &r) {
  json rows = json::array();
  for (const auto &row : r.rows) {
    rows.push_back({{"threshold", row.threshold},
                    {"tp", row.tp},
                    {"fp", row.fp},
                    {"tn", row.tn},
                    {"fn", row.fn},
                    {"precision", row.precision},
                    {"recall", row.recall},
                    {"f1", row.f1}});
  }
  return json{{"best_threshold", r.best_threshold}, {"best_f1", r.best_f1}, {"rows", rows}};
}

json ToJson(const GridReport &r) {
  json rows = json::array();
  for (const auto &row : r.rows) {
    rows.push_back({{"a", row.config.a},
                    {"b", row.config.b},
                    {"L", row.config.L},
                    {"ndcg", row.ndcg},
                    {"delta", row.delta},
                    {"avg_ndcg", row.avg_ndcg},
                    {"avg_delta", row.avg_delta}});
  }
  return json{{"baseline_ndcg", r.baseline_ndcg},
              {"gate", r.gate},
              {"max_mean_ratio", r.max_mean_ratio},
              {"any_beats_baseline", r.any_beats_baseline},
              {"rows", rows}};
}

json ToJson(const ScaleReport &r) {
  json rows = json::array();
  for (const auto &row : r.rows) {
    rows.push_back({{"n_chunks", row.n_chunks},
                    {"p50_ms", row.p50_ms},
                    {"p95_ms", row.p95_ms},
                    {"p99_ms", row.p99_ms},
                    {"ndcg_at_10", row.ndcg10}});
  }
  return json{{"rows", rows}, {"max_ndcg_drift", r.max_ndcg_drift}, {"provenance", r.provenance}};
}

std::string FormatText(const MetricsReport &r) {
  std::ostringstream out;
  out << "mode " << r.label << ", " << r.queries << " queries\n";
  out << "metric        value\n";
  for (const auto &[k, v] : r.ndcg_at) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "ndcg@%-7d %.4f\n", k, v);
    out << buf;
  }
  for (const auto &[k, v] : r.precision_at) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "p@%-10d %.4f\n", k, v);
    out << buf;
  }
  out << "mrr           " << Fmt("%.4f", r.mrr) << '\n';
  out << "latency p50   " << Fmt("%.2f ms", r.p50_ms) << '\n';
  out << "latency p95   " << Fmt("%.2f ms", r.p95_ms) << '\n';
  out << "latency p99   " << Fmt("%.2f ms", r.p99_ms) << '\n';
  return out.str();
}

std::string FormatText(const SweepReport &r) {
  std::ostringstream out;
  out << "threshold  tp    fp    tn    fn    precision  recall  f1\n";
  for (const auto &row : r.rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-9.2f  %-5lld %-5lld %-5lld %-5lld %-9.4f  %-6.4f  %.4f\n",
                  row.threshold, static_cast<long long>(row.tp), static_cast<long long>(row.fp),
                  static_cast<long long>(row.tn), static_cast<long long>(row.fn), row.precision,
                  row.recall, row.f1);
    out << buf;
  }
  out << "best threshold " << Fmt("%.2f", r.best_threshold) << " f1 " << Fmt("%.4f", r.best_f1)
      << '\n';
  return out.str();
}

std::string FormatText(const GridReport &r) {
  std::ostringstream out;
  out << "baseline ndcg@10 " << Fmt("%.4f", r.baseline_ndcg) << '\n';
  for (const auto &[name, g] : r.gate) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "pattern %-18s max/mean %6.2f  gate %.2f\n", name.c_str(),
                  r.max_mean_ratio.at(name), g);
    out << buf;
  }
  out << "a     b     L      avg_ndcg  avg_delta\n";
  for (const auto &row : r.rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-5.2f %-5.2f %-6.3f %-9.4f %+.4f\n", row.config.a,
                  row.config.b, row.config.L, row.avg_ndcg, row.avg_delta);
    out << buf;
  }
  out << "any config beats baseline: " << (r.any_beats_baseline ? "yes" : "no") << '\n';
  return out.str();
}

std::string FormatText(const ScaleReport &r) {
  std::ostringstream out;
  out << "chunks    p50_ms   p95_ms   p99_ms   ndcg@10\n";
  for (const auto &row : r.rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-9lld %-8.2f %-8.2f %-8.2f %.4f\n",
                  static_cast<long long>(row.n_chunks), row.p50_ms, row.p95_ms, row.p99_ms,
                  row.ndcg10);
    out << buf;
  }
  out << "max ndcg drift " << Fmt("%.4f", r.max_ndcg_drift) << '\n';
  out << r.provenance << '\n';
  return out.str();
}

}  // namespace stash
