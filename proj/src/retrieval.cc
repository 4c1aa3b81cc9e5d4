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

#include "stash/retrieval.h"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "stash/error.h"
#include "stash/text_index.h"

namespace stash {
namespace {

using Clock = std::chrono::steady_clock;

double MsSince(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

bool ByScore(const RankedCandidate &a, const RankedCandidate &b) {
  if (a.score != b.score) return a.score > b.score;
  return raw(a.chunk_id) < raw(b.chunk_id);
}

bool IsBlank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string JoinContext(const IndexSnapshot &snap,
                        const std::unordered_map<std::int64_t, ChunkRecord> &records,
                        ChunkId id, int window) {
  auto info = snap.Info(id);
  if (!info) throw Error(Errc::kMissingChunk, "chunk " + std::to_string(raw(id)));
  const auto &siblings = snap.doc_chunks.at(raw(info->doc_id));
  auto pos = std::find(siblings.begin(), siblings.end(), id) - siblings.begin();
  auto lo = std::max<std::ptrdiff_t>(0, pos - window);
  auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(siblings.size()) - 1,
                                     pos + window);
  std::string out;
  for (auto i = lo; i <= hi; ++i) {
    auto it = records.find(raw(siblings[i]));
    if (it == records.end()) continue;
    if (!out.empty()) out += '\n';
    out += it->second.text;
  }
  return out;
}

std::vector<ChunkId> ContextIds(const IndexSnapshot &snap, std::span<const ChunkId> ids,
                                int window) {
  std::vector<ChunkId> out;
  std::unordered_set<std::int64_t> seen;
  for (ChunkId id : ids) {
    auto info = snap.Info(id);
    if (!info) continue;
    const auto &siblings = snap.doc_chunks.at(raw(info->doc_id));
    auto pos = std::find(siblings.begin(), siblings.end(), id) - siblings.begin();
    auto lo = std::max<std::ptrdiff_t>(0, pos - window);
    auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(siblings.size()) - 1,
                                       pos + window);
    for (auto i = lo; i <= hi; ++i) {
      if (seen.insert(raw(siblings[i])).second) out.push_back(siblings[i]);
    }
  }
  return out;
}

}  // namespace

void FusionConfig::Validate() const {
  auto bad = [](const std::string &msg) { throw Error(Errc::kInvalidArgument, msg); };
  if (rrf_k < 0) bad("rrf_k must be >= 0");
  if (w_vec < 0 || w_fts < 0) bad("fusion weights must be >= 0");
  if (!adaptive && std::abs(w_vec + w_fts - 1.0) > 1e-9) bad("w_vec + w_fts must equal 1");
  if (!(w_fts_min < w_fts_max)) bad("w_fts_min must be below w_fts_max");
  if (w_fts_min < 0 || w_fts_max > 1) bad("w_fts bounds must lie in [0, 1]");
  if (!(cutoff_short <= cutoff_long)) bad("cutoff_short must not exceed cutoff_long");
  if (cutoff_short <= 0) bad("cutoff multipliers must be positive");
  if (candidate_pool < 1) bad("candidate_pool must be >= 1");
  if (long_query_words < 0) bad("long_query_words must be >= 0");
  if (mmr_lambda < 0 || mmr_lambda > 1) bad("mmr_lambda must lie in [0, 1]");
  if (context_window < 0) bad("context_window must be >= 0");
}

std::string_view ToString(Elimination e) {
  switch (e) {
    case Elimination::kDistanceCutoff: return "distance_cutoff";
    case Elimination::kMmrStop: return "mmr_stop";
    case Elimination::kBelowK: return "below_k";
  }
  return "?";
}

std::vector<RankedCandidate> RrfFuse(std::span<const ChunkId> vec_list,
                                     std::span<const ChunkId> fts_list, double w_vec,
                                     double w_fts, int rrf_k) {
  std::unordered_map<std::int64_t, size_t> slot;
  std::vector<RankedCandidate> out;
  out.reserve(vec_list.size() + fts_list.size());
  auto entry = [&](ChunkId id) -> RankedCandidate & {
    auto [it, inserted] = slot.emplace(raw(id), out.size());
    if (inserted) out.push_back(RankedCandidate{id});
    return out[it->second];
  };
  for (size_t i = 0; i < vec_list.size(); ++i) {
    auto &c = entry(vec_list[i]);
    if (!c.rank_vec) c.rank_vec = static_cast<int>(i + 1);
  }
  for (size_t i = 0; i < fts_list.size(); ++i) {
    auto &c = entry(fts_list[i]);
    if (!c.rank_fts) c.rank_fts = static_cast<int>(i + 1);
  }
  for (auto &c : out) {
    double s = 0.0;
    if (c.rank_vec) s += w_vec / (rrf_k + *c.rank_vec);
    if (c.rank_fts) s += w_fts / (rrf_k + *c.rank_fts);
    c.rrf_score = s;
    c.score = s;
  }
  std::sort(out.begin(), out.end(), ByScore);
  return out;
}

FusionWeights AdaptiveWeights(double mean_idf, const FusionConfig &cfg, double corpus_midpoint) {
  double mid = cfg.sigmoid_midpoint.value_or(corpus_midpoint);
  double sig = 1.0 / (1.0 + std::exp(-cfg.sigmoid_slope * (mean_idf - mid)));
  double w_fts = cfg.w_fts_min + (cfg.w_fts_max - cfg.w_fts_min) * sig;
  return {1.0 - w_fts, w_fts};
}

double SelectCutoffMultiplier(int query_word_count, const FusionConfig &cfg) {
  return query_word_count > cfg.long_query_words ? cfg.cutoff_long : cfg.cutoff_short;
}

CutoffOutcome DistanceCutoffFilter(std::vector<RankedCandidate> candidates, double multiplier) {
  CutoffOutcome out;
  for (const auto &c : candidates) {
    if (c.distance && (!out.best_distance || *c.distance < *out.best_distance)) {
      out.best_distance = c.distance;
    }
  }
  if (!out.best_distance) {
    out.kept = std::move(candidates);
    return out;
  }
  out.threshold = multiplier * *out.best_distance;
  for (auto &c : candidates) {
    if (c.distance && *c.distance > out.threshold) {
      c.elimination = Elimination::kDistanceCutoff;
      out.dropped.push_back(std::move(c));
    } else {
      out.kept.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<double> MinMaxNormalize(std::span<const double> values) {
  std::vector<double> out(values.size(), 1.0);
  if (values.empty()) return out;
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  double range = *hi - *lo;
  if (range <= 0) return out;
  for (size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / range;
  return out;
}

MmrOutcome MmrSelect(std::span<const MmrItem> items, double lambda, int k) {
  MmrOutcome out;
  std::vector<bool> taken(items.size(), false);
  // Highest similarity to an already selected item of the same group.
  std::vector<double> penalty(items.size(), 0.0);
  while (static_cast<int>(out.selected.size()) < k && out.selected.size() < items.size()) {
    size_t best = items.size();
    double best_mmr = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < items.size(); ++i) {
      if (taken[i]) continue;
      double mmr = lambda * items[i].norm_score - (1.0 - lambda) * penalty[i];
      if (mmr > best_mmr) {
        best_mmr = mmr;
        best = i;
      }
    }
    if (best_mmr < 0) {
      out.stopped = true;
      break;
    }
    taken[best] = true;
    out.selected.push_back(best);
    const auto &picked = items[best];
    for (size_t i = 0; i < items.size(); ++i) {
      if (taken[i] || items[i].group != picked.group) continue;
      if (items[i].vector.size() != picked.vector.size() || picked.vector.empty()) continue;
      double sim = DotProduct(items[i].vector.data(), picked.vector.data(), picked.vector.size());
      penalty[i] = std::max(penalty[i], sim);
    }
  }
  return out;
}

Tier RelevanceTier(double best_distance) {
  if (best_distance <= 0.95) return Tier::kHigh;
  if (best_distance <= 0.98) return Tier::kMedium;
  return Tier::kLow;
}

double RecencyBoost(double score, double days_ago, double B) {
  return score * (1.0 + B * std::exp(-0.05 * days_ago));
}

double FrequencyDecayScore(double s_rrf_norm, const AccessStats &stats, double a, double b,
                           double L, int S) {
  double f = (1.0 + static_cast<double>(stats.access_count)) * std::exp(-L * stats.days_ago);
  double memory = std::min(1.0, std::log(1.0 + f) / std::log(1.0 + S));
  return a * s_rrf_norm + b * memory;
}

double MaturityGate(std::span<const std::int64_t> access_counts, double threshold) {
  if (access_counts.empty()) throw Error(Errc::kEmptyInput, "no access counts");
  double sum = 0.0;
  std::int64_t mx = 0;
  for (auto c : access_counts) {
    sum += static_cast<double>(c);
    mx = std::max(mx, c);
  }
  double mean = sum / static_cast<double>(access_counts.size());
  double ratio = mean > 0 ? static_cast<double>(mx) / mean : 0.0;
  if (ratio <= threshold) return 0.0;
  return std::min(0.48, (ratio - threshold) / threshold * 0.48);
}

std::string ExpandContext(const Store &store, ChunkId chunk_id, int window) {
  if (window < 0) throw Error(Errc::kInvalidArgument, "window must be >= 0");
  auto snap = store.Snapshot();
  if (!snap->Info(chunk_id)) throw Error(Errc::kMissingChunk, "chunk " + std::to_string(raw(chunk_id)));
  ChunkId one[] = {chunk_id};
  auto ids = ContextIds(*snap, one, window);
  std::unordered_map<std::int64_t, ChunkRecord> records;
  for (auto &r : store.GetChunks(ids).records) records.emplace(raw(r.chunk_id), std::move(r));
  return JoinContext(*snap, records, chunk_id, window);
}

SearchResponse Search(Store &store, const EmbeddingProvider &embedder, std::string_view query,
                      const SearchOptions &options) {
  const auto start = Clock::now();
  const FusionConfig &cfg = options.cfg;
  cfg.Validate();
  store.limits().CheckQuery(query);
  store.limits().CheckK(options.k);
  store.limits().CheckCandidatePool(cfg.candidate_pool);
  if (options.k < 1) throw Error(Errc::kInvalidArgument, "k must be >= 1");
  if (IsBlank(query)) throw Error(Errc::kEmptyQuery, "query is empty");
  if (embedder.dimension() != store.dimension()) {
    throw Error(Errc::kDimensionMismatch, "embedder dimension " +
                                              std::to_string(embedder.dimension()) +
                                              " differs from store dimension " +
                                              std::to_string(store.dimension()));
  }
  auto snap = store.Snapshot();
  if (snap->chunks.empty()) throw Error(Errc::kEmptyStore, "store has no chunks");

  SearchResponse resp;
  SearchTrace &tr = resp.trace;
  tr.query_words = static_cast<int>(SplitWords(query).size());
  auto mark = Clock::now();
  auto stage_done = [&](Stage s) {
    auto now = Clock::now();
    tr.stages.push_back({s, std::chrono::duration<double, std::milli>(now - mark).count()});
    mark = now;
  };

  Vector qvec = embedder.EmbedOne(query);
  stage_done(Stage::kEmbed);

  // fts mode still runs a 1-nearest scan for the tier signal.
  int knn_n = options.mode == SearchMode::kFts ? 1 : cfg.candidate_pool;
  auto neighbors = snap->vectors.Knn(qvec, knn_n);
  std::unordered_map<std::int64_t, double> distance_of;
  for (const auto &n : neighbors) distance_of.emplace(raw(n.chunk_id), n.distance);
  if (!neighbors.empty()) tr.best_distance = neighbors.front().distance;
  if (options.mode != SearchMode::kFts) {
    for (const auto &n : neighbors) tr.vec_pool.push_back(n.chunk_id);
  }
  stage_done(Stage::kKnn);

  if (options.mode != SearchMode::kVector) {
    auto hits = snap->text.Bm25Search(CompileQuery(query), cfg.candidate_pool);
    for (const auto &h : hits) tr.fts_pool.push_back(h.chunk_id);
  }
  stage_done(Stage::kBm25);

  switch (options.mode) {
    case SearchMode::kVector: tr.weights = {1.0, 0.0}; break;
    case SearchMode::kFts: tr.weights = {0.0, 1.0}; break;
    case SearchMode::kHybrid:
      tr.mean_idf = snap->text.MeanIdf(query);
      if (options.weights) {
        tr.weights = *options.weights;
      } else if (cfg.adaptive) {
        tr.weights = AdaptiveWeights(tr.mean_idf, cfg, snap->text.CorpusMeanIdf());
      } else {
        tr.weights = {cfg.w_vec, cfg.w_fts};
      }
      break;
  }
  auto fused = RrfFuse(tr.vec_pool, tr.fts_pool, tr.weights.w_vec, tr.weights.w_fts, cfg.rrf_k);
  for (auto &c : fused) {
    auto it = distance_of.find(raw(c.chunk_id));
    if (it != distance_of.end()) c.distance = it->second;
  }
  std::vector<ChunkId> fused_order;
  fused_order.reserve(fused.size());
  for (const auto &c : fused) fused_order.push_back(c.chunk_id);
  stage_done(Stage::kFuse);

  std::unordered_map<std::int64_t, RankedCandidate> final_state;
  tr.cutoff_multiplier = SelectCutoffMultiplier(tr.query_words, cfg);
  std::vector<RankedCandidate> kept;
  if (options.apply_cutoff) {
    auto cut = DistanceCutoffFilter(std::move(fused), tr.cutoff_multiplier);
    for (auto &d : cut.dropped) final_state.emplace(raw(d.chunk_id), d);
    kept = std::move(cut.kept);
  } else {
    kept = std::move(fused);
  }
  stage_done(Stage::kCutoff);

  if (options.boost_B > 0 || options.frequency_decay) {
    const UnixTime now = store.Now();
    std::unordered_map<std::int64_t, UnixTime> created;
    auto created_at = [&](DocId doc) {
      auto it = created.find(raw(doc));
      if (it != created.end()) return it->second;
      auto rec = store.GetDocument(doc);
      UnixTime t = rec ? rec->created_at : now;
      created.emplace(raw(doc), t);
      return t;
    };
    auto days_since = [&](UnixTime t) { return std::max(0.0, (now - t) / kSecondsPerDay); };
    if (options.boost_B > 0) {
      for (auto &c : kept) {
        double days = days_since(created_at(snap->Info(c.chunk_id)->doc_id));
        c.score = RecencyBoost(c.score, days, options.boost_B);
      }
    }
    if (options.frequency_decay && !kept.empty()) {
      const auto &fd = *options.frequency_decay;
      std::vector<ChunkId> ids;
      std::vector<double> scores;
      for (const auto &c : kept) {
        ids.push_back(c.chunk_id);
        scores.push_back(c.score);
      }
      auto norm = MinMaxNormalize(scores);
      auto lookup = store.GetChunks(ids);
      std::unordered_map<std::int64_t, const ChunkRecord *> rec;
      for (const auto &r : lookup.records) rec.emplace(raw(r.chunk_id), &r);
      for (size_t i = 0; i < kept.size(); ++i) {
        AccessStats stats;
        auto it = rec.find(raw(kept[i].chunk_id));
        if (it != rec.end()) {
          stats.access_count = it->second->access_count;
          UnixTime last = it->second->last_accessed_at.value_or(created_at(it->second->doc_id));
          stats.days_ago = days_since(last);
        }
        kept[i].score = FrequencyDecayScore(norm[i], stats, fd.a, fd.b, fd.L, fd.S);
      }
    }
    std::stable_sort(kept.begin(), kept.end(), ByScore);
  }
  stage_done(Stage::kBoost);

  std::vector<RankedCandidate> selected;
  if (options.apply_mmr) {
    std::vector<double> scores;
    for (const auto &c : kept) scores.push_back(c.score);
    auto norm = MinMaxNormalize(scores);
    std::vector<MmrItem> items;
    items.reserve(kept.size());
    for (size_t i = 0; i < kept.size(); ++i) {
      MmrItem item;
      item.group = raw(snap->Info(kept[i].chunk_id)->doc_id);
      item.norm_score = norm[i];
      if (auto v = snap->vectors.Get(kept[i].chunk_id)) item.vector = *v;
      items.push_back(item);
    }
    auto mmr = MmrSelect(items, cfg.mmr_lambda, options.k);
    std::vector<bool> picked(kept.size(), false);
    for (size_t i : mmr.selected) picked[i] = true;
    for (size_t i = 0; i < kept.size(); ++i) {
      if (picked[i]) {
        selected.push_back(kept[i]);
      } else {
        kept[i].elimination = mmr.stopped ? Elimination::kMmrStop : Elimination::kBelowK;
        final_state.emplace(raw(kept[i].chunk_id), kept[i]);
      }
    }
  } else {
    for (size_t i = 0; i < kept.size(); ++i) {
      if (static_cast<int>(i) < options.k) {
        selected.push_back(kept[i]);
      } else {
        kept[i].elimination = Elimination::kBelowK;
        final_state.emplace(raw(kept[i].chunk_id), kept[i]);
      }
    }
  }
  // Kept in score order; `selected` preserves the score-sorted order of `kept`.
  stage_done(Stage::kMmr);

  tr.tier = tr.best_distance ? RelevanceTier(*tr.best_distance) : Tier::kLow;

  std::vector<ChunkId> result_ids;
  for (const auto &c : selected) result_ids.push_back(c.chunk_id);
  int window = options.expand ? cfg.context_window : 0;
  auto fetch_ids = ContextIds(*snap, result_ids, window);
  std::unordered_map<std::int64_t, ChunkRecord> records;
  for (auto &r : store.GetChunks(fetch_ids).records) records.emplace(raw(r.chunk_id), std::move(r));
  for (const auto &c : selected) {
    auto it = records.find(raw(c.chunk_id));
    if (it == records.end()) continue;
    SearchResult r;
    r.chunk_id = c.chunk_id;
    r.doc_id = it->second.doc_id;
    r.score = c.score;
    r.text = it->second.text;
    r.content_digest = it->second.content_digest;
    r.context = JoinContext(*snap, records, c.chunk_id, window);
    r.tier = tr.tier;
    r.diagnostics = c;
    resp.results.push_back(std::move(r));
    final_state.emplace(raw(c.chunk_id), c);
  }
  stage_done(Stage::kExpand);

  tr.candidates.reserve(fused_order.size());
  for (ChunkId id : fused_order) tr.candidates.push_back(final_state.at(raw(id)));

  tr.total_ms = MsSince(start);
  auto &metrics = store.metrics();
  metrics.Increment(Counter::kSearches);
  for (const auto &s : tr.stages) metrics.Observe(s.stage, s.ms);
  metrics.ObserveTotal(tr.total_ms);
  if (store.slow_log().Offer({std::string(query), tr.total_ms, tr.stages, store.Now()})) {
    metrics.Increment(Counter::kSlowQueries);
  }

  if (options.record_telemetry) {
    const UnixTime now = store.Now();
    store.RecordAccess(result_ids, now);
    SearchEvent ev;
    ev.query = std::string(query);
    ev.best_distance = tr.best_distance.value_or(2.0);
    ev.tier = tr.tier;
    ev.result_count = static_cast<int>(resp.results.size());
    ev.at = now;
    resp.event_id = store.RecordSearchEvent(ev);
  }
  return resp;
}

std::vector<FederatedHit> FederatedSearch(std::span<Store *const> profiles,
                                          const EmbeddingProvider &embedder,
                                          std::string_view query, const SearchOptions &options) {
  if (profiles.empty()) throw Error(Errc::kInvalidArgument, "no profiles given");
  std::vector<int> live;
  for (size_t i = 0; i < profiles.size(); ++i) {
    if (!profiles[i]->Snapshot()->chunks.empty()) live.push_back(static_cast<int>(i));
  }
  if (live.empty()) throw Error(Errc::kAllProfilesEmpty, "every profile is empty");

  std::vector<std::future<SearchResponse>> pending;
  for (int i : live) {
    Store *store = profiles[i];
    pending.push_back(std::async(std::launch::async, [store, &embedder, query, &options] {
      return Search(*store, embedder, query, options);
    }));
  }
  std::map<std::string, FederatedHit> merged;
  for (size_t p = 0; p < pending.size(); ++p) {
    auto resp = pending[p].get();
    for (size_t r = 0; r < resp.results.size(); ++r) {
      auto &res = resp.results[r];
      auto &hit = merged[res.content_digest];
      hit.content_digest = res.content_digest;
      hit.score += 1.0 / (options.cfg.rrf_k + static_cast<double>(r + 1));
      hit.sources.emplace_back(live[p], std::move(res));
    }
  }
  std::vector<FederatedHit> out;
  out.reserve(merged.size());
  for (auto &[digest, hit] : merged) out.push_back(std::move(hit));
  std::stable_sort(out.begin(), out.end(), [](const FederatedHit &a, const FederatedHit &b) {
    return a.score > b.score;
  });
  if (static_cast<int>(out.size()) > options.k) out.resize(options.k);
  return out;
}

nlohmann::json ToJson(const SearchResult &result) {
  using nlohmann::json;
  const auto &d = result.diagnostics;
  json diag = {
      {"rank_vec", d.rank_vec ? json(*d.rank_vec) : json(nullptr)},
      {"rank_fts", d.rank_fts ? json(*d.rank_fts) : json(nullptr)},
      {"distance", d.distance ? json(*d.distance) : json(nullptr)},
      {"elimination", d.elimination ? json(ToString(*d.elimination)) : json(nullptr)},
  };
  return json{{"chunk_id", raw(result.chunk_id)},
              {"doc_id", raw(result.doc_id)},
              {"score", result.score},
              {"tier", ToString(result.tier)},
              {"context", result.context},
              {"diagnostics", std::move(diag)}};
}

nlohmann::json ToJson(const std::vector<SearchResult> &results) {
  auto arr = nlohmann::json::array();
  for (const auto &r : results) arr.push_back(ToJson(r));
  return arr;
}

}  // namespace stash
