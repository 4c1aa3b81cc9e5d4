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

#include "stash/miner.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <unordered_set>

#include "json.hpp"
#include "stash/digest.h"
#include "stash/error.h"
#include "stash/retrieval.h"

namespace stash {
namespace {

using json = nlohmann::json;

std::string CapWords(std::string_view sentence, int max_words) {
  auto words = SplitWords(sentence);
  std::string out;
  for (size_t i = 0; i < words.size() && static_cast<int>(i) < max_words; ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

bool HasAlnum(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c); });
}

std::vector<ChunkId> TopIds(const SearchResponse &resp) {
  std::vector<ChunkId> ids;
  for (const auto &r : resp.results) ids.push_back(r.chunk_id);
  return ids;
}

}  // namespace

std::string_view ToString(Direction d) {
  return d == Direction::kDenseBlindSpot ? "dense_blind_spot" : "lexical_blind_spot";
}

std::optional<Direction> ParseDirection(std::string_view s) {
  if (s == "dense_blind_spot") return Direction::kDenseBlindSpot;
  if (s == "lexical_blind_spot") return Direction::kLexicalBlindSpot;
  return std::nullopt;
}

MiningOutcome MineDisagreement(Store &store, const EmbeddingProvider &embedder,
                               std::string_view query, ChunkId positive, int top_k,
                               std::string_view source, bool swap_weights) {
  if (store.Snapshot()->chunks.empty()) throw Error(Errc::kEmptyStore, "store has no chunks");
  ChunkId want[] = {positive};
  auto lookup = store.GetChunks(want);
  if (lookup.records.empty()) {
    throw Error(Errc::kMissingPositive, "positive chunk " + std::to_string(raw(positive)));
  }
  const ChunkRecord &pos = lookup.records.front();

  SearchOptions opt;
  opt.k = top_k;
  opt.apply_cutoff = false;
  opt.apply_mmr = false;
  opt.expand = false;
  opt.record_telemetry = false;
  opt.cfg.candidate_pool = std::max(opt.cfg.candidate_pool, top_k);

  opt.weights = swap_weights ? kFtsHeavy : kVecHeavy;
  auto vec_resp = Search(store, embedder, query, opt);
  opt.weights = swap_weights ? kVecHeavy : kFtsHeavy;
  auto fts_resp = Search(store, embedder, query, opt);

  MiningOutcome out;
  out.record.query = std::string(query);
  out.record.vec_heavy_top = TopIds(vec_resp);
  out.record.fts_heavy_top = TopIds(fts_resp);
  std::set<std::int64_t> a, b;
  for (auto id : out.record.vec_heavy_top) a.insert(raw(id));
  for (auto id : out.record.fts_heavy_top) b.insert(raw(id));
  out.record.disagrees = a != b;

  auto top_window = [](const SearchResponse &r) {
    std::vector<const SearchResult *> top;
    for (size_t i = 0; i < r.results.size() && static_cast<int>(i) < kTripleWindow; ++i) {
      top.push_back(&r.results[i]);
    }
    return top;
  };
  auto vec_top = top_window(vec_resp);
  auto fts_top = top_window(fts_resp);
  auto contains = [](const std::vector<const SearchResult *> &list, ChunkId id) {
    return std::any_of(list.begin(), list.end(),
                       [&](const SearchResult *r) { return r->chunk_id == id; });
  };
  auto emit = [&](const std::vector<const SearchResult *> &from,
                  const std::vector<const SearchResult *> &other, Direction dir) {
    for (const auto *r : from) {
      if (contains(other, r->chunk_id)) continue;
      if (r->content_digest == pos.content_digest) continue;
      out.triples.push_back({std::string(query), pos.text, r->text, dir, std::string(source)});
    }
  };
  // A chunk the vector-leaning ranking surfaces and the lexical one does
  // not is a dense blind spot; the reverse is a lexical blind spot.
  emit(vec_top, fts_top, Direction::kDenseBlindSpot);
  emit(fts_top, vec_top, Direction::kLexicalBlindSpot);
  return out;
}

std::vector<std::string> SplitSentences(std::string_view text) {
  std::vector<std::string> out;
  size_t start = 0;
  auto flush = [&](size_t end) {
    std::string_view s = text.substr(start, end - start);
    if (HasAlnum(s)) out.push_back(CapWords(s, std::numeric_limits<int>::max()));
  };
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    bool at_end = i + 1 == text.size();
    bool next_space = !at_end && std::isspace(static_cast<unsigned char>(text[i + 1]));
    if ((c == '.' || c == '!' || c == '?') && (at_end || next_space)) {
      flush(i + 1);
      start = i + 1;
    } else if (c == '\n' && !at_end && text[i + 1] == '\n') {
      flush(i);
      start = i + 1;
    }
  }
  if (start < text.size()) flush(text.size());
  return out;
}

std::vector<std::string> GeneratePseudoQueries(std::string_view chunk_text,
                                               const TextIndex &index, int max_queries) {
  std::vector<std::string> out;
  if (max_queries < 1) return out;
  auto sentences = SplitSentences(chunk_text);
  if (sentences.empty()) return out;
  for (auto &s : sentences) s = CapWords(s, kMaxPseudoQueryWords);
  out.push_back(sentences.front());
  if (max_queries < 2 || sentences.size() < 2 || index.size() == 0) return out;
  size_t best = 0;
  double best_idf = -1.0;
  for (size_t i = 0; i < sentences.size(); ++i) {
    double idf = index.MeanIdf(sentences[i]);
    if (idf > best_idf) {
      best_idf = idf;
      best = i;
    }
  }
  if (sentences[best] != out.front()) out.push_back(sentences[best]);
  return out;
}

double MiningSummary::aggregate_rate() const {
  return queries ? static_cast<double>(disagreements) / static_cast<double>(queries) : 0.0;
}

double MiningSummary::mean_source_rate() const {
  if (per_source.empty()) return 0.0;
  double sum = 0.0;
  for (const auto &[name, r] : per_source) sum += r.rate();
  return sum / static_cast<double>(per_source.size());
}

MiningSummary MineQueries(Store &store, const EmbeddingProvider &embedder,
                          std::span<const MiningQuery> queries, int top_k) {
  MiningSummary summary;
  for (const auto &q : queries) {
    auto outcome = MineDisagreement(store, embedder, q.query, q.positive, top_k, q.source);
    ++summary.queries;
    auto &src = summary.per_source[q.source];
    ++src.queries;
    if (outcome.record.disagrees) {
      ++summary.disagreements;
      ++src.disagreements;
    }
    for (auto &t : outcome.triples) {
      if (t.direction == Direction::kDenseBlindSpot) {
        ++summary.dense_blind_spots;
      } else {
        ++summary.lexical_blind_spots;
      }
      summary.triples.push_back(std::move(t));
    }
  }
  return summary;
}

MiningSummary MineStore(Store &store, const EmbeddingProvider &embedder, int max_queries,
                        int top_k) {
  auto snap = store.Snapshot();
  if (snap->chunks.empty()) throw Error(Errc::kEmptyStore, "store has no chunks");
  std::map<std::int64_t, std::string> collection_of;
  for (const auto &d : store.ListDocuments()) collection_of[raw(d.doc_id)] = d.meta.collection;

  std::vector<MiningQuery> queries;
  auto ids = store.AllChunkIds();
  for (size_t begin = 0; begin < ids.size(); begin += kLookupBatchSize) {
    size_t n = std::min(kLookupBatchSize, ids.size() - begin);
    auto lookup = store.GetChunks(std::span(ids).subspan(begin, n));
    for (const auto &rec : lookup.records) {
      auto it = collection_of.find(raw(rec.doc_id));
      if (it == collection_of.end()) continue;
      for (auto &q : GeneratePseudoQueries(rec.text, snap->text, max_queries)) {
        queries.push_back({std::move(q), rec.chunk_id, it->second});
      }
    }
  }
  return MineQueries(store, embedder, queries, top_k);
}

size_t ExportTriples(std::span<const DisagreementTriple> triples,
                     const std::filesystem::path &path, bool append) {
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw Error(Errc::kIoFailure, "cannot write " + path.string());
  for (const auto &t : triples) {
    json j = {{"query", t.query},
              {"positive", t.positive},
              {"negative", t.negative},
              {"direction", ToString(t.direction)},
              {"source", t.source}};
    out << j.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }
  out.flush();
  if (!out) throw Error(Errc::kIoFailure, "write failed for " + path.string());
  return triples.size();
}

std::vector<DisagreementTriple> ReadTriples(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kMissingFile, path.string());
  std::vector<DisagreementTriple> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto where = path.string() + ":" + std::to_string(lineno);
    auto j = json::parse(line, nullptr, false);
    if (!j.is_object()) throw Error(Errc::kParseFailure, where + ": not a JSON object");
    DisagreementTriple t;
    try {
      t.query = j.at("query").get<std::string>();
      t.positive = j.at("positive").get<std::string>();
      t.negative = j.at("negative").get<std::string>();
      t.source = j.value("source", "");
      auto dir = ParseDirection(j.at("direction").get<std::string>());
      if (!dir) throw Error(Errc::kParseFailure, where + ": unknown direction");
      t.direction = *dir;
    } catch (const json::exception &e) {
      throw Error(Errc::kParseFailure, where + ": " + e.what());
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace stash
