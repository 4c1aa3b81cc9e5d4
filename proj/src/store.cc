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

#include "stash/store.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include "json.hpp"
#include "sqlite_db.h"
#include "stash/digest.h"
#include "stash/error.h"

namespace stash {
namespace {

using json = nlohmann::json;
using sqlite::Statement;

constexpr std::string_view kSchemaSql = R"sql(
CREATE TABLE store_meta(
  key TEXT PRIMARY KEY,
  value TEXT NOT NULL
);
CREATE TABLE documents(
  doc_id INTEGER PRIMARY KEY AUTOINCREMENT,
  source_uri TEXT NOT NULL,
  collection TEXT NOT NULL,
  tags TEXT NOT NULL DEFAULT '[]',
  source_type TEXT NOT NULL,
  chunk_count INTEGER NOT NULL,
  created_at REAL NOT NULL,
  UNIQUE(source_uri, collection)
);
CREATE TABLE chunks(
  chunk_id INTEGER PRIMARY KEY AUTOINCREMENT,
  doc_id INTEGER NOT NULL,
  seq INTEGER NOT NULL,
  text TEXT NOT NULL,
  token_count INTEGER NOT NULL,
  kind TEXT NOT NULL,
  access_count INTEGER NOT NULL DEFAULT 0,
  last_accessed_at REAL,
  content_digest TEXT NOT NULL
);
CREATE INDEX idx_chunks_doc_seq ON chunks(doc_id, seq);
CREATE TABLE chunk_vectors(
  chunk_id INTEGER PRIMARY KEY,
  vector BLOB NOT NULL
);
CREATE TABLE text_index(
  chunk_id INTEGER PRIMARY KEY,
  entry TEXT NOT NULL
);
CREATE TABLE search_events(
  event_id INTEGER PRIMARY KEY AUTOINCREMENT,
  query TEXT NOT NULL,
  best_distance REAL NOT NULL,
  tier TEXT NOT NULL,
  result_count INTEGER NOT NULL,
  dismissed INTEGER NOT NULL DEFAULT 0,
  at REAL NOT NULL
);
)sql";

// Top-level keys of the config blob this build understands.
const std::set<std::string> kKnownConfigKeys = {"fusion", "limits", "chunking", "embedder",
                                                "created_by"};

constexpr std::string_view kChunkColumns =
    "chunk_id, doc_id, seq, text, token_count, kind, access_count, last_accessed_at, "
    "content_digest";

ChunkRecord ReadChunk(const Statement &st) {
  ChunkRecord r;
  r.chunk_id = ChunkId{st.Int(0)};
  r.doc_id = DocId{st.Int(1)};
  r.seq = static_cast<int>(st.Int(2));
  r.text = st.Text(3);
  r.token_count = static_cast<int>(st.Int(4));
  r.kind = ParseChunkKind(st.Text(5)).value_or(ChunkKind::kProse);
  r.access_count = st.Int(6);
  if (!st.IsNull(7)) r.last_accessed_at = st.Real(7);
  r.content_digest = st.Text(8);
  return r;
}

DocumentRecord ReadDocument(const Statement &st) {
  DocumentRecord d;
  d.doc_id = DocId{st.Int(0)};
  d.meta.source_uri = st.Text(1);
  d.meta.collection = st.Text(2);
  auto tags = json::parse(st.Text(3), nullptr, false);
  if (tags.is_array()) {
    for (const auto &t : tags) {
      if (t.is_string()) d.meta.tags.push_back(t.get<std::string>());
    }
  }
  d.meta.source_type = ParseSourceType(st.Text(4)).value_or(SourceType::kText);
  d.chunk_count = static_cast<int>(st.Int(5));
  d.created_at = st.Real(6);
  return d;
}

constexpr std::string_view kDocColumns =
    "doc_id, source_uri, collection, tags, source_type, chunk_count, created_at";

std::vector<std::int64_t> CollectIds(sqlite::Database &db, std::string_view sql) {
  std::vector<std::int64_t> ids;
  Statement st(db.handle(), sql);
  while (st.Step()) ids.push_back(st.Int(0));
  return ids;
}

std::string Placeholders(size_t n) {
  std::string s;
  for (size_t i = 0; i < n; ++i) s += i ? ",?" : "?";
  return s;
}

}  // namespace

std::span<const std::byte> AsBytes(std::span<const float> v) {
  return std::as_bytes(v);
}

std::string_view ToString(Completeness c) {
  switch (c) {
    case Completeness::kMissing: return "missing";
    case Completeness::kPartial: return "partial";
    case Completeness::kComplete: return "complete";
  }
  return "?";
}

bool IntegrityReport::ok() const {
  return std::all_of(invariants.begin(), invariants.end(),
                     [](const InvariantResult &r) { return r.pass; });
}

const InvariantResult &IntegrityReport::Get(std::string_view name) const {
  for (const auto &r : invariants) {
    if (r.invariant == name) return r;
  }
  throw Error(Errc::kInvalidArgument, "no invariant named " + std::string(name));
}

std::int64_t RepairReport::total_changes() const {
  return reindexed + orphans_deleted + text_entries_rebuilt + digests_fixed +
         dangling_vectors_deleted + vectors_reembedded + chunk_counts_fixed + seqs_renumbered;
}

std::optional<IndexSnapshot::ChunkInfo> IndexSnapshot::Info(ChunkId id) const {
  auto it = chunks.find(raw(id));
  if (it == chunks.end()) return std::nullopt;
  return it->second;
}

Store::Store(std::filesystem::path path, StoreOptions options)
    : path_(std::move(path)),
      options_(std::move(options)),
      metrics_(std::make_unique<MetricsRegistry>()),
      slow_log_(std::make_unique<SlowQueryLog>()) {}

Store::~Store() = default;

std::unique_ptr<Store> Store::Open(const std::filesystem::path &path, StoreOptions options) {
  std::error_code ec;
  bool exists = std::filesystem::exists(path, ec);
  if (!exists && !options.create_if_missing) {
    throw Error(Errc::kIoFailure, "no store at " + path.string());
  }
  std::unique_ptr<Store> store(new Store(path, std::move(options)));
  store->db_ = std::make_unique<sqlite::Database>(path.string(), store->options_.create_if_missing);
  store->Initialize(!exists);
  return store;
}

UnixTime Store::Now() const { return options_.clock ? options_.clock() : SystemNow(); }

void Store::Initialize(bool created) {
  // The first statement that touches the file detects non-database input.
  db_->Exec("PRAGMA journal_mode=WAL");
  db_->Exec("PRAGMA synchronous=NORMAL");

  bool has_meta = false;
  {
    Statement st(db_->handle(),
                 "SELECT COUNT(*) FROM sqlite_master WHERE type='table' AND name='store_meta'");
    if (st.Step()) has_meta = st.Int(0) > 0;
  }
  if (!has_meta) {
    bool empty = true;
    {
      Statement st(db_->handle(), "SELECT COUNT(*) FROM sqlite_master");
      if (st.Step()) empty = st.Int(0) == 0;
    }
    if (!empty) throw Error(Errc::kCorruptFile, path_.string() + " is not a stash store");
    (void)created;
    sqlite::Transaction tx(*db_);
    db_->Exec(kSchemaSql);
    auto put = [&](std::string_view k, const std::string &v) {
      Statement st(db_->handle(), "INSERT INTO store_meta(key, value) VALUES(?, ?)");
      st.Bind(1, k).Bind(2, v).Run();
    };
    if (options_.dimension <= 0) throw Error(Errc::kInvalidArgument, "dimension must be positive");
    put("schema_version", std::to_string(kSchemaVersion));
    put("dimension", std::to_string(options_.dimension));
    put("model_id", options_.model_id);
    put("config", json{{"created_by", "stash"}}.dump());
    tx.Commit();
  }

  std::map<std::string, std::string> meta = Meta();
  auto version_it = meta.find("schema_version");
  if (version_it == meta.end()) throw Error(Errc::kCorruptFile, "store_meta has no schema_version");
  int version = 0;
  try {
    version = std::stoi(version_it->second);
  } catch (const std::exception &) {
    throw Error(Errc::kCorruptFile, "unreadable schema_version '" + version_it->second + "'");
  }
  if (std::find(std::begin(kKnownSchemaVersions), std::end(kKnownSchemaVersions), version) ==
      std::end(kKnownSchemaVersions)) {
    throw Error(Errc::kSchemaVersionUnknown,
                "store schema version " + std::to_string(version) +
                    " is not supported by this build (known: " + std::to_string(kSchemaVersion) +
                    ")");
  }
  schema_version_ = version;
  dimension_ = std::stoi(meta["dimension"]);
  model_id_ = meta["model_id"];

  auto config = json::parse(meta["config"], nullptr, false);
  if (!config.is_object()) {
    warnings_.push_back("config blob is not a JSON object; ignored");
  } else {
    for (const auto &[key, value] : config.items()) {
      if (!kKnownConfigKeys.count(key)) {
        warnings_.push_back("unknown config key '" + key + "' preserved and ignored");
      }
    }
  }
}

std::map<std::string, std::string> Store::Meta() const {
  std::map<std::string, std::string> meta;
  Statement st(db_->handle(), "SELECT key, value FROM store_meta");
  while (st.Step()) meta[st.Text(0)] = st.Text(1);
  return meta;
}

void Store::Barrier(std::string_view stage) const {
  if (barrier_) barrier_(stage);
}

void Store::Invalidate() {
  std::lock_guard lock(snapshot_mu_);
  ++generation_;
  snapshot_.reset();
}

void Store::Validate(const DocumentMeta &meta, std::span<const ChunkInput> chunks,
                     std::span<const Vector> vectors) const {
  if (chunks.empty()) throw Error(Errc::kEmptyDocument, "document has no chunks");
  if (chunks.size() != vectors.size()) {
    throw Error(Errc::kDimensionMismatch, std::to_string(chunks.size()) + " chunks but " +
                                              std::to_string(vectors.size()) + " vectors");
  }
  size_t bytes = 0;
  for (const auto &c : chunks) bytes += c.text.size();
  options_.limits.CheckDocument(chunks.size(), bytes);
  options_.limits.CheckTags(meta.tags);
  for (const auto &v : vectors) {
    if (static_cast<int>(v.size()) != dimension_) {
      throw Error(Errc::kDimensionMismatch, "vector of dimension " + std::to_string(v.size()) +
                                                ", store dimension " + std::to_string(dimension_));
    }
    if (L2Norm(v) == 0.0) throw Error(Errc::kInvalidArgument, "zero vector");
  }
  for (const auto &c : chunks) {
    if (c.token_count <= 0) throw Error(Errc::kInvalidArgument, "chunk token_count must be > 0");
  }
}

void Store::DeleteDocumentRows(std::int64_t doc_id) {
  Statement(db_->handle(),
            "DELETE FROM chunk_vectors WHERE chunk_id IN (SELECT chunk_id FROM chunks WHERE "
            "doc_id = ?)")
      .Bind(1, doc_id)
      .Run();
  Statement(db_->handle(),
            "DELETE FROM text_index WHERE chunk_id IN (SELECT chunk_id FROM chunks WHERE doc_id = "
            "?)")
      .Bind(1, doc_id)
      .Run();
  Statement(db_->handle(), "DELETE FROM chunks WHERE doc_id = ?").Bind(1, doc_id).Run();
  Statement(db_->handle(), "DELETE FROM documents WHERE doc_id = ?").Bind(1, doc_id).Run();
}

DocId Store::InsertDocumentLocked(const DocumentMeta &meta, std::span<const ChunkInput> chunks,
                                  std::span<const Vector> vectors) {
  {
    Statement st(db_->handle(),
                 "SELECT doc_id FROM documents WHERE source_uri = ? AND collection = ?");
    st.Bind(1, meta.source_uri).Bind(2, meta.collection);
    if (st.Step()) {
      std::int64_t old = st.Int(0);
      st.Reset();
      DeleteDocumentRows(old);
    }
  }
  Barrier("after_document");
  Statement doc(db_->handle(),
                "INSERT INTO documents(source_uri, collection, tags, source_type, chunk_count, "
                "created_at) VALUES(?, ?, ?, ?, ?, ?)");
  doc.Bind(1, meta.source_uri)
      .Bind(2, meta.collection)
      .Bind(3, json(meta.tags).dump())
      .Bind(4, ToString(meta.source_type))
      .Bind(5, static_cast<std::int64_t>(chunks.size()))
      .Bind(6, Now())
      .Run();
  const std::int64_t doc_id = db_->LastInsertId();

  Statement chunk(db_->handle(),
                  "INSERT INTO chunks(doc_id, seq, text, token_count, kind, content_digest) "
                  "VALUES(?, ?, ?, ?, ?, ?)");
  Statement vec(db_->handle(), "INSERT INTO chunk_vectors(chunk_id, vector) VALUES(?, ?)");
  Statement text(db_->handle(), "INSERT INTO text_index(chunk_id, entry) VALUES(?, ?)");
  Vector unit;
  for (size_t i = 0; i < chunks.size(); ++i) {
    chunk.Reset();
    chunk.Bind(1, doc_id)
        .Bind(2, static_cast<std::int64_t>(i))
        .Bind(3, chunks[i].text)
        .Bind(4, chunks[i].token_count)
        .Bind(5, ToString(chunks[i].kind))
        .Bind(6, ContentDigest(chunks[i].text))
        .Run();
    const std::int64_t chunk_id = db_->LastInsertId();
    unit = vectors[i];
    Normalize(unit);
    vec.Reset();
    vec.Bind(1, chunk_id).BindBlob(2, AsBytes(unit)).Run();
    text.Reset();
    text.Bind(1, chunk_id).Bind(2, SerializeTermEntry(BuildTermEntry(chunks[i].text))).Run();
    Barrier("after_chunk:" + std::to_string(i));
  }
  return DocId{doc_id};
}

DocId Store::AddDocument(const DocumentMeta &meta, std::span<const ChunkInput> chunks,
                         std::span<const Vector> vectors) {
  Validate(meta, chunks, vectors);
  DocId id{};
  {
    sqlite::Transaction tx(*db_);
    Barrier("begin");
    id = InsertDocumentLocked(meta, chunks, vectors);
    Barrier("before_commit");
    tx.Commit();
  }
  Invalidate();
  metrics_->Increment(Counter::kIngests);
  return id;
}

std::vector<DocId> Store::AddDocumentsBatch(std::span<const DocumentInput> docs) {
  for (const auto &d : docs) Validate(d.meta, d.chunks, d.vectors);
  std::vector<DocId> ids;
  ids.reserve(docs.size());
  {
    sqlite::Transaction tx(*db_);
    Barrier("begin");
    for (const auto &d : docs) ids.push_back(InsertDocumentLocked(d.meta, d.chunks, d.vectors));
    Barrier("before_commit");
    tx.Commit();
  }
  Invalidate();
  metrics_->Increment(Counter::kIngests, docs.size());
  return ids;
}

bool Store::DeleteDocument(DocId id) {
  bool found = false;
  {
    sqlite::Transaction tx(*db_);
    Statement st(db_->handle(), "SELECT 1 FROM documents WHERE doc_id = ?");
    found = st.Bind(1, raw(id)).Step();
    st.Reset();
    DeleteDocumentRows(raw(id));
    tx.Commit();
  }
  Invalidate();
  return found;
}

std::optional<DocumentRecord> Store::FindDocument(std::string_view source_uri,
                                                  std::string_view collection) const {
  Statement st(db_->handle(), "SELECT " + std::string(kDocColumns) +
                                  " FROM documents WHERE source_uri = ? AND collection = ?");
  st.Bind(1, source_uri).Bind(2, collection);
  if (!st.Step()) return std::nullopt;
  return ReadDocument(st);
}

std::optional<DocumentRecord> Store::GetDocument(DocId id) const {
  Statement st(db_->handle(),
               "SELECT " + std::string(kDocColumns) + " FROM documents WHERE doc_id = ?");
  st.Bind(1, raw(id));
  if (!st.Step()) return std::nullopt;
  return ReadDocument(st);
}

std::vector<DocumentRecord> Store::ListDocuments() const {
  std::vector<DocumentRecord> out;
  Statement st(db_->handle(),
               "SELECT " + std::string(kDocColumns) + " FROM documents ORDER BY doc_id");
  while (st.Step()) out.push_back(ReadDocument(st));
  return out;
}

Completeness Store::DocCompleteness(std::string_view source_uri,
                                    std::string_view collection) const {
  auto doc = FindDocument(source_uri, collection);
  if (!doc) return Completeness::kMissing;
  Statement st(db_->handle(),
               "SELECT COUNT(*), MIN(c.seq), MAX(c.seq), COUNT(DISTINCT c.seq), "
               "COALESCE(SUM(v.chunk_id IS NULL OR length(v.vector) != ?), 0), "
               "COALESCE(SUM(t.chunk_id IS NULL), 0) "
               "FROM chunks c LEFT JOIN chunk_vectors v ON v.chunk_id = c.chunk_id "
               "LEFT JOIN text_index t ON t.chunk_id = c.chunk_id WHERE c.doc_id = ?");
  st.Bind(1, static_cast<std::int64_t>(dimension_) * 4).Bind(2, raw(doc->doc_id));
  st.Step();
  std::int64_t count = st.Int(0);
  if (count != doc->chunk_count || count == 0) return Completeness::kPartial;
  if (st.Int(1) != 0 || st.Int(2) != count - 1 || st.Int(3) != count) {
    return Completeness::kPartial;
  }
  if (st.Int(4) != 0 || st.Int(5) != 0) return Completeness::kPartial;
  return Completeness::kComplete;
}

IntegrityReport Store::IntegrityCheck() const {
  IntegrityReport report;

  InvariantResult counts{std::string(kInvChunkCount)};
  counts.offenders = CollectIds(
      *db_,
      "SELECT d.doc_id FROM documents d LEFT JOIN (SELECT doc_id, COUNT(*) AS c, MIN(seq) AS mn, "
      "MAX(seq) AS mx, COUNT(DISTINCT seq) AS dc FROM chunks GROUP BY doc_id) x "
      "ON x.doc_id = d.doc_id WHERE d.chunk_count != COALESCE(x.c, 0) "
      "OR (x.c > 0 AND (x.mn != 0 OR x.mx != x.c - 1 OR x.dc != x.c)) ORDER BY d.doc_id");
  counts.pass = counts.offenders.empty();
  if (!counts.pass) counts.detail = "documents whose chunk_count or seq range disagrees with rows";
  report.invariants.push_back(std::move(counts));

  InvariantResult vectors{std::string(kInvVectorParity)};
  vectors.offenders = CollectIds(
      *db_, "SELECT c.chunk_id FROM chunks c LEFT JOIN chunk_vectors v ON v.chunk_id = c.chunk_id "
            "WHERE v.chunk_id IS NULL OR length(v.vector) != " +
                std::to_string(dimension_ * 4) +
                " UNION SELECT v.chunk_id FROM chunk_vectors v LEFT JOIN chunks c "
                "ON c.chunk_id = v.chunk_id WHERE c.chunk_id IS NULL ORDER BY 1");
  vectors.pass = vectors.offenders.empty();
  if (!vectors.pass) vectors.detail = "chunks without exactly one vector, or dangling vectors";
  report.invariants.push_back(std::move(vectors));

  InvariantResult text{std::string(kInvTextIndex)};
  {
    std::set<std::int64_t> bad;
    for (auto id : CollectIds(*db_,
                              "SELECT t.chunk_id FROM text_index t LEFT JOIN chunks c "
                              "ON c.chunk_id = t.chunk_id WHERE c.chunk_id IS NULL")) {
      bad.insert(id);
    }
    Statement st(db_->handle(),
                 "SELECT c.chunk_id, c.text, c.content_digest, t.entry FROM chunks c "
                 "LEFT JOIN text_index t ON t.chunk_id = c.chunk_id");
    while (st.Step()) {
      std::string body = st.Text(1);
      if (st.IsNull(3) || st.Text(3) != SerializeTermEntry(BuildTermEntry(body)) ||
          st.Text(2) != ContentDigest(body)) {
        bad.insert(st.Int(0));
      }
    }
    text.offenders.assign(bad.begin(), bad.end());
  }
  text.pass = text.offenders.empty();
  if (!text.pass) text.detail = "text index entries missing, dangling, stale, or digest mismatch";
  report.invariants.push_back(std::move(text));

  InvariantResult orphans{std::string(kInvOrphans)};
  orphans.offenders = CollectIds(*db_,
                                 "SELECT c.chunk_id FROM chunks c LEFT JOIN documents d "
                                 "ON d.doc_id = c.doc_id WHERE d.doc_id IS NULL ORDER BY 1");
  orphans.pass = orphans.offenders.empty();
  if (!orphans.pass) orphans.detail = "chunks whose parent document is gone";
  report.invariants.push_back(std::move(orphans));

  InvariantResult storage{std::string(kInvStorage)};
  {
    Statement st(db_->handle(), "PRAGMA integrity_check");
    std::vector<std::string> lines;
    while (st.Step()) lines.push_back(st.Text(0));
    storage.pass = lines.size() == 1 && lines[0] == "ok";
    if (!storage.pass) {
      for (const auto &l : lines) {
        if (!storage.detail.empty()) storage.detail += "; ";
        storage.detail += l;
      }
    }
  }
  report.invariants.push_back(std::move(storage));
  return report;
}

RepairReport Store::IntegrityRepair(const EmbeddingProvider *embedder) {
  RepairReport rep;
  if (embedder && embedder->dimension() != dimension_) {
    throw Error(Errc::kDimensionMismatch, "repair embedder dimension differs from store");
  }
  {
    Statement st(db_->handle(), "PRAGMA integrity_check");
    bool ok = st.Step() && st.Text(0) == "ok" && !st.Step();
    st.Reset();
    if (!ok) {
      db_->Exec("REINDEX");
      rep.reindexed = 1;
    }
  }

  sqlite::Transaction tx(*db_);
  auto orphans = CollectIds(*db_,
                            "SELECT c.chunk_id FROM chunks c LEFT JOIN documents d "
                            "ON d.doc_id = c.doc_id WHERE d.doc_id IS NULL");
  for (auto id : orphans) {
    Statement(db_->handle(), "DELETE FROM chunk_vectors WHERE chunk_id = ?").Bind(1, id).Run();
    Statement(db_->handle(), "DELETE FROM text_index WHERE chunk_id = ?").Bind(1, id).Run();
    Statement(db_->handle(), "DELETE FROM chunks WHERE chunk_id = ?").Bind(1, id).Run();
  }
  rep.orphans_deleted = static_cast<std::int64_t>(orphans.size());

  db_->Exec(
      "DELETE FROM text_index WHERE chunk_id NOT IN (SELECT chunk_id FROM chunks)");
  rep.text_entries_rebuilt += db_->Changes();
  {
    struct Fix {
      std::int64_t id;
      std::string entry;
      std::string digest;
      bool entry_bad;
      bool digest_bad;
    };
    std::vector<Fix> fixes;
    Statement st(db_->handle(),
                 "SELECT c.chunk_id, c.text, c.content_digest, t.entry FROM chunks c "
                 "LEFT JOIN text_index t ON t.chunk_id = c.chunk_id");
    while (st.Step()) {
      std::string body = st.Text(1);
      std::string entry = SerializeTermEntry(BuildTermEntry(body));
      std::string digest = ContentDigest(body);
      bool entry_bad = st.IsNull(3) || st.Text(3) != entry;
      bool digest_bad = st.Text(2) != digest;
      if (entry_bad || digest_bad) {
        fixes.push_back({st.Int(0), std::move(entry), std::move(digest), entry_bad, digest_bad});
      }
    }
    st.Reset();
    for (const auto &f : fixes) {
      if (f.entry_bad) {
        Statement(db_->handle(), "INSERT OR REPLACE INTO text_index(chunk_id, entry) VALUES(?, ?)")
            .Bind(1, f.id)
            .Bind(2, f.entry)
            .Run();
        ++rep.text_entries_rebuilt;
      }
      if (f.digest_bad) {
        Statement(db_->handle(), "UPDATE chunks SET content_digest = ? WHERE chunk_id = ?")
            .Bind(1, f.digest)
            .Bind(2, f.id)
            .Run();
        ++rep.digests_fixed;
      }
    }
  }

  db_->Exec("DELETE FROM chunk_vectors WHERE chunk_id NOT IN (SELECT chunk_id FROM chunks)");
  rep.dangling_vectors_deleted = db_->Changes();
  {
    std::vector<std::pair<std::int64_t, std::string>> missing;
    Statement st(db_->handle(),
                 "SELECT c.chunk_id, c.text FROM chunks c LEFT JOIN chunk_vectors v "
                 "ON v.chunk_id = c.chunk_id WHERE v.chunk_id IS NULL OR length(v.vector) != " +
                     std::to_string(dimension_ * 4));
    while (st.Step()) missing.emplace_back(st.Int(0), st.Text(1));
    st.Reset();
    for (const auto &[id, body] : missing) {
      if (!embedder) {
        ++rep.vectors_unrepaired;
        continue;
      }
      Vector v = embedder->EmbedOne(body);
      Statement(db_->handle(),
                "INSERT OR REPLACE INTO chunk_vectors(chunk_id, vector) VALUES(?, ?)")
          .Bind(1, id)
          .BindBlob(2, AsBytes(v))
          .Run();
      ++rep.vectors_reembedded;
    }
  }

  for (auto doc_id : CollectIds(*db_, "SELECT doc_id FROM documents")) {
    std::vector<std::pair<std::int64_t, std::int64_t>> rows;  // chunk_id, seq
    {
      Statement st(db_->handle(),
                   "SELECT chunk_id, seq FROM chunks WHERE doc_id = ? ORDER BY seq, chunk_id");
      st.Bind(1, doc_id);
      while (st.Step()) rows.emplace_back(st.Int(0), st.Int(1));
    }
    for (size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].second != static_cast<std::int64_t>(i)) {
        Statement(db_->handle(), "UPDATE chunks SET seq = ? WHERE chunk_id = ?")
            .Bind(1, static_cast<std::int64_t>(i))
            .Bind(2, rows[i].first)
            .Run();
        ++rep.seqs_renumbered;
      }
    }
    Statement(db_->handle(),
              "UPDATE documents SET chunk_count = ? WHERE doc_id = ? AND chunk_count != ?")
        .Bind(1, static_cast<std::int64_t>(rows.size()))
        .Bind(2, doc_id)
        .Bind(3, static_cast<std::int64_t>(rows.size()))
        .Run();
    rep.chunk_counts_fixed += db_->Changes();
  }
  tx.Commit();
  if (rep.total_changes() > 0) Invalidate();
  return rep;
}

ChunkLookup Store::GetChunks(std::span<const ChunkId> ids) const {
  options_.limits.CheckBatch(ids.size());
  std::unordered_map<std::int64_t, ChunkRecord> found;
  for (size_t begin = 0; begin < ids.size(); begin += kLookupBatchSize) {
    size_t n = std::min(kLookupBatchSize, ids.size() - begin);
    Statement st(db_->handle(), "SELECT " + std::string(kChunkColumns) +
                                    " FROM chunks WHERE chunk_id IN (" + Placeholders(n) + ")");
    for (size_t i = 0; i < n; ++i) st.Bind(static_cast<int>(i + 1), raw(ids[begin + i]));
    while (st.Step()) {
      ChunkRecord r = ReadChunk(st);
      found.emplace(raw(r.chunk_id), std::move(r));
    }
    metrics_->Increment(Counter::kBatchLookups);
  }
  metrics_->Increment(Counter::kChunkLookups, ids.size());
  ChunkLookup out;
  for (ChunkId id : ids) {
    auto it = found.find(raw(id));
    if (it == found.end()) {
      out.missing.push_back(id);
    } else {
      out.records.push_back(it->second);
    }
  }
  return out;
}

std::vector<ChunkRecord> Store::DocumentChunks(DocId id) const {
  std::vector<ChunkRecord> out;
  Statement st(db_->handle(), "SELECT " + std::string(kChunkColumns) +
                                  " FROM chunks WHERE doc_id = ? ORDER BY seq");
  st.Bind(1, raw(id));
  while (st.Step()) out.push_back(ReadChunk(st));
  return out;
}

std::vector<ChunkId> Store::AllChunkIds() const {
  std::vector<ChunkId> out;
  for (auto id : CollectIds(*db_, "SELECT chunk_id FROM chunks ORDER BY chunk_id")) {
    out.push_back(ChunkId{id});
  }
  return out;
}

std::int64_t Store::RecordSearchEvent(const SearchEvent &event) {
  sqlite::Transaction tx(*db_);
  Statement(db_->handle(),
            "INSERT INTO search_events(query, best_distance, tier, result_count, dismissed, at) "
            "VALUES(?, ?, ?, ?, ?, ?)")
      .Bind(1, event.query)
      .Bind(2, event.best_distance)
      .Bind(3, ToString(event.tier))
      .Bind(4, event.result_count)
      .Bind(5, event.dismissed ? 1 : 0)
      .Bind(6, event.at)
      .Run();
  std::int64_t id = db_->LastInsertId();
  Statement(db_->handle(),
            "DELETE FROM search_events WHERE event_id <= (SELECT event_id FROM search_events "
            "ORDER BY event_id DESC LIMIT 1 OFFSET ?)")
      .Bind(1, kMaxSearchEvents)
      .Run();
  tx.Commit();
  metrics_->Increment(Counter::kSearchEvents);
  return id;
}

void Store::MarkDismissed(std::int64_t event_id, bool dismissed) {
  Statement(db_->handle(), "UPDATE search_events SET dismissed = ? WHERE event_id = ?")
      .Bind(1, dismissed ? 1 : 0)
      .Bind(2, event_id)
      .Run();
}

std::vector<SearchEvent> Store::SearchEvents() const {
  std::vector<SearchEvent> out;
  Statement st(db_->handle(),
               "SELECT event_id, query, best_distance, tier, result_count, dismissed, at "
               "FROM search_events ORDER BY event_id");
  while (st.Step()) {
    SearchEvent e;
    e.event_id = st.Int(0);
    e.query = st.Text(1);
    e.best_distance = st.Real(2);
    e.tier = ParseTier(st.Text(3)).value_or(Tier::kLow);
    e.result_count = static_cast<int>(st.Int(4));
    e.dismissed = st.Int(5) != 0;
    e.at = st.Real(6);
    out.push_back(std::move(e));
  }
  return out;
}

void Store::RecordAccess(std::span<const ChunkId> ids, UnixTime at) {
  if (ids.empty()) return;
  sqlite::Transaction tx(*db_);
  Statement st(db_->handle(),
               "UPDATE chunks SET access_count = access_count + 1, last_accessed_at = ? "
               "WHERE chunk_id = ?");
  for (ChunkId id : ids) {
    st.Reset();
    st.Bind(1, at).Bind(2, raw(id)).Run();
  }
  tx.Commit();
}

void Store::SetAccess(std::span<const AccessUpdate> updates) {
  sqlite::Transaction tx(*db_);
  Statement st(db_->handle(),
               "UPDATE chunks SET access_count = ?, last_accessed_at = ? WHERE chunk_id = ?");
  for (const auto &u : updates) {
    st.Reset();
    st.Bind(1, u.access_count);
    if (u.last_accessed_at) {
      st.Bind(2, *u.last_accessed_at);
    } else {
      st.BindNull(2);
    }
    st.Bind(3, raw(u.chunk_id)).Run();
  }
  tx.Commit();
}

void Store::ResetAccess() {
  db_->Exec("UPDATE chunks SET access_count = 0, last_accessed_at = NULL");
}

void Store::Reembed(const EmbeddingProvider &embedder) {
  if (embedder.dimension() != dimension_) {
    throw Error(Errc::kDimensionMismatch, "embedder dimension " +
                                              std::to_string(embedder.dimension()) +
                                              " differs from store dimension " +
                                              std::to_string(dimension_));
  }
  std::vector<std::pair<std::int64_t, Vector>> fresh;
  {
    Statement st(db_->handle(), "SELECT chunk_id, text FROM chunks ORDER BY chunk_id");
    while (st.Step()) fresh.emplace_back(st.Int(0), embedder.EmbedOne(st.Text(1)));
  }
  sqlite::Transaction tx(*db_);
  Statement st(db_->handle(), "INSERT OR REPLACE INTO chunk_vectors(chunk_id, vector) VALUES(?, ?)");
  for (auto &[id, v] : fresh) {
    Normalize(v);
    st.Reset();
    st.Bind(1, id).BindBlob(2, AsBytes(v)).Run();
  }
  Statement(db_->handle(), "UPDATE store_meta SET value = ? WHERE key = 'model_id'")
      .Bind(1, embedder.model_id())
      .Run();
  tx.Commit();
  model_id_ = embedder.model_id();
  Invalidate();
}

std::shared_ptr<IndexSnapshot> Store::BuildSnapshot() const {
  auto snap = std::make_shared<IndexSnapshot>(dimension_);
  {
    Statement st(db_->handle(),
                 "SELECT c.chunk_id, c.doc_id, c.seq FROM chunks c JOIN documents d "
                 "ON d.doc_id = c.doc_id ORDER BY c.doc_id, c.seq, c.chunk_id");
    while (st.Step()) {
      ChunkId id{st.Int(0)};
      DocId doc{st.Int(1)};
      snap->chunks.emplace(raw(id), IndexSnapshot::ChunkInfo{doc, static_cast<int>(st.Int(2))});
      snap->doc_chunks[raw(doc)].push_back(id);
    }
  }
  {
    Statement st(db_->handle(), "SELECT chunk_id, entry FROM text_index");
    while (st.Step()) {
      std::int64_t id = st.Int(0);
      if (!snap->chunks.count(id)) continue;
      auto entry = ParseTermEntry(st.Text(1));
      if (entry) snap->text.Add(ChunkId{id}, *entry);
    }
  }
  {
    Statement st(db_->handle(), "SELECT chunk_id, vector FROM chunk_vectors");
    const size_t want = static_cast<size_t>(dimension_) * sizeof(float);
    Vector v(dimension_);
    while (st.Step()) {
      std::int64_t id = st.Int(0);
      if (!snap->chunks.count(id)) continue;
      auto blob = st.Blob(1);
      if (blob.size() != want) continue;
      std::memcpy(v.data(), blob.data(), want);
      snap->vectors.Add(ChunkId{id}, v);
    }
  }
  return snap;
}

std::shared_ptr<const IndexSnapshot> Store::Snapshot() const {
  std::lock_guard lock(snapshot_mu_);
  if (!snapshot_) {
    auto snap = BuildSnapshot();
    snap->generation = generation_;
    snapshot_ = std::move(snap);
  }
  return snapshot_;
}

double Store::MeanIdf(std::string_view raw_query) const {
  return Snapshot()->text.MeanIdf(raw_query);
}

StoreStats Store::Stats() const {
  StoreStats s;
  s.schema_version = schema_version_;
  s.dimension = dimension_;
  s.model_id = model_id_;
  auto one = [&](std::string_view sql) {
    Statement st(db_->handle(), sql);
    st.Step();
    return st.Int(0);
  };
  s.documents = one("SELECT COUNT(*) FROM documents");
  s.chunks = one("SELECT COUNT(*) FROM chunks");
  s.search_events = one("SELECT COUNT(*) FROM search_events");
  {
    Statement st(db_->handle(), "SELECT kind, COUNT(*) FROM chunks GROUP BY kind ORDER BY kind");
    while (st.Step()) s.chunk_kinds[st.Text(0)] = st.Int(1);
  }
  {
    Statement st(db_->handle(),
                 "SELECT collection, COUNT(*) FROM documents GROUP BY collection ORDER BY 1");
    while (st.Step()) s.collections[st.Text(0)] = st.Int(1);
  }
  return s;
}

void Store::ExecRawForTesting(std::string_view sql) {
  db_->Exec(sql);
  Invalidate();
}

}  // namespace stash
