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

#ifndef STASH_STORE_H_
#define STASH_STORE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stash/embedder.h"
#include "stash/limits.h"
#include "stash/metrics.h"
#include "stash/text_index.h"
#include "stash/types.h"
#include "stash/vector_index.h"

namespace stash {

namespace sqlite {
class Database;
}

inline constexpr int kSchemaVersion = 1;
inline constexpr int kKnownSchemaVersions[] = {1};
inline constexpr size_t kLookupBatchSize = 900;
inline constexpr int kMaxSearchEvents = 1000;

struct DocumentMeta {
  std::string source_uri;
  std::string collection = "default";
  std::vector<std::string> tags;  // hierarchical, '/'-separated
  SourceType source_type = SourceType::kText;
};

struct DocumentRecord {
  DocId doc_id{};
  DocumentMeta meta;
  int chunk_count = 0;
  UnixTime created_at = 0.0;
};

struct ChunkInput {
  std::string text;
  int token_count = 0;
  ChunkKind kind = ChunkKind::kProse;
};

struct ChunkRecord {
  ChunkId chunk_id{};
  DocId doc_id{};
  int seq = 0;
  std::string text;
  int token_count = 0;
  ChunkKind kind = ChunkKind::kProse;
  std::int64_t access_count = 0;
  std::optional<UnixTime> last_accessed_at;
  std::string content_digest;
};

struct DocumentInput {
  DocumentMeta meta;
  std::vector<ChunkInput> chunks;
  std::vector<Vector> vectors;
};

enum class Completeness { kMissing, kPartial, kComplete };
std::string_view ToString(Completeness c);

struct SearchEvent {
  std::int64_t event_id = 0;  // assigned by the store
  std::string query;
  double best_distance = 0.0;
  Tier tier = Tier::kLow;
  int result_count = 0;
  bool dismissed = false;
  UnixTime at = 0.0;
};

struct InvariantResult {
  std::string invariant;
  bool pass = true;
  std::vector<std::int64_t> offenders;
  std::string detail;
};

// Invariant names, in check order.
inline constexpr std::string_view kInvChunkCount = "chunk_count_parity";
inline constexpr std::string_view kInvVectorParity = "vector_parity";
inline constexpr std::string_view kInvTextIndex = "text_index_consistency";
inline constexpr std::string_view kInvOrphans = "orphan_chunks";
inline constexpr std::string_view kInvStorage = "storage_integrity";

struct IntegrityReport {
  std::vector<InvariantResult> invariants;

  bool ok() const;
  const InvariantResult &Get(std::string_view name) const;
};

struct RepairReport {
  std::int64_t reindexed = 0;
  std::int64_t orphans_deleted = 0;
  std::int64_t text_entries_rebuilt = 0;
  std::int64_t digests_fixed = 0;
  std::int64_t dangling_vectors_deleted = 0;
  std::int64_t vectors_reembedded = 0;
  std::int64_t vectors_unrepaired = 0;
  std::int64_t chunk_counts_fixed = 0;
  std::int64_t seqs_renumbered = 0;

  std::int64_t total_changes() const;
};

struct ChunkLookup {
  std::vector<ChunkRecord> records;  // input order, found ids only
  std::vector<ChunkId> missing;
};

struct StoreStats {
  int schema_version = 0;
  int dimension = 0;
  std::string model_id;
  std::int64_t documents = 0;
  std::int64_t chunks = 0;
  std::int64_t search_events = 0;
  std::map<std::string, std::int64_t> chunk_kinds;
  std::map<std::string, std::int64_t> collections;
};

struct StoreOptions {
  bool create_if_missing = true;
  // Used when creating; an existing store keeps its stamped dimension.
  int dimension = kDefaultDimension;
  std::string model_id;
  Limits limits;
  std::function<UnixTime()> clock;  // defaults to the system clock
};

// Read-only view of the searchable state, rebuilt after content writes.
struct IndexSnapshot {
  struct ChunkInfo {
    DocId doc_id;
    int seq;
  };

  explicit IndexSnapshot(int dimension) : vectors(dimension) {}

  TextIndex text;
  VectorIndex vectors;
  std::unordered_map<std::int64_t, ChunkInfo> chunks;
  // Chunk ids of each document ordered by seq.
  std::unordered_map<std::int64_t, std::vector<ChunkId>> doc_chunks;
  std::uint64_t generation = 0;

  std::optional<ChunkInfo> Info(ChunkId id) const;
};

// Single-file store. One writer at a time; readers share index snapshots.
class Store {
 public:
  using WriteBarrier = std::function<void(std::string_view stage)>;

  static std::unique_ptr<Store> Open(const std::filesystem::path &path, StoreOptions options = {});
  ~Store();

  const std::filesystem::path &path() const { return path_; }
  int schema_version() const { return schema_version_; }
  int dimension() const { return dimension_; }
  const std::string &model_id() const { return model_id_; }
  const std::vector<std::string> &warnings() const { return warnings_; }
  const Limits &limits() const { return options_.limits; }
  UnixTime Now() const;

  // Atomic: either every row lands or none. A document already stored
  // under the same (source_uri, collection) is replaced.
  DocId AddDocument(const DocumentMeta &meta, std::span<const ChunkInput> chunks,
                    std::span<const Vector> vectors);
  std::vector<DocId> AddDocumentsBatch(std::span<const DocumentInput> docs);
  bool DeleteDocument(DocId id);

  Completeness DocCompleteness(std::string_view source_uri, std::string_view collection) const;
  std::optional<DocumentRecord> FindDocument(std::string_view source_uri,
                                             std::string_view collection) const;
  std::optional<DocumentRecord> GetDocument(DocId id) const;
  std::vector<DocumentRecord> ListDocuments() const;

  IntegrityReport IntegrityCheck() const;
  // Text is never deleted except for orphan chunks. Missing vectors are
  // re-embedded when an embedder is given, otherwise reported unrepaired.
  RepairReport IntegrityRepair(const EmbeddingProvider *embedder = nullptr);

  ChunkLookup GetChunks(std::span<const ChunkId> ids) const;
  std::vector<ChunkRecord> DocumentChunks(DocId id) const;
  std::vector<ChunkId> AllChunkIds() const;

  std::int64_t RecordSearchEvent(const SearchEvent &event);
  void MarkDismissed(std::int64_t event_id, bool dismissed = true);
  std::vector<SearchEvent> SearchEvents() const;

  // Bumps access_count and sets last_accessed_at for each id.
  void RecordAccess(std::span<const ChunkId> ids, UnixTime at);
  struct AccessUpdate {
    ChunkId chunk_id;
    std::int64_t access_count;
    std::optional<UnixTime> last_accessed_at;
  };
  void SetAccess(std::span<const AccessUpdate> updates);
  void ResetAccess();

  // Replaces every stored vector with the provider's embedding.
  void Reembed(const EmbeddingProvider &embedder);

  std::shared_ptr<const IndexSnapshot> Snapshot() const;
  double MeanIdf(std::string_view raw_query) const;

  StoreStats Stats() const;
  std::map<std::string, std::string> Meta() const;

  MetricsRegistry &metrics() const { return *metrics_; }
  SlowQueryLog &slow_log() const { return *slow_log_; }

  // Test hook called at fixed points inside write transactions; a throwing
  // barrier aborts the transaction.
  void set_write_barrier(WriteBarrier barrier) { barrier_ = std::move(barrier); }

  // Raw SQL against the underlying file, for fault injection in tests.
  void ExecRawForTesting(std::string_view sql);

 private:
  Store(std::filesystem::path path, StoreOptions options);
  void Initialize(bool created);
  void Barrier(std::string_view stage) const;
  void Invalidate();
  DocId InsertDocumentLocked(const DocumentMeta &meta, std::span<const ChunkInput> chunks,
                             std::span<const Vector> vectors);
  void Validate(const DocumentMeta &meta, std::span<const ChunkInput> chunks,
                std::span<const Vector> vectors) const;
  void DeleteDocumentRows(std::int64_t doc_id);
  std::shared_ptr<IndexSnapshot> BuildSnapshot() const;

  std::filesystem::path path_;
  StoreOptions options_;
  std::unique_ptr<sqlite::Database> db_;
  int schema_version_ = 0;
  int dimension_ = 0;
  std::string model_id_;
  std::vector<std::string> warnings_;
  WriteBarrier barrier_;

  std::unique_ptr<MetricsRegistry> metrics_;
  std::unique_ptr<SlowQueryLog> slow_log_;

  mutable std::mutex snapshot_mu_;
  mutable std::shared_ptr<const IndexSnapshot> snapshot_;
  std::uint64_t generation_ = 1;
};

std::span<const std::byte> AsBytes(std::span<const float> v);

}  // namespace stash

#endif  // STASH_STORE_H_
