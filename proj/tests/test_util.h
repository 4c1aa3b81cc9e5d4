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

#ifndef STASH_TESTS_TEST_UTIL_H_
#define STASH_TESTS_TEST_UTIL_H_

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "stash/embedder.h"
#include "stash/store.h"

namespace stash::testing {

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "stash-test-XXXXXX").string();
    char *made = ::mkdtemp(tmpl.data());
    path_ = made ? made : tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const std::filesystem::path &path() const { return path_; }
  std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Serves fixed vectors for known texts; anything else goes to the hashed
// test embedder.
class MapEmbedder : public EmbeddingProvider {
 public:
  explicit MapEmbedder(int dimension) : fallback_(dimension) {}

  void Set(const std::string &text, Vector v) {
    Normalize(v);
    map_[text] = std::move(v);
  }

  int dimension() const override { return fallback_.dimension(); }
  std::string model_id() const override { return "map"; }
  Vector EmbedOne(std::string_view text) const override {
    auto it = map_.find(std::string(text));
    return it != map_.end() ? it->second : fallback_.EmbedOne(text);
  }

  // Writes the mapped texts in the precomputed-vector format.
  void Export(const std::filesystem::path &path) const {
    std::vector<std::string> texts;
    std::vector<Vector> vectors;
    for (const auto &[t, v] : map_) {
      texts.push_back(t);
      vectors.push_back(v);
    }
    WritePrecomputed(path, texts, vectors);
  }

 private:
  TestEmbedder fallback_;
  std::map<std::string, Vector> map_;
};

// Unit vector at cosine distance `distance` from e_0, leaning toward e_axis.
inline Vector AtDistance(int dimension, double distance, int axis) {
  Vector v(dimension, 0.0f);
  double c = 1.0 - distance;
  v[0] = static_cast<float>(c);
  v[axis] = static_cast<float>(std::sqrt(std::max(0.0, 1.0 - c * c)));
  return v;
}

inline Vector Basis(int dimension, int axis) {
  Vector v(dimension, 0.0f);
  v[axis] = 1.0f;
  return v;
}

inline std::unique_ptr<Store> NewStore(const std::filesystem::path &path, int dimension) {
  StoreOptions so;
  so.dimension = dimension;
  so.model_id = "test";
  return Store::Open(path, so);
}

inline int WordCount(const std::string &s) {
  int n = 0;
  bool in = false;
  for (char c : s) {
    bool ws = c == ' ' || c == '\n' || c == '\t' || c == '\r';
    if (!ws && !in) ++n;
    in = !ws;
  }
  return n;
}

// Adds one single-or-multi chunk document, embedding each chunk with `emb`.
inline DocId AddDoc(Store &store, const EmbeddingProvider &emb, const std::string &uri,
                    const std::vector<std::string> &texts,
                    const std::string &collection = "default") {
  DocumentMeta meta;
  meta.source_uri = uri;
  meta.collection = collection;
  std::vector<ChunkInput> chunks;
  std::vector<Vector> vectors;
  for (const auto &t : texts) {
    chunks.push_back({t, std::max(1, WordCount(t)), ChunkKind::kProse});
    vectors.push_back(emb.EmbedOne(t));
  }
  return store.AddDocument(meta, chunks, vectors);
}

// Unit vector at cosine distance `d` from basis vector `from`, tilted toward `axis`.
inline std::vector<float> Near(int dim, int from, double d, int axis) {
  std::vector<float> v(static_cast<size_t>(dim), 0.0f);
  double c = 1.0 - d;
  v[static_cast<size_t>(from)] = static_cast<float>(c);
  v[static_cast<size_t>(axis)] = static_cast<float>(std::sqrt(1.0 - c * c));
  return v;
}

inline constexpr const char *kClusterQuery = "zircon quartz";

// Ten chunks that sit next to the query in vector space but share none of
// its words, and six that contain its words but point elsewhere.
struct TwoCluster {
  std::vector<ChunkId> semantic;
  std::vector<ChunkId> lexical;
};

inline TwoCluster BuildTwoCluster(Store &store, MapEmbedder &emb) {
  const int dim = emb.dimension();
  emb.Set(kClusterQuery, Basis(dim, 0));
  TwoCluster out;
  for (int i = 0; i < 10; ++i) {
    std::string text = "meadow harvest note " + std::to_string(i);
    emb.Set(text, AtDistance(dim, 0.10 + 0.01 * i, 1 + i));
    out.semantic.push_back(
        store.DocumentChunks(AddDoc(store, emb, "sem" + std::to_string(i), {text}))[0].chunk_id);
  }
  for (int i = 0; i < 6; ++i) {
    std::string text = "zircon quartz ledger " + std::to_string(i);
    emb.Set(text, AtDistance(dim, 0.90 + 0.01 * i, 11 + i));
    out.lexical.push_back(
        store.DocumentChunks(AddDoc(store, emb, "lex" + std::to_string(i), {text}))[0].chunk_id);
  }
  return out;
}

}  // namespace stash::testing

#endif  // STASH_TESTS_TEST_UTIL_H_
