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

#ifndef STASH_VECTOR_INDEX_H_
#define STASH_VECTOR_INDEX_H_

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "stash/types.h"

namespace stash {

struct Neighbor {
  ChunkId chunk_id;
  double distance;
};

// Exact cosine k-NN over unit vectors kept in one contiguous row-major
// buffer. Concurrent Knn calls are safe; Add/Remove are exclusive.
class VectorIndex {
 public:
  explicit VectorIndex(int dimension);

  int dimension() const { return dimension_; }
  std::int64_t size() const { return static_cast<std::int64_t>(ids_.size()); }

  void Add(ChunkId id, std::span<const float> vector);
  bool Remove(ChunkId id);
  std::optional<std::span<const float>> Get(ChunkId id) const;

  // Ascending distance, ties by ascending chunk id. Returns min(n, size())
  // entries.
  std::vector<Neighbor> Knn(std::span<const float> query, int n) const;

 private:
  int dimension_;
  std::vector<float> data_;
  std::vector<ChunkId> ids_;
  std::unordered_map<std::int64_t, size_t> row_of_;
};

}  // namespace stash

#endif  // STASH_VECTOR_INDEX_H_
