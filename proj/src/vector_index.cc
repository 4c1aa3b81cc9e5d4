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

#include "stash/vector_index.h"

#include <algorithm>
#include <string>

#include "stash/embedder.h"
#include "stash/error.h"

namespace stash {

VectorIndex::VectorIndex(int dimension) : dimension_(dimension) {
  if (dimension <= 0) throw Error(Errc::kInvalidArgument, "vector dimension must be positive");
}

void VectorIndex::Add(ChunkId id, std::span<const float> vector) {
  if (static_cast<int>(vector.size()) != dimension_) {
    throw Error(Errc::kDimensionMismatch, "vector of dimension " + std::to_string(vector.size()) +
                                              " in index of dimension " +
                                              std::to_string(dimension_));
  }
  auto it = row_of_.find(raw(id));
  if (it != row_of_.end()) {
    std::copy(vector.begin(), vector.end(), data_.begin() + it->second * dimension_);
    return;
  }
  row_of_[raw(id)] = ids_.size();
  ids_.push_back(id);
  data_.insert(data_.end(), vector.begin(), vector.end());
}

bool VectorIndex::Remove(ChunkId id) {
  auto it = row_of_.find(raw(id));
  if (it == row_of_.end()) return false;
  size_t row = it->second;
  size_t last = ids_.size() - 1;
  if (row != last) {
    std::copy(data_.begin() + last * dimension_, data_.begin() + (last + 1) * dimension_,
              data_.begin() + row * dimension_);
    ids_[row] = ids_[last];
    row_of_[raw(ids_[row])] = row;
  }
  ids_.pop_back();
  data_.resize(ids_.size() * dimension_);
  row_of_.erase(it);
  return true;
}

std::optional<std::span<const float>> VectorIndex::Get(ChunkId id) const {
  auto it = row_of_.find(raw(id));
  if (it == row_of_.end()) return std::nullopt;
  return std::span<const float>(data_.data() + it->second * dimension_, dimension_);
}

std::vector<Neighbor> VectorIndex::Knn(std::span<const float> query, int n) const {
  if (ids_.empty()) throw Error(Errc::kEmptyIndex, "k-NN over an empty vector index");
  if (static_cast<int>(query.size()) != dimension_) {
    throw Error(Errc::kDimensionMismatch, "query of dimension " + std::to_string(query.size()) +
                                              " against index of dimension " +
                                              std::to_string(dimension_));
  }
  if (n <= 0) return {};
  std::vector<Neighbor> all(ids_.size());
  const float *q = query.data();
  for (size_t r = 0; r < ids_.size(); ++r) {
    float dot = DotProduct(data_.data() + r * dimension_, q, dimension_);
    all[r] = {ids_[r], std::clamp(1.0 - static_cast<double>(dot), 0.0, 2.0)};
  }
  auto cmp = [](const Neighbor &a, const Neighbor &b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.chunk_id < b.chunk_id;
  };
  size_t keep = std::min(static_cast<size_t>(n), all.size());
  if (keep < all.size()) {
    std::nth_element(all.begin(), all.begin() + keep, all.end(), cmp);
    all.resize(keep);
  }
  std::sort(all.begin(), all.end(), cmp);
  return all;
}

}  // namespace stash
