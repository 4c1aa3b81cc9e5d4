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

#include "stash/limits.h"

#include <algorithm>

#include "stash/error.h"

namespace stash {

void Limits::CheckQuery(std::string_view query) const {
  if (query.size() > max_query_chars) {
    throw LimitError("max_query_chars", std::to_string(query.size()) + " > " +
                                            std::to_string(max_query_chars));
  }
}

void Limits::CheckK(int k) const {
  if (k < 1 || k > max_k) {
    throw LimitError("max_k", "k=" + std::to_string(k) + " outside [1, " +
                                  std::to_string(max_k) + "]");
  }
}

void Limits::CheckCandidatePool(int pool) const {
  if (pool < 1 || pool > max_candidate_pool) {
    throw LimitError("max_candidate_pool", "pool=" + std::to_string(pool) + " outside [1, " +
                                               std::to_string(max_candidate_pool) + "]");
  }
}

void Limits::CheckDocument(size_t chunks, size_t bytes) const {
  if (chunks > static_cast<size_t>(max_chunks_per_doc)) {
    throw LimitError("max_chunks_per_doc", std::to_string(chunks) + " chunks");
  }
  if (bytes > max_doc_bytes) throw LimitError("max_doc_bytes", std::to_string(bytes) + " bytes");
}

void Limits::CheckBatch(size_t ids) const {
  if (ids > max_batch_ids) throw LimitError("max_batch_ids", std::to_string(ids) + " ids");
}

void Limits::CheckTags(std::span<const std::string> tags) const {
  for (const auto &tag : tags) {
    auto depth = static_cast<int>(std::count(tag.begin(), tag.end(), '/')) + 1;
    if (depth > max_tag_depth) throw LimitError("max_tag_depth", "tag '" + tag + "'");
  }
}

}  // namespace stash
