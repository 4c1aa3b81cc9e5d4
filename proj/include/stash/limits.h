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

#ifndef STASH_LIMITS_H_
#define STASH_LIMITS_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stash {

// Input bounds checked at API boundaries; violations raise LimitError.
struct Limits {
  size_t max_query_chars = 16384;
  int max_k = 1000;
  int max_candidate_pool = 10000;
  int max_chunks_per_doc = 200000;
  size_t max_doc_bytes = size_t{256} << 20;
  size_t max_batch_ids = 1000000;
  int max_tag_depth = 16;

  void CheckQuery(std::string_view query) const;
  void CheckK(int k) const;
  void CheckCandidatePool(int pool) const;
  void CheckDocument(size_t chunks, size_t bytes) const;
  void CheckBatch(size_t ids) const;
  void CheckTags(std::span<const std::string> tags) const;
};

}  // namespace stash

#endif  // STASH_LIMITS_H_
