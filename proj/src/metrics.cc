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

#include "stash/metrics.h"

#include <cmath>

namespace stash {

std::string_view ToString(Stage s) {
  switch (s) {
    case Stage::kEmbed: return "embed";
    case Stage::kKnn: return "knn";
    case Stage::kBm25: return "bm25";
    case Stage::kFuse: return "fuse";
    case Stage::kCutoff: return "cutoff";
    case Stage::kBoost: return "boost";
    case Stage::kMmr: return "mmr";
    case Stage::kExpand: return "expand";
  }
  return "?";
}

std::string_view ToString(Counter c) {
  switch (c) {
    case Counter::kSearches: return "searches";
    case Counter::kIngests: return "ingests";
    case Counter::kBatchLookups: return "batch_lookups";
    case Counter::kChunkLookups: return "chunk_lookups";
    case Counter::kSearchEvents: return "search_events";
    case Counter::kSlowQueries: return "slow_queries";
  }
  return "?";
}

double HistogramBound(int bucket) {
  if (bucket >= kHistogramBuckets - 1) return std::numeric_limits<double>::infinity();
  return std::ldexp(0.25, bucket);
}

MetricsRegistry::MetricsRegistry() = default;

void MetricsRegistry::Increment(Counter c, std::uint64_t by) {
  std::shared_lock lock(mu_);
  counters_[static_cast<int>(c)].fetch_add(by, std::memory_order_relaxed);
}

void MetricsRegistry::ObserveInto(Histogram &h, double ms) {
  int b = 0;
  while (b < kHistogramBuckets - 1 && ms > HistogramBound(b)) ++b;
  h.counts[b].fetch_add(1, std::memory_order_relaxed);
  h.count.fetch_add(1, std::memory_order_relaxed);
  double cur = h.sum_ms.load(std::memory_order_relaxed);
  while (!h.sum_ms.compare_exchange_weak(cur, cur + ms, std::memory_order_relaxed)) {
  }
}

void MetricsRegistry::Observe(Stage stage, double ms) {
  std::shared_lock lock(mu_);
  ObserveInto(stages_[static_cast<int>(stage)], ms);
}

void MetricsRegistry::ObserveTotal(double ms) {
  std::shared_lock lock(mu_);
  ObserveInto(total_, ms);
}

std::uint64_t MetricsRegistry::Get(Counter c) const {
  return counters_[static_cast<int>(c)].load(std::memory_order_relaxed);
}

MetricsSnapshot MetricsRegistry::Snapshot() const {
  std::unique_lock lock(mu_);
  MetricsSnapshot snap;
  for (int i = 0; i < kCounterCount; ++i) {
    snap.counters[std::string(ToString(static_cast<Counter>(i)))] = counters_[i].load();
  }
  auto copy = [](const Histogram &h) {
    HistogramSnapshot s;
    for (int b = 0; b < kHistogramBuckets; ++b) s.counts[b] = h.counts[b].load();
    s.count = h.count.load();
    s.sum_ms = h.sum_ms.load();
    return s;
  };
  for (int i = 0; i < kStageCount; ++i) {
    snap.histograms[std::string(ToString(static_cast<Stage>(i)))] = copy(stages_[i]);
  }
  snap.histograms["total"] = copy(total_);
  return snap;
}

void SlowQueryLog::set_threshold_ms(double ms) {
  std::lock_guard lock(mu_);
  threshold_ms_ = ms;
}

double SlowQueryLog::threshold_ms() const {
  std::lock_guard lock(mu_);
  return threshold_ms_;
}

bool SlowQueryLog::Offer(SlowQuery entry) {
  std::lock_guard lock(mu_);
  if (!(entry.total_ms >= threshold_ms_)) return false;
  ring_.push_back(std::move(entry));
  while (ring_.size() > kCapacity) ring_.pop_front();
  return true;
}

std::vector<SlowQuery> SlowQueryLog::Entries() const {
  std::lock_guard lock(mu_);
  return {ring_.begin(), ring_.end()};
}

void SlowQueryLog::Clear() {
  std::lock_guard lock(mu_);
  ring_.clear();
}

}  // namespace stash
