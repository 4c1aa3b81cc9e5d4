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

#ifndef STASH_METRICS_H_
#define STASH_METRICS_H_

#include <array>
#include <atomic>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "stash/types.h"

namespace stash {

enum class Stage { kEmbed, kKnn, kBm25, kFuse, kCutoff, kBoost, kMmr, kExpand };
inline constexpr int kStageCount = 8;
std::string_view ToString(Stage s);

struct StageTiming {
  Stage stage;
  double ms;
};

enum class Counter {
  kSearches,
  kIngests,
  kBatchLookups,
  kChunkLookups,
  kSearchEvents,
  kSlowQueries,
};
inline constexpr int kCounterCount = 6;
std::string_view ToString(Counter c);

// Bucket upper bounds in ms: 0.25, 0.5, 1, ..., 1024, then +inf.
inline constexpr int kHistogramBuckets = 14;
double HistogramBound(int bucket);

struct HistogramSnapshot {
  std::array<std::uint64_t, kHistogramBuckets> counts{};
  std::uint64_t count = 0;
  double sum_ms = 0.0;

  bool operator==(const HistogramSnapshot &) const = default;
};

struct MetricsSnapshot {
  std::map<std::string, std::uint64_t> counters;
  std::map<std::string, HistogramSnapshot> histograms;

  bool operator==(const MetricsSnapshot &) const = default;
};

class MetricsRegistry {
 public:
  MetricsRegistry();

  void Increment(Counter c, std::uint64_t by = 1);
  void Observe(Stage stage, double ms);
  void ObserveTotal(double ms);

  std::uint64_t Get(Counter c) const;
  MetricsSnapshot Snapshot() const;

 private:
  struct Histogram {
    std::array<std::atomic<std::uint64_t>, kHistogramBuckets> counts{};
    std::atomic<std::uint64_t> count{0};
    std::atomic<double> sum_ms{0.0};
  };
  void ObserveInto(Histogram &h, double ms);

  // Updates hold the lock shared; Snapshot holds it exclusively so it sees
  // one point in time.
  mutable std::shared_mutex mu_;
  std::array<std::atomic<std::uint64_t>, kCounterCount> counters_{};
  std::array<Histogram, kStageCount> stages_;
  Histogram total_;
};

struct SlowQuery {
  std::string query;
  double total_ms = 0.0;
  std::vector<StageTiming> stages;
  UnixTime at = 0.0;
};

// Bounded ring of searches slower than the threshold.
class SlowQueryLog {
 public:
  static constexpr size_t kCapacity = 256;

  explicit SlowQueryLog(double threshold_ms = 100.0) : threshold_ms_(threshold_ms) {}

  void set_threshold_ms(double ms);
  double threshold_ms() const;

  // Returns true if the search was logged.
  bool Offer(SlowQuery entry);
  std::vector<SlowQuery> Entries() const;
  void Clear();

 private:
  mutable std::mutex mu_;
  double threshold_ms_;
  std::deque<SlowQuery> ring_;
};

}  // namespace stash

#endif  // STASH_METRICS_H_
