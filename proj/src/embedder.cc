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

#include "stash/embedder.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "stash/digest.h"
#include "stash/error.h"
#include "stash/text_index.h"

namespace stash {
namespace {

std::uint64_t Fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t SplitMix(std::uint64_t &state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

float DotProduct(const float *a, const float *b, size_t n) {
  float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (int l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
  }
  float tail = 0.0f;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
         ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

double L2Norm(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

void Normalize(std::span<float> v) {
  double norm = L2Norm(v);
  if (norm == 0.0) return;
  for (float &x : v) x = static_cast<float>(x / norm);
}

double CosineDistance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw Error(Errc::kDimensionMismatch, "cosine distance between dimension " +
                                              std::to_string(a.size()) + " and " +
                                              std::to_string(b.size()));
  }
  double d = 1.0 - static_cast<double>(DotProduct(a.data(), b.data(), a.size()));
  return std::clamp(d, 0.0, 2.0);
}

std::vector<Vector> EmbeddingProvider::Embed(std::span<const std::string> texts) const {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto &t : texts) out.push_back(EmbedOne(t));
  return out;
}

TestEmbedder::TestEmbedder(int dimension) : dimension_(dimension) {
  if (dimension < 8) {
    throw Error(Errc::kInvalidArgument, "test embedder dimension must be >= 8");
  }
}

std::string TestEmbedder::model_id() const {
  return "test-hash-bag-" + std::to_string(dimension_);
}

Vector TestEmbedder::EmbedOne(std::string_view text) const {
  std::vector<double> acc(dimension_, 0.0);
  bool any = false;
  for (const auto &term : TokenizeStem(text)) {
    any = true;
    std::uint64_t state = Fnv1a(term);
    for (int i = 0; i < kBundleSize; ++i) {
      std::uint64_t h = SplitMix(state);
      auto coord = static_cast<int>(h % static_cast<std::uint64_t>(dimension_));
      acc[coord] += ((h >> 40) & 1) ? 1.0 : -1.0;
    }
  }
  Vector v(dimension_, 0.0f);
  double norm = 0.0;
  for (double x : acc) norm += x * x;
  if (!any || norm == 0.0) {
    v[0] = 1.0f;
    return v;
  }
  norm = std::sqrt(norm);
  for (int i = 0; i < dimension_; ++i) v[i] = static_cast<float>(acc[i] / norm);
  return v;
}

std::unique_ptr<PrecomputedEmbedder> PrecomputedEmbedder::Load(
    const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoFailure, "cannot open " + path.string());
  std::unique_ptr<PrecomputedEmbedder> p(new PrecomputedEmbedder());
  p->model_id_ = "precomputed:" + path.filename().string();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto where = [&] { return path.string() + ":" + std::to_string(line_no); };
    size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw Error(Errc::kParseFailure, where() + ": expected digest<TAB>floats");
    }
    std::string digest = line.substr(0, tab);
    Vector v;
    std::string_view rest(line);
    rest.remove_prefix(tab + 1);
    while (!rest.empty()) {
      size_t comma = rest.find(',');
      auto field = rest.substr(0, comma);
      while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
      float x = 0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), x);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw Error(Errc::kParseFailure, where() + ": bad float '" + std::string(field) + "'");
      }
      v.push_back(x);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (v.empty()) throw Error(Errc::kParseFailure, where() + ": empty vector");
    if (p->dimension_ == 0) {
      p->dimension_ = static_cast<int>(v.size());
    } else if (static_cast<int>(v.size()) != p->dimension_) {
      throw Error(Errc::kParseFailure, where() + ": dimension " + std::to_string(v.size()) +
                                           " differs from " + std::to_string(p->dimension_));
    }
    double norm = L2Norm(v);
    if (std::abs(norm - 1.0) > 1e-3) {
      throw Error(Errc::kParseFailure, where() + ": vector is not unit length");
    }
    Normalize(v);
    p->vectors_[digest] = std::move(v);
  }
  if (p->dimension_ == 0) throw Error(Errc::kParseFailure, path.string() + ": no vectors");
  return p;
}

bool PrecomputedEmbedder::Contains(std::string_view text) const {
  return vectors_.count(ContentDigest(text)) > 0;
}

Vector PrecomputedEmbedder::EmbedOne(std::string_view text) const {
  auto it = vectors_.find(ContentDigest(text));
  if (it == vectors_.end()) {
    std::string preview(text.substr(0, 40));
    throw Error(Errc::kUnknownText, "no precomputed vector for '" + preview + "'");
  }
  return it->second;
}

void WritePrecomputed(const std::filesystem::path &path, std::span<const std::string> texts,
                      std::span<const Vector> vectors) {
  if (texts.size() != vectors.size()) {
    throw Error(Errc::kInvalidArgument, "texts and vectors differ in length");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::kIoFailure, "cannot write " + path.string());
  char buf[32];
  for (size_t i = 0; i < texts.size(); ++i) {
    out << ContentDigest(texts[i]) << '\t';
    for (size_t j = 0; j < vectors[i].size(); ++j) {
      auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), vectors[i][j]);
      if (j) out << ',';
      out.write(buf, p - buf);
    }
    out << '\n';
  }
  if (!out) throw Error(Errc::kIoFailure, "write failed for " + path.string());
}

std::unique_ptr<EmbeddingProvider> MakeEmbedder(std::string_view selector) {
  if (selector == "test") return std::make_unique<TestEmbedder>();
  if (selector.starts_with("test:")) {
    int dim = 0;
    auto s = selector.substr(5);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), dim);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw Error(Errc::kInvalidArgument, "bad embedder selector '" + std::string(selector) + "'");
    }
    return std::make_unique<TestEmbedder>(dim);
  }
  if (selector.starts_with("precomputed:")) {
    return PrecomputedEmbedder::Load(std::string(selector.substr(12)));
  }
  throw Error(Errc::kInvalidArgument, "unknown embedder '" + std::string(selector) +
                                          "' (expected test or precomputed:<path>)");
}

}  // namespace stash
