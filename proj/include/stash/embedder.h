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

#ifndef STASH_EMBEDDER_H_
#define STASH_EMBEDDER_H_

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace stash {

using Vector = std::vector<float>;

inline constexpr int kDefaultDimension = 384;

float DotProduct(const float *a, const float *b, size_t n);

// Scales v to unit length. A zero vector is left untouched.
void Normalize(std::span<float> v);

double L2Norm(std::span<const float> v);

// 1 - dot(a, b), clamped to [0, 2]. Inputs are expected to be unit vectors.
double CosineDistance(std::span<const float> a, std::span<const float> b);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual int dimension() const = 0;
  virtual std::string model_id() const = 0;
  virtual Vector EmbedOne(std::string_view text) const = 0;

  std::vector<Vector> Embed(std::span<const std::string> texts) const;
};

// Deterministic hashed bag-of-stems. Every stemmed term maps to a fixed
// bundle of signed coordinates; the bundles are summed and normalized.
// Empty (term-less) text maps to the first basis vector.
class TestEmbedder : public EmbeddingProvider {
 public:
  static constexpr int kBundleSize = 8;

  explicit TestEmbedder(int dimension = kDefaultDimension);

  int dimension() const override { return dimension_; }
  std::string model_id() const override;
  Vector EmbedOne(std::string_view text) const override;

 private:
  int dimension_;
};

// Serves vectors from a file of "<hex blake2b digest>\t<f1,f2,...>" lines,
// keyed by the digest of the text.
class PrecomputedEmbedder : public EmbeddingProvider {
 public:
  static std::unique_ptr<PrecomputedEmbedder> Load(const std::filesystem::path &path);

  int dimension() const override { return dimension_; }
  std::string model_id() const override { return model_id_; }
  Vector EmbedOne(std::string_view text) const override;

  size_t size() const { return vectors_.size(); }
  bool Contains(std::string_view text) const;

 private:
  PrecomputedEmbedder() = default;

  int dimension_ = 0;
  std::string model_id_;
  std::unordered_map<std::string, Vector> vectors_;
};

// Writes vectors in the precomputed format, one line per (text, vector).
void WritePrecomputed(const std::filesystem::path &path,
                      std::span<const std::string> texts,
                      std::span<const Vector> vectors);

// "test", "test:<dim>" or "precomputed:<path>".
std::unique_ptr<EmbeddingProvider> MakeEmbedder(std::string_view selector);

}  // namespace stash

#endif  // STASH_EMBEDDER_H_
