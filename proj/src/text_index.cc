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

#include "stash/text_index.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "stash/error.h"
#include "stash/porter.h"

namespace stash {
namespace {

bool IsTokenChar(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c >= 0x80;
}

bool IsSpace(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

}  // namespace

std::vector<std::string> TokenizeStem(std::string_view text) {
  std::vector<std::string> out;
  std::string token;
  auto flush = [&] {
    if (!token.empty()) {
      out.push_back(PorterStem(token));
      token.clear();
    }
  };
  for (unsigned char c : text) {
    if (IsTokenChar(c)) {
      token.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                           : static_cast<char>(c));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::vector<std::string_view> SplitWords(std::string_view text) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && IsSpace(text[i])) ++i;
    size_t start = i;
    while (i < text.size() && !IsSpace(text[i])) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

std::string CompiledQuery::Render() const {
  std::string out;
  for (const auto &t : terms) {
    if (!out.empty()) out += " OR ";
    out += '"';
    out += t;
    out += '"';
  }
  return out;
}

CompiledQuery CompileQuery(std::string_view raw) {
  CompiledQuery q;
  for (auto word : SplitWords(raw)) {
    QueryClause clause{std::string(word), TokenizeStem(word)};
    for (const auto &t : clause.terms) {
      if (std::find(q.terms.begin(), q.terms.end(), t) == q.terms.end()) {
        q.terms.push_back(t);
      }
    }
    if (!clause.terms.empty()) q.clauses.push_back(std::move(clause));
  }
  return q;
}

double Idf(std::int64_t total_chunks, std::int64_t df) {
  double n = static_cast<double>(total_chunks);
  double d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

TermEntry BuildTermEntry(std::string_view text) {
  std::map<std::string, int> counts;
  auto tokens = TokenizeStem(text);
  for (auto &t : tokens) ++counts[t];
  TermEntry e;
  e.length = static_cast<int>(tokens.size());
  e.term_freqs.assign(counts.begin(), counts.end());
  return e;
}

// "<length>\n<term> <tf>\n..." Terms never contain whitespace.
std::string SerializeTermEntry(const TermEntry &entry) {
  std::string out = std::to_string(entry.length);
  out += '\n';
  for (const auto &[term, tf] : entry.term_freqs) {
    out += term;
    out += ' ';
    out += std::to_string(tf);
    out += '\n';
  }
  return out;
}

std::optional<TermEntry> ParseTermEntry(std::string_view data) {
  TermEntry e;
  auto parse_int = [](std::string_view s, int &v) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && p == s.data() + s.size();
  };
  size_t nl = data.find('\n');
  if (nl == std::string_view::npos) return std::nullopt;
  if (!parse_int(data.substr(0, nl), e.length)) return std::nullopt;
  data.remove_prefix(nl + 1);
  while (!data.empty()) {
    nl = data.find('\n');
    if (nl == std::string_view::npos) return std::nullopt;
    auto line = data.substr(0, nl);
    data.remove_prefix(nl + 1);
    size_t sp = line.rfind(' ');
    if (sp == std::string_view::npos || sp == 0) return std::nullopt;
    int tf = 0;
    if (!parse_int(line.substr(sp + 1), tf) || tf <= 0) return std::nullopt;
    e.term_freqs.emplace_back(std::string(line.substr(0, sp)), tf);
  }
  return e;
}

TextIndex::TextIndex() : vocab_mu_(std::make_unique<std::mutex>()) {}
TextIndex::~TextIndex() = default;
TextIndex::TextIndex(TextIndex &&) noexcept = default;
TextIndex &TextIndex::operator=(TextIndex &&) noexcept = default;

void TextIndex::Invalidate() {
  std::lock_guard lock(*vocab_mu_);
  vocab_.reset();
}

void TextIndex::Add(ChunkId id, const TermEntry &entry) {
  Remove(id);
  auto &terms = forward_[raw(id)];
  for (const auto &[term, tf] : entry.term_freqs) {
    postings_[term].push_back(Posting{id, tf});
    terms.push_back(term);
  }
  lengths_[raw(id)] = entry.length;
  total_length_ += entry.length;
  Invalidate();
}

bool TextIndex::Remove(ChunkId id) {
  auto it = forward_.find(raw(id));
  if (it == forward_.end()) return false;
  for (const auto &term : it->second) {
    auto pit = postings_.find(term);
    if (pit == postings_.end()) continue;
    auto &list = pit->second;
    list.erase(std::remove_if(list.begin(), list.end(),
                              [id](const Posting &p) { return p.chunk_id == id; }),
               list.end());
    if (list.empty()) postings_.erase(pit);
  }
  forward_.erase(it);
  total_length_ -= lengths_[raw(id)];
  lengths_.erase(raw(id));
  Invalidate();
  return true;
}

double TextIndex::average_length() const {
  if (lengths_.empty()) return 0.0;
  return static_cast<double>(total_length_) / static_cast<double>(lengths_.size());
}

std::int64_t TextIndex::DocumentFrequency(const std::string &term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? 0 : static_cast<std::int64_t>(it->second.size());
}

std::vector<ScoredChunk> TextIndex::Bm25Search(const CompiledQuery &query, int n,
                                               Bm25Params params) const {
  std::vector<ScoredChunk> out;
  if (query.empty() || n <= 0 || lengths_.empty()) return out;
  const std::int64_t total = size();
  const double avgdl = average_length();
  std::unordered_map<std::int64_t, double> scores;
  for (const auto &term : query.terms) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double idf = Idf(total, static_cast<std::int64_t>(it->second.size()));
    for (const auto &p : it->second) {
      const double tf = p.term_frequency;
      const double len = lengths_.at(raw(p.chunk_id));
      const double norm = params.k1 * (1.0 - params.b + params.b * len / avgdl);
      scores[raw(p.chunk_id)] += idf * tf * (params.k1 + 1.0) / (tf + norm);
    }
  }
  out.reserve(scores.size());
  for (const auto &[id, s] : scores) out.push_back({ChunkId{id}, s});
  auto cmp = [](const ScoredChunk &a, const ScoredChunk &b) {
    if (a.score != b.score) return a.score > b.score;
    return a.chunk_id < b.chunk_id;
  };
  if (static_cast<size_t>(n) < out.size()) {
    std::partial_sort(out.begin(), out.begin() + n, out.end(), cmp);
    out.resize(n);
  } else {
    std::sort(out.begin(), out.end(), cmp);
  }
  return out;
}

std::vector<ChunkId> TextIndex::Matching(const CompiledQuery &query) const {
  std::vector<ChunkId> ids;
  for (const auto &term : query.terms) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    for (const auto &p : it->second) ids.push_back(p.chunk_id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

const TextIndex::Vocabulary &TextIndex::Vocab() const {
  std::lock_guard lock(*vocab_mu_);
  if (!vocab_) {
    auto v = std::make_shared<Vocabulary>();
    const std::int64_t total = size();
    double sum = 0.0;
    for (const auto &[term, list] : postings_) {
      auto df = static_cast<std::int64_t>(list.size());
      v->df.emplace(term, df);
      sum += Idf(total, df);
    }
    v->mean_idf = v->df.empty() ? 0.0 : sum / static_cast<double>(v->df.size());
    vocab_ = std::move(v);
    ++vocab_builds_;
  }
  return *vocab_;
}

double TextIndex::MeanIdf(std::string_view raw_query) const {
  auto terms = TokenizeStem(raw_query);
  if (terms.empty()) return 0.0;
  if (lengths_.empty()) throw Error(Errc::kEmptyIndex, "mean idf over an empty index");
  const auto &vocab = Vocab();
  const std::int64_t total = size();
  double sum = 0.0;
  for (const auto &t : terms) {
    auto it = vocab.df.find(t);
    sum += Idf(total, it == vocab.df.end() ? 0 : it->second);
  }
  return sum / static_cast<double>(terms.size());
}

double TextIndex::CorpusMeanIdf() const { return Vocab().mean_idf; }

int TextIndex::vocabulary_builds() const {
  std::lock_guard lock(*vocab_mu_);
  return vocab_builds_;
}

}  // namespace stash
