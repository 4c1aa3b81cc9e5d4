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

#include "cli.h"

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "stash/chunker.h"
#include "stash/embedder.h"
#include "stash/error.h"
#include "stash/eval.h"
#include "stash/miner.h"
#include "stash/miss_analysis.h"
#include "stash/store.h"

extern char **environ;

namespace stash::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// Raised for bad flags or missing inputs; maps to kExitUsage.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::set<std::string> kTopLevelKeys = {"store_path", "profiles", "embedder",
                                             "fusion", "limits", "chunking"};

template <typename T>
void Assign(const json &obj, const char *key, T &field, std::vector<std::string> &warnings,
            const std::string &section) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    field = it->get<T>();
  } catch (const json::exception &) {
    warnings.push_back("config " + section + "." + key + " has the wrong type; ignored");
  }
}

void WarnUnknown(const json &obj, const std::set<std::string> &known, const std::string &section,
                 std::vector<std::string> &warnings) {
  for (const auto &[key, value] : obj.items()) {
    if (!known.count(key)) warnings.push_back("unknown config key '" + section + key + "' ignored");
  }
}

std::string EnvOr(const char *name, const std::string &fallback) {
  const char *v = std::getenv(name);
  return v && *v ? v : fallback;
}

fs::path HomeDir() { return EnvOr("HOME", "."); }

std::string ReadFile(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::unique_ptr<Store> OpenExisting(const fs::path &path, const CliConfig &cfg) {
  if (!fs::exists(path)) throw UsageError("no store at " + path.string());
  StoreOptions so;
  so.create_if_missing = false;
  so.limits = cfg.limits;
  return Store::Open(path, so);
}

std::unique_ptr<EmbeddingProvider> EmbedderFor(const std::string &selector, int dimension) {
  if (selector == "test") return std::make_unique<TestEmbedder>(dimension);
  return MakeEmbedder(selector);
}

void PrintWarnings(const std::vector<std::string> &warnings, std::ostream &err) {
  for (const auto &w : warnings) err << "warning: " << w << '\n';
}

std::vector<fs::path> ExpandInputs(const std::vector<std::string> &inputs) {
  std::vector<fs::path> out;
  for (const auto &in : inputs) {
    fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto &e : fs::recursive_directory_iterator(p)) {
        if (e.is_regular_file()) files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      out.insert(out.end(), files.begin(), files.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

std::string Indent(const std::string &text, size_t limit) {
  std::string s = text.size() > limit ? text.substr(0, limit) + "..." : text;
  std::string out = "   ";
  for (char c : s) {
    out += c;
    if (c == '\n') out += "   ";
  }
  return out;
}

json InvariantsJson(const IntegrityReport &report) {
  json arr = json::array();
  for (const auto &inv : report.invariants) {
    arr.push_back({{"invariant", inv.invariant}, {"pass", inv.pass}, {"offenders", inv.offenders}});
  }
  return arr;
}

json RepairJson(const RepairReport &r) {
  return json{{"reindexed", r.reindexed},
              {"orphans_deleted", r.orphans_deleted},
              {"text_entries_rebuilt", r.text_entries_rebuilt},
              {"digests_fixed", r.digests_fixed},
              {"dangling_vectors_deleted", r.dangling_vectors_deleted},
              {"vectors_reembedded", r.vectors_reembedded},
              {"vectors_unrepaired", r.vectors_unrepaired},
              {"chunk_counts_fixed", r.chunk_counts_fixed},
              {"seqs_renumbered", r.seqs_renumbered},
              {"total_changes", r.total_changes()}};
}

std::vector<std::string> SplitComma(const std::string &s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

int RunProcess(const std::vector<std::string> &argv) {
  std::vector<char *> cargv;
  for (const auto &a : argv) cargv.push_back(const_cast<char *>(a.c_str()));
  cargv.push_back(nullptr);
  pid_t pid = 0;
  int rc = posix_spawn(&pid, cargv[0], nullptr, nullptr, cargv.data(), environ);
  if (rc != 0) throw Error(Errc::kIoFailure, "cannot start " + argv[0]);
  int status = 0;
  if (waitpid(pid, &status, 0) < 0) throw Error(Errc::kIoFailure, "wait failed");
  return WIFEXITED(status) ? WEXITSTATUS(status) : 128;
}

}  // namespace

fs::path DefaultConfigPath() {
  fs::path base = EnvOr("XDG_CONFIG_HOME", (HomeDir() / ".config").string());
  return base / "stash" / "config.json";
}

fs::path DefaultStorePath() {
  fs::path base = EnvOr("XDG_DATA_HOME", (HomeDir() / ".local" / "share").string());
  return base / "stash" / "store.db";
}

CliConfig ParseConfig(const json &j) {
  CliConfig cfg;
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  auto &w = cfg.warnings;
  WarnUnknown(j, kTopLevelKeys, "", w);
  Assign(j, "store_path", cfg.store_path, w, "");
  Assign(j, "embedder", cfg.embedder, w, "");
  Assign(j, "profiles", cfg.profiles, w, "");
  if (auto it = j.find("fusion"); it != j.end() && it->is_object()) {
    auto &f = cfg.fusion;
    const json &o = *it;
    WarnUnknown(o,
                {"rrf_k", "w_vec", "w_fts", "adaptive", "sigmoid_midpoint", "sigmoid_slope",
                 "w_fts_min", "w_fts_max", "cutoff_short", "cutoff_long", "long_query_words",
                 "candidate_pool", "mmr_lambda", "context_window"},
                "fusion.", w);
    Assign(o, "rrf_k", f.rrf_k, w, "fusion");
    Assign(o, "w_vec", f.w_vec, w, "fusion");
    Assign(o, "w_fts", f.w_fts, w, "fusion");
    Assign(o, "adaptive", f.adaptive, w, "fusion");
    if (o.contains("sigmoid_midpoint") && o["sigmoid_midpoint"].is_number()) {
      f.sigmoid_midpoint = o["sigmoid_midpoint"].get<double>();
    }
    Assign(o, "sigmoid_slope", f.sigmoid_slope, w, "fusion");
    Assign(o, "w_fts_min", f.w_fts_min, w, "fusion");
    Assign(o, "w_fts_max", f.w_fts_max, w, "fusion");
    Assign(o, "cutoff_short", f.cutoff_short, w, "fusion");
    Assign(o, "cutoff_long", f.cutoff_long, w, "fusion");
    Assign(o, "long_query_words", f.long_query_words, w, "fusion");
    Assign(o, "candidate_pool", f.candidate_pool, w, "fusion");
    Assign(o, "mmr_lambda", f.mmr_lambda, w, "fusion");
    Assign(o, "context_window", f.context_window, w, "fusion");
  }
  if (auto it = j.find("limits"); it != j.end() && it->is_object()) {
    auto &l = cfg.limits;
    const json &o = *it;
    WarnUnknown(o,
                {"max_query_chars", "max_k", "max_candidate_pool", "max_chunks_per_doc",
                 "max_doc_bytes", "max_batch_ids", "max_tag_depth"},
                "limits.", w);
    Assign(o, "max_query_chars", l.max_query_chars, w, "limits");
    Assign(o, "max_k", l.max_k, w, "limits");
    Assign(o, "max_candidate_pool", l.max_candidate_pool, w, "limits");
    Assign(o, "max_chunks_per_doc", l.max_chunks_per_doc, w, "limits");
    Assign(o, "max_doc_bytes", l.max_doc_bytes, w, "limits");
    Assign(o, "max_batch_ids", l.max_batch_ids, w, "limits");
    Assign(o, "max_tag_depth", l.max_tag_depth, w, "limits");
  }
  if (auto it = j.find("chunking"); it != j.end() && it->is_object()) {
    WarnUnknown(*it, {"max_tokens", "overlap"}, "chunking.", w);
    Assign(*it, "max_tokens", cfg.max_tokens, w, "chunking");
    Assign(*it, "overlap", cfg.overlap, w, "chunking");
  }
  return cfg;
}

CliConfig LoadConfig(const std::optional<fs::path> &explicit_path) {
  fs::path path = explicit_path.value_or(DefaultConfigPath());
  if (!fs::exists(path)) {
    if (explicit_path) throw UsageError("config file not found: " + path.string());
    return CliConfig{};
  }
  auto j = json::parse(ReadFile(path), nullptr, false);
  if (j.is_discarded()) throw UsageError("config file is not valid JSON: " + path.string());
  return ParseConfig(j);
}

std::optional<fs::path> FindTrainer() {
  if (const char *env = std::getenv("STASH_TRAINER"); env && *env) {
    fs::path p(env);
    if (fs::is_regular_file(p) && ::access(p.c_str(), X_OK) == 0) return p;
    return std::nullopt;
  }
  std::stringstream ss(EnvOr("PATH", ""));
  std::string dir;
  while (std::getline(ss, dir, ':')) {
    if (dir.empty()) continue;
    fs::path p = fs::path(dir) / "stash-trainer";
    if (fs::is_regular_file(p) && ::access(p.c_str(), X_OK) == 0) return p;
  }
  return std::nullopt;
}

int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"stash: local hybrid retrieval engine"};
  app.require_subcommand(1);
  std::string store_flag, config_flag, embedder_flag;
  app.add_option("--store", store_flag, "Store file (env STASH_STORE)");
  app.add_option("--config", config_flag, "Config file");
  app.add_option("--embedder", embedder_flag, "test, test:<dim> or precomputed:<path>");

  // ingest
  auto *ingest = app.add_subcommand("ingest", "Chunk, embed and store files");
  std::vector<std::string> ingest_paths;
  std::string collection = "default";
  std::vector<std::string> tags;
  bool force_code = false, force_text = false, ingest_json = false;
  ingest->add_option("paths", ingest_paths, "Files or directories")->required();
  ingest->add_option("--collection", collection);
  ingest->add_option("--tag", tags, "Hierarchical tag, '/'-separated");
  auto *code_flag = ingest->add_flag("--code", force_code, "Use the code chunker");
  ingest->add_flag("--text", force_text, "Use the prose chunker")->excludes(code_flag);
  ingest->add_flag("--json", ingest_json);

  // search
  auto *search = app.add_subcommand("search", "Hybrid search");
  std::string query, mode_name = "hybrid", profiles_flag;
  int k = 10;
  double boost = 0.0;
  bool search_json = false, fixed = false;
  search->add_option("query", query)->required();
  search->add_option("-k", k);
  search->add_option("--mode", mode_name)->check(CLI::IsMember({"vector", "fts", "hybrid"}));
  search->add_option("--boost", boost, "Recency boost B");
  search->add_option("--profiles", profiles_flag, "Comma-separated profile names or paths");
  search->add_flag("--fixed", fixed, "Fixed fusion weights instead of adaptive");
  search->add_flag("--json", search_json);

  // check
  auto *check = app.add_subcommand("check", "Verify store invariants");
  bool repair = false, check_json = false;
  check->add_flag("--repair", repair);
  check->add_flag("--json", check_json);

  // stats
  auto *stats = app.add_subcommand("stats", "Store statistics");
  bool stats_json = false;
  stats->add_flag("--json", stats_json);

  // eval
  auto *eval = app.add_subcommand("eval", "Evaluate on a BEIR directory");
  std::string eval_dir, eval_mode = "hybrid";
  bool eval_json = false, eval_fixed = false;
  std::optional<double> min_ndcg;
  int eval_k = 10;
  eval->add_option("dir", eval_dir)->required();
  eval->add_option("--mode", eval_mode)->check(CLI::IsMember({"vector", "fts", "hybrid"}));
  eval->add_flag("--fixed", eval_fixed, "Fixed fusion weights instead of adaptive");
  eval->add_option("-k", eval_k);
  eval->add_option("--min-ndcg", min_ndcg, "Exit 1 when NDCG@10 falls below this");
  eval->add_flag("--json", eval_json);

  // mine
  auto *mine = app.add_subcommand("mine", "Mine disagreement triples from the store");
  std::string mine_out;
  int max_queries = 2, top_k = 10;
  bool mine_json = false;
  mine->add_option("--out", mine_out)->required();
  mine->add_option("--max-queries", max_queries);
  mine->add_option("--top-k", top_k);
  mine->add_flag("--json", mine_json);

  // bench
  auto *bench = app.add_subcommand("bench", "Synthetic scale benchmark");
  std::string bench_sizes = "10000,50000";
  int bench_queries = 100, bench_dim = kDefaultDimension;
  std::uint64_t bench_seed = 42;
  bool bench_json = false;
  bench->add_option("--chunks", bench_sizes, "Comma-separated store sizes");
  bench->add_option("--queries", bench_queries);
  bench->add_option("--dim", bench_dim);
  bench->add_option("--seed", bench_seed);
  bench->add_flag("--json", bench_json);

  // miss
  auto *miss = app.add_subcommand("miss", "Explain why a document was not returned");
  std::string miss_query, miss_doc, miss_collection = "default", miss_mode = "hybrid";
  int miss_k = 10;
  miss->add_option("query", miss_query)->required();
  miss->add_option("--doc", miss_doc, "Expected document source_uri")->required();
  miss->add_option("--collection", miss_collection);
  miss->add_option("--mode", miss_mode)->check(CLI::IsMember({"vector", "fts", "hybrid"}));
  miss->add_option("-k", miss_k);
  miss->add_flag("--json", "Accepted for symmetry; output is always JSON");

  // retrain
  auto *retrain = app.add_subcommand("retrain", "Mine triples, fine-tune, re-embed");
  std::string triples_path, model_out;
  int epochs = 2, batch = 64;
  double lr = 3e-6;
  std::uint64_t seed = 0;
  bool retrain_json = false;
  retrain->add_option("--triples", triples_path, "Existing triples file; mined when absent");
  retrain->add_option("--model-out", model_out)->required();
  retrain->add_option("--epochs", epochs);
  retrain->add_option("--lr", lr);
  retrain->add_option("--batch", batch);
  retrain->add_option("--seed", seed);
  retrain->add_flag("--json", retrain_json);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    CliConfig cfg = LoadConfig(config_flag.empty() ? std::nullopt
                                                   : std::optional<fs::path>(config_flag));
    PrintWarnings(cfg.warnings, err);
    fs::path store_path = !store_flag.empty()             ? fs::path(store_flag)
                          : std::getenv("STASH_STORE")      ? fs::path(std::getenv("STASH_STORE"))
                          : !cfg.store_path.empty()         ? fs::path(cfg.store_path)
                                                            : DefaultStorePath();
    std::string selector = embedder_flag.empty() ? cfg.embedder : embedder_flag;

    if (*ingest) {
      std::unique_ptr<EmbeddingProvider> embedder;
      std::unique_ptr<Store> store;
      if (fs::exists(store_path)) {
        store = OpenExisting(store_path, cfg);
        embedder = EmbedderFor(selector, store->dimension());
      } else {
        embedder = MakeEmbedder(selector);
        if (store_path.has_parent_path()) fs::create_directories(store_path.parent_path());
        StoreOptions so;
        so.dimension = embedder->dimension();
        so.model_id = embedder->model_id();
        so.limits = cfg.limits;
        store = Store::Open(store_path, so);
      }
      PrintWarnings(store->warnings(), err);
      json files = json::array();
      int succeeded = 0, failed = 0;
      for (const auto &path : ExpandInputs(ingest_paths)) {
        json entry = {{"path", path.string()}};
        try {
          if (!fs::is_regular_file(path)) throw Error(Errc::kMissingFile, "not a readable file");
          std::string uri = fs::weakly_canonical(path).string();
          std::string content = ReadFile(path);
          if (SplitWords(content).empty()) throw Error(Errc::kEmptyDocument, "empty file");
          Completeness before = store->DocCompleteness(uri, collection);
          if (before == Completeness::kComplete) {
            entry["status"] = "skipped (complete)";
            ++succeeded;
          } else {
            Language lang = LanguageFromPath(path);
            bool as_code = force_code || (!force_text && lang != Language::kUnknown);
            auto spans = as_code ? CodeChunk(content, lang, cfg.max_tokens)
                                 : SemanticChunk(content, cfg.max_tokens, cfg.overlap);
            DocumentMeta meta;
            meta.source_uri = uri;
            meta.collection = collection;
            meta.tags = tags;
            meta.source_type = as_code ? SourceType::kCode : SourceType::kText;
            std::vector<ChunkInput> chunks;
            std::vector<Vector> vectors;
            for (auto &s : spans) {
              vectors.push_back(embedder->EmbedOne(s.text));
              chunks.push_back({std::move(s.text), s.token_count, s.kind});
            }
            store->AddDocument(meta, chunks, vectors);
            entry["status"] = before == Completeness::kPartial ? "repaired" : "ingested";
            entry["chunks"] = chunks.size();
            ++succeeded;
          }
        } catch (const std::exception &e) {
          entry["status"] = "error";
          entry["error"] = e.what();
          ++failed;
        }
        if (!ingest_json) {
          out << entry["path"].get<std::string>() << ": " << entry["status"].get<std::string>();
          if (entry.contains("chunks")) out << " (" << entry["chunks"].get<size_t>() << " chunks)";
          if (entry.contains("error")) out << ": " << entry["error"].get<std::string>();
          out << '\n';
        }
        files.push_back(std::move(entry));
      }
      if (ingest_json) {
        out << json{{"files", files}, {"succeeded", succeeded}, {"failed", failed}}.dump(2)
            << '\n';
      }
      return failed > 0 && succeeded == 0 ? kExitFailure : kExitOk;
    }

    if (*search) {
      SearchOptions opt;
      opt.mode = *ParseSearchMode(mode_name);
      opt.k = k;
      opt.cfg = cfg.fusion;
      if (fixed) opt.cfg.adaptive = false;
      opt.boost_B = boost;
      if (!profiles_flag.empty()) {
        std::vector<std::string> names = SplitComma(profiles_flag);
        std::vector<std::unique_ptr<Store>> owned;
        std::vector<Store *> stores;
        for (const auto &n : names) {
          auto it = cfg.profiles.find(n);
          owned.push_back(OpenExisting(it != cfg.profiles.end() ? it->second : n, cfg));
          stores.push_back(owned.back().get());
        }
        auto embedder = EmbedderFor(selector, stores.front()->dimension());
        auto hits = FederatedSearch(stores, *embedder, query, opt);
        json arr = json::array();
        for (const auto &h : hits) {
          json j = ToJson(h.sources.front().second);
          j["score"] = h.score;
          j["content_digest"] = h.content_digest;
          json from = json::array();
          for (const auto &[idx, res] : h.sources) from.push_back(names[idx]);
          j["profiles"] = from;
          arr.push_back(std::move(j));
        }
        if (search_json) {
          out << arr.dump(2) << '\n';
        } else {
          int rank = 0;
          for (const auto &j : arr) {
            out << ++rank << ". score=" << j["score"].get<double>() << " tier="
                << j["tier"].get<std::string>() << " profiles=" << j["profiles"].dump() << '\n'
                << Indent(j["context"].get<std::string>(), 300) << '\n';
          }
        }
        return kExitOk;
      }
      auto store = OpenExisting(store_path, cfg);
      auto embedder = EmbedderFor(selector, store->dimension());
      auto resp = Search(*store, *embedder, query, opt);
      if (search_json) {
        out << ToJson(resp.results).dump(2) << '\n';
        return kExitOk;
      }
      out << "tier " << ToString(resp.trace.tier);
      if (resp.trace.best_distance) {
        out << " (best distance " << std::fixed << std::setprecision(4)
            << *resp.trace.best_distance << std::defaultfloat << ")";
      }
      out << ", " << resp.results.size() << " results\n";
      int rank = 0;
      for (const auto &r : resp.results) {
        auto doc = store->GetDocument(r.doc_id);
        out << ++rank << ". " << (doc ? doc->meta.source_uri : "?") << " chunk "
            << raw(r.chunk_id) << " score " << std::setprecision(6) << r.score << '\n'
            << Indent(r.context, 300) << '\n';
      }
      return kExitOk;
    }

    if (*check) {
      auto store = OpenExisting(store_path, cfg);
      PrintWarnings(store->warnings(), err);
      IntegrityReport report = store->IntegrityCheck();
      std::optional<RepairReport> repaired;
      if (repair) {
        std::unique_ptr<EmbeddingProvider> embedder;
        try {
          embedder = EmbedderFor(selector, store->dimension());
          if (embedder->dimension() != store->dimension()) embedder.reset();
        } catch (const Error &) {
          embedder.reset();
        }
        repaired = store->IntegrityRepair(embedder.get());
        report = store->IntegrityCheck();
      }
      if (check_json) {
        json j = {{"ok", report.ok()}, {"invariants", InvariantsJson(report)}};
        if (repaired) j["repair"] = RepairJson(*repaired);
        out << j.dump(2) << '\n';
      } else {
        if (repaired) out << "repair made " << repaired->total_changes() << " changes\n";
        for (const auto &inv : report.invariants) {
          out << (inv.pass ? "PASS " : "FAIL ") << inv.invariant;
          if (!inv.pass) {
            out << " offenders:";
            for (auto id : inv.offenders) out << ' ' << id;
            if (!inv.detail.empty()) out << " (" << inv.detail << ")";
          }
          out << '\n';
        }
      }
      return report.ok() ? kExitOk : kExitFailure;
    }

    if (*stats) {
      auto store = OpenExisting(store_path, cfg);
      PrintWarnings(store->warnings(), err);
      StoreStats s = store->Stats();
      if (stats_json) {
        out << json{{"path", store->path().string()},
                    {"schema_version", s.schema_version},
                    {"dimension", s.dimension},
                    {"model_id", s.model_id},
                    {"documents", s.documents},
                    {"chunks", s.chunks},
                    {"search_events", s.search_events},
                    {"chunk_kinds", s.chunk_kinds},
                    {"collections", s.collections}}
                   .dump(2)
            << '\n';
      } else {
        out << "store          " << store->path().string() << '\n'
            << "schema_version " << s.schema_version << '\n'
            << "dimension      " << s.dimension << '\n'
            << "model_id       " << s.model_id << '\n'
            << "documents      " << s.documents << '\n'
            << "chunks         " << s.chunks << '\n'
            << "search_events  " << s.search_events << '\n';
        for (const auto &[kind, n] : s.chunk_kinds) out << "kind " << kind << "  " << n << '\n';
        for (const auto &[c, n] : s.collections) out << "collection " << c << "  " << n << '\n';
      }
      return kExitOk;
    }

    if (*eval) {
      EvalBundle bundle = LoadBeir(eval_dir);
      auto embedder = MakeEmbedder(selector);
      fs::path tmp = fs::temp_directory_path() /
                     ("stash-eval-" + std::to_string(::getpid()) + ".db");
      auto cleanup = [&] {
        for (const char *suffix : {"", "-wal", "-shm"}) fs::remove(tmp.string() + suffix);
      };
      cleanup();
      MetricsReport report;
      try {
        StoreOptions so;
        so.dimension = embedder->dimension();
        so.model_id = embedder->model_id();
        so.limits = cfg.limits;
        auto store = Store::Open(tmp, so);
        IngestOptions io;
        io.max_tokens = cfg.max_tokens;
        io.overlap = cfg.overlap;
        IngestBundle(*store, *embedder, bundle, io);
        EvalOptions eo;
        eo.search.mode = *ParseSearchMode(eval_mode);
        eo.search.cfg = cfg.fusion;
        if (eval_fixed) eo.search.cfg.adaptive = false;
        eo.search.k = eval_k;
        report = RunEval(*store, *embedder, bundle, eo);
      } catch (...) {
        cleanup();
        throw;
      }
      cleanup();
      if (eval_json) {
        out << ToJson(report).dump(2) << '\n';
      } else {
        out << FormatText(report);
      }
      if (min_ndcg && report.ndcg_at.count(10) && report.ndcg_at.at(10) < *min_ndcg) {
        err << "ndcg@10 below " << *min_ndcg << '\n';
        return kExitFailure;
      }
      return kExitOk;
    }

    if (*mine) {
      auto store = OpenExisting(store_path, cfg);
      auto embedder = EmbedderFor(selector, store->dimension());
      MiningSummary s = MineStore(*store, *embedder, max_queries, top_k);
      size_t written = ExportTriples(s.triples, mine_out);
      json per_source = json::object();
      for (const auto &[name, r] : s.per_source) {
        per_source[name] = {{"queries", r.queries},
                            {"disagreements", r.disagreements},
                            {"rate", r.rate()}};
      }
      json j = {{"queries", s.queries},
                {"disagreements", s.disagreements},
                {"aggregate_rate", s.aggregate_rate()},
                {"mean_source_rate", s.mean_source_rate()},
                {"per_source", per_source},
                {"triples", written},
                {"dense_blind_spots", s.dense_blind_spots},
                {"lexical_blind_spots", s.lexical_blind_spots},
                {"out", mine_out}};
      if (mine_json) {
        out << j.dump(2) << '\n';
      } else {
        out << "queries            " << s.queries << '\n'
            << "disagreements      " << s.disagreements << '\n'
            << "aggregate rate     " << s.aggregate_rate() << '\n'
            << "mean source rate   " << s.mean_source_rate() << '\n'
            << "triples            " << written << " -> " << mine_out << '\n'
            << "dense blind spots  " << s.dense_blind_spots << '\n'
            << "lexical blind spots " << s.lexical_blind_spots << '\n';
      }
      return kExitOk;
    }

    if (*bench) {
      ScaleOptions so;
      so.sizes.clear();
      for (const auto &s : SplitComma(bench_sizes)) {
        try {
          so.sizes.push_back(std::stoll(s));
        } catch (const std::exception &) {
          throw UsageError("bad --chunks value '" + s + "'");
        }
      }
      so.queries = bench_queries;
      so.dimension = bench_dim;
      so.seed = bench_seed;
      ScaleReport r = ScaleBenchmark(so);
      out << (bench_json ? ToJson(r).dump(2) + "\n" : FormatText(r));
      return kExitOk;
    }

    if (*miss) {
      auto store = OpenExisting(store_path, cfg);
      auto embedder = EmbedderFor(selector, store->dimension());
      SearchOptions opt;
      opt.mode = *ParseSearchMode(miss_mode);
      opt.k = miss_k;
      opt.cfg = cfg.fusion;
      std::string uri = miss_doc;
      if (!store->FindDocument(uri, miss_collection) && fs::exists(uri)) {
        uri = fs::weakly_canonical(uri).string();
      }
      auto report = MissAnalysis(*store, *embedder, miss_query, uri, miss_collection, opt);
      out << ToJson(report).dump(2) << '\n';
      return kExitOk;
    }

    if (*retrain) {
      auto trainer = FindTrainer();
      if (!trainer) {
        err << "error: missing component: trainer (stash-trainer not found; set STASH_TRAINER "
               "or put it on PATH); store untouched\n";
        if (retrain_json) {
          out << json{{"ok", false}, {"missing_component", "trainer"}}.dump(2) << '\n';
        }
        return kExitMissingComponent;
      }
      auto store = OpenExisting(store_path, cfg);
      auto embedder = EmbedderFor(selector, store->dimension());
      fs::create_directories(model_out);
      json summary = {{"trainer", trainer->string()}, {"model_out", model_out}};
      if (triples_path.empty()) {
        triples_path = (fs::path(model_out) / "triples.jsonl").string();
        auto mined = MineStore(*store, *embedder);
        summary["mined_triples"] = ExportTriples(mined.triples, triples_path);
      }
      summary["triples"] = triples_path;
      std::ostringstream lr_text;
      lr_text << lr;
      int rc = RunProcess({trainer->string(), "--triples", triples_path, "--out", model_out,
                           "--epochs", std::to_string(epochs), "--lr", lr_text.str(), "--batch",
                           std::to_string(batch), "--seed", std::to_string(seed)});
      summary["trainer_exit"] = rc;
      if (rc != 0) {
        err << "error: trainer exited with status " << rc << "; store untouched\n";
        if (retrain_json) out << summary.dump(2) << '\n';
        return kExitFailure;
      }
      fs::path vectors = fs::path(model_out) / "vectors.tsv";
      if (fs::exists(vectors)) {
        auto tuned = PrecomputedEmbedder::Load(vectors);
        store->Reembed(*tuned);
        summary["reembedded_chunks"] = store->Stats().chunks;
      } else {
        summary["reembedded_chunks"] = 0;
        err << "note: " << vectors.string() << " not produced; store vectors unchanged\n";
      }
      out << (retrain_json ? summary.dump(2) : "retrain finished: " + summary.dump()) << '\n';
      return kExitOk;
    }
  } catch (const UsageError &e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const LimitError &e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    switch (e.code()) {
      case Errc::kEmptyQuery:
      case Errc::kInvalidArgument:
      case Errc::kMissingFile:
        return kExitUsage;
      case Errc::kMissingComponent:
        return kExitMissingComponent;
      default:
        return kExitFailure;
    }
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace stash::cli
