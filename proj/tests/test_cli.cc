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

#include <sys/stat.h>

#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "cli.h"
#include "doctest.h"
#include "stash/miner.h"
#include "test_util.h"

namespace stash {
namespace {

using nlohmann::json;
using testing::MapEmbedder;
using testing::TempDir;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

class ScopedEnv {
 public:
  ScopedEnv(const char *name, std::optional<std::string> value) : name_(name) {
    if (const char *old = std::getenv(name)) old_ = old;
    if (value) {
      ::setenv(name, value->c_str(), 1);
    } else {
      ::unsetenv(name);
    }
  }
  ~ScopedEnv() {
    if (old_) {
      ::setenv(name_, old_->c_str(), 1);
    } else {
      ::unsetenv(name_);
    }
  }

 private:
  const char *name_;
  std::optional<std::string> old_;
};

// Keeps each case away from the user's config, store and trainer.
struct Sandbox {
  TempDir dir;
  ScopedEnv config{"XDG_CONFIG_HOME", (dir / "config").string()};
  ScopedEnv data{"XDG_DATA_HOME", (dir / "data").string()};
  ScopedEnv store_env{"STASH_STORE", std::nullopt};
  ScopedEnv trainer{"STASH_TRAINER", std::nullopt};
  std::string store = (dir / "s.db").string();

  std::string Write(const std::string &name, const std::string &body) {
    auto p = dir / name;
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p) << body;
    return p.string();
  }
};

std::string Bytes(const std::string &path) {
  std::string all;
  for (const char *suffix : {"", "-wal"}) {
    std::ifstream in(path + suffix, std::ios::binary);
    if (!in) continue;
    std::ostringstream ss;
    ss << in.rdbuf();
    all += ss.str();
  }
  return all;
}

// Query "zircon quartz" at e0. Vector order: S1 L1 S2 M L2; lexical order:
// L1 first, then the single-term matches.
struct ModesFixture {
  Sandbox box;
  std::string vectors = (box.dir / "vectors.tsv").string();
  std::map<std::string, std::string> uri_of;

  ModesFixture() {
    const int dim = 16;
    MapEmbedder emb(dim);
    emb.Set("zircon quartz", testing::Basis(dim, 0));
    std::vector<std::tuple<std::string, std::string, double>> docs = {
        {"s1.txt", "meadow harvest", 0.28},   {"l1.txt", "zircon quartz ledger", 0.29},
        {"s2.txt", "meadow pasture", 0.30},   {"m.txt", "zircon meadow note", 0.31},
        {"l2.txt", "zircon shipping notes", 0.32}};
    int axis = 1;
    std::vector<std::string> args = {"--store", box.store, "--embedder", "precomputed:" + vectors,
                                     "ingest", "--json"};
    for (const auto &[name, text, d] : docs) {
      emb.Set(text, testing::AtDistance(dim, d, axis++));
      args.push_back(box.Write("corpus/" + name, text));
    }
    emb.Export(vectors);
    auto r = Cli(args);
    REQUIRE(r.code == 0);
    for (const auto &[name, text, d] : docs) {
      uri_of[name] = std::filesystem::weakly_canonical(box.dir / "corpus" / name).string();
    }
  }

  std::vector<std::int64_t> Ranking(const std::string &mode) {
    auto r = Cli({"--store", box.store, "--embedder", "precomputed:" + vectors, "search",
                  "zircon quartz", "--mode", mode, "--json", "-k", "5"});
    REQUIRE(r.code == 0);
    std::vector<std::int64_t> ids;
    for (const auto &hit : json::parse(r.out)) ids.push_back(hit["doc_id"].get<std::int64_t>());
    return ids;
  }
};

TEST_SUITE("cli") {
  TEST_CASE("ingest is idempotent and reports per-file status") {
    Sandbox box;
    auto a = box.Write("a.txt", "Granite counters need sealing every year.");
    auto empty = box.Write("empty.txt", "   \n");
    auto first = Cli({"--store", box.store, "ingest", a, empty, "--json"});
    CHECK(first.code == 0);
    auto j = json::parse(first.out);
    CHECK(j["files"][0]["status"] == "ingested");
    CHECK(j["files"][1]["status"] == "error");
    CHECK(j["succeeded"] == 1);
    CHECK(j["failed"] == 1);
    auto second = Cli({"--store", box.store, "ingest", a});
    CHECK(second.code == 0);
    CHECK(second.out.find("skipped (complete)") != std::string::npos);
    auto only_bad = Cli({"--store", box.store, "ingest", empty});
    CHECK(only_bad.code == 1);
  }

  TEST_CASE("code ingestion shows in chunk kinds") {
    Sandbox box;
    auto py = box.Write("m.py", "def alpha(x):\n    return x + 1\n\n\ndef beta(y):\n    return y * 2\n");
    CHECK(Cli({"--store", box.store, "ingest", "--code", py}).code == 0);
    auto stats = Cli({"--store", box.store, "stats", "--json"});
    REQUIRE(stats.code == 0);
    auto kinds = json::parse(stats.out)["chunk_kinds"];
    CHECK(kinds.contains("code_definition"));
    CHECK_FALSE(kinds.contains("prose"));
  }

  TEST_CASE("search json schema and usage errors") {
    Sandbox box;
    auto a = box.Write("a.txt", "Granite counters need sealing every year.");
    REQUIRE(Cli({"--store", box.store, "ingest", a}).code == 0);
    auto r = Cli({"--store", box.store, "search", "granite sealing", "--json"});
    REQUIRE(r.code == 0);
    auto hits = json::parse(r.out);
    REQUIRE(hits.size() == 1);
    std::set<std::string> keys;
    for (auto &[k, v] : hits[0].items()) keys.insert(k);
    CHECK(keys == std::set<std::string>{"chunk_id", "doc_id", "score", "tier", "context",
                                        "diagnostics"});
    std::set<std::string> diag;
    for (auto &[k, v] : hits[0]["diagnostics"].items()) diag.insert(k);
    CHECK(diag == std::set<std::string>{"rank_vec", "rank_fts", "distance", "elimination"});

    auto low = Cli({"--store", box.store, "search", "unrelated words entirely", "--json"});
    CHECK(low.code == 0);
    CHECK(Cli({"--store", (box.dir / "none.db").string(), "search", "x"}).code == 2);
    CHECK(Cli({"--store", box.store, "search", "   "}).code == 2);
    CHECK(Cli({"--store", box.store, "search"}).code == 2);
    CHECK(Cli({"--store", box.store, "frobnicate"}).code == 2);
    CHECK(Cli({"--help"}).code == 0);
  }

  TEST_CASE("store path from the environment") {
    Sandbox box;
    auto a = box.Write("a.txt", "Granite counters need sealing every year.");
    REQUIRE(Cli({"--store", box.store, "ingest", a}).code == 0);
    ScopedEnv env("STASH_STORE", box.store);
    auto r = Cli({"stats", "--json"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["documents"] == 1);
  }

  TEST_CASE("three modes give three rankings") {
    ModesFixture fx;
    auto vec = fx.Ranking("vector");
    auto fts = fx.Ranking("fts");
    auto hyb = fx.Ranking("hybrid");
    CHECK(vec != fts);
    CHECK(vec != hyb);
    CHECK(fts != hyb);
    CHECK(fts.size() == 3);
  }

  TEST_CASE("profiles merge by content digest") {
    Sandbox box;
    auto a = box.Write("a.txt", "Granite counters need sealing every year.");
    auto b = box.Write("b.txt", "Granite counters need sealing every month.");
    std::string p1 = (box.dir / "p1.db").string(), p2 = (box.dir / "p2.db").string();
    REQUIRE(Cli({"--store", p1, "ingest", a}).code == 0);
    REQUIRE(Cli({"--store", p2, "ingest", a, b}).code == 0);
    auto cfg = box.Write("cfg.json", json{{"profiles", {{"one", p1}, {"two", p2}}}}.dump());
    auto r = Cli({"--config", cfg, "search", "granite counters sealing", "--profiles", "one,two", "--json"});
    REQUIRE(r.code == 0);
    auto hits = json::parse(r.out);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0]["profiles"] == json::array({"one", "two"}));
    CHECK(hits[1]["profiles"] == json::array({"two"}));
    CHECK(hits[0]["content_digest"] != hits[1]["content_digest"]);
  }

  TEST_CASE("check reports corruption and repairs it") {
    Sandbox box;
    auto a = box.Write("a.txt", "Granite counters need sealing every year.");
    REQUIRE(Cli({"--store", box.store, "ingest", a}).code == 0);
    CHECK(Cli({"--store", box.store, "check", "--json"}).code == 0);
    {
      auto store = Store::Open(box.store, StoreOptions{});
      store->ExecRawForTesting("DELETE FROM chunk_vectors");
    }
    auto bad = Cli({"--store", box.store, "check", "--json"});
    CHECK(bad.code == 1);
    auto j = json::parse(bad.out);
    CHECK(j["ok"] == false);
    std::set<std::string> failing;
    for (const auto &inv : j["invariants"]) {
      if (!inv["pass"].get<bool>()) failing.insert(inv["invariant"].get<std::string>());
    }
    CHECK(failing.count("vector_parity") == 1);
    auto fixed = Cli({"--store", box.store, "check", "--repair", "--json"});
    CHECK(fixed.code == 0);
    CHECK(json::parse(fixed.out)["ok"] == true);
  }

  TEST_CASE("read-only commands leave the store bytes alone") {
    Sandbox box;
    auto a = box.Write("a.txt", "Granite counters need sealing every year.");
    REQUIRE(Cli({"--store", box.store, "ingest", a}).code == 0);
    auto before = Bytes(box.store);
    CHECK(Cli({"--store", box.store, "stats", "--json"}).code == 0);
    CHECK(Cli({"--store", box.store, "check", "--json"}).code == 0);
    CHECK(Cli({"--store", box.store, "miss", "granite", "--doc", a}).code == 0);
    CHECK(Cli({"--store", box.store, "mine", "--out", (box.dir / "t.jsonl").string()}).code == 0);
    CHECK(Bytes(box.store) == before);
  }

  TEST_CASE("miss reports a verdict") {
    Sandbox box;
    auto a = box.Write("a.txt", "Granite counters need sealing every year.");
    REQUIRE(Cli({"--store", box.store, "ingest", a}).code == 0);
    auto r = Cli({"--store", box.store, "miss", "granite", "--doc", a, "--json"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["verdict"] == "retrieved");
    auto gone = Cli({"--store", box.store, "miss", "granite", "--doc", "nowhere.txt"});
    CHECK(json::parse(gone.out)["verdict"] == "not_in_corpus");
  }

  TEST_CASE("mine writes both directions") {
    Sandbox box;
    MapEmbedder emb(32);
    {
      auto store = testing::NewStore(box.store, 32);
      testing::BuildTwoCluster(*store, emb);
    }
    std::string vectors = (box.dir / "v.tsv").string();
    emb.Export(vectors);
    std::string out = (box.dir / "triples.jsonl").string();
    auto r = Cli({"--store", box.store, "--embedder", "precomputed:" + vectors, "mine", "--out",
                  out, "--json"});
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["dense_blind_spots"].get<int>() > 0);
    CHECK(j["lexical_blind_spots"].get<int>() > 0);
    auto triples = ReadTriples(out);
    CHECK(triples.size() == j["triples"].get<size_t>());
    std::set<Direction> dirs;
    for (const auto &t : triples) dirs.insert(t.direction);
    CHECK(dirs.size() == 2);
  }

  TEST_CASE("config warnings do not fail") {
    Sandbox box;
    auto a = box.Write("a.txt", "Granite counters need sealing every year.");
    auto cfg = box.Write("cfg.json", json{{"store_path", box.store},
                                          {"bogus", 1},
                                          {"fusion", {{"rrf_k", 60}, {"nope", 2}}}}
                                         .dump());
    REQUIRE(Cli({"--config", cfg, "ingest", a}).code == 0);
    auto r = Cli({"--config", cfg, "stats"});
    CHECK(r.code == 0);
    CHECK(r.err.find("bogus") != std::string::npos);
    CHECK(r.err.find("fusion.nope") != std::string::npos);
  }

  TEST_CASE("retrain without a trainer exits 3 and touches nothing") {
    Sandbox box;
    ScopedEnv path("PATH", (box.dir / "bin").string());
    auto a = box.Write("a.txt", "Granite counters need sealing every year.");
    REQUIRE(Cli({"--store", box.store, "ingest", a}).code == 0);
    auto before = Bytes(box.store);
    auto r = Cli({"--store", box.store, "retrain", "--model-out", (box.dir / "model").string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("missing component: trainer") != std::string::npos);
    CHECK(Bytes(box.store) == before);
    CHECK_FALSE(std::filesystem::exists(box.dir / "model"));
  }

  TEST_CASE("retrain drives an external trainer") {
    Sandbox box;
    MapEmbedder emb(32);
    {
      auto store = testing::NewStore(box.store, 32);
      testing::BuildTwoCluster(*store, emb);
    }
    std::string vectors = (box.dir / "v.tsv").string();
    emb.Export(vectors);
    // Tuned vectors: every text maps to e1.
    MapEmbedder tuned(32);
    {
      auto store = Store::Open(box.store, StoreOptions{});
      for (const auto &rec : store->GetChunks(store->AllChunkIds()).records) {
        tuned.Set(rec.text, testing::Basis(32, 1));
      }
    }
    std::string tuned_path = (box.dir / "tuned.tsv").string();
    tuned.Export(tuned_path);
    auto script = box.Write("bin/fake-trainer",
                            "#!/bin/sh\n"
                            "echo \"$@\" > \"$(dirname \"$0\")/args.txt\"\n"
                            "while [ $# -gt 0 ]; do\n"
                            "  if [ \"$1\" = --out ]; then out=$2; fi\n"
                            "  shift\n"
                            "done\n"
                            "cp " + tuned_path + " \"$out/vectors.tsv\"\n");
    ::chmod(script.c_str(), 0755);
    ScopedEnv trainer("STASH_TRAINER", script);
    std::string model = (box.dir / "model").string();
    auto r = Cli({"--store", box.store, "--embedder", "precomputed:" + vectors, "retrain",
                  "--model-out", model, "--json"});
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["trainer_exit"] == 0);
    CHECK(j["mined_triples"].get<int>() > 0);
    CHECK(j["reembedded_chunks"] == 16);
    std::ifstream args_in(box.dir / "bin" / "args.txt");
    std::string args;
    std::getline(args_in, args);
    CHECK(args == "--triples " + model + "/triples.jsonl --out " + model +
                      " --epochs 2 --lr 3e-06 --batch 64 --seed 0");
    auto store = Store::Open(box.store, StoreOptions{});
    auto snap = store->Snapshot();
    for (ChunkId id : store->AllChunkIds()) CHECK((*snap->vectors.Get(id))[1] == 1.0f);

    auto failing = box.Write("bin/bad-trainer", "#!/bin/sh\nexit 5\n");
    ::chmod(failing.c_str(), 0755);
    ScopedEnv bad("STASH_TRAINER", failing);
    auto before = Bytes(box.store);
    store.reset();
    before = Bytes(box.store);
    auto rb = Cli({"--store", box.store, "--embedder", "precomputed:" + tuned_path, "retrain",
                   "--triples", model + "/triples.jsonl", "--model-out", model});
    CHECK(rb.code == 1);
    CHECK(Bytes(box.store) == before);
  }
}

}  // namespace
}  // namespace stash
