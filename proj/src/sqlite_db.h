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

#ifndef STASH_SRC_SQLITE_DB_H_
#define STASH_SRC_SQLITE_DB_H_

#include <sqlite3.h>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "stash/error.h"

namespace stash::sqlite {

[[noreturn]] void Fail(sqlite3 *db, int rc, std::string_view what);

class Statement {
 public:
  Statement(sqlite3 *db, std::string_view sql);
  ~Statement();
  Statement(const Statement &) = delete;
  Statement &operator=(const Statement &) = delete;

  Statement &Bind(int index, std::int64_t value);
  Statement &Bind(int index, int value) { return Bind(index, static_cast<std::int64_t>(value)); }
  Statement &Bind(int index, double value);
  Statement &Bind(int index, std::string_view value);
  Statement &Bind(int index, const char *value) { return Bind(index, std::string_view(value)); }
  Statement &BindBlob(int index, std::span<const std::byte> value);
  Statement &BindNull(int index);

  // True while rows are available.
  bool Step();
  // Steps to completion; the statement must not return rows.
  void Run();
  void Reset();

  std::int64_t Int(int col) const { return sqlite3_column_int64(stmt_, col); }
  double Real(int col) const { return sqlite3_column_double(stmt_, col); }
  bool IsNull(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
  std::string Text(int col) const;
  std::span<const std::byte> Blob(int col) const;

 private:
  sqlite3 *db_;
  sqlite3_stmt *stmt_ = nullptr;
};

class Database {
 public:
  Database(const std::string &path, bool create);
  ~Database();
  Database(const Database &) = delete;
  Database &operator=(const Database &) = delete;

  sqlite3 *handle() const { return db_; }
  void Exec(std::string_view sql);
  std::int64_t Changes() const { return sqlite3_changes64(db_); }
  std::int64_t LastInsertId() const { return sqlite3_last_insert_rowid(db_); }

 private:
  sqlite3 *db_ = nullptr;
};

// Rolls back unless Commit() was called.
class Transaction {
 public:
  explicit Transaction(Database &db, bool immediate = true);
  ~Transaction();
  Transaction(const Transaction &) = delete;
  Transaction &operator=(const Transaction &) = delete;

  void Commit();

 private:
  Database &db_;
  bool done_ = false;
};

}  // namespace stash::sqlite

#endif  // STASH_SRC_SQLITE_DB_H_
