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

#ifndef STASH_ERROR_H_
#define STASH_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace stash {

enum class Errc {
  kIoFailure,
  kCorruptFile,
  kSchemaVersionUnknown,
  kDimensionMismatch,
  kEmptyDocument,
  kEmptyInput,
  kUnknownText,
  kParseFailure,
  kMissingChunk,
  kEmptyStore,
  kEmptyQuery,
  kEmptyIndex,
  kMissingFile,
  kDanglingQrel,
  kEmptyBundle,
  kEmptyPool,
  kAllProfilesEmpty,
  kMissingPositive,
  kLimitExceeded,
  kInvalidArgument,
  kMissingComponent,
};

std::string_view ErrcName(Errc code);

// All library failures are reported as stash::Error carrying a code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string &message)
      : std::runtime_error(std::string(ErrcName(code)) + ": " + message),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

// Raised when an input exceeds one of the configured Limits.
class LimitError : public Error {
 public:
  LimitError(std::string knob, const std::string &message)
      : Error(Errc::kLimitExceeded, knob + ": " + message),
        knob_(std::move(knob)) {}

  const std::string &knob() const { return knob_; }

 private:
  std::string knob_;
};

}  // namespace stash

#endif  // STASH_ERROR_H_
