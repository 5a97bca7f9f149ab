// Copyright 2026 The AFCC Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace afcc {

// Numeric values are part of the C ABI (see include/afcc/afcc.h).
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kShapeMismatch = 2,
  kIo = 3,
  kFormat = 4,
  kNumeric = 5,
  kPrerequisite = 6,
  kInternal = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ShapeError : public Error {
 public:
  ShapeError(int layer, const std::string& what)
      : Error(ErrorCode::kShapeMismatch,
              "layer " + std::to_string(layer) + ": " + what),
        layer_(layer) {}
  int layer() const noexcept { return layer_; }

 private:
  int layer_;
};

// Raised when the loss goes non-finite. `where` is the batch index inside
// backward() and the epoch inside train().
class NumericError : public Error {
 public:
  NumericError(long where, const std::string& what)
      : Error(ErrorCode::kNumeric, what), where_(where) {}
  long where() const noexcept { return where_; }

 private:
  long where_;
};

class FormatError : public Error {
 public:
  FormatError(std::size_t offset, const std::string& what)
      : Error(ErrorCode::kFormat,
              what + " (byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(ErrorCode::kInvalidArgument, what);
}

}  // namespace afcc
