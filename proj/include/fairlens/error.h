/*
 * Copyright 2026 The FairLens Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FAIRLENS_ERROR_H_
#define FAIRLENS_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace fairlens {

// Machine-readable failure category. The service maps these onto HTTP 4xx
// codes, so every user-caused failure must carry one of them.
enum class ErrorCode {
  kInvalidArgument,
  kParse,
  kMissingColumn,
  kTypeMismatch,
  kEmptyInput,
  kSchemaMismatch,
  kNotFound,
  kUndefinedMetric,
  kZeroVariance,
  kEmptyTreatmentArm,
  kInternal,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Parse failure with a location. Row indices are 1-based data rows (the
// header is row 0); column is the header name when known.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, size_t row, std::string column,
             const std::string& message)
      : Error(code, message), row_(row), column_(std::move(column)) {}

  size_t row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  size_t row_;
  std::string column_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void Require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) Fail(code, message);
}

}  // namespace fairlens

#endif  // FAIRLENS_ERROR_H_
