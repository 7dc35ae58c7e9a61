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

#include "fairlens/error.h"

namespace fairlens {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kMissingColumn: return "missing_column";
    case ErrorCode::kTypeMismatch: return "type_mismatch";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kSchemaMismatch: return "schema_mismatch";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kUndefinedMetric: return "undefined_metric";
    case ErrorCode::kZeroVariance: return "zero_variance";
    case ErrorCode::kEmptyTreatmentArm: return "empty_treatment_arm";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

}  // namespace fairlens
