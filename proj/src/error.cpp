// Copyright 2026 The asmlm Authors
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

#include "asmlm/error.hpp"

namespace asmlm {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kEmptyDump: return "EmptyDump";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kToolchainUnavailable: return "ToolchainUnavailable";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kTooManyInstructions: return "TooManyInstructions";
    case ErrorCode::kSequenceTooLong: return "SequenceTooLong";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kInvalidSamplingParams: return "InvalidSamplingParams";
    case ErrorCode::kAllMasked: return "AllMasked";
    case ErrorCode::kDegenerateBatch: return "DegenerateBatch";
    case ErrorCode::kInsufficientForms: return "InsufficientForms";
    case ErrorCode::kNoPositive: return "NoPositive";
    case ErrorCode::kEmptyStageData: return "EmptyStageData";
    case ErrorCode::kStageDataInvalid: return "StageDataInvalid";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kKExceedsN: return "KExceedsN";
    case ErrorCode::kJudgeTimeout: return "JudgeTimeout";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

bool is_data_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kToolchainUnavailable:
    case ErrorCode::kNonFiniteLoss:
    case ErrorCode::kJudgeTimeout:
    case ErrorCode::kIo:
      return false;
    default:
      return true;
  }
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + detail), code_(code) {}

LineError::LineError(ErrorCode code, std::size_t line, const std::string& detail)
    : Error(code, "line " + std::to_string(line) + ": " + detail), line_(line) {}

}  // namespace asmlm
