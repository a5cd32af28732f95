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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace asmlm {

enum class ErrorCode {
  kMalformedLine,
  kEmptyDump,
  kInvalidSpec,
  kToolchainUnavailable,
  kSchemaViolation,
  kEmptyCorpus,
  kTooManyInstructions,
  kSequenceTooLong,
  kEmptyInput,
  kInvalidSamplingParams,
  kAllMasked,
  kDegenerateBatch,
  kInsufficientForms,
  kNoPositive,
  kEmptyStageData,
  kStageDataInvalid,
  kNonFiniteLoss,
  kKExceedsN,
  kJudgeTimeout,
  kInvalidArgument,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// Data errors are problems with user-supplied inputs; everything else is a
// runtime failure. The CLI maps the two classes to different exit codes.
bool is_data_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Line-addressed errors (MalformedLine, SchemaViolation) carry the 1-based line.
class LineError : public Error {
 public:
  LineError(ErrorCode code, std::size_t line, const std::string& detail);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace asmlm
