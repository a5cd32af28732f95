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

// Disassembly parsing and instruction normalization.
//
// A dump is the text listing produced by `objdump -d`: function headers
// `<hexaddr> <name>:` followed by instruction lines
// `hexaddr:<TAB>bytes<TAB>mnemonic operands [# comment]`. Normalization
// strips `%` and comments, isolates `,` `(` `)` as tokens, rewrites hex
// literals as decimal and replaces each instruction address by a trailing
// `[INST-k]` label.

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace asmlm {

enum class OptLevel { kO0 = 0, kO1 = 1, kO2 = 2, kO3 = 3 };

inline constexpr std::array<OptLevel, 4> kAllOptLevels = {OptLevel::kO0, OptLevel::kO1,
                                                          OptLevel::kO2, OptLevel::kO3};

std::string_view to_string(OptLevel level);
// Accepts "O0".."O3" (also "-O0".."-O3"); throws Error(kInvalidArgument) otherwise.
OptLevel parse_opt_level(std::string_view text);

struct RawInstruction {
  std::string address;  // hex digits as printed, without the trailing ':'
  std::string mnemonic;
  std::string operands;
  std::optional<std::string> comment;  // text after '#' or from a '<symbol>' annotation on

  bool operator==(const RawInstruction&) const = default;
};

struct DumpFunction {
  std::string name;
  std::vector<RawInstruction> instructions;
};

class NormalizedInstruction {
 public:
  NormalizedInstruction() = default;
  NormalizedInstruction(int index, std::vector<std::string> tokens);

  int index() const { return index_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::string label() const;
  // Tokens and label joined by single spaces, label last.
  std::string render() const;

  bool operator==(const NormalizedInstruction&) const = default;

 private:
  int index_ = 0;
  std::vector<std::string> tokens_;
};

struct AssemblyFunction {
  std::string source_id;
  OptLevel opt_level = OptLevel::kO0;
  std::vector<NormalizedInstruction> instructions;

  std::size_t size() const { return instructions.size(); }
  // One instruction per line, each terminated by '\n'.
  std::string render() const;

  bool operator==(const AssemblyFunction&) const = default;
};

std::string inst_label(int index);
// Returns k for a token of the form "[INST-k]" with k >= 1.
std::optional<int> parse_inst_label(std::string_view token);

std::vector<DumpFunction> parse_disassembly(std::string_view text);

NormalizedInstruction normalize_instruction(const RawInstruction& raw, int index);

// Applies the textual rewriting rules to one token stream (no label handling).
std::vector<std::string> normalize_operand_text(std::string_view text);

// Accepts either an objdump-style dump or an already normalized listing (one
// instruction per line ending in its `[INST-k]` label), so normalizing a
// rendered function is the identity. For dumps with several functions, the
// function named `source_id` is chosen when present, otherwise the first one.
AssemblyFunction normalize_function(std::string_view text, std::string source_id,
                                    OptLevel opt_level);

AssemblyFunction normalize_dump_function(const DumpFunction& fn, std::string source_id,
                                         OptLevel opt_level);

// Parses a single rendered instruction ("mov eax , $1 [INST-1]"); the label
// must be the last token and equal to `expected_index`.
std::optional<NormalizedInstruction> parse_rendered_instruction(std::string_view line,
                                                                int expected_index);

// Hex digit string (no prefix) to its unsigned decimal rendering, any length.
std::string hex_to_decimal(std::string_view hex_digits);

}  // namespace asmlm
