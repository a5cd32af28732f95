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

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "asmlm/normalizer.hpp"
#include "asmlm/pseudo_c.hpp"

namespace asmlm {

struct FunctionRecord {
  std::string source_id;
  std::string source_text;
  std::map<OptLevel, AssemblyFunction> asm_levels;
  // Transformation passes applied per level (synthetic corpora only).
  std::map<OptLevel, std::vector<std::string>> passes;

  bool has_level(OptLevel level) const { return asm_levels.count(level) != 0; }
  bool operator==(const FunctionRecord&) const = default;
};

enum class SyntheticPass {
  kDeadInstructionElimination,
  kAdjacentFusion,
  kRegisterRenaming,
  kReorderIndependent,
};

std::string_view to_string(SyntheticPass pass);

struct SyntheticSpec {
  std::uint64_t seed = 1;
  int n_functions = 8;
  // Upper bound on straight-line operations per pseudo-source function. Each
  // operation lowers to three or four O0 instructions plus a fixed prologue
  // and epilogue.
  int max_instructions = 4;
  int max_params = 3;  // 1..3
  int max_constant = 64;

  // Pseudo-ISA vocabulary. One mnemonic per source operator (+ - * & | ^).
  std::array<std::string, 6> op_mnemonics = {"add", "sub", "imul", "and", "or", "xor"};
  std::array<std::string, 3> arg_registers = {"edi", "esi", "edx"};
  std::string accumulator = "eax";
  std::string scratch = "ecx";

  // Level k (k >= 1) applies the first k entries.
  std::array<SyntheticPass, 3> pass_order = {SyntheticPass::kDeadInstructionElimination,
                                             SyntheticPass::kAdjacentFusion,
                                             SyntheticPass::kRegisterRenaming};
};

std::vector<FunctionRecord> generate_synthetic(const SyntheticSpec& spec);

// Objdump-style dump for one lowered function at one level.
std::string synthetic_dump(const pseudo_c::Function& fn, const std::string& name, OptLevel level,
                           const SyntheticSpec& spec);

std::vector<SyntheticPass> passes_for_level(const SyntheticSpec& spec, OptLevel level);

// Random input vectors with expected outputs from interpreting `source_text`.
std::vector<pseudo_c::TestVector> make_test_vectors(const std::string& source_text, int count,
                                                    std::uint64_t seed);

struct ToolchainConfig {
  // Shell command templates. Placeholders: {in}, {out}, {opt} (e.g. "-O2").
  // The disassembler's standard output is the dump.
  std::string compile_template = "gcc -c {opt} -o {out} {in}";
  std::string disassemble_template = "objdump -d {in}";
  std::vector<OptLevel> levels = {kAllOptLevels.begin(), kAllOptLevels.end()};
};

// Compiles and disassembles every *.c file under `source_dir`. Per-file and
// per-level failures are appended to `log` and leave that level absent.
std::vector<FunctionRecord> ingest_toolchain(const std::string& source_dir,
                                             const ToolchainConfig& config,
                                             std::vector<std::string>* log = nullptr);

// Keeps the `.text` listing of a raw objdump output in the accepted dump
// grammar: banners, section headers, other sections and byte-only
// continuation lines are dropped.
std::string extract_text_listing(std::string_view objdump_output);

bool passes_cl_filter(const FunctionRecord& record);
std::vector<FunctionRecord> filter_for_cl(const std::vector<FunctionRecord>& records);

std::string to_jsonl_line(const FunctionRecord& record);
FunctionRecord parse_jsonl_line(std::string_view line, std::size_t line_no);
void save_jsonl(const std::vector<FunctionRecord>& records, const std::string& path);
std::vector<FunctionRecord> load_jsonl(const std::string& path);

}  // namespace asmlm
