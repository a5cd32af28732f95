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

#include <gtest/gtest.h>

#include <cstdlib>
#include <set>

#include "asmlm/corpus.hpp"
#include "asmlm/error.hpp"
#include "asmlm/text_util.hpp"
#include "support.hpp"

namespace asmlm {
namespace {

std::string serialize(const std::vector<FunctionRecord>& records) {
  std::string out;
  for (const auto& r : records) out += to_jsonl_line(r) + "\n";
  return out;
}

TEST(Synthetic, SameSeedSameBytes) {
  SyntheticSpec spec;
  spec.seed = 1;
  spec.n_functions = 1;
  spec.max_instructions = 4;
  EXPECT_EQ(serialize(generate_synthetic(spec)), serialize(generate_synthetic(spec)));
  spec.n_functions = 16;
  EXPECT_EQ(serialize(generate_synthetic(spec)), serialize(generate_synthetic(spec)));
}

TEST(Synthetic, DifferentSeedsDiffer) {
  SyntheticSpec a, b;
  a.seed = 1;
  b.seed = 2;
  EXPECT_NE(serialize(generate_synthetic(a)), serialize(generate_synthetic(b)));
}

TEST(Synthetic, DistinctIds) {
  SyntheticSpec spec;
  spec.n_functions = 8;
  auto records = generate_synthetic(spec);
  ASSERT_EQ(records.size(), 8u);
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.source_id);
  EXPECT_EQ(ids.size(), 8u);
}

TEST(Synthetic, HigherLevelsNeverGrow) {
  SyntheticSpec spec;
  spec.seed = 99;
  spec.n_functions = 100;
  for (const auto& r : generate_synthetic(spec)) {
    ASSERT_EQ(r.asm_levels.size(), 4u);
    for (int l = 1; l < 4; ++l) {
      EXPECT_LE(r.asm_levels.at(static_cast<OptLevel>(l)).size(),
                r.asm_levels.at(static_cast<OptLevel>(l - 1)).size())
          << r.source_id;
    }
  }
}

TEST(Synthetic, LevelsUseCumulativePasses) {
  SyntheticSpec spec;
  EXPECT_TRUE(passes_for_level(spec, OptLevel::kO0).empty());
  for (int l = 1; l < 4; ++l) {
    auto lower = passes_for_level(spec, static_cast<OptLevel>(l - 1));
    auto upper = passes_for_level(spec, static_cast<OptLevel>(l));
    ASSERT_EQ(upper.size(), lower.size() + 1);
    EXPECT_TRUE(std::equal(lower.begin(), lower.end(), upper.begin()));
  }
}

TEST(Synthetic, SourceAgreesWithTestVectors) {
  auto records = testing::small_corpus(5, 20, 4, 3);
  for (const auto& r : records) {
    auto tests = make_test_vectors(r.source_text, 8, 1);
    ASSERT_EQ(tests.size(), 8u);
    auto prog = pseudo_c::Program::parse(r.source_text);
    ASSERT_TRUE(prog.has_value()) << r.source_text;
    for (const auto& t : tests) EXPECT_EQ(prog->run(t.inputs, 1000), t.expected);
  }
}

TEST(Synthetic, InvalidSpec) {
  SyntheticSpec spec;
  spec.n_functions = 0;
  EXPECT_THROW(generate_synthetic(spec), Error);
  spec.n_functions = 1;
  spec.max_params = 4;
  EXPECT_THROW(generate_synthetic(spec), Error);
}

FunctionRecord four_level_record() {
  FunctionRecord r;
  r.source_id = "f";
  r.source_text = "int f ( int a ) { int t0 = a + 1 ; return t0 ; }";
  for (OptLevel l : kAllOptLevels) {
    AssemblyFunction fn;
    fn.source_id = "f";
    fn.opt_level = l;
    fn.instructions.emplace_back(1, std::vector<std::string>{"mov", "$" + std::to_string(static_cast<int>(l))});
    r.asm_levels[l] = fn;
  }
  return r;
}

TEST(Filter, MissingLevelDropped) {
  auto r = four_level_record();
  r.asm_levels.erase(OptLevel::kO1);
  EXPECT_FALSE(passes_cl_filter(r));
  EXPECT_TRUE(filter_for_cl({r}).empty());
}

TEST(Filter, IdenticalO2O3Dropped) {
  auto r = four_level_record();
  r.asm_levels[OptLevel::kO3].instructions = r.asm_levels[OptLevel::kO2].instructions;
  EXPECT_FALSE(passes_cl_filter(r));
}

TEST(Filter, DistinctLevelsKept) {
  auto r = four_level_record();
  EXPECT_TRUE(passes_cl_filter(r));
  EXPECT_EQ(filter_for_cl({r}).size(), 1u);
}

TEST(Jsonl, RoundTrip) {
  auto dir = testing::temp_dir("jsonl");
  auto records = testing::small_corpus(3, 10);
  std::string path = (dir / "c.jsonl").string();
  save_jsonl(records, path);
  EXPECT_EQ(load_jsonl(path), records);
}

TEST(Jsonl, MissingSourceIdIsSchemaViolation) {
  try {
    parse_jsonl_line(R"({"source_text":"x","asm":{}})", 4);
    FAIL();
  } catch (const LineError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaViolation);
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(Jsonl, EmptyFileEmptyList) {
  auto dir = testing::temp_dir("jsonl_empty");
  std::string path = (dir / "e.jsonl").string();
  write_file(path, "");
  EXPECT_TRUE(load_jsonl(path).empty());
}

TEST(Toolchain, ExtractTextListingDropsBanners) {
  const char* raw =
      "\nx.o:     file format elf64-x86-64\n\n\n"
      "Disassembly of section .text:\n\n"
      "0000000000000000 <f>:\n"
      "   0:\t48 b9 ef cd ab 89 67 \tmovabs $0x123456789abcdef,%rcx\n"
      "   7:\t45 23 01 \n"
      "   a:\tc3                   \tret    \n";
  auto fns = parse_disassembly(extract_text_listing(raw));
  ASSERT_EQ(fns.size(), 1u);
  EXPECT_EQ(fns[0].instructions.size(), 2u);
}

bool have_toolchain() { return std::system("command -v gcc >/dev/null 2>&1 && command -v objdump >/dev/null 2>&1") == 0; }

TEST(Toolchain, EmptyDirectory) {
  if (!have_toolchain()) GTEST_SKIP() << "gcc/objdump not installed";
  auto dir = testing::temp_dir("tc_empty");
  EXPECT_TRUE(ingest_toolchain(dir.string(), ToolchainConfig{}).empty());
}

TEST(Toolchain, AllLevelsCompile) {
  if (!have_toolchain()) GTEST_SKIP() << "gcc/objdump not installed";
  auto dir = testing::temp_dir("tc_ok");
  write_file((dir / "add.c").string(), "int add(int a, int b) {\n  return a + b;\n}\n");
  auto records = ingest_toolchain(dir.string(), ToolchainConfig{});
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].asm_levels.size(), 4u);
  EXPECT_NE(records[0].source_text.find("return a + b"), std::string::npos);
}

TEST(Toolchain, FailingLevelLeftAbsent) {
  if (!have_toolchain()) GTEST_SKIP() << "gcc/objdump not installed";
  auto dir = testing::temp_dir("tc_o3");
  write_file((dir / "add.c").string(), "int add(int a, int b) {\n  return a + b;\n}\n");
  ToolchainConfig cfg;
  cfg.compile_template = "sh -c 'test {opt} != -O3 && gcc -c {opt} -o \"$0\" \"$1\"' {out} {in}";
  std::vector<std::string> log;
  auto records = ingest_toolchain(dir.string(), cfg, &log);
  ASSERT_EQ(records.size(), 1u);
  std::set<OptLevel> levels;
  for (const auto& [l, fn] : records[0].asm_levels) levels.insert(l);
  EXPECT_EQ(levels, (std::set<OptLevel>{OptLevel::kO0, OptLevel::kO1, OptLevel::kO2}));
  EXPECT_FALSE(log.empty());
}

TEST(Toolchain, MissingToolIsReported) {
  ToolchainConfig cfg;
  cfg.compile_template = "asmlm-no-such-compiler {opt} -o {out} {in}";
  try {
    ingest_toolchain(testing::temp_dir("tc_missing").string(), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kToolchainUnavailable);
  }
}

}  // namespace
}  // namespace asmlm
