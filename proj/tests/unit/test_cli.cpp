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

#include <sstream>

#include "asmlm/cli.hpp"
#include "asmlm/eval.hpp"
#include "asmlm/text_util.hpp"
#include "support.hpp"

namespace asmlm {
namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string data_path(const std::string& name) { return std::string(ASMLM_TEST_DATA_DIR) + "/" + name; }

TEST(Cli, HelpExitsZeroEverywhere) {
  for (std::vector<std::string> args : std::vector<std::vector<std::string>>{
           {"--help"},
           {"normalize", "--help"},
           {"corpus", "--help"},
           {"corpus", "synth", "--help"},
           {"corpus", "ingest", "--help"},
           {"corpus", "filter", "--help"},
           {"mask", "--help"},
           {"train", "--help"},
           {"embed", "--help"},
           {"retrieve", "--help"},
           {"passk", "--help"},
           {"attn-report", "--help"}}) {
    auto r = run_cli(args);
    EXPECT_EQ(r.code, cli::kExitOk) << args[0] << " " << r.err;
    EXPECT_FALSE(r.out.empty()) << args[0];
  }
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"corpus", "synth", "--out", "x.jsonl"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"passk", "--n", "5"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"mask", "--corpus", "c", "--id", "f", "--out", "o", "--kind", "weird"}).code, cli::kExitUsage);
}

TEST(Cli, Normalize) {
  auto dir = testing::temp_dir("cli_norm");
  std::string out = (dir / "fn.txt").string();
  auto r = run_cli({"normalize", "--in", data_path("sample_dump.txt"), "--out", out, "--opt", "O0", "--id", "clamp_add"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file(out), read_file(data_path("golden_clamp_add.txt")));
}

TEST(Cli, DataErrorExitCode) {
  auto dir = testing::temp_dir("cli_bad");
  std::string in = (dir / "bad.txt").string();
  write_file(in, "0000000000000000 <f>:\nthis is not an instruction\n");
  auto r = run_cli({"normalize", "--in", in, "--out", (dir / "o.txt").string(), "--id", "f"});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_NE(r.err.find("MalformedLine"), std::string::npos);
}

TEST(Cli, MaskMatchesOracle) {
  auto dir = testing::temp_dir("cli_mask");
  FunctionRecord rec;
  rec.source_id = "clamp_add";
  rec.source_text = "int clamp_add ( int a , int b )";
  rec.asm_levels[OptLevel::kO0] = normalize_function(read_file(data_path("sample_dump.txt")), "clamp_add", OptLevel::kO0);
  std::string corpus = (dir / "c.jsonl").string();
  save_jsonl({rec}, corpus);
  std::string grid = (dir / "mask.txt").string();
  auto r = run_cli({"mask", "--corpus", corpus, "--id", "clamp_add", "--opt", "O0", "--out", grid});
  ASSERT_EQ(r.code, 0) << r.err;
  Vocab vocab = build_vocab({rec}, TokenizerConfig{});
  auto seq = assembly_sequence(vocab, rec.asm_levels.at(OptLevel::kO0));
  std::istringstream in(read_file(grid));
  EXPECT_EQ(read_mask_grid(in), testing::oracle_mask(seq));
}

TEST(Cli, PasskCounts) {
  auto r = run_cli({"passk", "--n", "20", "--c", "10", "--k", "10"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ostringstream expected;
  expected << "pass@10 = " << pass_at_k(20, 10, 10) << '\n';
  EXPECT_EQ(r.out, expected.str());
  EXPECT_EQ(run_cli({"passk", "--n", "3", "--c", "1", "--k", "4"}).code, cli::kExitData);
}

TEST(Cli, PipelineIsDeterministic) {
  auto root = testing::temp_dir("cli_pipeline");
  std::string cfg = (root / "stage.cfg").string();
  write_file(cfg, "stage=FT_BCD\nbatch_size=4\nwarmup_steps=1\n");
  const std::vector<std::string> outputs = {"c.jsonl", "f.jsonl", "m.ckpt", "m.ckpt.log.csv", "m.ckpt.vocab.json",
                                            "cl.ckpt", "e.csv", "r.csv", "p.csv", "a.csv", "k.txt"};
  for (const std::string run : {"0", "1"}) {
    std::filesystem::create_directories(root / run);
    auto p = [&](const std::string& name) { return (root / run / name).string(); };
    std::vector<std::vector<std::string>> steps = {
        {"corpus", "synth", "--out", p("c.jsonl"), "--seed", "3", "--n", "6"},
        {"corpus", "filter", "--in", p("c.jsonl"), "--out", p("f.jsonl")},
        {"train", "--corpus", p("f.jsonl"), "--config", cfg, "--out", p("m.ckpt"), "--seed", "4", "--steps", "2",
         "--d-model", "16", "--d-ff", "32", "--max-seq-len", "256"},
        {"train", "--corpus", p("f.jsonl"), "--stage", "PRETRAIN_CL", "--init", p("m.ckpt"), "--out", p("cl.ckpt"),
         "--seed", "4", "--steps", "2"},
        {"embed", "--ckpt", p("cl.ckpt"), "--corpus", p("f.jsonl"), "--out", p("e.csv")},
        {"retrieve", "--ckpt", p("cl.ckpt"), "--corpus", p("f.jsonl"), "--k", "2", "4", "--pools", "3", "--seed", "1",
         "--out", p("r.csv")},
        {"passk", "--ckpt", p("m.ckpt"), "--corpus", p("f.jsonl"), "--seed", "2", "--samples", "2", "--k", "1",
         "--max-new", "4", "--out", p("p.csv")},
        {"attn-report", "--ckpt", p("m.ckpt"), "--corpus", p("f.jsonl"), "--id", "syn00000", "--opt", "O2", "--out",
         p("a.csv")},
        {"mask", "--corpus", p("f.jsonl"), "--id", "syn00000", "--prompt", "--out", p("k.txt")},
    };
    for (const auto& args : steps) {
      auto r = run_cli(args);
      ASSERT_EQ(r.code, 0) << args[0] << ": " << r.err;
    }
  }
  for (const auto& name : outputs) {
    EXPECT_EQ(read_file((root / "0" / name).string()), read_file((root / "1" / name).string())) << name;
  }
}

TEST(Cli, MissingSeedIsUsageError) {
  auto dir = testing::temp_dir("cli_seed");
  EXPECT_EQ(run_cli({"train", "--corpus", "x", "--out", (dir / "m").string()}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"retrieve", "--ckpt", "x", "--corpus", "y", "--out", "z"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"passk", "--ckpt", "x", "--corpus", "y", "--out", "z"}).code, cli::kExitUsage);
}

}  // namespace
}  // namespace asmlm
