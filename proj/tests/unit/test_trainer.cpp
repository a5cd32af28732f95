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

#include <cmath>
#include <sstream>

#include "asmlm/error.hpp"
#include "asmlm/text_util.hpp"
#include "asmlm/trainer.hpp"
#include "support.hpp"

namespace asmlm {
namespace {

StageConfig schedule_cfg() {
  StageConfig c;
  c.peak_lr = 2e-3;
  c.warmup_steps = 10;
  return c;
}

TEST(Schedule, WarmupAndCosine) {
  auto c = schedule_cfg();
  const int total = 110;
  EXPECT_EQ(lr_at(0, c, total), 0.0);
  EXPECT_DOUBLE_EQ(lr_at(5, c, total), 1e-3);
  EXPECT_DOUBLE_EQ(lr_at(10, c, total), 2e-3);
  EXPECT_NEAR(lr_at(60, c, total), 1e-3, 1e-15);
  EXPECT_NEAR(lr_at(110, c, total), 0.0, 1e-18);
  for (int s = 0; s <= total + 5; ++s) EXPECT_GE(lr_at(s, c, total), 0.0);
  EXPECT_NEAR(lr_at(9, c, total), lr_at(10, c, total), 2.1e-4);
  EXPECT_NEAR(lr_at(11, c, total), lr_at(10, c, total), 1e-5);
  c.schedule = Schedule::kConstant;
  EXPECT_EQ(lr_at(80, c, total), 2e-3);
}

TEST(StageConfigParse, KeysAndErrors) {
  auto c = parse_stage_config("stage = FT_BCSD # retrieval\nbatch_size=4\npeak_lr=5e-4\nschedule=CONSTANT\n\nseed=9\n");
  EXPECT_EQ(c.stage, Stage::kFtBcsd);
  EXPECT_EQ(c.batch_size, 4);
  EXPECT_EQ(c.peak_lr, 5e-4);
  EXPECT_EQ(c.schedule, Schedule::kConstant);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(parse_stage_config(format_stage_config(c)).peak_lr, c.peak_lr);
  try {
    parse_stage_config("batch_size=4\nwhatever=1\n");
    FAIL();
  } catch (const LineError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaViolation);
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_stage_config("stage=FOO\n"), LineError);
  EXPECT_THROW(parse_stage_config("batch_size=0\n"), Error);
}

ModelConfig opt_config() { return testing::tiny_config(12, 4, 2, 1); }

TEST(AdamW, ZeroGradZeroDecayUnchanged) {
  auto p = ModelParams::init(opt_config(), 1, 0.5);
  auto before = p.data();
  ModelParams g(p.config());
  auto st = make_optimizer(p, 0.0);
  apply_optimizer_step(p, g, st, 1e-2);
  EXPECT_EQ(p.data(), before);
}

TEST(AdamW, FirstStepIsSignLike) {
  auto p = ModelParams::init(opt_config(), 2, 0.5);
  auto before = p.data();
  ModelParams g(p.config());
  Rng rng(3);
  for (auto& x : g.data()) x = rng.normal();
  auto st = make_optimizer(p, 0.0);
  const double lr = 1e-2;
  apply_optimizer_step(p, g, st, lr);
  for (std::size_t i = 0; i < p.size(); ++i) {
    double gi = g.data()[i];
    EXPECT_NEAR(p.data()[i] - before[i], -lr * gi / (std::abs(gi) + 1e-8), 1e-15);
  }
}

TEST(AdamW, DecayOnlyShrinks) {
  auto p = ModelParams::init(opt_config(), 4, 0.5);
  auto before = p.data();
  ModelParams g(p.config());
  auto st = make_optimizer(p, 0.1);
  apply_optimizer_step(p, g, st, 1e-2);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_NEAR(p.data()[i], before[i] * (1.0 - 1e-3), 1e-15);
    EXPECT_LE(std::abs(p.data()[i]), std::abs(before[i]));
  }
}

TEST(ClipGradNorm, ScalesDownOnly) {
  ModelParams g(opt_config());
  g.data()[0] = 3.0;
  g.data()[1] = 4.0;
  EXPECT_DOUBLE_EQ(clip_grad_norm(g, 1.0), 5.0);
  EXPECT_NEAR(g.norm(), 1.0, 1e-15);
  EXPECT_NEAR(clip_grad_norm(g, 10.0), 1.0, 1e-15);
  EXPECT_NEAR(g.norm(), 1.0, 1e-15);
}

struct StageFixture : ::testing::Test {
  void SetUp() override {
    corpus = testing::small_corpus(31, 6, 2, 2);
    vocab = build_vocab(corpus, TokenizerConfig{});
  }
  StageConfig cfg(Stage s, int steps = 3) const {
    StageConfig c;
    c.stage = s;
    c.batch_size = 3;
    c.max_steps = steps;
    c.warmup_steps = 1;
    c.seed = 5;
    c.max_seq_len = 128;
    return c;
  }
  ModelParams fresh() const { return ModelParams::init(testing::tiny_config(vocab.size()), 1); }
  std::vector<FunctionRecord> corpus;
  Vocab vocab;
};

TEST_F(StageFixture, EveryStageIsDeterministic) {
  for (Stage s : {Stage::kPretrainLm, Stage::kPretrainCl, Stage::kFtBcd, Stage::kFtBcsd}) {
    auto a = fresh(), b = fresh();
    auto ra = train_stage(a, vocab, corpus, cfg(s));
    auto rb = train_stage(b, vocab, corpus, cfg(s));
    EXPECT_EQ(ra.checksum, rb.checksum) << to_string(s);
    EXPECT_EQ(a.checksum(), ra.checksum);
    EXPECT_NE(a.checksum(), fresh().checksum()) << to_string(s);
    EXPECT_EQ(ra.steps, 3);
    ASSERT_EQ(ra.log.size(), 3u);
    for (const auto& row : ra.log) EXPECT_TRUE(std::isfinite(row.total));
  }
}

TEST_F(StageFixture, ThreadedRunIsDeterministic) {
  auto c = cfg(Stage::kFtBcd);
  c.threads = 3;
  auto a = fresh(), b = fresh();
  EXPECT_EQ(train_stage(a, vocab, corpus, c).checksum, train_stage(b, vocab, corpus, c).checksum);
}

TEST_F(StageFixture, SeedChangesResult) {
  auto a = fresh(), b = fresh();
  auto c = cfg(Stage::kFtBcd);
  train_stage(a, vocab, corpus, c);
  c.seed = 6;
  train_stage(b, vocab, corpus, c);
  EXPECT_NE(a.checksum(), b.checksum());
}

TEST_F(StageFixture, ClRefusesIncompleteRecords) {
  auto broken = corpus;
  broken[2].asm_levels.erase(OptLevel::kO1);
  auto p = fresh();
  try {
    train_stage(p, vocab, broken, cfg(Stage::kPretrainCl));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStageDataInvalid);
  }
}

TEST_F(StageFixture, EmptyCorpus) {
  auto p = fresh();
  try {
    train_stage(p, vocab, {}, cfg(Stage::kFtBcd));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyStageData);
  }
}

TEST_F(StageFixture, ContrastiveNeedsTwoFunctions) {
  auto p = fresh();
  std::vector<FunctionRecord> one = {corpus[0]};
  try {
    train_stage(p, vocab, one, cfg(Stage::kFtBcsd));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateBatch);
  }
}

TEST_F(StageFixture, LogAndCheckpoints) {
  auto dir = testing::temp_dir("trainer_log");
  auto c = cfg(Stage::kPretrainCl, 4);
  c.checkpoint_every = 2;
  c.checkpoint_path = (dir / "ck").string();
  auto p = fresh();
  std::ostringstream diag;
  auto r = train_stage(p, vocab, corpus, c, &diag);
  for (const auto& row : r.log) {
    EXPECT_NEAR(row.total, row.lm + c.lambda * (row.fcl + row.ocl), 1e-12);
    EXPECT_GE(row.lr, 0.0);
  }
  EXPECT_GT(r.log.front().lr, 0.0);
  write_training_log(r.log, (dir / "log.csv").string());
  std::string text = read_file((dir / "log.csv").string());
  auto lines = split_lines(text);
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], "step,lm,fcl,ocl,total,lr,grad_norm,clipped,distance_clamped");
  EXPECT_NE(diag.str().find("checkpoint"), std::string::npos);
}

TEST_F(StageFixture, PlannedSteps) {
  auto c = cfg(Stage::kFtBcd, 0);
  c.epochs = 2;
  // 6 records x 4 levels, batch 3.
  EXPECT_EQ(planned_steps(corpus, c), 16);
  c.max_steps = 5;
  EXPECT_EQ(planned_steps(corpus, c), 5);
}

}  // namespace
}  // namespace asmlm
