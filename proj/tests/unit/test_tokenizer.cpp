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

#include <algorithm>

#include "asmlm/error.hpp"
#include "asmlm/text_util.hpp"
#include "asmlm/tokenizer.hpp"
#include "support.hpp"

namespace asmlm {
namespace {

AssemblyFunction make_fn(const std::vector<std::vector<std::string>>& instrs) {
  AssemblyFunction fn;
  fn.source_id = "f";
  int k = 0;
  for (const auto& toks : instrs) fn.instructions.emplace_back(++k, toks);
  return fn;
}

FunctionRecord record_with(const AssemblyFunction& fn, const std::string& src = "") {
  FunctionRecord r;
  r.source_id = "f";
  r.source_text = src;
  r.asm_levels[OptLevel::kO0] = fn;
  return r;
}

TEST(Vocab, ContainsCorpusTokensAndReserved) {
  TokenizerConfig cfg;
  cfg.max_instructions = 4;
  Vocab v = build_vocab({record_with(make_fn({{"mov", "eax", ",", "$1"}}))}, cfg);
  for (const char* t : {"mov", "eax", ",", "$1", "<pad>", "<s>", "</s>", "<unk>", "[INST-1]", "[INST-4]"}) {
    EXPECT_TRUE(v.contains(t)) << t;
  }
  EXPECT_EQ(v.id("<pad>"), Vocab::kPad);
  EXPECT_EQ(v.id("<s>"), Vocab::kBos);
  EXPECT_EQ(v.id("</s>"), Vocab::kEos);
  EXPECT_EQ(v.id("<unk>"), Vocab::kUnk);
  for (const auto& w : prompt_words()) EXPECT_TRUE(v.contains(w)) << w;
}

TEST(Vocab, ExactlyMLabels) {
  TokenizerConfig cfg;
  cfg.max_instructions = 8;
  Vocab v = build_vocab({record_with(make_fn({{"ret"}}))}, cfg);
  int labels = 0;
  for (int id = 0; id < v.size(); ++id) labels += v.label_index(id).has_value() ? 1 : 0;
  EXPECT_EQ(labels, 8);
  EXPECT_EQ(v.label_id(1), Vocab::kFirstLabel);
  EXPECT_EQ(*v.label_index(v.label_id(8)), 8);
  EXPECT_THROW(v.label_id(9), Error);
}

TEST(Vocab, MinFreqMapsRareToUnk) {
  TokenizerConfig cfg;
  cfg.min_freq = 2;
  Vocab v = build_vocab({record_with(make_fn({{"ret"}, {"ret"}, {"nop"}}))}, cfg);
  EXPECT_NE(v.id("ret"), Vocab::kUnk);
  EXPECT_EQ(v.id("nop"), Vocab::kUnk);
}

TEST(Vocab, JsonRoundTrip) {
  Vocab v = build_vocab(testing::small_corpus(1, 4), TokenizerConfig{});
  EXPECT_EQ(Vocab::from_json(v.to_json()), v);
  EXPECT_THROW(Vocab::from_json("[1,2]"), Error);
}

TEST(Vocab, EmptyCorpus) { EXPECT_THROW(build_vocab({}, TokenizerConfig{}), Error); }

TEST(Encode, LabelPositions) {
  auto fn = make_fn({{"a", "b", "c"}, {"d", "e", "f"}});
  Vocab v = build_vocab({record_with(fn)}, TokenizerConfig{});
  TokenSequence seq = encode({Chunk::asm_chunk(fn)}, v);
  ASSERT_EQ(seq.size(), 9u);
  EXPECT_EQ(seq.ids[0], Vocab::kBos);
  EXPECT_EQ(seq.label_positions(), (std::vector<std::size_t>{4, 8}));
  for (std::size_t i = 0; i < seq.size(); ++i) EXPECT_EQ(seq.meta[i].is_inst_label, i == 4 || i == 8);
  EXPECT_EQ(seq.meta[1].instr_index, 1);
  EXPECT_EQ(seq.meta[5].instr_index, 2);
  EXPECT_EQ(seq.ids[4], v.label_id(1));
}

TEST(Encode, SourceOnlyHasNoLabels) {
  Vocab v = build_vocab({record_with(make_fn({{"ret"}}), "int f ( )")}, TokenizerConfig{});
  TokenSequence seq = encode({Chunk::source_chunk("int f ( )")}, v);
  EXPECT_EQ(seq.size(), 5u);
  EXPECT_TRUE(seq.label_positions().empty());
  for (const auto& m : seq.meta) EXPECT_EQ(m.instr_index, 0);
}

TEST(Encode, TooManyInstructions) {
  std::vector<std::vector<std::string>> instrs(9, {"nop"});
  auto fn = make_fn(instrs);
  TokenizerConfig cfg;
  cfg.max_instructions = 8;
  Vocab v = build_vocab({record_with(make_fn({{"nop"}}))}, cfg);
  try {
    encode({Chunk::asm_chunk(fn)}, v);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooManyInstructions);
  }
}

TEST(Encode, SequenceTooLong) {
  auto fn = make_fn({{"a", "b", "c"}, {"d", "e", "f"}});
  Vocab v = build_vocab({record_with(fn)}, TokenizerConfig{});
  EncodeOptions opt;
  opt.max_seq_len = 8;
  EXPECT_THROW(encode({Chunk::asm_chunk(fn)}, v, opt), Error);
}

TEST(Encode, InstructionTruncationKeepsLabel) {
  auto fn = make_fn({{"a", "b", "c", "d", "e"}});
  Vocab v = build_vocab({record_with(fn)}, TokenizerConfig{});
  EncodeOptions opt;
  opt.max_instr_tokens = 3;
  TokenSequence seq = encode({Chunk::asm_chunk(fn)}, v, opt);
  ASSERT_EQ(seq.size(), 4u);
  EXPECT_TRUE(seq.meta[3].is_inst_label);
}

TEST(Encode, ChunkIndicesAndKinds) {
  auto fn = make_fn({{"ret"}});
  Vocab v = build_vocab({record_with(fn, "x y")}, TokenizerConfig{});
  TokenSequence seq = encode({Chunk::text_chunk("x"), Chunk::asm_chunk(fn), Chunk::source_chunk("x y")}, v);
  ASSERT_EQ(seq.size(), 6u);
  EXPECT_EQ(seq.meta[1], (TokenMeta{1, ChunkKind::kText, 0, false}));
  EXPECT_EQ(seq.meta[2], (TokenMeta{2, ChunkKind::kAsm, 1, false}));
  EXPECT_EQ(seq.meta[3], (TokenMeta{2, ChunkKind::kAsm, 1, true}));
  EXPECT_EQ(seq.meta[5], (TokenMeta{3, ChunkKind::kSource, 0, false}));
}

TEST(Decode, RoundTripOnCorpus) {
  auto records = testing::small_corpus(11, 6);
  Vocab v = build_vocab(records, TokenizerConfig{});
  for (const auto& r : records) {
    TokenSequence s = encode({Chunk::source_chunk(r.source_text)}, v);
    EXPECT_EQ(decode(s.ids, v), r.source_text);
    const auto& fn = r.asm_levels.at(OptLevel::kO0);
    TokenSequence a = encode({Chunk::asm_chunk(fn)}, v);
    std::string rendered = fn.render();
    std::replace(rendered.begin(), rendered.end(), '\n', ' ');
    EXPECT_EQ(decode(a.ids, v), std::string(trim(rendered)));
  }
}

TEST(Decode, UnkSentinelAndEmpty) {
  Vocab v = build_vocab({record_with(make_fn({{"ret"}}))}, TokenizerConfig{});
  EXPECT_EQ(decode({Vocab::kUnk}, v), "<unk>");
  EXPECT_EQ(decode({}, v), "");
  EXPECT_EQ(decode({Vocab::kBos, Vocab::kEos, Vocab::kPad}, v), "");
}

}  // namespace
}  // namespace asmlm
