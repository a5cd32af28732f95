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

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "asmlm/corpus.hpp"
#include "asmlm/normalizer.hpp"

namespace asmlm {

enum class ChunkKind { kText, kSource, kAsm };

std::string_view to_string(ChunkKind kind);

struct Chunk {
  ChunkKind kind = ChunkKind::kText;
  std::string text;     // TEXT and SOURCE
  AssemblyFunction fn;  // ASM

  static Chunk text_chunk(std::string t) { return {ChunkKind::kText, std::move(t), {}}; }
  static Chunk source_chunk(std::string t) { return {ChunkKind::kSource, std::move(t), {}}; }
  static Chunk asm_chunk(AssemblyFunction f) { return {ChunkKind::kAsm, {}, std::move(f)}; }
};

struct TokenMeta {
  int chunk_index = 0;
  ChunkKind kind = ChunkKind::kText;
  int instr_index = 0;  // 1-based within an ASM chunk, 0 elsewhere
  bool is_inst_label = false;

  bool operator==(const TokenMeta&) const = default;
};

struct TokenSequence {
  std::vector<int> ids;
  std::vector<TokenMeta> meta;

  std::size_t size() const { return ids.size(); }
  void push_back(int id, TokenMeta m) {
    ids.push_back(id);
    meta.push_back(m);
  }
  std::vector<std::size_t> label_positions() const;
};

struct TokenizerConfig {
  int max_seq_len = 2048;
  int max_instructions = 64;  // M: number of reserved [INST-k] ids
  int min_freq = 1;
  int max_instr_tokens = 32;  // per-instruction budget, label included
};

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kFirstLabel = 4;

  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kBosToken = "<s>";
  static constexpr const char* kEosToken = "</s>";
  static constexpr const char* kUnkToken = "<unk>";

  Vocab() = default;

  int id(std::string_view token) const;  // kUnk when absent
  bool contains(std::string_view token) const;
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  int max_instructions() const { return max_instructions_; }
  int label_id(int k) const;
  std::optional<int> label_index(int id) const;

  std::string to_json() const;  // {token: id}
  static Vocab from_json(std::string_view text);
  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  friend Vocab build_vocab(const std::vector<FunctionRecord>&, const TokenizerConfig&);
  void add(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int max_instructions_ = 0;
};

// Words of the fixed decompilation prompt; always part of the vocabulary.
const std::vector<std::string>& prompt_words();

Vocab build_vocab(const std::vector<FunctionRecord>& records, const TokenizerConfig& config);

struct EncodeOptions {
  int max_seq_len = 2048;
  int max_instr_tokens = 32;
};

EncodeOptions encode_options(const TokenizerConfig& config);

TokenSequence encode(const std::vector<Chunk>& chunks, const Vocab& vocab,
                     const EncodeOptions& options = {});

// Whitespace-joined tokens; PAD, BOS and EOS are dropped, UNK renders as "<unk>".
std::string decode(const std::vector<int>& ids, const Vocab& vocab);

}  // namespace asmlm
