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

#include "asmlm/tokenizer.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>

#include "asmlm/error.hpp"
#include "asmlm/text_util.hpp"

namespace asmlm {

std::string_view to_string(ChunkKind kind) {
  switch (kind) {
    case ChunkKind::kText: return "TEXT";
    case ChunkKind::kSource: return "SOURCE";
    case ChunkKind::kAsm: return "ASM";
  }
  return "?";
}

std::vector<std::size_t> TokenSequence::label_positions() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < meta.size(); ++i) {
    if (meta[i].is_inst_label) out.push_back(i);
  }
  return out;
}

const std::vector<std::string>& prompt_words() {
  static const std::vector<std::string> words = {"#",    "This", "is", "the", "assembly", "code", "with",
                                                 "O0",   "O1",   "O2", "O3",  "optimization:"};
  return words;
}

void Vocab::add(const std::string& token) {
  if (index_.count(token)) return;
  index_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(token);
}

int Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size()) throw Error(ErrorCode::kInvalidArgument, "token id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

int Vocab::label_id(int k) const {
  if (k < 1 || k > max_instructions_) {
    throw Error(ErrorCode::kTooManyInstructions, "label [INST-" + std::to_string(k) + "] exceeds M=" +
                                                     std::to_string(max_instructions_));
  }
  return kFirstLabel + k - 1;
}

std::optional<int> Vocab::label_index(int id) const {
  if (id >= kFirstLabel && id < kFirstLabel + max_instructions_) return id - kFirstLabel + 1;
  return std::nullopt;
}

std::string Vocab::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < tokens_.size(); ++i) j[tokens_[i]] = static_cast<int>(i);
  return j.dump(1);
}

Vocab Vocab::from_json(std::string_view text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::kSchemaViolation, "vocab must be a JSON object");
  std::map<int, std::string> by_id;
  for (const auto& [tok, id] : j.items()) {
    if (!id.is_number_integer()) throw Error(ErrorCode::kSchemaViolation, "vocab id for '" + tok + "' is not an integer");
    if (!by_id.emplace(id.get<int>(), tok).second) throw Error(ErrorCode::kSchemaViolation, "duplicate vocab id");
  }
  Vocab v;
  int expect = 0;
  for (const auto& [id, tok] : by_id) {
    if (id != expect++) throw Error(ErrorCode::kSchemaViolation, "vocab ids must be contiguous from 0");
    v.add(tok);
  }
  if (v.size() < kFirstLabel || v.tokens_[kPad] != kPadToken || v.tokens_[kBos] != kBosToken ||
      v.tokens_[kEos] != kEosToken || v.tokens_[kUnk] != kUnkToken) {
    throw Error(ErrorCode::kSchemaViolation, "reserved ids 0..3 must be <pad> <s> </s> <unk>");
  }
  int m = 0;
  while (kFirstLabel + m < v.size() && v.tokens_[static_cast<std::size_t>(kFirstLabel + m)] == inst_label(m + 1)) ++m;
  v.max_instructions_ = m;
  return v;
}

void Vocab::save(const std::string& path) const { write_file(path, to_json()); }

Vocab Vocab::load(const std::string& path) { return from_json(read_file(path)); }

Vocab build_vocab(const std::vector<FunctionRecord>& records, const TokenizerConfig& config) {
  if (records.empty()) throw Error(ErrorCode::kEmptyCorpus, "cannot build a vocabulary from zero records");
  if (config.max_instructions < 1) throw Error(ErrorCode::kInvalidArgument, "max_instructions must be >= 1");
  std::map<std::string, int> counts;
  for (const auto& rec : records) {
    for (auto w : split_ws(rec.source_text)) ++counts[std::string(w)];
    for (const auto& [level, fn] : rec.asm_levels) {
      for (const auto& ins : fn.instructions) {
        for (const auto& t : ins.tokens()) ++counts[t];
      }
    }
  }
  Vocab v;
  for (const char* t : {Vocab::kPadToken, Vocab::kBosToken, Vocab::kEosToken, Vocab::kUnkToken}) v.add(t);
  for (int k = 1; k <= config.max_instructions; ++k) v.add(inst_label(k));
  v.max_instructions_ = config.max_instructions;
  for (const auto& w : prompt_words()) v.add(w);
  for (const auto& [token, count] : counts) {
    if (count >= config.min_freq) v.add(token);
  }
  return v;
}

EncodeOptions encode_options(const TokenizerConfig& config) {
  return EncodeOptions{config.max_seq_len, config.max_instr_tokens};
}

TokenSequence encode(const std::vector<Chunk>& chunks, const Vocab& vocab, const EncodeOptions& options) {
  if (options.max_instr_tokens < 2) throw Error(ErrorCode::kInvalidArgument, "max_instr_tokens must be >= 2");
  TokenSequence seq;
  seq.push_back(Vocab::kBos, TokenMeta{0, ChunkKind::kText, 0, false});
  int chunk_index = 0;
  for (const auto& chunk : chunks) {
    ++chunk_index;
    if (chunk.kind == ChunkKind::kAsm) {
      if (static_cast<int>(chunk.fn.size()) > vocab.max_instructions()) {
        throw Error(ErrorCode::kTooManyInstructions,
                    std::to_string(chunk.fn.size()) + " instructions, M=" + std::to_string(vocab.max_instructions()));
      }
      for (const auto& ins : chunk.fn.instructions) {
        const auto& toks = ins.tokens();
        std::size_t keep = std::min<std::size_t>(toks.size(), static_cast<std::size_t>(options.max_instr_tokens - 1));
        for (std::size_t t = 0; t < keep; ++t) {
          seq.push_back(vocab.id(toks[t]), TokenMeta{chunk_index, ChunkKind::kAsm, ins.index(), false});
        }
        seq.push_back(vocab.label_id(ins.index()), TokenMeta{chunk_index, ChunkKind::kAsm, ins.index(), true});
      }
    } else {
      for (auto w : split_ws(chunk.text)) seq.push_back(vocab.id(w), TokenMeta{chunk_index, chunk.kind, 0, false});
    }
  }
  if (static_cast<int>(seq.size()) > options.max_seq_len) {
    throw Error(ErrorCode::kSequenceTooLong,
                std::to_string(seq.size()) + " tokens > max_seq_len " + std::to_string(options.max_seq_len));
  }
  return seq;
}

std::string decode(const std::vector<int>& ids, const Vocab& vocab) {
  std::string out;
  for (int id : ids) {
    if (id == Vocab::kPad || id == Vocab::kBos || id == Vocab::kEos) continue;
    if (!out.empty()) out += ' ';
    out += vocab.token(id);
  }
  return out;
}

}  // namespace asmlm
