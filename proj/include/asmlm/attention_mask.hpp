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

// Hierarchical attention mask over mixed text / source / assembly sequences.
//
// For a query q and key k <= q, attention is allowed when:
//   - q and k belong to the same instruction of the same ASM chunk;
//   - k is the label of the instruction preceding q's, same ASM chunk;
//   - q is a label and k is the label of an earlier instruction, same chunk;
//   - both q and k are TEXT/SOURCE tokens (any chunks);
//   - one side is ASM, the other TEXT/SOURCE, and the ASM side is a label;
//   - q == k.
// A token never sees its own instruction's label: the label comes last.

#pragma once

#include <iosfwd>
#include <vector>

#include "asmlm/tokenizer.hpp"

namespace asmlm {

class AttentionMask {
 public:
  AttentionMask() = default;
  explicit AttentionMask(std::size_t n) : n_(n), allowed_(n * n, 0) {}

  std::size_t size() const { return n_; }
  bool allowed(std::size_t q, std::size_t k) const { return allowed_[q * n_ + k] != 0; }
  void set(std::size_t q, std::size_t k, bool v = true) { allowed_[q * n_ + k] = v ? 1 : 0; }
  const unsigned char* row(std::size_t q) const { return allowed_.data() + q * n_; }

  bool operator==(const AttentionMask&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<unsigned char> allowed_;
};

AttentionMask build_causal_mask(std::size_t n);
AttentionMask build_hierarchical_mask(const TokenSequence& seq);

std::size_t mask_row_support(const AttentionMask& mask, std::size_t q);

// One line per query row, one '0'/'1' character per key.
void write_mask_grid(const AttentionMask& mask, std::ostream& out);
AttentionMask read_mask_grid(std::istream& in);

}  // namespace asmlm
