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

#include "asmlm/attention_mask.hpp"

#include <istream>
#include <ostream>
#include <string>

#include "asmlm/error.hpp"

namespace asmlm {

AttentionMask build_causal_mask(std::size_t n) {
  AttentionMask mask(n);
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t k = 0; k <= q; ++k) mask.set(q, k);
  }
  return mask;
}

AttentionMask build_hierarchical_mask(const TokenSequence& seq) {
  const std::size_t n = seq.size();
  AttentionMask mask(n);

  // Span start of each token's instruction, and the label position of the
  // previous instruction in the same chunk (or npos).
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> instr_start(n, npos);
  std::vector<std::size_t> prev_label(n, npos);
  std::size_t cur_start = npos;
  std::size_t last_label = npos;
  for (std::size_t i = 0; i < n; ++i) {
    const TokenMeta& m = seq.meta[i];
    if (m.kind != ChunkKind::kAsm) {
      cur_start = npos;
      last_label = npos;
      continue;
    }
    bool new_chunk = i == 0 || seq.meta[i - 1].kind != ChunkKind::kAsm ||
                     seq.meta[i - 1].chunk_index != m.chunk_index;
    if (new_chunk) {
      last_label = npos;
      cur_start = i;
    } else if (seq.meta[i - 1].instr_index != m.instr_index) {
      cur_start = i;
    }
    instr_start[i] = cur_start;
    prev_label[i] = last_label;
    if (m.is_inst_label) last_label = i;
  }

  for (std::size_t q = 0; q < n; ++q) {
    const TokenMeta& mq = seq.meta[q];
    if (mq.kind != ChunkKind::kAsm) {
      for (std::size_t k = 0; k <= q; ++k) {
        const TokenMeta& mk = seq.meta[k];
        if (mk.kind != ChunkKind::kAsm || mk.is_inst_label) mask.set(q, k);
      }
      continue;
    }
    // Own instruction, causal.
    for (std::size_t k = instr_start[q]; k <= q; ++k) mask.set(q, k);
    // Preceding instruction's label. prev_label[q] is the last label seen
    // before q in this chunk, which belongs to instruction instr_index - 1.
    if (prev_label[q] != npos && seq.meta[prev_label[q]].instr_index == mq.instr_index - 1) {
      mask.set(q, prev_label[q]);
    }
    // Labels additionally see all text/source before them and the earlier
    // labels of their own chunk. ASM chunks never see each other.
    if (mq.is_inst_label) {
      for (std::size_t k = 0; k < q; ++k) {
        const TokenMeta& mk = seq.meta[k];
        if (mk.kind != ChunkKind::kAsm ||
            (mk.is_inst_label && mk.chunk_index == mq.chunk_index && mk.instr_index < mq.instr_index)) {
          mask.set(q, k);
        }
      }
    }
    mask.set(q, q);
  }
  return mask;
}

std::size_t mask_row_support(const AttentionMask& mask, std::size_t q) {
  if (q >= mask.size()) throw Error(ErrorCode::kInvalidArgument, "row out of range");
  std::size_t count = 0;
  const unsigned char* row = mask.row(q);
  for (std::size_t k = 0; k < mask.size(); ++k) count += row[k];
  return count;
}

void write_mask_grid(const AttentionMask& mask, std::ostream& out) {
  std::string line;
  for (std::size_t q = 0; q < mask.size(); ++q) {
    line.assign(mask.size(), '0');
    for (std::size_t k = 0; k < mask.size(); ++k) {
      if (mask.allowed(q, k)) line[k] = '1';
    }
    out << line << '\n';
  }
}

AttentionMask read_mask_grid(std::istream& in) {
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) rows.push_back(line);
  }
  AttentionMask mask(rows.size());
  for (std::size_t q = 0; q < rows.size(); ++q) {
    if (rows[q].size() != rows.size()) throw LineError(ErrorCode::kSchemaViolation, q + 1, "mask grid is not square");
    for (std::size_t k = 0; k < rows.size(); ++k) {
      char c = rows[q][k];
      if (c != '0' && c != '1') throw LineError(ErrorCode::kSchemaViolation, q + 1, "mask grid must be 0/1");
      mask.set(q, k, c == '1');
    }
  }
  return mask;
}

}  // namespace asmlm
