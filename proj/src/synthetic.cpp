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

// Synthetic corpus: random straight-line pseudo-C functions lowered to an
// x86-flavoured pseudo-ISA. O0 is a naive stack-slot lowering; each higher
// level enables one more rewrite pass, so pass sets grow with the level.

#include <algorithm>
#include <cstdio>
#include <set>
#include <unordered_set>

#include "asmlm/corpus.hpp"
#include "asmlm/error.hpp"
#include "asmlm/random.hpp"

namespace asmlm {

namespace {

using pseudo_c::BinOp;
using pseudo_c::Operand;

struct Loc {
  enum class Kind { kReg, kSlot, kImm };
  Kind kind = Kind::kReg;
  std::string reg;
  int offset = 0;  // rbp-relative, negative
  std::int32_t imm = 0;

  static Loc r(std::string name) { return {Kind::kReg, std::move(name), 0, 0}; }
  static Loc slot(int off) { return {Kind::kSlot, {}, off, 0}; }
  static Loc immediate(std::int32_t v) { return {Kind::kImm, {}, 0, v}; }

  bool operator==(const Loc&) const = default;
};

// AT&T operand order: sources first, destination last.
struct Ins {
  std::string mnemonic;
  std::vector<Loc> ops;
};

std::string hex(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string render_loc(const Loc& l) {
  switch (l.kind) {
    case Loc::Kind::kReg: return "%" + l.reg;
    case Loc::Kind::kSlot: return (l.offset < 0 ? "-" : "") + hex(static_cast<std::uint64_t>(std::abs(l.offset))) + "(%rbp)";
    case Loc::Kind::kImm: return "$" + hex(static_cast<std::uint32_t>(l.imm));
  }
  return "?";
}

std::string render_ins(const Ins& ins) {
  std::string out = ins.mnemonic;
  if (!ins.ops.empty()) {
    out.resize(std::max<std::size_t>(out.size() + 1, 7), ' ');
    for (std::size_t i = 0; i < ins.ops.size(); ++i) {
      if (i) out += ',';
      out += render_loc(ins.ops[i]);
    }
  }
  return out;
}

bool is_barrier(const Ins& ins) {
  return ins.mnemonic == "push" || ins.mnemonic == "pop" || ins.mnemonic == "ret" ||
         std::any_of(ins.ops.begin(), ins.ops.end(), [](const Loc& l) {
           return l.kind == Loc::Kind::kReg && (l.reg == "rsp" || l.reg == "rbp");
         });
}

// mov reads its first operand; two-operand ALU ops read both.
std::vector<Loc> reads(const Ins& ins) {
  std::vector<Loc> out;
  if (ins.ops.empty()) return out;
  if (ins.mnemonic == "mov") {
    out.push_back(ins.ops[0]);
  } else {
    out = ins.ops;
  }
  return out;
}

std::vector<Loc> writes(const Ins& ins) {
  if (ins.ops.size() < 2) return {};
  return {ins.ops.back()};
}

bool same_place(const Loc& a, const Loc& b) {
  if (a.kind != b.kind || a.kind == Loc::Kind::kImm) return false;
  return a.kind == Loc::Kind::kReg ? a.reg == b.reg : a.offset == b.offset;
}

bool touches(const std::vector<Loc>& set, const Loc& l) {
  return std::any_of(set.begin(), set.end(), [&](const Loc& x) { return same_place(x, l); });
}

bool independent(const Ins& a, const Ins& b) {
  if (is_barrier(a) || is_barrier(b)) return false;
  for (const auto& w : writes(a)) {
    if (touches(reads(b), w) || touches(writes(b), w)) return false;
  }
  for (const auto& w : writes(b)) {
    if (touches(reads(a), w)) return false;
  }
  return true;
}

int param_slot(int p) { return -4 * (p + 1); }
int temp_slot(int n_params, int t) { return -4 * (n_params + t + 1); }

Loc operand_loc(const Operand& o, int n_params) {
  switch (o.kind) {
    case Operand::Kind::kParam: return Loc::slot(param_slot(o.index));
    case Operand::Kind::kTemp: return Loc::slot(temp_slot(n_params, o.index));
    case Operand::Kind::kConst: return Loc::immediate(o.value);
  }
  return {};
}

std::vector<Ins> lower_o0(const pseudo_c::Function& fn, const SyntheticSpec& spec) {
  const Loc acc = Loc::r(spec.accumulator);
  const Loc scratch = Loc::r(spec.scratch);
  std::vector<Ins> out;
  out.push_back({"push", {Loc::r("rbp")}});
  out.push_back({"mov", {Loc::r("rsp"), Loc::r("rbp")}});
  for (int p = 0; p < fn.n_params; ++p) {
    out.push_back({"mov", {Loc::r(spec.arg_registers[static_cast<std::size_t>(p)]), Loc::slot(param_slot(p))}});
  }
  for (const auto& st : fn.body) {
    const std::string& mn = spec.op_mnemonics[static_cast<std::size_t>(st.op)];
    out.push_back({"mov", {operand_loc(st.lhs, fn.n_params), acc}});
    if (st.rhs.kind == Operand::Kind::kConst) {
      out.push_back({mn, {Loc::immediate(st.rhs.value), acc}});
    } else {
      out.push_back({"mov", {operand_loc(st.rhs, fn.n_params), scratch}});
      out.push_back({mn, {scratch, acc}});
    }
    out.push_back({"mov", {acc, Loc::slot(temp_slot(fn.n_params, st.target))}});
  }
  out.push_back({"mov", {Loc::slot(temp_slot(fn.n_params, fn.body.back().target)), acc}});
  out.push_back({"pop", {Loc::r("rbp")}});
  out.push_back({"ret", {}});
  return out;
}

// Drops reloads of a value just stored from the same register, then stores
// to slots that are never read afterwards. Iterates to a fixpoint.
void dead_instruction_elimination(std::vector<Ins>& code) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i + 1 < code.size(); ++i) {
      const Ins& st = code[i];
      const Ins& ld = code[i + 1];
      if (st.mnemonic == "mov" && ld.mnemonic == "mov" && st.ops.size() == 2 && ld.ops.size() == 2 &&
          st.ops[0].kind == Loc::Kind::kReg && st.ops[1].kind == Loc::Kind::kSlot &&
          same_place(ld.ops[0], st.ops[1]) && same_place(ld.ops[1], st.ops[0])) {
        code.erase(code.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        changed = true;
      }
    }
    for (std::size_t i = 0; i < code.size(); ++i) {
      const Ins& st = code[i];
      if (st.mnemonic != "mov" || st.ops.size() != 2 || st.ops[1].kind != Loc::Kind::kSlot) continue;
      bool read_later = false;
      for (std::size_t j = i + 1; j < code.size() && !read_later; ++j) {
        read_later = touches(reads(code[j]), st.ops[1]);
      }
      if (!read_later) {
        code.erase(code.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
}

// `mov X,%scratch ; op %scratch,%acc`  =>  `op X,%acc`
void adjacent_fusion(std::vector<Ins>& code, const SyntheticSpec& spec) {
  const Loc scratch = Loc::r(spec.scratch);
  for (std::size_t i = 0; i + 1 < code.size(); ++i) {
    Ins& ld = code[i];
    const Ins& op = code[i + 1];
    if (ld.mnemonic == "mov" && ld.ops.size() == 2 && same_place(ld.ops[1], scratch) &&
        op.mnemonic != "mov" && op.ops.size() == 2 && same_place(op.ops[0], scratch) &&
        !same_place(op.ops[1], scratch)) {
      Ins fused{op.mnemonic, {ld.ops[0], op.ops[1]}};
      code[i] = std::move(fused);
      code.erase(code.begin() + static_cast<std::ptrdiff_t>(i) + 1);
    }
  }
}

// Reads of parameter spill slots are renamed to the incoming argument
// registers, which the lowering never overwrites.
void register_renaming(std::vector<Ins>& code, int n_params, const SyntheticSpec& spec) {
  for (auto& ins : code) {
    if (ins.mnemonic == "push" || ins.mnemonic == "pop") continue;
    bool is_spill = ins.mnemonic == "mov" && ins.ops.size() == 2 && ins.ops[0].kind == Loc::Kind::kReg &&
                    ins.ops[1].kind == Loc::Kind::kSlot;
    std::size_t n_read = ins.mnemonic == "mov" ? 1 : ins.ops.size();
    if (is_spill) continue;
    for (std::size_t k = 0; k < n_read && k < ins.ops.size(); ++k) {
      Loc& l = ins.ops[k];
      if (l.kind != Loc::Kind::kSlot) continue;
      for (int p = 0; p < n_params; ++p) {
        if (l.offset == param_slot(p)) l = Loc::r(spec.arg_registers[static_cast<std::size_t>(p)]);
      }
    }
  }
}

// One left-to-right sweep putting adjacent independent instructions in
// lexicographic order of their rendering.
void reorder_independent(std::vector<Ins>& code) {
  for (std::size_t i = 0; i + 1 < code.size(); ++i) {
    if (independent(code[i], code[i + 1]) && render_ins(code[i]) > render_ins(code[i + 1])) {
      std::swap(code[i], code[i + 1]);
      ++i;
    }
  }
}

std::vector<Ins> lower(const pseudo_c::Function& fn, OptLevel level, const SyntheticSpec& spec) {
  std::vector<Ins> code = lower_o0(fn, spec);
  auto active = passes_for_level(spec, level);
  auto on = [&](SyntheticPass p) { return std::find(active.begin(), active.end(), p) != active.end(); };
  // Fixed execution order regardless of the order passes were enabled in.
  if (on(SyntheticPass::kRegisterRenaming)) register_renaming(code, fn.n_params, spec);
  if (on(SyntheticPass::kAdjacentFusion)) adjacent_fusion(code, spec);
  if (on(SyntheticPass::kDeadInstructionElimination)) dead_instruction_elimination(code);
  if (on(SyntheticPass::kReorderIndependent)) reorder_independent(code);
  return code;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

int encoded_length(const Ins& ins) {
  if (ins.ops.empty() || ins.mnemonic == "push" || ins.mnemonic == "pop") return 1;
  bool mem = std::any_of(ins.ops.begin(), ins.ops.end(), [](const Loc& l) { return l.kind == Loc::Kind::kSlot; });
  bool imm = std::any_of(ins.ops.begin(), ins.ops.end(), [](const Loc& l) { return l.kind == Loc::Kind::kImm; });
  return 2 + (mem ? 1 : 0) + (imm ? 1 : 0) + (ins.mnemonic == "imul" ? 1 : 0);
}

pseudo_c::Operand random_source_operand(Rng& rng, int n_params, int n_temps) {
  std::uint64_t pick = rng.index(static_cast<std::uint64_t>(n_params + n_temps));
  if (static_cast<int>(pick) < n_params) return Operand::param(static_cast<int>(pick));
  return Operand::temp(static_cast<int>(pick) - n_params);
}

pseudo_c::Function random_function(Rng& rng, const SyntheticSpec& spec) {
  pseudo_c::Function fn;
  fn.n_params = static_cast<int>(rng.range(1, spec.max_params));
  int n_ops = static_cast<int>(rng.range(1, spec.max_instructions));
  for (int t = 0; t < n_ops; ++t) {
    pseudo_c::Statement st;
    st.target = t;
    // Chain on the previous temp half of the time so later ops stay live.
    st.lhs = (t > 0 && rng.index(2) == 0) ? Operand::temp(t - 1) : random_source_operand(rng, fn.n_params, t);
    st.op = pseudo_c::kAllOps[rng.index(std::size(pseudo_c::kAllOps))];
    if (rng.index(5) < 2) {
      st.rhs = Operand::constant(static_cast<std::int32_t>(rng.range(1, spec.max_constant)));
    } else {
      st.rhs = random_source_operand(rng, fn.n_params, t);
    }
    fn.body.push_back(st);
  }
  return fn;
}

bool uses_every_param(const pseudo_c::Function& fn) {
  std::set<int> used;
  for (const auto& st : fn.body) {
    for (const Operand* o : {&st.lhs, &st.rhs}) {
      if (o->kind == Operand::Kind::kParam) used.insert(o->index);
    }
  }
  return static_cast<int>(used.size()) == fn.n_params;
}

}  // namespace

std::string_view to_string(SyntheticPass pass) {
  switch (pass) {
    case SyntheticPass::kDeadInstructionElimination: return "dead-instruction-elimination";
    case SyntheticPass::kAdjacentFusion: return "adjacent-fusion";
    case SyntheticPass::kRegisterRenaming: return "register-renaming";
    case SyntheticPass::kReorderIndependent: return "reorder-independent";
  }
  return "?";
}

std::vector<SyntheticPass> passes_for_level(const SyntheticSpec& spec, OptLevel level) {
  int k = static_cast<int>(level);
  return {spec.pass_order.begin(), spec.pass_order.begin() + k};
}

std::string synthetic_dump(const pseudo_c::Function& fn, const std::string& name, OptLevel level,
                           const SyntheticSpec& spec) {
  std::vector<Ins> code = lower(fn, level, spec);
  std::string out = "0000000000000000 <" + name + ">:\n";
  std::uint64_t addr = 0;
  char buf[64];
  for (const auto& ins : code) {
    std::string text = render_ins(ins);
    int len = encoded_length(ins);
    std::uint64_t h = fnv1a(text);
    std::string bytes;
    for (int b = 0; b < len; ++b) {
      std::snprintf(buf, sizeof buf, "%02llx ", static_cast<unsigned long long>((h >> (8 * b)) & 0xff));
      bytes += buf;
    }
    bytes.resize(21, ' ');
    std::snprintf(buf, sizeof buf, "%4llx:\t", static_cast<unsigned long long>(addr));
    out += buf;
    out += bytes;
    out += '\t';
    out += text;
    out += '\n';
    addr += static_cast<std::uint64_t>(len);
  }
  return out;
}

std::vector<FunctionRecord> generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_functions < 1 || spec.max_instructions < 2 || spec.max_params < 1 || spec.max_params > 3 ||
      spec.max_constant < 1) {
    throw Error(ErrorCode::kInvalidSpec, "n_functions >= 1, max_instructions >= 2, max_params in 1..3 and "
                                         "max_constant >= 1 are required");
  }
  std::set<SyntheticPass> distinct(spec.pass_order.begin(), spec.pass_order.end());
  if (distinct.size() != spec.pass_order.size()) {
    throw Error(ErrorCode::kInvalidSpec, "pass_order entries must be distinct");
  }

  Rng rng(spec.seed);
  std::unordered_set<std::string> seen;
  std::vector<FunctionRecord> records;
  const int max_attempts = 1000 * spec.n_functions;
  int attempts = 0;
  while (static_cast<int>(records.size()) < spec.n_functions) {
    if (++attempts > max_attempts) {
      throw Error(ErrorCode::kInvalidSpec, "cannot draw " + std::to_string(spec.n_functions) +
                                               " distinct functions from this spec");
    }
    pseudo_c::Function fn = random_function(rng, spec);
    if (!uses_every_param(fn)) continue;
    std::string source = fn.render();
    if (!seen.insert(source).second) continue;

    char id[32];
    std::snprintf(id, sizeof id, "syn%05zu", records.size());
    FunctionRecord rec;
    rec.source_id = id;
    rec.source_text = std::move(source);
    for (OptLevel level : kAllOptLevels) {
      rec.asm_levels[level] = normalize_function(synthetic_dump(fn, rec.source_id, level, spec), rec.source_id, level);
      auto& names = rec.passes[level];
      for (SyntheticPass p : passes_for_level(spec, level)) names.emplace_back(to_string(p));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<pseudo_c::TestVector> make_test_vectors(const std::string& source_text, int count,
                                                    std::uint64_t seed) {
  auto program = pseudo_c::Program::parse(source_text);
  if (!program) throw Error(ErrorCode::kInvalidArgument, "reference source does not parse");
  Rng rng(seed);
  std::vector<pseudo_c::TestVector> out;
  for (int i = 0; i < count; ++i) {
    pseudo_c::TestVector v;
    for (std::size_t p = 0; p < program->arity(); ++p) {
      v.inputs.push_back(static_cast<std::int32_t>(rng.range(-1000, 1000)));
    }
    auto result = program->run(v.inputs, 1u << 20);
    if (!result) throw Error(ErrorCode::kInvalidArgument, "reference source faults on its own inputs");
    v.expected = *result;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace asmlm
