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

// A straight-line C subset used as the source language of the synthetic
// corpus:
//
//   int func ( int a , int b ) { int t0 = a + 3 ; int t1 = t0 * b ; return t1 ; }
//
// Every token is whitespace separated so the word-level tokenizer sees the
// same units the interpreter does. Arithmetic wraps at 32 bits.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace asmlm::pseudo_c {

enum class BinOp { kAdd, kSub, kMul, kAnd, kOr, kXor };

inline constexpr BinOp kAllOps[] = {BinOp::kAdd, BinOp::kSub, BinOp::kMul,
                                    BinOp::kAnd, BinOp::kOr,  BinOp::kXor};

std::string_view op_symbol(BinOp op);
std::optional<BinOp> parse_op(std::string_view symbol);
std::int32_t apply(BinOp op, std::int32_t lhs, std::int32_t rhs);

struct Operand {
  enum class Kind { kParam, kTemp, kConst };
  Kind kind = Kind::kConst;
  int index = 0;            // param or temp number
  std::int32_t value = 0;   // constants only

  static Operand param(int i) { return {Kind::kParam, i, 0}; }
  static Operand temp(int i) { return {Kind::kTemp, i, 0}; }
  static Operand constant(std::int32_t v) { return {Kind::kConst, 0, v}; }
};

// `int t<target> = lhs op rhs ;`
struct Statement {
  int target = 0;
  Operand lhs;
  BinOp op = BinOp::kAdd;
  Operand rhs;
};

struct Function {
  int n_params = 1;
  std::vector<Statement> body;  // temps are numbered 0..body.size()-1 in order
  // Returned value is always the last temp.

  std::string render() const;
};

std::string param_name(int i);

struct TestVector {
  std::vector<std::int32_t> inputs;
  std::int32_t expected = 0;
};

// Parsed program over arbitrary candidate text. Parsing never throws; a text
// outside the subset yields std::nullopt.
class Program {
 public:
  static std::optional<Program> parse(std::string_view text);

  std::size_t arity() const { return params_.size(); }

  // Returns std::nullopt on a runtime fault (unbound name, wrong arity).
  // Throws Error(kJudgeTimeout) when more than `step_budget` statements run.
  std::optional<std::int32_t> run(const std::vector<std::int32_t>& inputs,
                                  std::size_t step_budget) const;

 private:
  struct Term {
    bool is_literal = false;
    std::string name;
    std::int32_t value = 0;
  };
  struct Assign {
    std::string target;
    Term lhs;
    BinOp op = BinOp::kAdd;
    Term rhs;
  };

  std::vector<std::string> params_;
  std::vector<Assign> body_;
  Term result_;
};

}  // namespace asmlm::pseudo_c
