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

#include "asmlm/pseudo_c.hpp"

#include <cctype>
#include <charconv>
#include <unordered_map>

#include "asmlm/error.hpp"
#include "asmlm/text_util.hpp"

namespace asmlm::pseudo_c {

std::string_view op_symbol(BinOp op) {
  switch (op) {
    case BinOp::kAdd: return "+";
    case BinOp::kSub: return "-";
    case BinOp::kMul: return "*";
    case BinOp::kAnd: return "&";
    case BinOp::kOr: return "|";
    case BinOp::kXor: return "^";
  }
  return "?";
}

std::optional<BinOp> parse_op(std::string_view symbol) {
  for (BinOp op : kAllOps) {
    if (op_symbol(op) == symbol) return op;
  }
  return std::nullopt;
}

std::int32_t apply(BinOp op, std::int32_t lhs, std::int32_t rhs) {
  auto a = static_cast<std::uint32_t>(lhs);
  auto b = static_cast<std::uint32_t>(rhs);
  std::uint32_t r = 0;
  switch (op) {
    case BinOp::kAdd: r = a + b; break;
    case BinOp::kSub: r = a - b; break;
    case BinOp::kMul: r = a * b; break;
    case BinOp::kAnd: r = a & b; break;
    case BinOp::kOr: r = a | b; break;
    case BinOp::kXor: r = a ^ b; break;
  }
  return static_cast<std::int32_t>(r);
}

std::string param_name(int i) { return std::string(1, static_cast<char>('a' + i)); }

namespace {

std::string render_operand(const Operand& o) {
  switch (o.kind) {
    case Operand::Kind::kParam: return param_name(o.index);
    case Operand::Kind::kTemp: return "t" + std::to_string(o.index);
    case Operand::Kind::kConst: return std::to_string(o.value);
  }
  return "?";
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

}  // namespace

std::string Function::render() const {
  std::string out = "int func (";
  for (int i = 0; i < n_params; ++i) {
    if (i) out += " ,";
    out += " int " + param_name(i);
  }
  out += " ) {";
  for (const auto& st : body) {
    out += " int t" + std::to_string(st.target) + " = " + render_operand(st.lhs) + " " +
           std::string(op_symbol(st.op)) + " " + render_operand(st.rhs) + " ;";
  }
  out += " return t" + std::to_string(body.empty() ? 0 : body.back().target) + " ; }";
  return out;
}

std::optional<Program> Program::parse(std::string_view text) {
  auto toks = split_ws(text);
  std::size_t i = 0;
  auto expect = [&](std::string_view t) {
    if (i < toks.size() && toks[i] == t) {
      ++i;
      return true;
    }
    return false;
  };
  auto term = [&](Term& out) {
    if (i >= toks.size()) return false;
    std::string_view t = toks[i];
    if (is_identifier(t)) {
      out = Term{false, std::string(t), 0};
    } else {
      std::int32_t v = 0;
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc() || ptr != t.data() + t.size()) return false;
      out = Term{true, {}, v};
    }
    ++i;
    return true;
  };

  Program p;
  if (!expect("int") || i >= toks.size() || !is_identifier(toks[i])) return std::nullopt;
  ++i;
  if (!expect("(")) return std::nullopt;
  if (!expect(")")) {
    while (true) {
      if (!expect("int") || i >= toks.size() || !is_identifier(toks[i])) return std::nullopt;
      p.params_.emplace_back(toks[i++]);
      if (expect(")")) break;
      if (!expect(",")) return std::nullopt;
    }
  }
  if (!expect("{")) return std::nullopt;
  while (i < toks.size() && toks[i] == "int") {
    ++i;
    Assign a;
    if (i >= toks.size() || !is_identifier(toks[i])) return std::nullopt;
    a.target = std::string(toks[i++]);
    if (!expect("=") || !term(a.lhs) || i >= toks.size()) return std::nullopt;
    auto op = parse_op(toks[i++]);
    if (!op) return std::nullopt;
    a.op = *op;
    if (!term(a.rhs) || !expect(";")) return std::nullopt;
    p.body_.push_back(std::move(a));
  }
  if (!expect("return") || !term(p.result_) || !expect(";") || !expect("}")) return std::nullopt;
  if (i != toks.size()) return std::nullopt;
  return p;
}

std::optional<std::int32_t> Program::run(const std::vector<std::int32_t>& inputs,
                                         std::size_t step_budget) const {
  if (inputs.size() != params_.size()) return std::nullopt;
  std::unordered_map<std::string, std::int32_t> env;
  for (std::size_t i = 0; i < params_.size(); ++i) env[params_[i]] = inputs[i];
  auto eval = [&](const Term& t) -> std::optional<std::int32_t> {
    if (t.is_literal) return t.value;
    auto it = env.find(t.name);
    if (it == env.end()) return std::nullopt;
    return it->second;
  };
  std::size_t steps = 0;
  for (const auto& a : body_) {
    if (++steps > step_budget) {
      throw Error(ErrorCode::kJudgeTimeout, "step budget " + std::to_string(step_budget) + " exceeded");
    }
    auto l = eval(a.lhs);
    auto r = eval(a.rhs);
    if (!l || !r) return std::nullopt;
    env[a.target] = apply(a.op, *l, *r);
  }
  return eval(result_);
}

}  // namespace asmlm::pseudo_c
