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

#include "asmlm/normalizer.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <regex>
#include <sstream>

#include "asmlm/error.hpp"
#include "asmlm/text_util.hpp"

namespace asmlm {

namespace {

const std::regex& header_regex() {
  static const std::regex re(R"(^([0-9a-f]+) <(.+)>:$)");
  return re;
}

bool is_hex_digit(char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; }

bool is_lower_hex(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
  });
}

bool is_branch_mnemonic(std::string_view m) {
  return (!m.empty() && m[0] == 'j') || m.starts_with("call") || m.starts_with("loop") ||
         m == "xbegin";
}

// Splits the instruction text after the byte column into mnemonic, operands
// and comment. The comment starts at the first '#' or '<'.
std::optional<RawInstruction> split_instruction_text(std::string address, std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  RawInstruction raw;
  raw.address = std::move(address);
  std::size_t cut = text.find_first_of("#<");
  std::string_view body = text.substr(0, cut);
  if (cut != std::string_view::npos) {
    std::string_view rest = text.substr(cut);
    if (rest.front() == '#') rest.remove_prefix(1);
    raw.comment = std::string(trim(rest));
  }
  body = trim(body);
  std::size_t ws = body.find_first_of(" \t");
  raw.mnemonic = std::string(body.substr(0, ws));
  if (ws != std::string_view::npos) raw.operands = std::string(trim(body.substr(ws)));
  if (raw.mnemonic.empty()) return std::nullopt;
  return raw;
}

// Parses `^\s*hexaddr:\s+(xx\s)+\s*MNEMONIC(\s+OPERANDS)?(\s*#.*)?$`.
std::optional<RawInstruction> parse_instruction_line(std::string_view line) {
  std::string_view s = ltrim(line);
  std::size_t colon = s.find(':');
  if (colon == std::string_view::npos || colon == 0) return std::nullopt;
  std::string_view addr = s.substr(0, colon);
  if (!is_lower_hex(addr)) return std::nullopt;
  std::string_view rest = s.substr(colon + 1);
  if (rest.empty() || !std::isspace(static_cast<unsigned char>(rest.front()))) return std::nullopt;

  // Byte column: one or more two-digit hex groups, each followed by whitespace.
  std::size_t pos = 0;
  while (pos < rest.size() && std::isspace(static_cast<unsigned char>(rest[pos]))) ++pos;
  int groups = 0;
  std::size_t instr_start = pos;
  if (rest.find('\t', pos) != std::string_view::npos) {
    // objdump separates columns with tabs; the byte column ends at the next tab.
    std::size_t tab = rest.find('\t', pos);
    std::istringstream bytes{std::string(rest.substr(pos, tab - pos))};
    std::string b;
    while (bytes >> b) {
      if (b.size() != 2 || !is_lower_hex(b)) return std::nullopt;
      ++groups;
    }
    instr_start = tab + 1;
  } else {
    while (pos + 2 < rest.size() && is_lower_hex(rest.substr(pos, 2)) &&
           std::isspace(static_cast<unsigned char>(rest[pos + 2]))) {
      ++groups;
      pos += 3;
      while (pos < rest.size() && std::isspace(static_cast<unsigned char>(rest[pos]))) ++pos;
    }
    instr_start = pos;
  }
  if (groups == 0) return std::nullopt;
  return split_instruction_text(std::string(addr), rest.substr(instr_start));
}

// Rewrites every `0x<hex>` literal inside a token as decimal; a leading '-' or
// '$' stays where it is.
std::string convert_hex_literals(std::string_view token) {
  std::string out;
  out.reserve(token.size());
  std::size_t i = 0;
  while (i < token.size()) {
    bool boundary = i == 0 || !std::isalnum(static_cast<unsigned char>(token[i - 1]));
    if (boundary && token[i] == '0' && i + 2 < token.size() &&
        (token[i + 1] == 'x' || token[i + 1] == 'X') && is_hex_digit(token[i + 2])) {
      std::size_t j = i + 2;
      while (j < token.size() && is_hex_digit(token[j])) ++j;
      out += hex_to_decimal(token.substr(i + 2, j - i - 2));
      i = j;
      continue;
    }
    out.push_back(token[i]);
    ++i;
  }
  return out;
}

}  // namespace

std::string_view to_string(OptLevel level) {
  switch (level) {
    case OptLevel::kO0: return "O0";
    case OptLevel::kO1: return "O1";
    case OptLevel::kO2: return "O2";
    case OptLevel::kO3: return "O3";
  }
  return "O?";
}

OptLevel parse_opt_level(std::string_view text) {
  if (text.starts_with('-')) text.remove_prefix(1);
  for (OptLevel level : kAllOptLevels) {
    if (text == to_string(level)) return level;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown optimization level '" + std::string(text) + "'");
}

NormalizedInstruction::NormalizedInstruction(int index, std::vector<std::string> tokens)
    : index_(index), tokens_(std::move(tokens)) {}

std::string NormalizedInstruction::label() const { return inst_label(index_); }

std::string NormalizedInstruction::render() const {
  std::string out;
  for (const auto& t : tokens_) {
    out += t;
    out += ' ';
  }
  out += label();
  return out;
}

std::string AssemblyFunction::render() const {
  std::string out;
  for (const auto& ins : instructions) {
    out += ins.render();
    out += '\n';
  }
  return out;
}

std::string inst_label(int index) { return "[INST-" + std::to_string(index) + "]"; }

std::optional<int> parse_inst_label(std::string_view token) {
  constexpr std::string_view kPrefix = "[INST-";
  if (!token.starts_with(kPrefix) || !token.ends_with(']')) return std::nullopt;
  std::string_view digits = token.substr(kPrefix.size(), token.size() - kPrefix.size() - 1);
  if (digits.empty() || digits.front() == '0') return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || value < 1) return std::nullopt;
  return value;
}

std::string hex_to_decimal(std::string_view hex_digits) {
  // Little-endian base-1e9 limbs.
  std::vector<std::uint32_t> limbs{0};
  for (char c : hex_digits) {
    unsigned d = std::isdigit(static_cast<unsigned char>(c))
                     ? static_cast<unsigned>(c - '0')
                     : static_cast<unsigned>(std::tolower(static_cast<unsigned char>(c)) - 'a' + 10);
    std::uint64_t carry = d;
    for (auto& limb : limbs) {
      std::uint64_t v = static_cast<std::uint64_t>(limb) * 16 + carry;
      limb = static_cast<std::uint32_t>(v % 1000000000u);
      carry = v / 1000000000u;
    }
    if (carry != 0) limbs.push_back(static_cast<std::uint32_t>(carry));
  }
  std::string out = std::to_string(limbs.back());
  for (auto it = limbs.rbegin() + 1; it != limbs.rend(); ++it) {
    std::string part = std::to_string(*it);
    out += std::string(9 - part.size(), '0') + part;
  }
  return out;
}

std::vector<DumpFunction> parse_disassembly(std::string_view text) {
  std::vector<DumpFunction> functions;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    line = rtrim(line);
    if (trim(line).empty()) continue;
    std::match_results<std::string_view::const_iterator> m;
    if (std::regex_match(line.begin(), line.end(), m, header_regex())) {
      functions.push_back(DumpFunction{m[2].str(), {}});
      continue;
    }
    auto raw = parse_instruction_line(line);
    if (!raw) {
      throw LineError(ErrorCode::kMalformedLine, line_no,
                      "not a function header or instruction: '" + std::string(line) + "'");
    }
    if (functions.empty()) {
      throw LineError(ErrorCode::kMalformedLine, line_no, "instruction before any function header");
    }
    functions.back().instructions.push_back(std::move(*raw));
  }
  if (functions.empty()) throw Error(ErrorCode::kEmptyDump, "no function header found");
  return functions;
}

std::vector<std::string> normalize_operand_text(std::string_view text) {
  std::string spaced;
  spaced.reserve(text.size() * 2);
  for (char c : text) {
    if (c == '%') continue;
    if (c == ',' || c == '(' || c == ')') {
      spaced += ' ';
      spaced += c;
      spaced += ' ';
    } else {
      spaced += c;
    }
  }
  std::vector<std::string> tokens;
  for (std::string_view tok : split_ws(spaced)) tokens.push_back(convert_hex_literals(tok));
  return tokens;
}

NormalizedInstruction normalize_instruction(const RawInstruction& raw, int index) {
  std::string_view operands = raw.operands;
  operands = operands.substr(0, operands.find_first_of("#<"));
  std::vector<std::string> tokens = normalize_operand_text(raw.mnemonic + " " + std::string(operands));
  // Direct branch targets are printed as bare hex followed by a <symbol> annotation.
  if (is_branch_mnemonic(raw.mnemonic) && raw.comment && raw.comment->starts_with('<') &&
      tokens.size() == 2 && is_lower_hex(tokens[1])) {
    tokens[1] = hex_to_decimal(tokens[1]);
  }
  return NormalizedInstruction(index, std::move(tokens));
}

AssemblyFunction normalize_dump_function(const DumpFunction& fn, std::string source_id,
                                         OptLevel opt_level) {
  AssemblyFunction out{std::move(source_id), opt_level, {}};
  out.instructions.reserve(fn.instructions.size());
  int index = 1;
  for (const auto& raw : fn.instructions) out.instructions.push_back(normalize_instruction(raw, index++));
  return out;
}

std::optional<NormalizedInstruction> parse_rendered_instruction(std::string_view line,
                                                                int expected_index) {
  auto words = split_ws(line);
  if (words.size() < 2) return std::nullopt;
  auto k = parse_inst_label(words.back());
  if (!k || *k != expected_index) return std::nullopt;
  std::string body;
  for (std::size_t i = 0; i + 1 < words.size(); ++i) {
    if (i) body += ' ';
    body += words[i];
  }
  auto tokens = normalize_operand_text(body);
  if (tokens.empty()) return std::nullopt;
  return NormalizedInstruction(expected_index, std::move(tokens));
}

AssemblyFunction normalize_function(std::string_view text, std::string source_id,
                                    OptLevel opt_level) {
  bool has_header = false;
  for (std::string_view line : split_lines(text)) {
    line = rtrim(line);
    if (std::regex_match(line.begin(), line.end(), header_regex())) {
      has_header = true;
      break;
    }
  }
  if (has_header) {
    auto functions = parse_disassembly(text);
    auto it = std::find_if(functions.begin(), functions.end(),
                           [&](const DumpFunction& f) { return f.name == source_id; });
    const DumpFunction& fn = it != functions.end() ? *it : functions.front();
    return normalize_dump_function(fn, std::move(source_id), opt_level);
  }

  AssemblyFunction out{std::move(source_id), opt_level, {}};
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    int index = static_cast<int>(out.instructions.size()) + 1;
    auto ins = parse_rendered_instruction(line, index);
    if (!ins) {
      throw LineError(ErrorCode::kMalformedLine, line_no,
                      "expected a normalized instruction ending in " + inst_label(index));
    }
    out.instructions.push_back(std::move(*ins));
  }
  if (out.instructions.empty()) throw Error(ErrorCode::kEmptyDump, "no instructions found");
  return out;
}

}  // namespace asmlm
