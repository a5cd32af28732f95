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

#include "asmlm/corpus.hpp"

#include <nlohmann/json.hpp>

#include <set>

#include "asmlm/error.hpp"
#include "asmlm/text_util.hpp"

namespace asmlm {

using nlohmann::json;

bool passes_cl_filter(const FunctionRecord& record) {
  for (OptLevel level : kAllOptLevels) {
    if (!record.has_level(level)) return false;
  }
  return record.asm_levels.at(OptLevel::kO2).render() != record.asm_levels.at(OptLevel::kO3).render();
}

std::vector<FunctionRecord> filter_for_cl(const std::vector<FunctionRecord>& records) {
  std::vector<FunctionRecord> out;
  for (const auto& r : records) {
    if (passes_cl_filter(r)) out.push_back(r);
  }
  return out;
}

std::string to_jsonl_line(const FunctionRecord& record) {
  json j;
  j["source_id"] = record.source_id;
  j["source"] = record.source_text;
  json levels = json::object();
  for (const auto& [level, fn] : record.asm_levels) {
    json lines = json::array();
    for (const auto& ins : fn.instructions) lines.push_back(ins.render());
    levels[std::string(to_string(level))] = std::move(lines);
  }
  j["asm"] = std::move(levels);
  if (!record.passes.empty()) {
    json passes = json::object();
    for (const auto& [level, names] : record.passes) passes[std::string(to_string(level))] = names;
    j["passes"] = std::move(passes);
  }
  return j.dump();
}

FunctionRecord parse_jsonl_line(std::string_view line, std::size_t line_no) {
  auto fail = [&](const std::string& what) -> FunctionRecord {
    throw LineError(ErrorCode::kSchemaViolation, line_no, what);
  };
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return fail("not a JSON object");
  if (!j.contains("source_id") || !j["source_id"].is_string()) return fail("missing string field 'source_id'");
  if (!j.contains("source") || !j["source"].is_string()) return fail("missing string field 'source'");
  if (!j.contains("asm") || !j["asm"].is_object()) return fail("missing object field 'asm'");

  FunctionRecord rec;
  rec.source_id = j["source_id"].get<std::string>();
  rec.source_text = j["source"].get<std::string>();
  for (const auto& [key, lines] : j["asm"].items()) {
    OptLevel level;
    try {
      level = parse_opt_level(key);
    } catch (const Error&) {
      return fail("unknown optimization level '" + key + "'");
    }
    if (!lines.is_array()) return fail("asm." + key + " must be an array");
    AssemblyFunction fn{rec.source_id, level, {}};
    for (const auto& item : lines) {
      if (!item.is_string()) return fail("asm." + key + " entries must be strings");
      int index = static_cast<int>(fn.instructions.size()) + 1;
      auto ins = parse_rendered_instruction(item.get<std::string>(), index);
      if (!ins) return fail("asm." + key + "[" + std::to_string(index - 1) + "] is not a normalized instruction");
      fn.instructions.push_back(std::move(*ins));
    }
    rec.asm_levels[level] = std::move(fn);
  }
  if (j.contains("passes")) {
    if (!j["passes"].is_object()) return fail("'passes' must be an object");
    for (const auto& [key, names] : j["passes"].items()) {
      OptLevel level;
      try {
        level = parse_opt_level(key);
      } catch (const Error&) {
        return fail("unknown optimization level '" + key + "' in passes");
      }
      if (!names.is_array()) return fail("passes." + key + " must be an array");
      auto& out = rec.passes[level];
      for (const auto& n : names) {
        if (!n.is_string()) return fail("passes." + key + " entries must be strings");
        out.push_back(n.get<std::string>());
      }
    }
  }
  return rec;
}

void save_jsonl(const std::vector<FunctionRecord>& records, const std::string& path) {
  std::string out;
  for (const auto& r : records) {
    out += to_jsonl_line(r);
    out += '\n';
  }
  write_file(path, out);
}

std::vector<FunctionRecord> load_jsonl(const std::string& path) {
  std::string text = read_file(path);
  std::vector<FunctionRecord> records;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    records.push_back(parse_jsonl_line(line, line_no));
    if (!ids.insert(records.back().source_id).second) {
      throw LineError(ErrorCode::kSchemaViolation, line_no, "duplicate source_id '" + records.back().source_id + "'");
    }
  }
  return records;
}

}  // namespace asmlm
