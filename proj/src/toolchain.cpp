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

// Optional real-toolchain ingestion: compile each C file at every level,
// disassemble the object, keep the .text listing and normalize each symbol.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <regex>

#include "asmlm/corpus.hpp"
#include "asmlm/error.hpp"
#include "asmlm/text_util.hpp"

namespace asmlm {

namespace fs = std::filesystem;

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

std::string substitute(std::string tmpl, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    std::string needle = "{" + key + "}";
    std::size_t pos = 0;
    while ((pos = tmpl.find(needle, pos)) != std::string::npos) {
      tmpl.replace(pos, needle.size(), value);
      pos += value.size();
    }
  }
  return tmpl;
}

bool on_path(const std::string& program) {
  if (program.find('/') != std::string::npos) return access(program.c_str(), X_OK) == 0;
  const char* env = std::getenv("PATH");
  if (!env) return false;
  std::string_view path(env);
  std::size_t start = 0;
  while (start <= path.size()) {
    std::size_t colon = std::min(path.find(':', start), path.size());
    std::string dir(path.substr(start, colon - start));
    fs::path candidate = fs::path(dir.empty() ? "." : dir) / program;
    if (access(candidate.c_str(), X_OK) == 0) return true;
    start = colon + 1;
  }
  return false;
}

void probe(const std::string& tmpl) {
  auto words = split_ws(tmpl);
  if (words.empty()) throw Error(ErrorCode::kToolchainUnavailable, "empty command template");
  std::string program(words.front());
  if (!on_path(program)) throw Error(ErrorCode::kToolchainUnavailable, "'" + program + "' not found");
}

struct CommandResult {
  int status = -1;
  std::string output;
};

CommandResult run_capture(const std::string& cmd) {
  CommandResult r;
  FILE* pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  int st = pclose(pipe);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

// Best-effort extraction of `name(...) { ... }` from C text; whole file when
// the definition cannot be located.
std::string extract_c_function(const std::string& file_text, const std::string& name) {
  std::string escaped;
  for (char c : name) {
    if (std::string_view(".^$|()[]{}*+?\\").find(c) != std::string_view::npos) escaped += '\\';
    escaped += c;
  }
  std::regex def("(^|\\n)([^\\n;{}]*\\b" + escaped + "\\s*\\([^;{]*\\)\\s*)\\{");
  std::smatch m;
  if (!std::regex_search(file_text, m, def)) return file_text;
  std::size_t start = static_cast<std::size_t>(m.position(2));
  std::size_t brace = static_cast<std::size_t>(m.position(0) + m.length(0)) - 1;
  int depth = 0;
  for (std::size_t i = brace; i < file_text.size(); ++i) {
    if (file_text[i] == '{') ++depth;
    if (file_text[i] == '}' && --depth == 0) return file_text.substr(start, i + 1 - start);
  }
  return file_text;
}

}  // namespace

std::string extract_text_listing(std::string_view objdump_output) {
  static const std::regex section(R"(^Disassembly of section (\S+):$)");
  static const std::regex header(R"(^[0-9a-f]+ <.+>:$)");
  static const std::regex bytes_only(R"(^\s*[0-9a-f]+:\s+([0-9a-f]{2}\s*)+$)");
  std::string out;
  bool in_text = false;
  bool seen_section = false;
  for (std::string_view raw : split_lines(objdump_output)) {
    std::string line(rtrim(raw));
    std::smatch m;
    if (std::regex_match(line, m, section)) {
      seen_section = true;
      in_text = m[1] == ".text";
      continue;
    }
    if (seen_section && !in_text) continue;
    if (trim(line).empty()) {
      out += '\n';
      continue;
    }
    if (std::regex_match(line, header)) {
      in_text = true;
      out += line + '\n';
      continue;
    }
    if (!in_text || trim(line) == "..." || std::regex_match(line, bytes_only)) continue;
    out += line + '\n';
  }
  return out;
}

std::vector<FunctionRecord> ingest_toolchain(const std::string& source_dir,
                                             const ToolchainConfig& config,
                                             std::vector<std::string>* log) {
  probe(config.compile_template);
  probe(config.disassemble_template);
  auto note = [&](const std::string& msg) {
    if (log) log->push_back(msg);
  };

  std::vector<fs::path> sources;
  if (!fs::is_directory(source_dir)) throw Error(ErrorCode::kIo, "'" + source_dir + "' is not a directory");
  for (const auto& entry : fs::directory_iterator(source_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".c") sources.push_back(entry.path());
  }
  std::sort(sources.begin(), sources.end());

  fs::path tmp = fs::temp_directory_path() / ("asmlm-ingest-" + std::to_string(::getpid()));
  fs::create_directories(tmp);

  std::map<std::string, FunctionRecord> by_id;
  for (const auto& src : sources) {
    std::string file_text = read_file(src.string());
    std::string stem = src.stem().string();
    for (OptLevel level : config.levels) {
      std::string opt = "-" + std::string(to_string(level));
      fs::path obj = tmp / (stem + "_" + std::string(to_string(level)) + ".o");
      std::map<std::string, std::string> vars = {
          {"in", shell_quote(src.string())}, {"out", shell_quote(obj.string())}, {"opt", opt}};
      auto compiled = run_capture(substitute(config.compile_template, vars));
      if (compiled.status != 0) {
        note(src.filename().string() + " " + opt + ": compile failed");
        continue;
      }
      vars["in"] = shell_quote(obj.string());
      auto dumped = run_capture(substitute(config.disassemble_template, vars));
      if (dumped.status != 0) {
        note(src.filename().string() + " " + opt + ": disassembly failed");
        continue;
      }
      std::vector<DumpFunction> functions;
      try {
        functions = parse_disassembly(extract_text_listing(dumped.output));
      } catch (const Error& e) {
        note(src.filename().string() + " " + opt + ": " + e.what());
        continue;
      }
      for (const auto& fn : functions) {
        if (fn.instructions.empty()) {
          note(src.filename().string() + " " + opt + ": <" + fn.name + "> has no instructions");
          continue;
        }
        std::string id = stem + ":" + fn.name;
        auto& rec = by_id[id];
        if (rec.source_id.empty()) {
          rec.source_id = id;
          rec.source_text = extract_c_function(file_text, fn.name);
        }
        rec.asm_levels[level] = normalize_dump_function(fn, id, level);
      }
    }
  }
  std::error_code ec;
  fs::remove_all(tmp, ec);

  std::vector<FunctionRecord> out;
  for (auto& [id, rec] : by_id) out.push_back(std::move(rec));
  return out;
}

}  // namespace asmlm
