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

#include "asmlm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "asmlm/error.hpp"
#include "asmlm/objectives.hpp"
#include "asmlm/random.hpp"
#include "asmlm/text_util.hpp"

namespace asmlm {

double pass_at_k(int n, int c, int k) {
  if (n < 0 || c < 0 || c > n || k < 1) throw Error(ErrorCode::kInvalidArgument, "pass@k needs 0 <= c <= n, k >= 1");
  if (k > n) throw Error(ErrorCode::kKExceedsN, "k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));
  if (n - c < k) return 1.0;
  double miss = 1.0;
  for (int i = n - c + 1; i <= n; ++i) miss *= 1.0 - static_cast<double>(k) / i;
  return 1.0 - miss;
}

double pass_at_k(const SampleOutcome& outcome, int k) { return pass_at_k(outcome.n, outcome.c, k); }

bool functional_judge(const std::string& candidate, const std::vector<pseudo_c::TestVector>& tests,
                      std::size_t step_budget) {
  auto program = pseudo_c::Program::parse(candidate);
  if (!program) return false;
  for (const auto& t : tests) {
    if (program->arity() != t.inputs.size()) return false;
    auto out = program->run(t.inputs, step_budget);
    if (!out || *out != t.expected) return false;
  }
  return true;
}

double recall_at_1(const RetrievalPool& pool) {
  const Eigen::Index nq = pool.queries.rows();
  if (nq == 0) return 0.0;
  Mat q = pool.queries.rowwise().normalized();
  Mat c = pool.candidates.rowwise().normalized();
  Mat sim = q * c.transpose();
  int hits = 0;
  for (Eigen::Index i = 0; i < nq; ++i) {
    int p = pool.positive[static_cast<std::size_t>(i)];
    double best_other = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < sim.cols(); ++j) {
      if (j != p) best_other = std::max(best_other, sim(i, j));
    }
    if (sim(i, p) > best_other) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(nq);
}

double null_model_recall(int K, int dim, int n_pools, std::uint64_t seed) {
  if (K < 2 || dim < 1 || n_pools < 1) throw Error(ErrorCode::kInvalidArgument, "null model needs K >= 2");
  Rng rng(seed);
  double total = 0.0;
  for (int p = 0; p < n_pools; ++p) {
    RetrievalPool pool;
    pool.queries.resize(K, dim);
    pool.candidates.resize(K, dim);
    for (Eigen::Index i = 0; i < pool.queries.size(); ++i) pool.queries.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < pool.candidates.size(); ++i) pool.candidates.data()[i] = rng.normal();
    pool.positive.resize(static_cast<std::size_t>(K));
    std::iota(pool.positive.begin(), pool.positive.end(), 0);
    total += recall_at_1(pool);
  }
  return total / n_pools;
}

std::vector<EmbeddingVector> compute_embeddings(const ModelParams& params, const Vocab& vocab,
                                                const std::vector<FunctionRecord>& records,
                                                const std::vector<int>& forms, const EncodeOptions& options) {
  std::vector<EmbeddingVector> out;
  for (const auto& rec : records) {
    for (int f : forms) {
      if (f == kSourceForm) {
        out.push_back(embed_source(params, vocab, rec.source_id, rec.source_text, options));
      } else if (rec.has_level(static_cast<OptLevel>(f))) {
        out.push_back(embed_assembly(params, vocab, rec.asm_levels.at(static_cast<OptLevel>(f)), options));
      }
    }
  }
  return out;
}

void write_embeddings_csv(const std::vector<EmbeddingVector>& rows, const std::string& path) {
  std::ostringstream o;
  o.precision(17);
  std::size_t dim = rows.empty() ? 0 : static_cast<std::size_t>(rows[0].values.size());
  o << "source_id,form";
  for (std::size_t i = 0; i < dim; ++i) o << ",e" << i;
  o << '\n';
  for (const auto& r : rows) {
    o << r.function_id << ',' << form_name(r.form);
    for (Eigen::Index i = 0; i < r.values.size(); ++i) o << ',' << r.values(i);
    o << '\n';
  }
  write_file(path, o.str());
}

std::vector<EmbeddingVector> read_embeddings_csv(const std::string& path) {
  std::string text = read_file(path);
  std::vector<EmbeddingVector> out;
  std::size_t line_no = 0;
  for (auto raw : split_lines(text)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line_no == 1) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      cells.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cells.size() < 3) throw LineError(ErrorCode::kSchemaViolation, line_no, "embedding row too short");
    EmbeddingVector e;
    e.function_id = cells[0];
    if (cells[1] == "src") {
      e.form = kSourceForm;
    } else {
      try {
        e.form = static_cast<int>(parse_opt_level(cells[1]));
      } catch (const Error&) {
        throw LineError(ErrorCode::kSchemaViolation, line_no, "bad form '" + cells[1] + "'");
      }
    }
    e.values.resize(static_cast<Eigen::Index>(cells.size() - 2));
    for (std::size_t i = 2; i < cells.size(); ++i) {
      try {
        std::size_t used = 0;
        e.values(static_cast<Eigen::Index>(i - 2)) = std::stod(cells[i], &used);
        if (used != cells[i].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw LineError(ErrorCode::kSchemaViolation, line_no, "bad value '" + cells[i] + "'");
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

AttentionReport attention_report(const ModelParams& params, const TokenSequence& seq) {
  ForwardResult fwd = forward(params, seq);
  AttentionMask hier = fwd.hierarchical_mask.size() == seq.size() ? fwd.hierarchical_mask : build_hierarchical_mask(seq);
  const std::size_t n = seq.size();

  AttentionReport report;
  report.segments.push_back("text");
  std::map<std::pair<int, int>, int> seg_of;
  for (std::size_t i = 0; i < n; ++i) {
    const TokenMeta& m = seq.meta[i];
    if (m.kind != ChunkKind::kAsm) {
      report.token_segment.push_back(0);
      continue;
    }
    auto key = std::make_pair(m.chunk_index, m.instr_index);
    auto it = seg_of.find(key);
    if (it == seg_of.end()) {
      it = seg_of.emplace(key, static_cast<int>(report.segments.size())).first;
      report.segments.push_back("chunk" + std::to_string(m.chunk_index) + ":" + inst_label(m.instr_index));
    }
    report.token_segment.push_back(it->second);
  }

  // A query's own window: its instruction for ASM tokens, its chunk otherwise.
  auto same_window = [&](std::size_t q, std::size_t k) {
    const TokenMeta& a = seq.meta[q];
    const TokenMeta& b = seq.meta[k];
    if (a.kind == ChunkKind::kAsm) return report.token_segment[q] == report.token_segment[k];
    return a.chunk_index == b.chunk_index;
  };

  const ModelConfig& cfg = params.config();
  for (int l = 0; l < cfg.n_layers; ++l) {
    for (int h = 0; h < cfg.n_heads; ++h) {
      const Mat& p = fwd.layers[static_cast<std::size_t>(l)].probs[static_cast<std::size_t>(h)];
      HeadReport hr;
      hr.layer = l;
      hr.head = h;
      hr.mode = fwd.head_modes[static_cast<std::size_t>(h)];
      hr.segment_mass.assign(report.segments.size(), 0.0);
      std::size_t broad_queries = 0;
      for (std::size_t q = 0; q < n; ++q) {
        double row = 0.0, outside = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          double v = p(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(k));
          row += v;
          hr.segment_mass[static_cast<std::size_t>(report.token_segment[k])] += v;
          if (!hier.allowed(q, k)) hr.disallowed_mass += v;
          if (!same_window(q, k)) outside += v;
        }
        hr.max_row_sum_error = std::max(hr.max_row_sum_error, std::abs(row - 1.0));
        if (outside > kBroadAttentionThreshold) ++broad_queries;
      }
      for (double& m : hr.segment_mass) m /= static_cast<double>(n);
      hr.broad_query_fraction = static_cast<double>(broad_queries) / static_cast<double>(n);
      hr.broad = broad_queries > 0;
      report.heads.push_back(std::move(hr));
    }
  }
  return report;
}

void write_attention_report_csv(const AttentionReport& report, const std::string& path) {
  std::ostringstream o;
  o.precision(10);
  o << "layer,head,mode,disallowed_mass,max_row_sum_error,broad_query_fraction,broad";
  for (const auto& s : report.segments) o << ',' << s;
  o << '\n';
  for (const auto& h : report.heads) {
    o << h.layer << ',' << h.head << ',' << (h.mode == HeadMode::kHierarchical ? "hierarchical" : "standard") << ','
      << h.disallowed_mass << ',' << h.max_row_sum_error << ',' << h.broad_query_fraction << ',' << (h.broad ? 1 : 0);
    for (double m : h.segment_mass) o << ',' << m;
    o << '\n';
  }
  write_file(path, o.str());
}

BcdEvalResult evaluate_bcd(const ModelParams& params, const Vocab& vocab, const std::vector<FunctionRecord>& records,
                           const BcdEvalConfig& cfg, const EncodeOptions& options) {
  BcdEvalResult result;
  std::map<OptLevel, std::map<int, std::vector<double>>> per_level;
  for (const auto& rec : records) {
    std::vector<pseudo_c::TestVector> tests = make_test_vectors(rec.source_text, cfg.n_tests, cfg.test_seed);
    for (const auto& [level, fn] : rec.asm_levels) {
      TokenSequence prompt = bcd_prompt_sequence(vocab, fn, options);
      auto samples = generate(params, prompt, cfg.sampling);
      SampleOutcome o{rec.source_id + ":" + std::string(to_string(level)), static_cast<int>(samples.size()), 0};
      for (const auto& s : samples) {
        if (functional_judge(decode(s, vocab), tests)) ++o.c;
      }
      for (int k : cfg.ks) per_level[level][k].push_back(pass_at_k(o, k));
      result.outcomes.push_back(std::move(o));
    }
  }
  for (const auto& [level, by_k] : per_level) {
    for (const auto& [k, v] : by_k) {
      result.pass_at[level][k] = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    }
  }
  return result;
}

double evaluate_bcsd(const ModelParams& params, const Vocab& vocab, const std::vector<FunctionRecord>& records, int K,
                     int n_pools, std::uint64_t seed, const EncodeOptions& options) {
  std::vector<const FunctionRecord*> usable;
  for (const auto& r : records) {
    if (r.has_level(OptLevel::kO0) && r.has_level(OptLevel::kO3)) usable.push_back(&r);
  }
  if (K < 2) throw Error(ErrorCode::kDegenerateBatch, "pool size must be at least 2");
  if (static_cast<int>(usable.size()) < K) {
    throw Error(ErrorCode::kEmptyStageData, "only " + std::to_string(usable.size()) + " records have O0 and O3");
  }
  std::vector<Vec> q, c;
  for (const auto* r : usable) {
    q.push_back(embed_assembly(params, vocab, r->asm_levels.at(OptLevel::kO0), options).values);
    c.push_back(embed_assembly(params, vocab, r->asm_levels.at(OptLevel::kO3), options).values);
  }
  Rng rng(seed);
  double total = 0.0;
  std::vector<std::size_t> idx(usable.size());
  for (int p = 0; p < n_pools; ++p) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    rng.shuffle(idx.begin(), idx.end());
    RetrievalPool pool;
    const Eigen::Index d = q[0].size();
    pool.queries.resize(K, d);
    pool.candidates.resize(K, d);
    for (int i = 0; i < K; ++i) {
      pool.queries.row(i) = q[idx[static_cast<std::size_t>(i)]].transpose();
      pool.candidates.row(i) = c[idx[static_cast<std::size_t>(i)]].transpose();
      pool.positive.push_back(i);
    }
    total += recall_at_1(pool);
  }
  return total / n_pools;
}

void write_passk_csv(const std::string& benchmark, const BcdEvalResult& result, const std::string& path) {
  std::set<int> ks;
  for (const auto& [level, by_k] : result.pass_at) {
    for (const auto& [k, v] : by_k) ks.insert(k);
  }
  std::ostringstream o;
  o.precision(6);
  o << "metric,benchmark,O0,O1,O2,O3,avg\n";
  for (int k : ks) {
    o << "pass@" << k << ',' << benchmark;
    double sum = 0.0;
    int count = 0;
    for (OptLevel level : kAllOptLevels) {
      o << ',';
      auto it = result.pass_at.find(level);
      if (it != result.pass_at.end() && it->second.count(k)) {
        o << it->second.at(k);
        sum += it->second.at(k);
        ++count;
      }
    }
    o << ',';
    if (count) o << sum / count;
    o << '\n';
  }
  write_file(path, o.str());
}

void write_recall_csv(const std::string& benchmark, const std::map<int, double>& recall_by_k, const std::string& path) {
  std::ostringstream o;
  o.precision(6);
  o << "benchmark";
  for (const auto& [k, v] : recall_by_k) o << ",K=" << k;
  o << '\n' << benchmark;
  for (const auto& [k, v] : recall_by_k) o << ',' << v;
  o << '\n';
  write_file(path, o.str());
}

}  // namespace asmlm
