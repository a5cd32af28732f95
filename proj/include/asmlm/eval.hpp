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

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "asmlm/corpus.hpp"
#include "asmlm/model.hpp"
#include "asmlm/pseudo_c.hpp"

namespace asmlm {

struct SampleOutcome {
  std::string task_id;
  int n = 0;
  int c = 0;
};

// 1 - C(n-c, k) / C(n, k), evaluated as a running product.
double pass_at_k(int n, int c, int k);
double pass_at_k(const SampleOutcome& outcome, int k);

constexpr std::size_t kDefaultJudgeBudget = 10000;

// True iff `candidate` parses and reproduces every expected output.
bool functional_judge(const std::string& candidate, const std::vector<pseudo_c::TestVector>& tests,
                      std::size_t step_budget = kDefaultJudgeBudget);

struct RetrievalPool {
  Mat queries;     // K x d
  Mat candidates;  // K x d
  std::vector<int> positive;
};

// Fraction of queries whose positive is the unique cosine-nearest candidate.
double recall_at_1(const RetrievalPool& pool);

// Mean Recall@1 over `n_pools` pools of K standard-normal embeddings.
double null_model_recall(int K, int dim, int n_pools, std::uint64_t seed);

// ---- Embedding export -----------------------------------------------------

// One row per (record, form present): source_id, form, values. Form -1 is the
// source text.
std::vector<EmbeddingVector> compute_embeddings(const ModelParams& params, const Vocab& vocab,
                                                const std::vector<FunctionRecord>& records,
                                                const std::vector<int>& forms, const EncodeOptions& options = {});
void write_embeddings_csv(const std::vector<EmbeddingVector>& rows, const std::string& path);
std::vector<EmbeddingVector> read_embeddings_csv(const std::string& path);

// ---- Attention statistics -------------------------------------------------

constexpr double kBroadAttentionThreshold = 0.3;

struct HeadReport {
  int layer = 0;
  int head = 0;
  HeadMode mode = HeadMode::kStandard;
  double disallowed_mass = 0.0;     // probability on hierarchically disallowed keys
  double max_row_sum_error = 0.0;   // max |row sum - 1|
  double broad_query_fraction = 0.0;
  bool broad = false;               // some query puts > 30% outside its own segment
  std::vector<double> segment_mass;  // parallel to AttentionReport::segments; sums to 1
};

struct AttentionReport {
  // Segment 0 holds TEXT/SOURCE tokens; then one per (ASM chunk, instruction).
  std::vector<std::string> segments;
  std::vector<int> token_segment;
  std::vector<HeadReport> heads;  // n_layers x n_heads, layer-major
};

AttentionReport attention_report(const ModelParams& params, const TokenSequence& seq);
void write_attention_report_csv(const AttentionReport& report, const std::string& path);

// ---- Task harnesses -------------------------------------------------------

struct BcdEvalConfig {
  SamplingParams sampling;
  int n_tests = 8;
  std::uint64_t test_seed = 0;
  std::vector<int> ks = {1, 10};
};

struct BcdEvalResult {
  std::vector<SampleOutcome> outcomes;                // "<source_id>:<level>"
  std::map<OptLevel, std::map<int, double>> pass_at;  // level -> k -> mean pass@k
};

BcdEvalResult evaluate_bcd(const ModelParams& params, const Vocab& vocab, const std::vector<FunctionRecord>& records,
                           const BcdEvalConfig& cfg, const EncodeOptions& options = {});

// Mean Recall@1 over `n_pools` pools of K records sampled without
// replacement; queries are O0, candidates O3.
double evaluate_bcsd(const ModelParams& params, const Vocab& vocab, const std::vector<FunctionRecord>& records, int K,
                     int n_pools, std::uint64_t seed, const EncodeOptions& options = {});

// Rows = benchmark, columns = O0..O3 and the average, one table per k.
void write_passk_csv(const std::string& benchmark, const BcdEvalResult& result, const std::string& path);
// Rows = benchmark, columns = pool sizes.
void write_recall_csv(const std::string& benchmark, const std::map<int, double>& recall_by_k, const std::string& path);

}  // namespace asmlm
