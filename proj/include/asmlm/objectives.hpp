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

// Training losses. Every loss returns its value together with the gradient
// w.r.t. its direct inputs (logits, distances or embeddings).

#pragma once

#include <string>
#include <vector>

#include "asmlm/model.hpp"

namespace asmlm {

// Form index: -1 source, 0..3 = O0..O3.
using OptForm = int;
constexpr OptForm kSourceForm = -1;
inline constexpr OptForm kAllForms[] = {-1, 0, 1, 2, 3};

std::string form_name(OptForm s);  // "src", "O0".."O3"

struct LmLoss {
  double loss = 0.0;
  Mat d_logits;  // n x V
};

// Mean NLL of targets[i] under softmax(logits.row(i)) over positions with
// mask[i] set.
LmLoss lm_loss(const Mat& logits, const std::vector<int>& targets, const std::vector<unsigned char>& mask);

// Next-token targets for a sequence: position i predicts ids[i + 1]; the
// last position is unscored.
void next_token_targets(const TokenSequence& seq, std::vector<int>& targets, std::vector<unsigned char>& mask);

double l2_distance(const Vec& a, const Vec& b);
// Gradient of ||a - b|| w.r.t. a (zero when a == b).
Vec l2_distance_grad(const Vec& a, const Vec& b);

// Rows are embeddings, one per function (or candidate).
Mat pairwise_distances(const Mat& a, const Mat& b);

struct ComplementSoftmaxLoss {
  double loss = 0.0;
  Mat d_distances;
  int clamped = 0;  // entries that hit the distance cap
};

// L = -log sum_q (1 - exp(D[q][pos[q]]) / sum_j exp(D[q][j])), with D
// clamped at `cap` (clamped entries receive zero gradient).
ComplementSoftmaxLoss complement_softmax_loss(const Mat& distances, const std::vector<int>& positive, double cap);

struct FclLoss {
  double loss = 0.0;
  Mat d_s, d_t;  // gradients w.r.t. the two embedding matrices
  int clamped = 0;
};

constexpr double kDefaultDistanceCap = 30.0;

// Diagonal-positive loss over D[i][j] = d(e_s[i], e_t[j]).
ComplementSoftmaxLoss fcl_loss_from_distances(const Mat& distances, double cap = kDefaultDistanceCap);
FclLoss fcl_loss(const Mat& e_s, const Mat& e_t, double cap = kDefaultDistanceCap);

struct FunctionForms {
  std::string function_id;
  std::vector<OptForm> forms;  // ascending
  std::vector<Vec> embeddings;
};

struct ConstraintCheck {
  bool satisfied = false;
  double margin = 0.0;  // min over functions of (nearest other function - farthest own form)
};

ConstraintCheck fcl_constraint_satisfied(const std::vector<FunctionForms>& functions);

struct OclLoss {
  double loss = 0.0;
  std::vector<std::vector<Vec>> d_embeddings;  // parallel to the input
};

// Forms must be a contiguous ascending run of at least three values of S.
void check_ocl_forms(const std::vector<OptForm>& forms);

// Sum over s < t1 < t2 of max(0, d(s,t1) - d(s,t2)).
OclLoss ocl_loss(const std::vector<FunctionForms>& functions);
// Same loss from a per-function distance table dist[a][b] over its forms.
double ocl_loss_from_distances(const std::vector<OptForm>& forms, const Mat& dist);
// Number of hinge triples for a form list.
std::size_t ocl_triple_count(std::size_t n_forms);

double combined_pretrain_loss(double lm, double fcl, double ocl, double lambda = 0.1);

// ---- Decompilation --------------------------------------------------------

std::string bcd_prompt(OptLevel level);

struct BcdExample {
  TokenSequence seq;
  std::vector<int> targets;
  std::vector<unsigned char> mask;  // true only where the target is a source token or EOS
};

// [BOS] prompt-text [ASM] source-tokens [EOS].
BcdExample bcd_example(const Vocab& vocab, const AssemblyFunction& fn, const std::string& source_text,
                       const EncodeOptions& options = {});
// Prompt without the target, ready for generation.
TokenSequence bcd_prompt_sequence(const Vocab& vocab, const AssemblyFunction& fn, const EncodeOptions& options = {});

// NLL of the target tokens; accumulates parameter gradients when `grads`
// is non-null.
double bcd_loss(const ModelParams& params, const BcdExample& example, ModelParams* grads = nullptr);

// ---- Similarity -----------------------------------------------------------

struct BcsdLoss {
  double loss = 0.0;
  Mat d_queries, d_candidates;
  int clamped = 0;
};

BcsdLoss bcsd_loss(const Mat& queries, const Mat& candidates, const std::vector<int>& positive,
                   double cap = kDefaultDistanceCap);

}  // namespace asmlm
