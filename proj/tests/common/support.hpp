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

// Independent oracles shared by the unit and acceptance suites.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "asmlm/attention_mask.hpp"
#include "asmlm/corpus.hpp"
#include "asmlm/model.hpp"
#include "asmlm/objectives.hpp"
#include "asmlm/random.hpp"
#include "asmlm/tokenizer.hpp"

namespace asmlm::testing {

// ---- Mask rules, evaluated literally per (q, k) ---------------------------

inline bool is_asm(const TokenMeta& m) { return m.kind == ChunkKind::kAsm; }

// Position of the label of instruction `instr` in ASM chunk `chunk`, or -1.
inline long label_position(const TokenSequence& seq, int chunk, int instr) {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const TokenMeta& m = seq.meta[i];
    if (is_asm(m) && m.chunk_index == chunk && m.instr_index == instr && m.is_inst_label) return static_cast<long>(i);
  }
  return -1;
}

inline bool oracle_allowed(const TokenSequence& seq, std::size_t q, std::size_t k) {
  if (k > q) return false;
  if (k == q) return true;
  const TokenMeta& a = seq.meta[q];
  const TokenMeta& b = seq.meta[k];
  bool r1 = is_asm(a) && is_asm(b) && a.chunk_index == b.chunk_index && a.instr_index == b.instr_index;
  bool r2 = is_asm(a) && a.instr_index > 1 && is_asm(b) && b.is_inst_label && b.chunk_index == a.chunk_index &&
            static_cast<long>(k) == label_position(seq, a.chunk_index, a.instr_index - 1);
  bool r3 = is_asm(a) && a.is_inst_label && is_asm(b) && b.is_inst_label && a.chunk_index == b.chunk_index &&
            b.instr_index < a.instr_index;
  bool r4 = !is_asm(a) && !is_asm(b);
  bool r5 = (is_asm(a) != is_asm(b)) && (is_asm(a) ? a.is_inst_label : b.is_inst_label);
  return r1 || r2 || r3 || r4 || r5;
}

inline AttentionMask oracle_mask(const TokenSequence& seq) {
  AttentionMask m(seq.size());
  for (std::size_t q = 0; q < seq.size(); ++q) {
    for (std::size_t k = 0; k < seq.size(); ++k) m.set(q, k, oracle_allowed(seq, q, k));
  }
  return m;
}

// Random mixed sequence with valid meta: BOS, then TEXT/SOURCE/ASM chunks.
// Token ids are drawn from [4, vocab).
inline TokenSequence random_sequence(Rng& rng, std::size_t max_len, int vocab = 50) {
  TokenSequence seq;
  seq.push_back(Vocab::kBos, TokenMeta{0, ChunkKind::kText, 0, false});
  std::size_t target = static_cast<std::size_t>(rng.range(1, static_cast<std::int64_t>(max_len)));
  int chunk = 0;
  while (seq.size() < target) {
    ++chunk;
    int kind = static_cast<int>(rng.index(3));
    std::size_t room = target - seq.size();
    if (kind < 2) {
      std::size_t len = static_cast<std::size_t>(rng.range(1, static_cast<std::int64_t>(std::min<std::size_t>(room, 6))));
      for (std::size_t i = 0; i < len; ++i) {
        seq.push_back(static_cast<int>(rng.range(4, vocab - 1)),
                      TokenMeta{chunk, kind == 0 ? ChunkKind::kText : ChunkKind::kSource, 0, false});
      }
    } else {
      int instr = 0;
      while (seq.size() < target) {
        ++instr;
        std::size_t body = static_cast<std::size_t>(rng.range(0, 3));
        body = std::min(body, target - seq.size() - 1);
        for (std::size_t i = 0; i < body; ++i) {
          seq.push_back(static_cast<int>(rng.range(4, vocab - 1)), TokenMeta{chunk, ChunkKind::kAsm, instr, false});
        }
        seq.push_back(static_cast<int>(rng.range(4, vocab - 1)), TokenMeta{chunk, ChunkKind::kAsm, instr, true});
        if (rng.index(3) == 0) break;
      }
    }
  }
  return seq;
}

// ---- Pass@k by subset enumeration ----------------------------------------

inline double pass_at_k_enumerate(int n, int c, int k) {
  // Samples 0..c-1 are correct. Average of "some chosen sample is correct"
  // over all k-subsets, walked in lexicographic order.
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  double hits = 0.0, total = 0.0;
  while (true) {
    total += 1.0;
    if (idx[0] < c) hits += 1.0;
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  return hits / total;
}

// ---- Finite differences ---------------------------------------------------

struct GroupError {
  std::string name;
  double rel_error = 0.0;
  double analytic_norm = 0.0;
  double numeric_norm = 0.0;
};

// Central differences of `loss` over every parameter; per-tensor relative
// error ||g - fd|| / max(||g||, ||fd||). Groups whose gradients are both
// below `floor` report 0.
inline std::vector<GroupError> finite_difference_check(ModelParams& params, const ModelParams& analytic,
                                                       const std::function<double(const ModelParams&)>& loss,
                                                       double h = 1e-4, double floor = 1e-9) {
  std::vector<GroupError> out;
  auto& data = params.data();
  for (const auto& t : params.tensors()) {
    double diff2 = 0.0, g2 = 0.0, fd2 = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::size_t p = t.offset + i;
      double saved = data[p];
      data[p] = saved + h;
      double lp = loss(params);
      data[p] = saved - h;
      double lm = loss(params);
      data[p] = saved;
      double fd = (lp - lm) / (2.0 * h);
      double g = analytic.data()[p];
      diff2 += (g - fd) * (g - fd);
      g2 += g * g;
      fd2 += fd * fd;
    }
    GroupError e{t.name, 0.0, std::sqrt(g2), std::sqrt(fd2)};
    double denom = std::max(e.analytic_norm, e.numeric_norm);
    if (denom > floor) e.rel_error = std::sqrt(diff2) / denom;
    out.push_back(e);
  }
  return out;
}

inline double max_rel_error(const std::vector<GroupError>& errors) {
  double m = 0.0;
  for (const auto& e : errors) m = std::max(m, e.rel_error);
  return m;
}

// ---- Loss harnesses over the public API ------------------------------------
// Each returns the loss and, when `grads` is non-null, accumulates its
// parameter gradient through forward/backward.

inline double lm_objective(const ModelParams& params, const TokenSequence& seq, ModelParams* grads) {
  ForwardResult fwd = forward(params, seq);
  std::vector<int> targets;
  std::vector<unsigned char> mask;
  next_token_targets(seq, targets, mask);
  LmLoss l = lm_loss(fwd.logits, targets, mask);
  if (grads) backward(params, fwd, nullptr, &l.d_logits, *grads);
  return l.loss;
}

struct PooledBatch {
  std::vector<ForwardResult> fwd;
  std::vector<std::vector<std::size_t>> pool;
  Mat embeddings;  // one row per sequence
};

inline PooledBatch pooled_forward(const ModelParams& params, const std::vector<TokenSequence>& seqs) {
  PooledBatch b;
  b.embeddings.resize(static_cast<Eigen::Index>(seqs.size()), params.config().d_model);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    b.fwd.push_back(forward(params, seqs[i]));
    b.pool.push_back(pooling_positions(seqs[i]));
    b.embeddings.row(static_cast<Eigen::Index>(i)) = mean_rows(b.fwd.back().hidden, b.pool.back()).transpose();
  }
  return b;
}

inline void pooled_backward(const ModelParams& params, const PooledBatch& b, const Mat& d_embeddings,
                            ModelParams& grads) {
  for (std::size_t i = 0; i < b.fwd.size(); ++i) {
    Mat dh = mean_rows_grad(b.fwd[i].ids.size(), d_embeddings.row(static_cast<Eigen::Index>(i)).transpose(), b.pool[i]);
    backward(params, b.fwd[i], &dh, nullptr, grads);
  }
}

// FCL over pairs (a[i], b[i]).
inline double fcl_objective(const ModelParams& params, const std::vector<TokenSequence>& a,
                            const std::vector<TokenSequence>& b, ModelParams* grads) {
  PooledBatch pa = pooled_forward(params, a), pb = pooled_forward(params, b);
  FclLoss l = fcl_loss(pa.embeddings, pb.embeddings);
  if (grads) {
    pooled_backward(params, pa, l.d_s, *grads);
    pooled_backward(params, pb, l.d_t, *grads);
  }
  return l.loss;
}

// OCL for one function given its sequences in form order.
inline double ocl_objective(const ModelParams& params, const std::vector<OptForm>& forms,
                            const std::vector<TokenSequence>& seqs, ModelParams* grads) {
  PooledBatch p = pooled_forward(params, seqs);
  FunctionForms f;
  f.forms = forms;
  for (Eigen::Index i = 0; i < p.embeddings.rows(); ++i) f.embeddings.push_back(p.embeddings.row(i).transpose());
  OclLoss l = ocl_loss({f});
  if (grads) {
    Mat d(p.embeddings.rows(), p.embeddings.cols());
    for (Eigen::Index i = 0; i < d.rows(); ++i) d.row(i) = l.d_embeddings[0][static_cast<std::size_t>(i)].transpose();
    pooled_backward(params, p, d, *grads);
  }
  return l.loss;
}

inline double bcsd_objective(const ModelParams& params, const std::vector<TokenSequence>& queries,
                             const std::vector<TokenSequence>& candidates, const std::vector<int>& positive,
                             ModelParams* grads) {
  PooledBatch pq = pooled_forward(params, queries), pc = pooled_forward(params, candidates);
  BcsdLoss l = bcsd_loss(pq.embeddings, pc.embeddings, positive);
  if (grads) {
    pooled_backward(params, pq, l.d_queries, *grads);
    pooled_backward(params, pc, l.d_candidates, *grads);
  }
  return l.loss;
}

// ---- Plain causal decoder, written with scalar loops ----------------------

inline Mat reference_causal_logits(const ModelParams& p, const TokenSequence& seq) {
  using Rows = std::vector<std::vector<double>>;
  const ModelConfig& c = p.config();
  const int n = static_cast<int>(seq.size()), d = c.d_model, H = c.n_heads, dh = d / H;
  auto W = [&](int t) { return p.mat(t); };
  auto layer_norm = [&](const Rows& in, int g, int b) {
    Rows out(in.size(), std::vector<double>(static_cast<std::size_t>(d)));
    for (std::size_t i = 0; i < in.size(); ++i) {
      double mean = 0.0, var = 0.0;
      for (double v : in[i]) mean += v;
      mean /= d;
      for (double v : in[i]) var += (v - mean) * (v - mean);
      var /= d;
      for (int j = 0; j < d; ++j) {
        out[i][static_cast<std::size_t>(j)] =
            (in[i][static_cast<std::size_t>(j)] - mean) / std::sqrt(var + 1e-5) * W(g)(0, j) + W(b)(0, j);
      }
    }
    return out;
  };
  auto affine = [&](const Rows& in, int w, int b) {
    ConstMatMap m = W(w);
    Rows out(in.size(), std::vector<double>(static_cast<std::size_t>(m.cols())));
    for (std::size_t i = 0; i < in.size(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        double s = W(b)(0, j);
        for (Eigen::Index k = 0; k < m.rows(); ++k) s += in[i][static_cast<std::size_t>(k)] * m(k, j);
        out[i][static_cast<std::size_t>(j)] = s;
      }
    }
    return out;
  };
  Rows x(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(d)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          W(p.tok_emb())(seq.ids[static_cast<std::size_t>(i)], j) + W(p.pos_emb())(i, j);
  for (int l = 0; l < c.n_layers; ++l) {
    const auto& L = p.layer(l);
    Rows a = layer_norm(x, L.ln1_g, L.ln1_b);
    Rows q = affine(a, L.wq, L.bq), k = affine(a, L.wk, L.bk), v = affine(a, L.wv, L.bv);
    Rows att(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(d), 0.0));
    for (int h = 0; h < H; ++h) {
      for (int i = 0; i < n; ++i) {
        std::vector<double> s(static_cast<std::size_t>(i + 1));
        double mx = -1e300;
        for (int j = 0; j <= i; ++j) {
          double dot = 0.0;
          for (int e = h * dh; e < (h + 1) * dh; ++e) dot += q[i][e] * k[j][e];
          s[static_cast<std::size_t>(j)] = dot / std::sqrt(static_cast<double>(dh));
          mx = std::max(mx, s[static_cast<std::size_t>(j)]);
        }
        double z = 0.0;
        for (double& sv : s) z += (sv = std::exp(sv - mx));
        for (int j = 0; j <= i; ++j)
          for (int e = h * dh; e < (h + 1) * dh; ++e) att[i][e] += s[static_cast<std::size_t>(j)] / z * v[j][e];
      }
    }
    Rows o = affine(att, L.wo, L.bo);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) x[i][j] += o[i][j];
    Rows hid = affine(layer_norm(x, L.ln2_g, L.ln2_b), L.w1, L.b1);
    for (auto& row : hid)
      for (double& u : row) u = 0.5 * u * (1.0 + std::erf(u / std::sqrt(2.0)));
    Rows f = affine(hid, L.w2, L.b2);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) x[i][j] += f[i][j];
  }
  Rows hidden = layer_norm(x, p.lnf_g(), p.lnf_b());
  Mat logits = Mat::Zero(n, c.vocab_size);
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < c.vocab_size; ++t) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += hidden[i][j] * (c.tied_output ? W(p.tok_emb())(t, j) : W(p.out_w())(j, t));
      logits(i, t) = s;
    }
  }
  return logits;
}

// ---- Fixtures -------------------------------------------------------------

inline std::vector<FunctionRecord> small_corpus(std::uint64_t seed, int n, int max_ops = 2, int max_params = 2) {
  SyntheticSpec spec;
  spec.seed = seed;
  spec.n_functions = n;
  spec.max_instructions = max_ops;
  spec.max_params = max_params;
  return generate_synthetic(spec);
}

inline ModelConfig tiny_config(int vocab, int d_model = 16, int n_heads = 4, int hier = 2) {
  ModelConfig c;
  c.vocab_size = vocab;
  c.n_layers = 2;
  c.n_heads = n_heads;
  c.d_model = d_model;
  c.d_ff = 2 * d_model;
  c.max_seq_len = 128;
  c.hierarchical_heads = hier;
  return c;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("asmlm_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace asmlm::testing
