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

#include "asmlm/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "asmlm/error.hpp"

namespace asmlm {

std::string form_name(OptForm s) {
  if (s == kSourceForm) return "src";
  if (s >= 0 && s <= 3) return std::string(to_string(static_cast<OptLevel>(s)));
  throw Error(ErrorCode::kInvalidArgument, "form out of range: " + std::to_string(s));
}

LmLoss lm_loss(const Mat& logits, const std::vector<int>& targets, const std::vector<unsigned char>& mask) {
  const Eigen::Index n = logits.rows(), V = logits.cols();
  if (static_cast<Eigen::Index>(targets.size()) != n || static_cast<Eigen::Index>(mask.size()) != n) {
    throw Error(ErrorCode::kInvalidArgument, "lm_loss: shape mismatch");
  }
  std::size_t count = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
  if (count == 0) throw Error(ErrorCode::kAllMasked, "no positions to score");
  LmLoss out;
  out.d_logits = Mat::Zero(n, V);
  const double w = 1.0 / static_cast<double>(count);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    int t = targets[static_cast<std::size_t>(i)];
    if (t < 0 || t >= V) throw Error(ErrorCode::kInvalidArgument, "lm_loss: target out of range");
    double mx = logits.row(i).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp().matrix();
    double sum = e.sum();
    out.loss += (std::log(sum) + mx - logits(i, t)) * w;
    out.d_logits.row(i) = e * (w / sum);
    out.d_logits(i, t) -= w;
  }
  return out;
}

void next_token_targets(const TokenSequence& seq, std::vector<int>& targets, std::vector<unsigned char>& mask) {
  const std::size_t n = seq.size();
  targets.assign(n, Vocab::kPad);
  mask.assign(n, 0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    targets[i] = seq.ids[i + 1];
    mask[i] = 1;
  }
}

double l2_distance(const Vec& a, const Vec& b) { return (a - b).norm(); }

Vec l2_distance_grad(const Vec& a, const Vec& b) {
  double d = (a - b).norm();
  if (d == 0.0) return Vec::Zero(a.size());
  return (a - b) / d;
}

Mat pairwise_distances(const Mat& a, const Mat& b) {
  Mat d(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) d(i, j) = (a.row(i) - b.row(j)).norm();
  }
  return d;
}

ComplementSoftmaxLoss complement_softmax_loss(const Mat& distances, const std::vector<int>& positive, double cap) {
  const Eigen::Index nq = distances.rows(), K = distances.cols();
  if (static_cast<Eigen::Index>(positive.size()) != nq) {
    throw Error(ErrorCode::kInvalidArgument, "one positive index per query required");
  }
  ComplementSoftmaxLoss out;
  out.d_distances = Mat::Zero(nq, K);
  Mat q(nq, K);
  std::vector<double> ratio(static_cast<std::size_t>(nq));
  double total = 0.0;
  for (Eigen::Index i = 0; i < nq; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < K; ++j) {
      double v = distances(i, j);
      if (v > cap) {
        v = cap;
        ++out.clamped;
      }
      q(i, j) = v;
      mx = std::max(mx, v);
    }
    double sum = 0.0;
    for (Eigen::Index j = 0; j < K; ++j) {
      q(i, j) = std::exp(q(i, j) - mx);
      sum += q(i, j);
    }
    q.row(i) /= sum;
    double r = q(i, positive[static_cast<std::size_t>(i)]);
    ratio[static_cast<std::size_t>(i)] = r;
    total += 1.0 - r;
  }
  out.loss = -std::log(total);
  // dL/dD[i][j] = -(1/total) * d(1 - r_i)/dD[i][j] = (1/total) * r_i * (delta(j, pos_i) - q[i][j]).
  for (Eigen::Index i = 0; i < nq; ++i) {
    double r = ratio[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < K; ++j) {
      if (distances(i, j) > cap) continue;
      double delta = j == positive[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
      out.d_distances(i, j) = r * (delta - q(i, j)) / total;
    }
  }
  return out;
}

ComplementSoftmaxLoss fcl_loss_from_distances(const Mat& distances, double cap) {
  if (distances.rows() != distances.cols()) throw Error(ErrorCode::kInvalidArgument, "fcl: D must be square");
  if (distances.rows() < 2) throw Error(ErrorCode::kDegenerateBatch, "fcl needs at least 2 functions");
  std::vector<int> diag(static_cast<std::size_t>(distances.rows()));
  for (std::size_t i = 0; i < diag.size(); ++i) diag[i] = static_cast<int>(i);
  return complement_softmax_loss(distances, diag, cap);
}

namespace {

// Backpropagates dL/dD through D[i][j] = ||a_i - b_j||.
void distance_backward(const Mat& a, const Mat& b, const Mat& d_dist, Mat& d_a, Mat& d_b) {
  d_a = Mat::Zero(a.rows(), a.cols());
  d_b = Mat::Zero(b.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      if (d_dist(i, j) == 0.0) continue;
      Vec g = l2_distance_grad(a.row(i).transpose(), b.row(j).transpose()) * d_dist(i, j);
      d_a.row(i) += g.transpose();
      d_b.row(j) -= g.transpose();
    }
  }
}

}  // namespace

FclLoss fcl_loss(const Mat& e_s, const Mat& e_t, double cap) {
  if (e_s.rows() != e_t.rows() || e_s.cols() != e_t.cols()) throw Error(ErrorCode::kInvalidArgument, "fcl: shapes");
  ComplementSoftmaxLoss c = fcl_loss_from_distances(pairwise_distances(e_s, e_t), cap);
  FclLoss out;
  out.loss = c.loss;
  out.clamped = c.clamped;
  distance_backward(e_s, e_t, c.d_distances, out.d_s, out.d_t);
  return out;
}

ConstraintCheck fcl_constraint_satisfied(const std::vector<FunctionForms>& functions) {
  if (functions.size() < 2) throw Error(ErrorCode::kDegenerateBatch, "constraint needs at least 2 functions");
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < functions.size(); ++i) {
    const auto& ei = functions[i].embeddings;
    double intra = 0.0;
    for (std::size_t a = 0; a < ei.size(); ++a) {
      for (std::size_t b = a + 1; b < ei.size(); ++b) intra = std::max(intra, l2_distance(ei[a], ei[b]));
    }
    double inter = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < functions.size(); ++j) {
      if (j == i) continue;
      for (const auto& x : ei) {
        for (const auto& y : functions[j].embeddings) inter = std::min(inter, l2_distance(x, y));
      }
    }
    margin = std::min(margin, inter - intra);
  }
  return ConstraintCheck{margin > 0.0, margin};
}

void check_ocl_forms(const std::vector<OptForm>& forms) {
  if (forms.size() < 3) throw Error(ErrorCode::kInsufficientForms, "ocl needs at least 3 forms");
  for (std::size_t i = 0; i < forms.size(); ++i) {
    if (forms[i] < kSourceForm || forms[i] > 3 || (i > 0 && forms[i] != forms[i - 1] + 1)) {
      throw Error(ErrorCode::kInsufficientForms, "ocl forms must be a contiguous ascending run");
    }
  }
}

std::size_t ocl_triple_count(std::size_t n_forms) {
  return n_forms < 3 ? 0 : n_forms * (n_forms - 1) * (n_forms - 2) / 6;
}

double ocl_loss_from_distances(const std::vector<OptForm>& forms, const Mat& dist) {
  check_ocl_forms(forms);
  const std::size_t m = forms.size();
  double loss = 0.0;
  for (std::size_t s = 0; s < m; ++s) {
    for (std::size_t t1 = s + 1; t1 < m; ++t1) {
      for (std::size_t t2 = t1 + 1; t2 < m; ++t2) loss += std::max(0.0, dist(s, t1) - dist(s, t2));
    }
  }
  return loss;
}

OclLoss ocl_loss(const std::vector<FunctionForms>& functions) {
  OclLoss out;
  for (const auto& f : functions) {
    check_ocl_forms(f.forms);
    if (f.embeddings.size() != f.forms.size()) throw Error(ErrorCode::kInvalidArgument, "ocl: one embedding per form");
    const std::size_t m = f.forms.size();
    std::vector<Vec> grads(m, Vec::Zero(f.embeddings[0].size()));
    for (std::size_t s = 0; s < m; ++s) {
      for (std::size_t t1 = s + 1; t1 < m; ++t1) {
        for (std::size_t t2 = t1 + 1; t2 < m; ++t2) {
          double d1 = l2_distance(f.embeddings[s], f.embeddings[t1]);
          double d2 = l2_distance(f.embeddings[s], f.embeddings[t2]);
          if (d1 - d2 <= 0.0) continue;
          out.loss += d1 - d2;
          Vec g1 = l2_distance_grad(f.embeddings[s], f.embeddings[t1]);
          Vec g2 = l2_distance_grad(f.embeddings[s], f.embeddings[t2]);
          grads[s] += g1 - g2;
          grads[t1] -= g1;
          grads[t2] += g2;
        }
      }
    }
    out.d_embeddings.push_back(std::move(grads));
  }
  return out;
}

double combined_pretrain_loss(double lm, double fcl, double ocl, double lambda) { return lm + lambda * (fcl + ocl); }

std::string bcd_prompt(OptLevel level) {
  return "# This is the assembly code with " + std::string(to_string(level)) + " optimization:";
}

namespace {

TokenSequence bcd_prefix(const Vocab& vocab, const AssemblyFunction& fn, const std::string* source,
                         const EncodeOptions& options) {
  std::vector<Chunk> chunks = {Chunk::text_chunk(bcd_prompt(fn.opt_level)), Chunk::asm_chunk(fn)};
  if (source) chunks.push_back(Chunk::source_chunk(*source));
  EncodeOptions unlimited = options;
  unlimited.max_seq_len = std::numeric_limits<int>::max();
  return encode(chunks, vocab, unlimited);
}

}  // namespace

TokenSequence bcd_prompt_sequence(const Vocab& vocab, const AssemblyFunction& fn, const EncodeOptions& options) {
  TokenSequence seq = bcd_prefix(vocab, fn, nullptr, options);
  if (static_cast<int>(seq.size()) > options.max_seq_len) {
    throw Error(ErrorCode::kSequenceTooLong, "bcd prompt of " + std::to_string(seq.size()) + " tokens");
  }
  return seq;
}

BcdExample bcd_example(const Vocab& vocab, const AssemblyFunction& fn, const std::string& source_text,
                       const EncodeOptions& options) {
  BcdExample ex;
  ex.seq = bcd_prefix(vocab, fn, &source_text, options);
  ex.seq.push_back(Vocab::kEos, TokenMeta{3, ChunkKind::kSource, 0, false});
  if (static_cast<int>(ex.seq.size()) > options.max_seq_len) {
    throw Error(ErrorCode::kSequenceTooLong, "bcd example of " + std::to_string(ex.seq.size()) + " tokens > " +
                                                 std::to_string(options.max_seq_len));
  }
  next_token_targets(ex.seq, ex.targets, ex.mask);
  for (std::size_t i = 0; i + 1 < ex.seq.size(); ++i) {
    ex.mask[i] = ex.seq.meta[i + 1].kind == ChunkKind::kSource ? 1 : 0;
  }
  return ex;
}

double bcd_loss(const ModelParams& params, const BcdExample& example, ModelParams* grads) {
  ForwardResult fwd = forward(params, example.seq);
  LmLoss l = lm_loss(fwd.logits, example.targets, example.mask);
  if (grads) backward(params, fwd, nullptr, &l.d_logits, *grads);
  return l.loss;
}

BcsdLoss bcsd_loss(const Mat& queries, const Mat& candidates, const std::vector<int>& positive, double cap) {
  if (candidates.rows() < 2) throw Error(ErrorCode::kDegenerateBatch, "bcsd pool must hold at least 2 candidates");
  if (static_cast<Eigen::Index>(positive.size()) != queries.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "one positive index per query required");
  }
  for (std::size_t q = 0; q < positive.size(); ++q) {
    if (positive[q] < 0 || positive[q] >= candidates.rows()) {
      throw Error(ErrorCode::kNoPositive, "query " + std::to_string(q) + " has no positive candidate");
    }
  }
  ComplementSoftmaxLoss c = complement_softmax_loss(pairwise_distances(queries, candidates), positive, cap);
  BcsdLoss out;
  out.loss = c.loss;
  out.clamped = c.clamped;
  distance_backward(queries, candidates, c.d_distances, out.d_queries, out.d_candidates);
  return out;
}

}  // namespace asmlm
