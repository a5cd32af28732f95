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

// Decoder-only transformer with per-head attention masks.
//
// Pre-norm blocks: x += Attn(LN(x)); x += FFN(LN(x)), GELU feed-forward,
// learned absolute positions, final LayerNorm. In every layer heads
// [0, hierarchical_heads) use the hierarchical mask and the rest use the
// causal mask. Everything is double precision; backward() is the exact
// gradient of forward().

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "asmlm/attention_mask.hpp"
#include "asmlm/tokenizer.hpp"

namespace asmlm {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;

struct ModelConfig {
  int vocab_size = 0;
  int n_layers = 2;
  int n_heads = 4;
  int d_model = 64;
  int d_ff = 256;
  int max_seq_len = 2048;
  int hierarchical_heads = -1;  // -1: floor(n_heads / 2)
  bool tied_output = false;

  int head_dim() const { return d_model / n_heads; }
  int resolved_hierarchical_heads() const { return hierarchical_heads < 0 ? n_heads / 2 : hierarchical_heads; }
  void validate() const;  // throws Error(kInvalidArgument)

  bool operator==(const ModelConfig&) const = default;
};

struct TensorInfo {
  std::string name;
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

// All weights live in one flat buffer; named tensors are views into it. The
// same layout doubles as the gradient container.
class ModelParams {
 public:
  struct Layer {
    int ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;
  };

  ModelParams() = default;
  explicit ModelParams(const ModelConfig& config);  // zero-filled

  // Normal(0, std) matrices, zero biases, unit LayerNorm gains; deterministic.
  static ModelParams init(const ModelConfig& config, std::uint64_t seed, double std = 0.02);

  const ModelConfig& config() const { return config_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  std::size_t size() const { return data_.size(); }

  MatMap mat(int tensor);
  ConstMatMap mat(int tensor) const;

  int tok_emb() const { return tok_emb_; }
  int pos_emb() const { return pos_emb_; }
  const Layer& layer(int l) const { return layers_[static_cast<std::size_t>(l)]; }
  int lnf_g() const { return lnf_g_; }
  int lnf_b() const { return lnf_b_; }
  int out_w() const { return out_w_; }  // -1 when tied to tok_emb

  void set_zero();
  double norm() const;
  std::uint64_t checksum() const;  // FNV-1a over the raw bytes

  void save(const std::string& path) const;
  static ModelParams load(const std::string& path);

 private:
  int add_tensor(const std::string& name, int rows, int cols);

  ModelConfig config_;
  std::vector<double> data_;
  std::vector<TensorInfo> tensors_;
  std::vector<Layer> layers_;
  int tok_emb_ = -1, pos_emb_ = -1, lnf_g_ = -1, lnf_b_ = -1, out_w_ = -1;
};

enum class HeadMode { kHierarchical, kStandard };

struct LayerCache {
  Mat x_in;
  Mat ln1_xhat, ln1_out;
  Vec ln1_rstd;
  Mat q, k, v;
  std::vector<Mat> probs;  // per head, n x n
  Mat att_concat;
  Mat x_mid;
  Mat ln2_xhat, ln2_out;
  Vec ln2_rstd;
  Mat h_pre, h_act;
};

struct ForwardResult {
  Mat hidden;  // n x d_model, final LayerNorm output
  Mat logits;  // n x vocab
  std::vector<int> ids;
  AttentionMask hierarchical_mask;
  std::vector<HeadMode> head_modes;
  std::vector<LayerCache> layers;
  Mat final_in, final_xhat;
  Vec final_rstd;
};

struct ForwardOptions {
  // Forces every head onto the causal mask (a plain causal decoder).
  bool all_causal = false;
};

ForwardResult forward(const ModelParams& params, const TokenSequence& seq, const ForwardOptions& options = {});

// Accumulates into `grads` the gradient of a scalar loss whose partial
// derivatives w.r.t. the forward outputs are `d_hidden` and `d_logits`
// (either may be null).
void backward(const ModelParams& params, const ForwardResult& fwd, const Mat* d_hidden, const Mat* d_logits,
              ModelParams& grads);

// ---- Embeddings -----------------------------------------------------------

struct EmbeddingVector {
  Vec values;
  std::string function_id;
  int form = 0;  // -1 source, 0..3 = O0..O3
};

// Mean of the hidden rows at `positions`.
Vec mean_rows(const Mat& hidden, const std::vector<std::size_t>& positions);
// Scatters d(mean)/d(hidden) for `d_embedding` into an n x d matrix.
Mat mean_rows_grad(std::size_t n, const Vec& d_embedding, const std::vector<std::size_t>& positions);

// Sequence for one assembly function: BOS + ASM chunk.
TokenSequence assembly_sequence(const Vocab& vocab, const AssemblyFunction& fn, const EncodeOptions& options = {});
// Sequence for one source function: BOS + SOURCE chunk.
TokenSequence source_sequence(const Vocab& vocab, const std::string& source_text, const EncodeOptions& options = {});

// Positions pooled into a function embedding: [INST] labels for assembly,
// every SOURCE token (BOS excluded) for source.
std::vector<std::size_t> pooling_positions(const TokenSequence& seq);

EmbeddingVector embed_assembly(const ModelParams& params, const Vocab& vocab, const AssemblyFunction& fn,
                               const EncodeOptions& options = {});
EmbeddingVector embed_source(const ModelParams& params, const Vocab& vocab, const std::string& source_id,
                             const std::string& source_text, const EncodeOptions& options = {});

// ---- Sampling -------------------------------------------------------------

struct SamplingParams {
  double temperature = 0.2;
  double top_p = 0.95;
  int n_samples = 20;
  int max_new = 128;
  std::uint64_t seed = 0;
};

// Indices of the smallest highest-probability prefix whose mass reaches
// `top_p` (ties broken by lower id), in descending probability order.
std::vector<int> nucleus_support(const std::vector<double>& probs, double top_p);

// Softmax of logits / temperature in double precision.
std::vector<double> tempered_softmax(const double* logits, int vocab, double temperature);

// Continues `prompt` with SOURCE tokens until EOS (excluded from the result)
// or `max_new` tokens.
std::vector<std::vector<int>> generate(const ModelParams& params, const TokenSequence& prompt,
                                       const SamplingParams& sampling);

std::vector<int> greedy_decode(const ModelParams& params, const TokenSequence& prompt, int max_new);

}  // namespace asmlm
