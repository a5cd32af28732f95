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

#include "asmlm/model.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "asmlm/error.hpp"
#include "asmlm/random.hpp"

namespace asmlm {

namespace {

constexpr double kLnEps = 1e-5;
constexpr char kCheckpointMagic[8] = {'A', 'S', 'M', 'L', 'M', 'C', 'K', '1'};
constexpr int kCheckpointVersion = 1;

void layer_norm(const Mat& x, ConstMatMap g, ConstMatMap b, Mat& xhat, Vec& rstd, Mat& y) {
  const Eigen::Index n = x.rows(), d = x.cols();
  xhat.resize(n, d);
  rstd.resize(n);
  y.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    double mean = x.row(i).sum() / static_cast<double>(d);
    double var = (x.row(i).array() - mean).square().sum() / static_cast<double>(d);
    double r = 1.0 / std::sqrt(var + kLnEps);
    rstd(i) = r;
    xhat.row(i) = (x.row(i).array() - mean) * r;
    y.row(i) = xhat.row(i).array() * g.row(0).array() + b.row(0).array();
  }
}

// dy -> dx, accumulating dg/db.
Mat layer_norm_backward(const Mat& dy, const Mat& xhat, const Vec& rstd, ConstMatMap g, MatMap dg, MatMap db) {
  const Eigen::Index n = dy.rows(), d = dy.cols();
  Mat dx(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    dg.row(0).array() += dy.row(i).array() * xhat.row(i).array();
    db.row(0) += dy.row(i);
    Eigen::RowVectorXd dxhat = (dy.row(i).array() * g.row(0).array()).matrix();
    double m1 = dxhat.sum() / static_cast<double>(d);
    double m2 = dxhat.cwiseProduct(xhat.row(i)).sum() / static_cast<double>(d);
    dx.row(i) = rstd(i) * (dxhat.array() - m1 - xhat.row(i).array() * m2);
  }
  return dx;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))) + x * std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

bool head_allows(const ForwardResult& fwd, int head, std::size_t q, std::size_t k) {
  if (fwd.head_modes[static_cast<std::size_t>(head)] == HeadMode::kHierarchical) {
    return fwd.hierarchical_mask.allowed(q, k);
  }
  return k <= q;
}

}  // namespace

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidArgument, "model config: " + msg); };
  if (vocab_size < 1) fail("vocab_size must be >= 1");
  if (n_layers < 1 || n_heads < 1 || d_model < 1 || d_ff < 1 || max_seq_len < 1) fail("sizes must be >= 1");
  if (d_model % n_heads != 0) fail("d_model must be divisible by n_heads");
  int h = resolved_hierarchical_heads();
  if (h < 0 || h > n_heads) fail("hierarchical_heads must be in [0, n_heads]");
}

int ModelParams::add_tensor(const std::string& name, int rows, int cols) {
  TensorInfo t{name, data_.size(), rows, cols};
  data_.resize(data_.size() + t.size(), 0.0);
  tensors_.push_back(t);
  return static_cast<int>(tensors_.size()) - 1;
}

ModelParams::ModelParams(const ModelConfig& config) : config_(config) {
  config_.validate();
  const int d = config_.d_model, f = config_.d_ff;
  tok_emb_ = add_tensor("tok_emb", config_.vocab_size, d);
  pos_emb_ = add_tensor("pos_emb", config_.max_seq_len, d);
  for (int l = 0; l < config_.n_layers; ++l) {
    std::string p = "layer" + std::to_string(l) + ".";
    Layer L{};
    L.ln1_g = add_tensor(p + "ln1.g", 1, d);
    L.ln1_b = add_tensor(p + "ln1.b", 1, d);
    L.wq = add_tensor(p + "attn.wq", d, d);
    L.bq = add_tensor(p + "attn.bq", 1, d);
    L.wk = add_tensor(p + "attn.wk", d, d);
    L.bk = add_tensor(p + "attn.bk", 1, d);
    L.wv = add_tensor(p + "attn.wv", d, d);
    L.bv = add_tensor(p + "attn.bv", 1, d);
    L.wo = add_tensor(p + "attn.wo", d, d);
    L.bo = add_tensor(p + "attn.bo", 1, d);
    L.ln2_g = add_tensor(p + "ln2.g", 1, d);
    L.ln2_b = add_tensor(p + "ln2.b", 1, d);
    L.w1 = add_tensor(p + "ffn.w1", d, f);
    L.b1 = add_tensor(p + "ffn.b1", 1, f);
    L.w2 = add_tensor(p + "ffn.w2", f, d);
    L.b2 = add_tensor(p + "ffn.b2", 1, d);
    layers_.push_back(L);
  }
  lnf_g_ = add_tensor("lnf.g", 1, d);
  lnf_b_ = add_tensor("lnf.b", 1, d);
  if (!config_.tied_output) out_w_ = add_tensor("out.w", d, config_.vocab_size);
}

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed, double std) {
  ModelParams p(config);
  Rng rng(seed);
  for (const auto& t : p.tensors_) {
    bool is_gain = t.name.ends_with(".g");
    bool is_bias = t.rows == 1 && !is_gain;
    for (std::size_t i = 0; i < t.size(); ++i) {
      double& v = p.data_[t.offset + i];
      if (is_gain) {
        v = 1.0;
      } else if (is_bias) {
        v = 0.0;
      } else {
        v = std * rng.normal();
      }
    }
  }
  return p;
}

MatMap ModelParams::mat(int tensor) {
  const auto& t = tensors_[static_cast<std::size_t>(tensor)];
  return MatMap(data_.data() + t.offset, t.rows, t.cols);
}

ConstMatMap ModelParams::mat(int tensor) const {
  const auto& t = tensors_[static_cast<std::size_t>(tensor)];
  return ConstMatMap(data_.data() + t.offset, t.rows, t.cols);
}

void ModelParams::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

double ModelParams::norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

std::uint64_t ModelParams::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(data_.data());
  for (std::size_t i = 0; i < data_.size() * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

void ModelParams::save(const std::string& path) const {
  nlohmann::ordered_json header;
  header["version"] = kCheckpointVersion;
  header["config"] = {{"vocab_size", config_.vocab_size},
                      {"n_layers", config_.n_layers},
                      {"n_heads", config_.n_heads},
                      {"d_model", config_.d_model},
                      {"d_ff", config_.d_ff},
                      {"max_seq_len", config_.max_seq_len},
                      {"hierarchical_heads", config_.resolved_hierarchical_heads()},
                      {"tied_output", config_.tied_output}};
  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  for (const auto& t : tensors_) tensors.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
  header["tensors"] = tensors;
  header["dtype"] = "f64le";
  std::string h = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  std::uint64_t len = h.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  out.write(reinterpret_cast<const char*>(data_.data()), static_cast<std::streamsize>(data_.size() * sizeof(double)));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path);
}

ModelParams ModelParams::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw Error(ErrorCode::kSchemaViolation, path + " is not a checkpoint");
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (1u << 26)) throw Error(ErrorCode::kSchemaViolation, "bad checkpoint header length");
  std::string h(len, '\0');
  in.read(h.data(), static_cast<std::streamsize>(len));
  auto header = nlohmann::json::parse(h, nullptr, false);
  if (header.is_discarded() || !header.is_object()) throw Error(ErrorCode::kSchemaViolation, "bad checkpoint header");
  try {
    if (header.at("version").get<int>() != kCheckpointVersion) {
      throw Error(ErrorCode::kSchemaViolation, "unsupported checkpoint version");
    }
    const auto& c = header.at("config");
    ModelConfig cfg;
    cfg.vocab_size = c.at("vocab_size").get<int>();
    cfg.n_layers = c.at("n_layers").get<int>();
    cfg.n_heads = c.at("n_heads").get<int>();
    cfg.d_model = c.at("d_model").get<int>();
    cfg.d_ff = c.at("d_ff").get<int>();
    cfg.max_seq_len = c.at("max_seq_len").get<int>();
    cfg.hierarchical_heads = c.at("hierarchical_heads").get<int>();
    cfg.tied_output = c.at("tied_output").get<bool>();
    ModelParams p(cfg);
    const auto& tensors = header.at("tensors");
    if (tensors.size() != p.tensors_.size()) throw Error(ErrorCode::kSchemaViolation, "tensor count mismatch");
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const auto& t = p.tensors_[i];
      if (tensors[i].at("name").get<std::string>() != t.name || tensors[i].at("rows").get<int>() != t.rows ||
          tensors[i].at("cols").get<int>() != t.cols) {
        throw Error(ErrorCode::kSchemaViolation, "tensor layout mismatch at " + t.name);
      }
    }
    in.read(reinterpret_cast<char*>(p.data_.data()), static_cast<std::streamsize>(p.data_.size() * sizeof(double)));
    if (!in) throw Error(ErrorCode::kSchemaViolation, "truncated checkpoint");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, std::string("checkpoint header: ") + e.what());
  }
}

ForwardResult forward(const ModelParams& params, const TokenSequence& seq, const ForwardOptions& options) {
  const ModelConfig& cfg = params.config();
  const int n = static_cast<int>(seq.size());
  if (n == 0) throw Error(ErrorCode::kEmptyInput, "empty sequence");
  if (n > cfg.max_seq_len) {
    throw Error(ErrorCode::kSequenceTooLong,
                std::to_string(n) + " tokens > max_seq_len " + std::to_string(cfg.max_seq_len));
  }
  const int d = cfg.d_model, H = cfg.n_heads, dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  ForwardResult fwd;
  fwd.ids = seq.ids;
  int n_hier = options.all_causal ? 0 : cfg.resolved_hierarchical_heads();
  for (int h = 0; h < H; ++h) fwd.head_modes.push_back(h < n_hier ? HeadMode::kHierarchical : HeadMode::kStandard);
  if (n_hier > 0) fwd.hierarchical_mask = build_hierarchical_mask(seq);

  ConstMatMap tok = params.mat(params.tok_emb());
  ConstMatMap pos = params.mat(params.pos_emb());
  Mat x(n, d);
  for (int i = 0; i < n; ++i) {
    int id = seq.ids[static_cast<std::size_t>(i)];
    if (id < 0 || id >= cfg.vocab_size) throw Error(ErrorCode::kInvalidArgument, "token id out of range");
    x.row(i) = tok.row(id) + pos.row(i);
  }

  fwd.layers.resize(static_cast<std::size_t>(cfg.n_layers));
  for (int l = 0; l < cfg.n_layers; ++l) {
    const auto& L = params.layer(l);
    LayerCache& c = fwd.layers[static_cast<std::size_t>(l)];
    c.x_in = x;
    layer_norm(x, params.mat(L.ln1_g), params.mat(L.ln1_b), c.ln1_xhat, c.ln1_rstd, c.ln1_out);
    c.q = (c.ln1_out * params.mat(L.wq)).rowwise() + params.mat(L.bq).row(0);
    c.k = (c.ln1_out * params.mat(L.wk)).rowwise() + params.mat(L.bk).row(0);
    c.v = (c.ln1_out * params.mat(L.wv)).rowwise() + params.mat(L.bv).row(0);
    c.att_concat.resize(n, d);
    c.probs.resize(static_cast<std::size_t>(H));
    for (int h = 0; h < H; ++h) {
      Mat s = (c.q.middleCols(h * dh, dh) * c.k.middleCols(h * dh, dh).transpose()) * scale;
      Mat& p = c.probs[static_cast<std::size_t>(h)];
      p = Mat::Zero(n, n);
      for (int qi = 0; qi < n; ++qi) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int ki = 0; ki <= qi; ++ki) {
          if (head_allows(fwd, h, qi, ki)) mx = std::max(mx, s(qi, ki));
        }
        double sum = 0.0;
        for (int ki = 0; ki <= qi; ++ki) {
          if (head_allows(fwd, h, qi, ki)) {
            double e = std::exp(s(qi, ki) - mx);
            p(qi, ki) = e;
            sum += e;
          }
        }
        p.row(qi) /= sum;
      }
      c.att_concat.middleCols(h * dh, dh) = p * c.v.middleCols(h * dh, dh);
    }
    x = x + ((c.att_concat * params.mat(L.wo)).rowwise() + params.mat(L.bo).row(0));
    c.x_mid = x;
    layer_norm(x, params.mat(L.ln2_g), params.mat(L.ln2_b), c.ln2_xhat, c.ln2_rstd, c.ln2_out);
    c.h_pre = (c.ln2_out * params.mat(L.w1)).rowwise() + params.mat(L.b1).row(0);
    c.h_act = c.h_pre.unaryExpr([](double v) { return gelu(v); });
    x = x + ((c.h_act * params.mat(L.w2)).rowwise() + params.mat(L.b2).row(0));
  }
  fwd.final_in = x;
  layer_norm(x, params.mat(params.lnf_g()), params.mat(params.lnf_b()), fwd.final_xhat, fwd.final_rstd, fwd.hidden);
  if (cfg.tied_output) {
    fwd.logits = fwd.hidden * tok.transpose();
  } else {
    fwd.logits = fwd.hidden * params.mat(params.out_w());
  }
  return fwd;
}

void backward(const ModelParams& params, const ForwardResult& fwd, const Mat* d_hidden, const Mat* d_logits,
              ModelParams& grads) {
  const ModelConfig& cfg = params.config();
  if (grads.size() != params.size()) throw Error(ErrorCode::kInvalidArgument, "gradient buffer layout mismatch");
  const int n = static_cast<int>(fwd.ids.size());
  const int d = cfg.d_model, H = cfg.n_heads, dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  ConstMatMap tok = params.mat(params.tok_emb());
  MatMap g_tok = grads.mat(grads.tok_emb());

  Mat dh_out = Mat::Zero(n, d);
  if (d_hidden) dh_out += *d_hidden;
  if (d_logits) {
    if (cfg.tied_output) {
      dh_out += *d_logits * tok;
      g_tok += d_logits->transpose() * fwd.hidden;
    } else {
      dh_out += *d_logits * params.mat(params.out_w()).transpose();
      grads.mat(grads.out_w()) += fwd.hidden.transpose() * *d_logits;
    }
  }

  Mat dx = layer_norm_backward(dh_out, fwd.final_xhat, fwd.final_rstd, params.mat(params.lnf_g()),
                               grads.mat(grads.lnf_g()), grads.mat(grads.lnf_b()));

  for (int l = cfg.n_layers - 1; l >= 0; --l) {
    const auto& L = params.layer(l);
    const auto& G = grads.layer(l);
    const LayerCache& c = fwd.layers[static_cast<std::size_t>(l)];

    // Feed-forward sublayer.
    grads.mat(G.w2) += c.h_act.transpose() * dx;
    grads.mat(G.b2).row(0) += dx.colwise().sum();
    Mat d_act = dx * params.mat(L.w2).transpose();
    Mat d_pre = d_act.cwiseProduct(c.h_pre.unaryExpr([](double v) { return gelu_grad(v); }));
    grads.mat(G.w1) += c.ln2_out.transpose() * d_pre;
    grads.mat(G.b1).row(0) += d_pre.colwise().sum();
    Mat d_ln2 = d_pre * params.mat(L.w1).transpose();
    dx += layer_norm_backward(d_ln2, c.ln2_xhat, c.ln2_rstd, params.mat(L.ln2_g), grads.mat(G.ln2_g),
                              grads.mat(G.ln2_b));

    // Attention sublayer.
    grads.mat(G.wo) += c.att_concat.transpose() * dx;
    grads.mat(G.bo).row(0) += dx.colwise().sum();
    Mat d_concat = dx * params.mat(L.wo).transpose();
    Mat dq(n, d), dk(n, d), dv(n, d);
    for (int h = 0; h < H; ++h) {
      const Mat& p = c.probs[static_cast<std::size_t>(h)];
      Mat d_o = d_concat.middleCols(h * dh, dh);
      Mat dp = d_o * c.v.middleCols(h * dh, dh).transpose();
      dv.middleCols(h * dh, dh) = p.transpose() * d_o;
      // Disallowed entries have p == 0, so their score gradient is exactly 0.
      Mat ds(n, n);
      for (int qi = 0; qi < n; ++qi) {
        double dot = p.row(qi).dot(dp.row(qi));
        ds.row(qi) = p.row(qi).array() * (dp.row(qi).array() - dot);
      }
      ds *= scale;
      dq.middleCols(h * dh, dh) = ds * c.k.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh) = ds.transpose() * c.q.middleCols(h * dh, dh);
    }
    grads.mat(G.wq) += c.ln1_out.transpose() * dq;
    grads.mat(G.bq).row(0) += dq.colwise().sum();
    grads.mat(G.wk) += c.ln1_out.transpose() * dk;
    grads.mat(G.bk).row(0) += dk.colwise().sum();
    grads.mat(G.wv) += c.ln1_out.transpose() * dv;
    grads.mat(G.bv).row(0) += dv.colwise().sum();
    Mat d_ln1 = dq * params.mat(L.wq).transpose() + dk * params.mat(L.wk).transpose() +
                dv * params.mat(L.wv).transpose();
    dx += layer_norm_backward(d_ln1, c.ln1_xhat, c.ln1_rstd, params.mat(L.ln1_g), grads.mat(G.ln1_g),
                              grads.mat(G.ln1_b));
  }

  MatMap g_pos = grads.mat(grads.pos_emb());
  for (int i = 0; i < n; ++i) {
    g_tok.row(fwd.ids[static_cast<std::size_t>(i)]) += dx.row(i);
    g_pos.row(i) += dx.row(i);
  }
}

// ---- Embeddings -----------------------------------------------------------

Vec mean_rows(const Mat& hidden, const std::vector<std::size_t>& positions) {
  if (positions.empty()) throw Error(ErrorCode::kEmptyInput, "no positions to pool");
  Vec acc = Vec::Zero(hidden.cols());
  for (auto p : positions) acc += hidden.row(static_cast<Eigen::Index>(p)).transpose();
  return acc / static_cast<double>(positions.size());
}

Mat mean_rows_grad(std::size_t n, const Vec& d_embedding, const std::vector<std::size_t>& positions) {
  Mat g = Mat::Zero(static_cast<Eigen::Index>(n), d_embedding.size());
  const double w = 1.0 / static_cast<double>(positions.size());
  for (auto p : positions) g.row(static_cast<Eigen::Index>(p)) += w * d_embedding.transpose();
  return g;
}

TokenSequence assembly_sequence(const Vocab& vocab, const AssemblyFunction& fn, const EncodeOptions& options) {
  return encode({Chunk::asm_chunk(fn)}, vocab, options);
}

TokenSequence source_sequence(const Vocab& vocab, const std::string& source_text, const EncodeOptions& options) {
  return encode({Chunk::source_chunk(source_text)}, vocab, options);
}

std::vector<std::size_t> pooling_positions(const TokenSequence& seq) {
  std::vector<std::size_t> labels = seq.label_positions();
  if (!labels.empty()) return labels;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seq.meta[i].kind == ChunkKind::kSource) out.push_back(i);
  }
  return out;
}

EmbeddingVector embed_assembly(const ModelParams& params, const Vocab& vocab, const AssemblyFunction& fn,
                               const EncodeOptions& options) {
  TokenSequence seq = assembly_sequence(vocab, fn, options);
  ForwardResult fwd = forward(params, seq);
  return EmbeddingVector{mean_rows(fwd.hidden, seq.label_positions()), fn.source_id, static_cast<int>(fn.opt_level)};
}

EmbeddingVector embed_source(const ModelParams& params, const Vocab& vocab, const std::string& source_id,
                             const std::string& source_text, const EncodeOptions& options) {
  TokenSequence seq = source_sequence(vocab, source_text, options);
  std::vector<std::size_t> pos = pooling_positions(seq);
  if (pos.empty()) throw Error(ErrorCode::kEmptyInput, "source function '" + source_id + "' has no tokens");
  ForwardResult fwd = forward(params, seq);
  return EmbeddingVector{mean_rows(fwd.hidden, pos), source_id, -1};
}

// ---- Sampling -------------------------------------------------------------

std::vector<double> tempered_softmax(const double* logits, int vocab, double temperature) {
  std::vector<double> p(static_cast<std::size_t>(vocab));
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < vocab; ++i) mx = std::max(mx, logits[i] / temperature);
  double sum = 0.0;
  for (int i = 0; i < vocab; ++i) {
    p[static_cast<std::size_t>(i)] = std::exp(logits[i] / temperature - mx);
    sum += p[static_cast<std::size_t>(i)];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<int> nucleus_support(const std::vector<double>& probs, double top_p) {
  std::vector<int> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(b)];
  });
  std::vector<int> out;
  double mass = 0.0;
  for (int id : order) {
    out.push_back(id);
    mass += probs[static_cast<std::size_t>(id)];
    if (mass >= top_p) break;
  }
  return out;
}

namespace {

void check_sampling(const SamplingParams& s) {
  if (!(s.temperature > 0.0) || !std::isfinite(s.temperature)) {
    throw Error(ErrorCode::kInvalidSamplingParams, "temperature must be > 0");
  }
  if (!(s.top_p > 0.0 && s.top_p <= 1.0)) throw Error(ErrorCode::kInvalidSamplingParams, "top_p must be in (0, 1]");
  if (s.n_samples < 1 || s.max_new < 0) throw Error(ErrorCode::kInvalidSamplingParams, "n_samples >= 1, max_new >= 0");
}

template <typename Pick>
std::vector<int> decode_loop(const ModelParams& params, const TokenSequence& prompt, int max_new, Pick pick) {
  TokenSequence seq = prompt;
  std::vector<int> out;
  const int max_len = params.config().max_seq_len;
  for (int step = 0; step < max_new && static_cast<int>(seq.size()) < max_len; ++step) {
    ForwardResult fwd = forward(params, seq);
    const double* row = fwd.logits.row(fwd.logits.rows() - 1).data();
    int next = pick(row, params.config().vocab_size);
    if (next == Vocab::kEos) break;
    out.push_back(next);
    seq.push_back(next, TokenMeta{seq.meta.back().chunk_index, ChunkKind::kSource, 0, false});
  }
  return out;
}

}  // namespace

std::vector<std::vector<int>> generate(const ModelParams& params, const TokenSequence& prompt,
                                       const SamplingParams& sampling) {
  check_sampling(sampling);
  Rng rng(sampling.seed);
  std::vector<std::vector<int>> samples;
  for (int s = 0; s < sampling.n_samples; ++s) {
    samples.push_back(decode_loop(params, prompt, sampling.max_new, [&](const double* logits, int vocab) {
      std::vector<double> p = tempered_softmax(logits, vocab, sampling.temperature);
      std::vector<int> support = nucleus_support(p, sampling.top_p);
      double mass = 0.0;
      for (int id : support) mass += p[static_cast<std::size_t>(id)];
      double u = rng.uniform() * mass;
      double acc = 0.0;
      for (int id : support) {
        acc += p[static_cast<std::size_t>(id)];
        if (u < acc) return id;
      }
      return support.back();
    }));
  }
  return samples;
}

std::vector<int> greedy_decode(const ModelParams& params, const TokenSequence& prompt, int max_new) {
  return decode_loop(params, prompt, max_new, [](const double* logits, int vocab) {
    return static_cast<int>(std::max_element(logits, logits + vocab) - logits);
  });
}

}  // namespace asmlm
