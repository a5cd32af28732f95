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

#include "asmlm/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "asmlm/error.hpp"
#include "asmlm/objectives.hpp"
#include "asmlm/random.hpp"
#include "asmlm/text_util.hpp"

namespace asmlm {

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kPretrainLm: return "PRETRAIN_LM";
    case Stage::kPretrainCl: return "PRETRAIN_CL";
    case Stage::kFtBcd: return "FT_BCD";
    case Stage::kFtBcsd: return "FT_BCSD";
  }
  return "?";
}

Stage parse_stage(std::string_view text) {
  for (Stage s : {Stage::kPretrainLm, Stage::kPretrainCl, Stage::kFtBcd, Stage::kFtBcsd}) {
    if (text == to_string(s)) return s;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown stage '" + std::string(text) + "'");
}

std::string_view to_string(Schedule schedule) {
  return schedule == Schedule::kWarmupCosine ? "WARMUP_COSINE" : "CONSTANT";
}

Schedule parse_schedule(std::string_view text) {
  if (text == "WARMUP_COSINE") return Schedule::kWarmupCosine;
  if (text == "CONSTANT") return Schedule::kConstant;
  throw Error(ErrorCode::kInvalidArgument, "unknown schedule '" + std::string(text) + "'");
}

void StageConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, "stage config: " + m); };
  if (batch_size < 1 || max_seq_len < 1 || epochs < 1 || threads < 1) fail("sizes must be positive");
  if (max_instr_tokens < 2) fail("max_instr_tokens must be >= 2");
  if (!(peak_lr >= 0.0) || warmup_steps < 0 || max_steps < 0 || checkpoint_every < 0) fail("negative value");
  if (!(lambda >= 0.0)) fail("lambda must be >= 0");
  if (!(weight_decay >= 0.0)) fail("weight_decay must be >= 0");
  if (!(distance_cap > 0.0)) fail("distance_cap must be > 0");
}

namespace {

template <typename T>
T parse_number(std::string_view v, std::size_t line) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw LineError(ErrorCode::kSchemaViolation, line, "bad number '" + std::string(v) + "'");
  }
  return out;
}

}  // namespace

StageConfig parse_stage_config(std::string_view text) {
  StageConfig cfg;
  std::size_t line_no = 0;
  for (auto raw : split_lines(text)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw LineError(ErrorCode::kSchemaViolation, line_no, "expected key=value");
    std::string key(trim(line.substr(0, eq)));
    std::string_view val = trim(line.substr(eq + 1));
    try {
      if (key == "stage") cfg.stage = parse_stage(val);
      else if (key == "batch_size") cfg.batch_size = parse_number<int>(val, line_no);
      else if (key == "max_seq_len") cfg.max_seq_len = parse_number<int>(val, line_no);
      else if (key == "max_instr_tokens") cfg.max_instr_tokens = parse_number<int>(val, line_no);
      else if (key == "peak_lr") cfg.peak_lr = parse_number<double>(val, line_no);
      else if (key == "warmup_steps") cfg.warmup_steps = parse_number<int>(val, line_no);
      else if (key == "schedule") cfg.schedule = parse_schedule(val);
      else if (key == "epochs") cfg.epochs = parse_number<int>(val, line_no);
      else if (key == "max_steps") cfg.max_steps = parse_number<int>(val, line_no);
      else if (key == "lambda") cfg.lambda = parse_number<double>(val, line_no);
      else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(val, line_no);
      else if (key == "weight_decay") cfg.weight_decay = parse_number<double>(val, line_no);
      else if (key == "clip_norm") cfg.clip_norm = parse_number<double>(val, line_no);
      else if (key == "distance_cap") cfg.distance_cap = parse_number<double>(val, line_no);
      else if (key == "checkpoint_every") cfg.checkpoint_every = parse_number<int>(val, line_no);
      else if (key == "checkpoint_path") cfg.checkpoint_path = std::string(val);
      else if (key == "threads") cfg.threads = parse_number<int>(val, line_no);
      else throw LineError(ErrorCode::kSchemaViolation, line_no, "unknown key '" + key + "'");
    } catch (const LineError&) {
      throw;
    } catch (const Error& e) {
      throw LineError(ErrorCode::kSchemaViolation, line_no, e.what());
    }
  }
  cfg.validate();
  return cfg;
}

std::string format_stage_config(const StageConfig& cfg) {
  std::ostringstream o;
  o.precision(17);
  o << "stage=" << to_string(cfg.stage) << "\nbatch_size=" << cfg.batch_size << "\nmax_seq_len=" << cfg.max_seq_len
    << "\nmax_instr_tokens=" << cfg.max_instr_tokens << "\npeak_lr=" << cfg.peak_lr
    << "\nwarmup_steps=" << cfg.warmup_steps << "\nschedule=" << to_string(cfg.schedule)
    << "\nepochs=" << cfg.epochs << "\nmax_steps=" << cfg.max_steps << "\nlambda=" << cfg.lambda
    << "\nseed=" << cfg.seed << "\nweight_decay=" << cfg.weight_decay << "\nclip_norm=" << cfg.clip_norm
    << "\ndistance_cap=" << cfg.distance_cap << "\ncheckpoint_every=" << cfg.checkpoint_every
    << "\nthreads=" << cfg.threads << '\n';
  if (!cfg.checkpoint_path.empty()) o << "checkpoint_path=" << cfg.checkpoint_path << '\n';
  return o.str();
}

double lr_at(int step, const StageConfig& cfg, int total_steps) {
  if (step <= 0) return 0.0;
  if (step < cfg.warmup_steps) return cfg.peak_lr * static_cast<double>(step) / cfg.warmup_steps;
  if (cfg.schedule == Schedule::kConstant) return cfg.peak_lr;
  int decay = total_steps - cfg.warmup_steps;
  if (decay <= 0) return cfg.peak_lr;
  double progress = std::min(1.0, static_cast<double>(step - cfg.warmup_steps) / decay);
  return cfg.peak_lr * 0.5 * (1.0 + std::cos(M_PI * progress));
}

OptimizerState make_optimizer(const ModelParams& params, double weight_decay) {
  OptimizerState s;
  s.m.assign(params.size(), 0.0);
  s.v.assign(params.size(), 0.0);
  s.weight_decay = weight_decay;
  return s;
}

void apply_optimizer_step(ModelParams& params, const ModelParams& grads, OptimizerState& state, double lr) {
  auto& p = params.data();
  const auto& g = grads.data();
  if (g.size() != p.size() || state.m.size() != p.size()) {
    throw Error(ErrorCode::kInvalidArgument, "optimizer state does not match parameters");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < p.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g[i] * g[i];
    double mhat = state.m[i] / bc1;
    double vhat = state.v[i] / bc2;
    p[i] -= lr * state.weight_decay * p[i];
    p[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

double clip_grad_norm(ModelParams& grads, double max_norm) {
  double norm = grads.norm();
  if (max_norm > 0.0 && norm > max_norm) {
    double s = max_norm / norm;
    for (double& v : grads.data()) v *= s;
  }
  return norm;
}

namespace {

struct SeqItem {
  TokenSequence seq;
  std::vector<int> targets;
  std::vector<unsigned char> mask;
};

SeqItem lm_item(TokenSequence seq) {
  SeqItem it;
  it.seq = std::move(seq);
  next_token_targets(it.seq, it.targets, it.mask);
  return it;
}

// Runs f(i, thread) for i in [0, n) on `threads` workers; item i always runs
// on worker i % threads so reductions are reproducible.
template <typename F>
void parallel_for(std::size_t n, int threads, F f) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i, 0);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = static_cast<std::size_t>(t); i < n; i += static_cast<std::size_t>(threads)) f(i, t);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

class GradAccumulator {
 public:
  GradAccumulator(const ModelParams& params, int threads) {
    for (int t = 0; t < threads; ++t) buffers_.emplace_back(params.config());
  }
  ModelParams& at(int thread) { return buffers_[static_cast<std::size_t>(thread)]; }
  ModelParams& reduce() {
    for (std::size_t t = 1; t < buffers_.size(); ++t) {
      auto& dst = buffers_[0].data();
      const auto& src = buffers_[t].data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
    return buffers_[0];
  }
  void clear() {
    for (auto& b : buffers_) b.set_zero();
  }

 private:
  std::vector<ModelParams> buffers_;
};

// Per-epoch shuffled batches of `batch` distinct indices; a short final
// batch is topped up with the earliest indices of the same epoch.
class Batcher {
 public:
  Batcher(std::size_t n, int batch, Rng& rng) : n_(n), batch_(std::min<std::size_t>(n, batch)), rng_(rng) {}

  std::vector<std::size_t> next() {
    if (pos_ >= order_.size()) {
      order_.resize(n_);
      std::iota(order_.begin(), order_.end(), std::size_t{0});
      rng_.shuffle(order_.begin(), order_.end());
      pos_ = 0;
    }
    std::vector<std::size_t> out(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(std::min(order_.size(), pos_ + batch_)));
    pos_ += batch_;
    for (std::size_t i = 0; out.size() < batch_; ++i) {
      if (std::find(out.begin(), out.end(), order_[i]) == out.end()) out.push_back(order_[i]);
    }
    return out;
  }

  std::size_t steps_per_epoch() const { return (n_ + batch_ - 1) / batch_; }

 private:
  std::size_t n_;
  std::size_t batch_;
  Rng& rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

EncodeOptions stage_encode_options(const ModelParams& params, const StageConfig& cfg) {
  return EncodeOptions{std::min(cfg.max_seq_len, params.config().max_seq_len), cfg.max_instr_tokens};
}

std::vector<SeqItem> lm_documents(const Vocab& vocab, const std::vector<FunctionRecord>& corpus,
                                  const EncodeOptions& opt) {
  std::vector<SeqItem> items;
  for (const auto& rec : corpus) {
    auto add = [&](std::vector<Chunk> chunks) {
      EncodeOptions unlimited = opt;
      unlimited.max_seq_len = std::numeric_limits<int>::max();
      TokenSequence seq = encode(chunks, vocab, unlimited);
      seq.push_back(Vocab::kEos, TokenMeta{static_cast<int>(chunks.size()), chunks.back().kind, 0, false});
      if (static_cast<int>(seq.size()) > opt.max_seq_len) {
        throw Error(ErrorCode::kSequenceTooLong, "document for " + rec.source_id + " exceeds max_seq_len");
      }
      items.push_back(lm_item(std::move(seq)));
    };
    if (rec.asm_levels.empty()) {
      add({Chunk::source_chunk(rec.source_text)});
    }
    for (const auto& [level, fn] : rec.asm_levels) add({Chunk::source_chunk(rec.source_text), Chunk::asm_chunk(fn)});
  }
  return items;
}

std::vector<SeqItem> bcd_items(const Vocab& vocab, const std::vector<FunctionRecord>& corpus, const EncodeOptions& opt) {
  std::vector<SeqItem> items;
  for (const auto& rec : corpus) {
    for (const auto& [level, fn] : rec.asm_levels) {
      BcdExample ex = bcd_example(vocab, fn, rec.source_text, opt);
      items.push_back(SeqItem{std::move(ex.seq), std::move(ex.targets), std::move(ex.mask)});
    }
  }
  return items;
}

std::vector<std::size_t> bcsd_records(const std::vector<FunctionRecord>& corpus) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].has_level(OptLevel::kO0) && corpus[i].has_level(OptLevel::kO3)) out.push_back(i);
  }
  return out;
}

std::size_t stage_item_count(const std::vector<FunctionRecord>& corpus, const StageConfig& cfg) {
  switch (cfg.stage) {
    case Stage::kPretrainLm: {
      std::size_t n = 0;
      for (const auto& r : corpus) n += std::max<std::size_t>(1, r.asm_levels.size());
      return n;
    }
    case Stage::kPretrainCl: return corpus.size();
    case Stage::kFtBcd: {
      std::size_t n = 0;
      for (const auto& r : corpus) n += r.asm_levels.size();
      return n;
    }
    case Stage::kFtBcsd: return bcsd_records(corpus).size();
  }
  return 0;
}

}  // namespace

int planned_steps(const std::vector<FunctionRecord>& corpus, const StageConfig& cfg) {
  if (cfg.max_steps > 0) return cfg.max_steps;
  std::size_t n = stage_item_count(corpus, cfg);
  if (n == 0) return 0;
  std::size_t b = std::min<std::size_t>(n, static_cast<std::size_t>(cfg.batch_size));
  return static_cast<int>(((n + b - 1) / b) * static_cast<std::size_t>(cfg.epochs));
}

namespace {

struct StepOutcome {
  double lm = 0.0, fcl = 0.0, ocl = 0.0, total = 0.0;
  int clamped = 0;
};

// LM-style step (PRETRAIN_LM and FT_BCD): mean of per-sequence losses.
StepOutcome sequence_step(const ModelParams& params, const std::vector<SeqItem>& items,
                          const std::vector<std::size_t>& batch, GradAccumulator& acc, int threads) {
  std::vector<double> losses(batch.size());
  const double w = 1.0 / static_cast<double>(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t b, int t) {
    const SeqItem& it = items[batch[b]];
    ForwardResult fwd = forward(params, it.seq);
    LmLoss l = lm_loss(fwd.logits, it.targets, it.mask);
    losses[b] = l.loss;
    l.d_logits *= w;
    backward(params, fwd, nullptr, &l.d_logits, acc.at(t));
  });
  StepOutcome out;
  for (double l : losses) out.lm += l * w;
  out.total = out.lm;
  return out;
}

struct FormSeqs {
  std::vector<TokenSequence> seqs;  // forms -1..3
  std::vector<std::vector<std::size_t>> pool;
};

StepOutcome cl_step(const ModelParams& params, const std::vector<FormSeqs>& data,
                    const std::vector<std::size_t>& batch, const StageConfig& cfg, Rng& rng, GradAccumulator& acc) {
  constexpr std::size_t kForms = 5;
  const std::size_t B = batch.size();
  const std::size_t n_seq = B * kForms;
  std::vector<ForwardResult> fwd(n_seq);
  std::vector<LmLoss> lm(n_seq);
  parallel_for(n_seq, cfg.threads, [&](std::size_t k, int) {
    const TokenSequence& seq = data[batch[k / kForms]].seqs[k % kForms];
    fwd[k] = forward(params, seq);
    std::vector<int> t;
    std::vector<unsigned char> m;
    next_token_targets(seq, t, m);
    lm[k] = lm_loss(fwd[k].logits, t, m);
  });

  const int d = params.config().d_model;
  std::vector<FunctionForms> ff(B);
  for (std::size_t b = 0; b < B; ++b) {
    ff[b].function_id = std::to_string(batch[b]);
    for (std::size_t s = 0; s < kForms; ++s) {
      ff[b].forms.push_back(static_cast<int>(s) - 1);
      ff[b].embeddings.push_back(mean_rows(fwd[b * kForms + s].hidden, data[batch[b]].pool[s]));
    }
  }

  std::size_t s = rng.index(kForms);
  std::size_t t = rng.index(kForms - 1);
  if (t >= s) ++t;
  Mat es(B, d), et(B, d);
  for (std::size_t b = 0; b < B; ++b) {
    es.row(static_cast<Eigen::Index>(b)) = ff[b].embeddings[s].transpose();
    et.row(static_cast<Eigen::Index>(b)) = ff[b].embeddings[t].transpose();
  }
  FclLoss fcl = fcl_loss(es, et, cfg.distance_cap);
  OclLoss ocl = ocl_loss(ff);

  StepOutcome out;
  const double w = 1.0 / static_cast<double>(n_seq);
  for (const auto& l : lm) out.lm += l.loss * w;
  out.fcl = fcl.loss;
  out.ocl = ocl.loss;
  out.total = combined_pretrain_loss(out.lm, out.fcl, out.ocl, cfg.lambda);
  out.clamped = fcl.clamped;

  parallel_for(n_seq, cfg.threads, [&](std::size_t k, int th) {
    std::size_t b = k / kForms, f = k % kForms;
    Vec de = ocl.d_embeddings[b][f];
    if (f == s) de += fcl.d_s.row(static_cast<Eigen::Index>(b)).transpose();
    if (f == t) de += fcl.d_t.row(static_cast<Eigen::Index>(b)).transpose();
    de *= cfg.lambda;
    Mat dh = mean_rows_grad(fwd[k].ids.size(), de, data[batch[b]].pool[f]);
    Mat dl = lm[k].d_logits * w;
    backward(params, fwd[k], &dh, &dl, acc.at(th));
  });
  return out;
}

StepOutcome bcsd_step(const ModelParams& params, const std::vector<FormSeqs>& data,
                      const std::vector<std::size_t>& batch, const StageConfig& cfg, GradAccumulator& acc) {
  const std::size_t B = batch.size();
  std::vector<ForwardResult> fwd(2 * B);
  parallel_for(2 * B, cfg.threads, [&](std::size_t k, int) { fwd[k] = forward(params, data[batch[k / 2]].seqs[k % 2]); });
  const int d = params.config().d_model;
  Mat q(B, d), c(B, d);
  std::vector<int> pos(B);
  for (std::size_t b = 0; b < B; ++b) {
    q.row(static_cast<Eigen::Index>(b)) = mean_rows(fwd[2 * b].hidden, data[batch[b]].pool[0]).transpose();
    c.row(static_cast<Eigen::Index>(b)) = mean_rows(fwd[2 * b + 1].hidden, data[batch[b]].pool[1]).transpose();
    pos[b] = static_cast<int>(b);
  }
  BcsdLoss l = bcsd_loss(q, c, pos, cfg.distance_cap);
  parallel_for(2 * B, cfg.threads, [&](std::size_t k, int th) {
    std::size_t b = k / 2;
    Vec de = (k % 2 == 0 ? l.d_queries : l.d_candidates).row(static_cast<Eigen::Index>(b)).transpose();
    Mat dh = mean_rows_grad(fwd[k].ids.size(), de, data[batch[b]].pool[k % 2]);
    backward(params, fwd[k], &dh, nullptr, acc.at(th));
  });
  StepOutcome out;
  out.fcl = l.loss;
  out.total = l.loss;
  out.clamped = l.clamped;
  return out;
}

FormSeqs form_sequences(const Vocab& vocab, const FunctionRecord& rec, const std::vector<int>& forms,
                        const EncodeOptions& opt) {
  FormSeqs fs;
  for (int f : forms) {
    TokenSequence seq = f == kSourceForm ? source_sequence(vocab, rec.source_text, opt)
                                         : assembly_sequence(vocab, rec.asm_levels.at(static_cast<OptLevel>(f)), opt);
    fs.pool.push_back(pooling_positions(seq));
    if (fs.pool.back().empty()) {
      throw Error(ErrorCode::kStageDataInvalid, "record " + rec.source_id + " has an empty " + form_name(f) + " form");
    }
    fs.seqs.push_back(std::move(seq));
  }
  return fs;
}

}  // namespace

TrainResult train_stage(ModelParams& params, const Vocab& vocab, const std::vector<FunctionRecord>& corpus,
                        const StageConfig& cfg, std::ostream* diag) {
  cfg.validate();
  if (params.config().vocab_size != vocab.size()) {
    throw Error(ErrorCode::kInvalidArgument, "model vocab_size does not match the vocabulary");
  }
  const EncodeOptions opt = stage_encode_options(params, cfg);
  std::vector<SeqItem> items;
  std::vector<FormSeqs> forms;
  std::size_t n_items = 0;
  switch (cfg.stage) {
    case Stage::kPretrainLm:
      items = lm_documents(vocab, corpus, opt);
      n_items = items.size();
      break;
    case Stage::kFtBcd:
      items = bcd_items(vocab, corpus, opt);
      n_items = items.size();
      break;
    case Stage::kPretrainCl: {
      if (corpus.empty()) break;
      if (filter_for_cl(corpus).size() != corpus.size()) {
        throw Error(ErrorCode::kStageDataInvalid, "PRETRAIN_CL needs a corpus that passes filter_for_cl");
      }
      std::vector<std::string> ids;
      for (const auto& r : corpus) ids.push_back(r.source_id);
      std::sort(ids.begin(), ids.end());
      if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw Error(ErrorCode::kStageDataInvalid, "CL batches need distinct source_ids");
      }
      for (const auto& r : corpus) forms.push_back(form_sequences(vocab, r, {-1, 0, 1, 2, 3}, opt));
      n_items = forms.size();
      break;
    }
    case Stage::kFtBcsd:
      for (std::size_t i : bcsd_records(corpus)) forms.push_back(form_sequences(vocab, corpus[i], {0, 3}, opt));
      n_items = forms.size();
      break;
  }
  if (n_items == 0) throw Error(ErrorCode::kEmptyStageData, std::string(to_string(cfg.stage)) + ": no training items");
  bool contrastive = cfg.stage == Stage::kPretrainCl || cfg.stage == Stage::kFtBcsd;
  if (contrastive && std::min<std::size_t>(n_items, static_cast<std::size_t>(cfg.batch_size)) < 2) {
    throw Error(ErrorCode::kDegenerateBatch, "contrastive stages need batches of at least 2 functions");
  }

  Rng rng(cfg.seed);
  Batcher batcher(n_items, cfg.batch_size, rng);
  const int total = cfg.max_steps > 0 ? cfg.max_steps
                                      : static_cast<int>(batcher.steps_per_epoch()) * cfg.epochs;
  OptimizerState opt_state = make_optimizer(params, cfg.weight_decay);
  GradAccumulator acc(params, cfg.threads);
  TrainResult result;

  for (int step = 1; step <= total; ++step) {
    std::vector<std::size_t> batch = batcher.next();
    acc.clear();
    StepOutcome o;
    switch (cfg.stage) {
      case Stage::kPretrainLm:
      case Stage::kFtBcd: o = sequence_step(params, items, batch, acc, cfg.threads); break;
      case Stage::kPretrainCl: o = cl_step(params, forms, batch, cfg, rng, acc); break;
      case Stage::kFtBcsd: o = bcsd_step(params, forms, batch, cfg, acc); break;
    }
    ModelParams& grads = acc.reduce();
    double gnorm = clip_grad_norm(grads, cfg.clip_norm);
    if (!std::isfinite(o.total) || !std::isfinite(gnorm)) {
      std::ostringstream m;
      m << "step " << step << ": lm=" << o.lm << " fcl=" << o.fcl << " ocl=" << o.ocl << " total=" << o.total
        << " grad_norm=" << gnorm;
      throw Error(ErrorCode::kNonFiniteLoss, m.str());
    }
    double lr = lr_at(step, cfg, total);
    apply_optimizer_step(params, grads, opt_state, lr);

    LogRow row{step, o.lm, o.fcl, o.ocl, o.total, lr, gnorm, cfg.clip_norm > 0.0 && gnorm > cfg.clip_norm,
               o.clamped};
    if (diag && o.clamped > 0) {
      *diag << "step " << step << ": " << o.clamped << " distances clamped at " << cfg.distance_cap << '\n';
    }
    result.log.push_back(row);
    if (cfg.checkpoint_every > 0 && !cfg.checkpoint_path.empty() && step % cfg.checkpoint_every == 0) {
      params.save(cfg.checkpoint_path);
      if (diag) *diag << "step " << step << ": checkpoint written to " << cfg.checkpoint_path << '\n';
    }
  }
  result.steps = total;
  result.checksum = params.checksum();
  if (diag) {
    auto clipped = std::count_if(result.log.begin(), result.log.end(), [](const LogRow& r) { return r.clipped; });
    if (clipped > 0) *diag << "gradient norm clipped to " << cfg.clip_norm << " on " << clipped << " of " << total << " steps\n";
  }
  return result;
}

void write_training_log(const std::vector<LogRow>& log, const std::string& path) {
  std::ostringstream o;
  o.precision(10);
  o << "step,lm,fcl,ocl,total,lr,grad_norm,clipped,distance_clamped\n";
  for (const auto& r : log) {
    o << r.step << ',' << r.lm << ',' << r.fcl << ',' << r.ocl << ',' << r.total << ',' << r.lr << ',' << r.grad_norm
      << ',' << (r.clipped ? 1 : 0) << ',' << r.distance_clamped << '\n';
  }
  write_file(path, o.str());
}

}  // namespace asmlm
