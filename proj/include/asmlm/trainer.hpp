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
#include <iosfwd>
#include <string>
#include <vector>

#include "asmlm/corpus.hpp"
#include "asmlm/model.hpp"
#include "asmlm/tokenizer.hpp"

namespace asmlm {

enum class Stage { kPretrainLm, kPretrainCl, kFtBcd, kFtBcsd };
enum class Schedule { kWarmupCosine, kConstant };

std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view text);
std::string_view to_string(Schedule schedule);
Schedule parse_schedule(std::string_view text);

struct StageConfig {
  Stage stage = Stage::kPretrainLm;
  int batch_size = 8;
  int max_seq_len = 2048;
  int max_instr_tokens = 32;
  double peak_lr = 1e-3;
  int warmup_steps = 100;
  Schedule schedule = Schedule::kWarmupCosine;
  int epochs = 1;
  int max_steps = 0;  // overrides epochs when > 0
  double lambda = 0.1;
  std::uint64_t seed = 0;
  double weight_decay = 0.01;
  double clip_norm = 1.0;  // <= 0 disables clipping
  double distance_cap = 30.0;
  int checkpoint_every = 0;
  std::string checkpoint_path;
  int threads = 1;

  void validate() const;  // throws Error(kInvalidArgument)
};

// key=value lines; '#' starts a comment. Unknown keys are rejected.
StageConfig parse_stage_config(std::string_view text);
std::string format_stage_config(const StageConfig& cfg);

// Learning rate at optimizer step `step` (1-based) of `total_steps`.
double lr_at(int step, const StageConfig& cfg, int total_steps);

struct OptimizerState {
  std::vector<double> m, v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

OptimizerState make_optimizer(const ModelParams& params, double weight_decay);

// Decoupled weight decay, bias-corrected moments.
void apply_optimizer_step(ModelParams& params, const ModelParams& grads, OptimizerState& state, double lr);

// Scales grads to `max_norm` if their global norm exceeds it; returns the
// norm before clipping.
double clip_grad_norm(ModelParams& grads, double max_norm);

struct LogRow {
  int step = 0;
  double lm = 0.0;   // LM loss; FT_BCD reports its target NLL here
  double fcl = 0.0;  // FT_BCSD reports its retrieval loss here
  double ocl = 0.0;
  double total = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;
  bool clipped = false;
  int distance_clamped = 0;
};

struct TrainResult {
  std::vector<LogRow> log;
  int steps = 0;
  std::uint64_t checksum = 0;
};

// Number of optimizer steps a stage will take on `corpus`.
int planned_steps(const std::vector<FunctionRecord>& corpus, const StageConfig& cfg);

// Runs one stage in place on `params`. Diagnostics (clipping, distance-cap
// hits, checkpoints) go to `diag` when non-null.
TrainResult train_stage(ModelParams& params, const Vocab& vocab, const std::vector<FunctionRecord>& corpus,
                        const StageConfig& cfg, std::ostream* diag = nullptr);

void write_training_log(const std::vector<LogRow>& log, const std::string& path);

}  // namespace asmlm
