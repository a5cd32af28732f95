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

#include "asmlm/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "asmlm/corpus.hpp"
#include "asmlm/error.hpp"
#include "asmlm/eval.hpp"
#include "asmlm/model.hpp"
#include "asmlm/normalizer.hpp"
#include "asmlm/objectives.hpp"
#include "asmlm/text_util.hpp"
#include "asmlm/tokenizer.hpp"
#include "asmlm/trainer.hpp"

namespace asmlm::cli {

namespace {

const FunctionRecord& find_record(const std::vector<FunctionRecord>& records, const std::string& id) {
  for (const auto& r : records) {
    if (r.source_id == id) return r;
  }
  throw Error(ErrorCode::kInvalidArgument, "no record with source_id '" + id + "'");
}

const AssemblyFunction& find_level(const FunctionRecord& rec, const std::string& opt) {
  OptLevel level = parse_opt_level(opt);
  if (!rec.has_level(level)) {
    throw Error(ErrorCode::kInvalidArgument, rec.source_id + " has no " + std::string(to_string(level)) + " listing");
  }
  return rec.asm_levels.at(level);
}

std::string vocab_path(const std::string& ckpt) { return ckpt + ".vocab.json"; }

std::string benchmark_name(const std::string& corpus) { return std::filesystem::path(corpus).stem().string(); }

std::vector<int> parse_forms(const std::string& text) {
  std::vector<int> forms;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = std::string(trim(item));
    if (item == "src") {
      forms.push_back(kSourceForm);
    } else {
      forms.push_back(static_cast<int>(parse_opt_level(item)));
    }
  }
  if (forms.empty()) throw Error(ErrorCode::kInvalidArgument, "--forms is empty");
  return forms;
}

struct Model {
  ModelParams params;
  Vocab vocab;
};

Model load_model(const std::string& ckpt) { return Model{ModelParams::load(ckpt), Vocab::load(vocab_path(ckpt))}; }

EncodeOptions model_options(const Model& m, int max_instr_tokens) {
  return EncodeOptions{m.params.config().max_seq_len, max_instr_tokens};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Assembly language model toolkit", "asmlm"};
  app.require_subcommand(1);
  std::function<void()> action;

  // normalize
  auto* normalize = app.add_subcommand("normalize", "Normalize one function from an objdump-style dump");
  std::string n_in, n_out, n_opt = "O0", n_id;
  normalize->add_option("--in", n_in, "Dump file")->required();
  normalize->add_option("--out", n_out, "Normalized listing")->required();
  normalize->add_option("--opt", n_opt, "Optimization level (O0..O3)");
  normalize->add_option("--id", n_id, "Function name / source id")->required();
  normalize->callback([&] {
    action = [&] {
      AssemblyFunction fn = normalize_function(read_file(n_in), n_id, parse_opt_level(n_opt));
      write_file(n_out, fn.render());
      out << "normalized " << fn.size() << " instructions of " << n_id << " -> " << n_out << '\n';
    };
  });

  // corpus
  auto* corpus = app.add_subcommand("corpus", "Build, ingest or filter JSONL corpora");
  corpus->require_subcommand(1);
  auto* synth = corpus->add_subcommand("synth", "Generate the synthetic corpus");
  SyntheticSpec spec;
  std::string s_out;
  synth->add_option("--out", s_out, "Output JSONL")->required();
  synth->add_option("--seed", spec.seed, "Generator seed")->required();
  synth->add_option("--n", spec.n_functions, "Number of functions");
  synth->add_option("--max-ops", spec.max_instructions, "Max operations per function");
  synth->add_option("--max-params", spec.max_params, "Max parameters (1..3)");
  synth->add_option("--max-constant", spec.max_constant, "Largest literal");
  synth->callback([&] {
    action = [&] {
      auto records = generate_synthetic(spec);
      save_jsonl(records, s_out);
      out << "wrote " << records.size() << " synthetic records -> " << s_out << '\n';
    };
  });
  auto* ingest = corpus->add_subcommand("ingest", "Compile and disassemble C sources with a host toolchain");
  std::string i_dir, i_out;
  ToolchainConfig tc;
  ingest->add_option("--src-dir", i_dir, "Directory of .c files")->required();
  ingest->add_option("--out", i_out, "Output JSONL")->required();
  ingest->add_option("--compile", tc.compile_template, "Compile command template ({in} {out} {opt})");
  ingest->add_option("--disasm", tc.disassemble_template, "Disassemble command template ({in})");
  ingest->callback([&] {
    action = [&] {
      std::vector<std::string> log;
      auto records = ingest_toolchain(i_dir, tc, &log);
      for (const auto& l : log) err << l << '\n';
      save_jsonl(records, i_out);
      out << "ingested " << records.size() << " functions -> " << i_out << '\n';
    };
  });
  auto* filter = corpus->add_subcommand("filter", "Keep records usable for contrastive pretraining");
  std::string f_in, f_out;
  filter->add_option("--in", f_in, "Input JSONL")->required();
  filter->add_option("--out", f_out, "Output JSONL")->required();
  filter->callback([&] {
    action = [&] {
      auto records = load_jsonl(f_in);
      auto kept = filter_for_cl(records);
      save_jsonl(kept, f_out);
      out << "kept " << kept.size() << " of " << records.size() << " records -> " << f_out << '\n';
    };
  });

  // mask
  auto* mask = app.add_subcommand("mask", "Write the attention mask of one function as a 0/1 grid");
  std::string m_corpus, m_id, m_opt = "O0", m_out, m_kind = "hierarchical";
  bool m_prompt = false;
  int m_max_instr = 64;
  mask->add_option("--corpus", m_corpus, "Corpus JSONL")->required();
  mask->add_option("--id", m_id, "source_id")->required();
  mask->add_option("--opt", m_opt, "Optimization level");
  mask->add_option("--out", m_out, "Grid file")->required();
  mask->add_option("--kind", m_kind, "hierarchical or causal")->check(CLI::IsMember({"hierarchical", "causal"}));
  mask->add_flag("--prompt", m_prompt, "Prefix the decompilation prompt text");
  mask->add_option("--max-instructions", m_max_instr, "Reserved [INST-k] labels");
  mask->callback([&] {
    action = [&] {
      auto records = load_jsonl(m_corpus);
      TokenizerConfig tcfg;
      tcfg.max_instructions = m_max_instr;
      Vocab vocab = build_vocab(records, tcfg);
      const auto& fn = find_level(find_record(records, m_id), m_opt);
      EncodeOptions opt = encode_options(tcfg);
      TokenSequence seq = m_prompt ? bcd_prompt_sequence(vocab, fn, opt) : assembly_sequence(vocab, fn, opt);
      AttentionMask m = m_kind == "causal" ? build_causal_mask(seq.size()) : build_hierarchical_mask(seq);
      std::ostringstream grid;
      write_mask_grid(m, grid);
      write_file(m_out, grid.str());
      out << m_kind << " mask " << seq.size() << "x" << seq.size() << " -> " << m_out << '\n';
    };
  });

  // train
  auto* train = app.add_subcommand("train", "Run one training stage");
  std::string t_corpus, t_config, t_out, t_init, t_log, t_stage;
  std::uint64_t t_seed = 0;
  int t_steps = -1, t_threads = 1;
  ModelConfig mcfg;
  mcfg.max_seq_len = 512;
  int t_max_instr = 64;
  train->add_option("--corpus", t_corpus, "Training JSONL")->required();
  train->add_option("--config", t_config, "Stage config (key=value)");
  train->add_option("--stage", t_stage, "PRETRAIN_LM, PRETRAIN_CL, FT_BCD or FT_BCSD");
  train->add_option("--out", t_out, "Output checkpoint")->required();
  train->add_option("--init", t_init, "Start from this checkpoint");
  train->add_option("--log", t_log, "Training log CSV (default <out>.log.csv)");
  train->add_option("--seed", t_seed, "Seed for init and batching")->required();
  train->add_option("--steps", t_steps, "Override max_steps");
  train->add_option("--threads", t_threads, "Worker threads")->check(CLI::PositiveNumber);
  train->add_option("--layers", mcfg.n_layers, "Layers (fresh models)");
  train->add_option("--heads", mcfg.n_heads, "Heads per layer");
  train->add_option("--d-model", mcfg.d_model, "Model width");
  train->add_option("--d-ff", mcfg.d_ff, "Feed-forward width");
  train->add_option("--max-seq-len", mcfg.max_seq_len, "Positions");
  train->add_option("--hier-heads", mcfg.hierarchical_heads, "Hierarchical heads per layer (-1: half)");
  train->add_option("--max-instructions", t_max_instr, "Reserved [INST-k] labels");
  train->add_flag("--tied", mcfg.tied_output, "Tie output projection to token embeddings");
  train->callback([&] {
    action = [&] {
      auto records = load_jsonl(t_corpus);
      StageConfig cfg = t_config.empty() ? StageConfig{} : parse_stage_config(read_file(t_config));
      if (!t_stage.empty()) cfg.stage = parse_stage(t_stage);
      if (t_steps >= 0) cfg.max_steps = t_steps;
      cfg.seed = t_seed;
      cfg.threads = t_threads;
      Model m;
      if (!t_init.empty()) {
        m = load_model(t_init);
      } else {
        TokenizerConfig tcfg;
        tcfg.max_instructions = t_max_instr;
        tcfg.max_seq_len = mcfg.max_seq_len;
        m.vocab = build_vocab(records, tcfg);
        mcfg.vocab_size = m.vocab.size();
        m.params = ModelParams::init(mcfg, t_seed);
      }
      TrainResult r = train_stage(m.params, m.vocab, records, cfg, &err);
      m.params.save(t_out);
      m.vocab.save(vocab_path(t_out));
      write_training_log(r.log, t_log.empty() ? t_out + ".log.csv" : t_log);
      out << to_string(cfg.stage) << ": " << r.steps << " steps";
      if (!r.log.empty()) out << ", final loss " << r.log.back().total;
      out << ", checksum " << std::hex << r.checksum << std::dec << " -> " << t_out << '\n';
    };
  });

  // embed
  auto* embed = app.add_subcommand("embed", "Export function embeddings as CSV");
  std::string e_ckpt, e_corpus, e_out, e_forms = "src,O0,O1,O2,O3";
  int e_max_instr_tokens = 32;
  embed->add_option("--ckpt", e_ckpt, "Checkpoint")->required();
  embed->add_option("--corpus", e_corpus, "Corpus JSONL")->required();
  embed->add_option("--forms", e_forms, "Comma-separated forms (src,O0..O3)");
  embed->add_option("--out", e_out, "CSV")->required();
  embed->add_option("--max-instr-tokens", e_max_instr_tokens, "Per-instruction token budget");
  embed->callback([&] {
    action = [&] {
      Model m = load_model(e_ckpt);
      auto rows = compute_embeddings(m.params, m.vocab, load_jsonl(e_corpus), parse_forms(e_forms),
                                     model_options(m, e_max_instr_tokens));
      write_embeddings_csv(rows, e_out);
      out << "wrote " << rows.size() << " embeddings -> " << e_out << '\n';
    };
  });

  // retrieve
  auto* retrieve = app.add_subcommand("retrieve", "Recall@1 on O0 -> O3 retrieval pools");
  std::string r_ckpt, r_corpus, r_out;
  std::vector<int> r_k = {8};
  int r_pools = 100, r_max_instr_tokens = 32;
  std::uint64_t r_seed = 0;
  retrieve->add_option("--ckpt", r_ckpt, "Checkpoint")->required();
  retrieve->add_option("--corpus", r_corpus, "Corpus JSONL")->required();
  retrieve->add_option("--k", r_k, "Pool sizes")->check(CLI::PositiveNumber);
  retrieve->add_option("--pools", r_pools, "Pools per size")->check(CLI::PositiveNumber);
  retrieve->add_option("--seed", r_seed, "Pool sampling seed")->required();
  retrieve->add_option("--out", r_out, "Results CSV")->required();
  retrieve->add_option("--max-instr-tokens", r_max_instr_tokens, "Per-instruction token budget");
  retrieve->callback([&] {
    action = [&] {
      Model m = load_model(r_ckpt);
      auto records = load_jsonl(r_corpus);
      std::map<int, double> recall;
      for (int k : r_k) {
        recall[k] = evaluate_bcsd(m.params, m.vocab, records, k, r_pools, r_seed, model_options(m, r_max_instr_tokens));
        out << "Recall@1 K=" << k << ": " << recall[k] << '\n';
      }
      write_recall_csv(benchmark_name(r_corpus), recall, r_out);
    };
  });

  // passk
  auto* passk = app.add_subcommand("passk", "Pass@k from counts, or a sampled decompilation evaluation");
  int p_n = -1, p_c = -1, p_samples = 20, p_tests = 8, p_max_new = 128, p_max_instr_tokens = 32;
  std::vector<int> p_k = {1, 10};
  std::string p_ckpt, p_corpus, p_out;
  std::uint64_t p_seed = 0;
  double p_temp = 0.2, p_top_p = 0.95;
  auto* p_seed_opt = passk->add_option("--seed", p_seed, "Sampling seed (evaluation mode)");
  passk->add_option("--n", p_n, "Samples drawn");
  passk->add_option("--c", p_c, "Samples judged correct");
  passk->add_option("--k", p_k, "k values")->check(CLI::PositiveNumber);
  auto* p_ckpt_opt = passk->add_option("--ckpt", p_ckpt, "Checkpoint (evaluation mode)");
  passk->add_option("--corpus", p_corpus, "Corpus JSONL (evaluation mode)");
  passk->add_option("--out", p_out, "Results CSV (evaluation mode)");
  passk->add_option("--samples", p_samples, "Samples per function");
  passk->add_option("--tests", p_tests, "Test vectors per function");
  passk->add_option("--max-new", p_max_new, "Generated token limit");
  passk->add_option("--temperature", p_temp, "Sampling temperature");
  passk->add_option("--top-p", p_top_p, "Nucleus mass");
  passk->add_option("--max-instr-tokens", p_max_instr_tokens, "Per-instruction token budget");
  passk->callback([&] {
    action = [&] {
      if (p_ckpt_opt->count() == 0) {
        if (p_n < 0 || p_c < 0) throw CLI::ValidationError("passk", "--n and --c are required without --ckpt");
        for (int k : p_k) out << "pass@" << k << " = " << pass_at_k(p_n, p_c, k) << '\n';
        return;
      }
      if (p_seed_opt->count() == 0 || p_corpus.empty() || p_out.empty()) {
        throw CLI::ValidationError("passk", "--seed, --corpus and --out are required with --ckpt");
      }
      Model m = load_model(p_ckpt);
      BcdEvalConfig cfg;
      cfg.sampling = SamplingParams{p_temp, p_top_p, p_samples, p_max_new, p_seed};
      cfg.n_tests = p_tests;
      cfg.test_seed = p_seed;
      cfg.ks = p_k;
      auto result = evaluate_bcd(m.params, m.vocab, load_jsonl(p_corpus), cfg, model_options(m, p_max_instr_tokens));
      write_passk_csv(benchmark_name(p_corpus), result, p_out);
      for (const auto& [level, by_k] : result.pass_at) {
        for (const auto& [k, v] : by_k) out << to_string(level) << " pass@" << k << " = " << v << '\n';
      }
    };
  });

  // attn-report
  auto* attn = app.add_subcommand("attn-report", "Per-head attention statistics on one function");
  std::string a_ckpt, a_corpus, a_id, a_opt = "O0", a_out;
  int a_max_instr_tokens = 32;
  attn->add_option("--ckpt", a_ckpt, "Checkpoint")->required();
  attn->add_option("--corpus", a_corpus, "Corpus JSONL")->required();
  attn->add_option("--id", a_id, "source_id")->required();
  attn->add_option("--opt", a_opt, "Optimization level");
  attn->add_option("--out", a_out, "Report CSV")->required();
  attn->add_option("--max-instr-tokens", a_max_instr_tokens, "Per-instruction token budget");
  attn->callback([&] {
    action = [&] {
      Model m = load_model(a_ckpt);
      auto records = load_jsonl(a_corpus);
      const auto& rec = find_record(records, a_id);
      BcdExample ex = bcd_example(m.vocab, find_level(rec, a_opt), rec.source_text, model_options(m, a_max_instr_tokens));
      AttentionReport report = attention_report(m.params, ex.seq);
      write_attention_report_csv(report, a_out);
      int broad_h = 0, broad_s = 0;
      double worst_disallowed = 0.0, worst_row = 0.0;
      for (const auto& h : report.heads) {
        if (h.broad) ++(h.mode == HeadMode::kHierarchical ? broad_h : broad_s);
        if (h.mode == HeadMode::kHierarchical) worst_disallowed = std::max(worst_disallowed, h.disallowed_mass);
        worst_row = std::max(worst_row, h.max_row_sum_error);
      }
      out << report.heads.size() << " heads; broad hierarchical=" << broad_h << " broad standard=" << broad_s
          << "; hierarchical disallowed mass=" << worst_disallowed << "; max row-sum error=" << worst_row << '\n';
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (action) action();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const LineError& e) {
    err << error_code_name(e.code()) << " (line " << e.line() << "): " << e.what() << '\n';
    return is_data_error(e.code()) ? kExitData : kExitRuntime;
  } catch (const Error& e) {
    err << error_code_name(e.code()) << ": " << e.what() << '\n';
    return is_data_error(e.code()) ? kExitData : kExitRuntime;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace asmlm::cli
