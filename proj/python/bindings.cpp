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

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "asmlm/corpus.hpp"
#include "asmlm/error.hpp"
#include "asmlm/eval.hpp"
#include "asmlm/normalizer.hpp"
#include "asmlm/objectives.hpp"
#include "asmlm/tokenizer.hpp"
#include "asmlm/trainer.hpp"

namespace py = pybind11;

namespace {

std::vector<std::vector<int>> mask_rows(const asmlm::AttentionMask& m) {
  std::vector<std::vector<int>> rows(m.size(), std::vector<int>(m.size(), 0));
  for (std::size_t q = 0; q < m.size(); ++q) {
    for (std::size_t k = 0; k < m.size(); ++k) rows[q][k] = m.allowed(q, k) ? 1 : 0;
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_asmlm, m) {
  m.doc() = "Assembly language model toolkit: normalization, masks, losses and metrics";

  static PyObject* error_type = py::exception<asmlm::Error>(m, "AsmlmError").inc_ref().ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const asmlm::Error& e) {
      std::string msg = std::string(asmlm::error_code_name(e.code())) + ": " + e.what();
      PyErr_SetString(error_type, msg.c_str());
    }
  });

  m.def(
      "normalize",
      [](const std::string& text, const std::string& source_id, const std::string& opt) {
        return asmlm::normalize_function(text, source_id, asmlm::parse_opt_level(opt)).render();
      },
      py::arg("text"), py::arg("source_id"), py::arg("opt") = "O0",
      "Normalize one function from a dump (or a normalized listing); returns the rendered listing.");

  m.def("hex_to_decimal", &asmlm::hex_to_decimal, py::arg("hex_digits"));

  m.def(
      "synthetic_corpus",
      [](std::uint64_t seed, int n_functions, int max_ops, int max_params) {
        asmlm::SyntheticSpec spec;
        spec.seed = seed;
        spec.n_functions = n_functions;
        spec.max_instructions = max_ops;
        spec.max_params = max_params;
        std::vector<std::string> lines;
        for (const auto& r : asmlm::generate_synthetic(spec)) lines.push_back(asmlm::to_jsonl_line(r));
        return lines;
      },
      py::arg("seed"), py::arg("n_functions") = 8, py::arg("max_ops") = 4, py::arg("max_params") = 3,
      "Synthetic corpus as JSONL lines.");

  m.def(
      "attention_mask",
      [](const std::string& jsonl_line, const std::string& opt, const std::string& kind) {
        asmlm::FunctionRecord rec = asmlm::parse_jsonl_line(jsonl_line, 1);
        asmlm::Vocab vocab = asmlm::build_vocab({rec}, asmlm::TokenizerConfig{});
        asmlm::OptLevel level = asmlm::parse_opt_level(opt);
        if (!rec.has_level(level)) throw asmlm::Error(asmlm::ErrorCode::kInvalidArgument, "level not in record");
        asmlm::TokenSequence seq = asmlm::assembly_sequence(vocab, rec.asm_levels.at(level));
        if (kind == "causal") return mask_rows(asmlm::build_causal_mask(seq.size()));
        if (kind != "hierarchical") throw asmlm::Error(asmlm::ErrorCode::kInvalidArgument, "kind: hierarchical|causal");
        return mask_rows(asmlm::build_hierarchical_mask(seq));
      },
      py::arg("jsonl_line"), py::arg("opt") = "O0", py::arg("kind") = "hierarchical",
      "0/1 attention mask rows for one record's assembly at one level.");

  m.def(
      "lm_loss",
      [](const asmlm::Mat& logits, const std::vector<int>& targets, const std::vector<unsigned char>& mask) {
        return asmlm::lm_loss(logits, targets, mask).loss;
      },
      py::arg("logits"), py::arg("targets"), py::arg("mask"));
  m.def(
      "fcl_loss",
      [](const asmlm::Mat& distances, double cap) { return asmlm::fcl_loss_from_distances(distances, cap).loss; },
      py::arg("distances"), py::arg("cap") = asmlm::kDefaultDistanceCap);
  m.def("ocl_loss", &asmlm::ocl_loss_from_distances, py::arg("forms"), py::arg("distances"));
  m.def(
      "bcsd_loss",
      [](const asmlm::Mat& q, const asmlm::Mat& c, const std::vector<int>& pos) {
        return asmlm::bcsd_loss(q, c, pos).loss;
      },
      py::arg("queries"), py::arg("candidates"), py::arg("positive"));
  m.def("combined_pretrain_loss", &asmlm::combined_pretrain_loss, py::arg("lm"), py::arg("fcl"), py::arg("ocl"),
        py::arg("lam") = 0.1);

  m.def("pass_at_k", py::overload_cast<int, int, int>(&asmlm::pass_at_k), py::arg("n"), py::arg("c"), py::arg("k"));
  m.def(
      "recall_at_1",
      [](const asmlm::Mat& q, const asmlm::Mat& c, const std::vector<int>& pos) {
        return asmlm::recall_at_1(asmlm::RetrievalPool{q, c, pos});
      },
      py::arg("queries"), py::arg("candidates"), py::arg("positive"));
  m.def("null_model_recall", &asmlm::null_model_recall, py::arg("K"), py::arg("dim"), py::arg("n_pools"),
        py::arg("seed"));

  m.def(
      "lr_at",
      [](int step, double peak_lr, int warmup_steps, int total_steps) {
        asmlm::StageConfig cfg;
        cfg.peak_lr = peak_lr;
        cfg.warmup_steps = warmup_steps;
        return asmlm::lr_at(step, cfg, total_steps);
      },
      py::arg("step"), py::arg("peak_lr"), py::arg("warmup_steps"), py::arg("total_steps"));
}
