/* Copyright 2026 The LSRec Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "lsrec/evaluator.hpp"
#include "lsrec/model.hpp"
#include "lsrec/trainer.hpp"

// Plain-text `key = value` run configuration with documented defaults.
// Unknown and duplicate keys are hard errors. Model architecture comes from
// the preset, with optional per-field overrides.

namespace lsrec {

struct RunConfig {
  // data
  std::string data_ratings;
  std::string data_movies;
  std::string corpus_path;  // empty -> <out.dir>/corpus/corpus.bin
  std::string out_dir = "out";

  // model
  std::string preset = "small";
  std::optional<int> hidden_dims;
  std::optional<int> intermediate_dims;
  std::optional<int> context_length;
  std::optional<int> attn_heads;
  std::optional<int> kv_heads;
  std::optional<int> layers;
  std::optional<double> attn_dropout;
  std::optional<double> rope_theta;
  std::optional<double> rms_eps;

  // training
  std::string tasks = "single";  // single | multi
  uint64_t seed = 1;
  double lr = 1e-3;
  int batch_rows = 16;
  int max_epochs = 100;
  int patience = 20;
  int warmup_steps = 100;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.01;
  double clip_norm = 1.0;
  std::string loss_mask = "target";  // target | full

  // evaluation
  std::string eval_split = "test";  // val | test
  std::vector<int> eval_ks = {1, 5, 10, 20};
  int64_t eval_sample_users = 0;  // 0 = all
  uint64_t eval_seed = 1;

  // runtime
  int threads = 0;  // 0 = LSREC_THREADS env var, else OpenMP default

  bool operator==(const RunConfig&) const = default;

  // Copy with every defaulted/derived field materialized (e.g. the corpus
  // path and all model fields); this is what gets written next to outputs.
  RunConfig effective() const;

  std::string resolved_corpus_path() const;
  ModelConfig model_config(int vocab_size) const;
  TrainOptions train_options() const;
  EvalOptions eval_options() const;
  bool multi_task() const { return tasks == "multi"; }

  void validate() const;
};

RunConfig parse_run_config(std::istream& in, const std::string& origin);
RunConfig load_run_config(const std::string& path);

// Canonical rendering; parse(serialize(c)) == c.
std::string serialize_run_config(const RunConfig& config);

}  // namespace lsrec
