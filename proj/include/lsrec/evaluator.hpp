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
#include <span>
#include <string>
#include <vector>

#include "lsrec/checkpoint.hpp"
#include "lsrec/dataset.hpp"
#include "lsrec/model.hpp"

// Ranking evaluation: one eval-mode forward per user over the movie-task
// prompt, top-K over the single next-token logit vector restricted to movie
// tokens outside the user's history, and HR/NDCG/Div aggregation.

namespace lsrec {

struct RankedList {
  static constexpr int kAbsent = -1;

  int64_t user_id = 0;
  std::vector<int32_t> tokens;  // top-K_max movie tokens, best first
  int32_t target_token = 0;
  // 1-based rank of the target among eligible movie tokens; kAbsent when
  // the target itself is excluded (already in the history).
  int target_rank = kAbsent;
};

// Logit ties are broken by ascending token id. "History" is every item
// strictly before target_index, so at test time the val item is excluded
// too.
RankedList rank_for_user(const Corpus& corpus, const InteractionSequence& seq,
                         const ModelConfig& config, const Parameters& params,
                         int k_max, int target_index);

// Fraction of users whose target rank is <= K.
double hit_rate(std::span<const RankedList> lists, int k);

// Mean of 1/log2(1+rank) for rank <= K, else 0 (one relevant item, so the
// ideal DCG is 1).
double ndcg(std::span<const RankedList> lists, int k);

// Unique movie tokens across all users' top-K lists, divided by the movie
// segment size of the vocabulary.
double diversity(std::span<const RankedList> lists, int k,
                 const Vocabulary& vocab);

enum class Split { kVal, kTest };

const char* split_name(Split split);

struct EvalOptions {
  Split split = Split::kTest;
  std::vector<int> ks = {1, 5, 10, 20};
  int64_t sample_users = 0;  // 0 = all users
  uint64_t seed = 1;
};

struct MetricRow {
  int k = 0;
  double hr = 0.0;
  double ndcg = 0.0;
  double div = 0.0;
};

struct MetricsReport {
  std::vector<MetricRow> rows;  // one per K, ascending
  int64_t population = 0;
  std::string split;
  int64_t sample_users = 0;
  uint64_t seed = 0;
  uint64_t vocab_hash = 0;
};

// Ranks every selected user at the chosen split index (uniform seeded
// sampling without replacement when sample_users > 0) and aggregates all
// metrics. Per-user ranking runs in parallel over the read-only parameters.
MetricsReport evaluate(const Corpus& corpus, const ModelConfig& config,
                       const Parameters& params, const EvalOptions& options);

// Checkpoint-aware variant; throws VocabHashMismatch when the checkpoint
// was trained against a different vocabulary.
MetricsReport evaluate(const Corpus& corpus, const Checkpoint& ckpt,
                       const EvalOptions& options);

// Stable machine-readable rendering (JSON, fixed key order and float
// formatting: identical inputs give identical bytes).
std::string report_json(const MetricsReport& report);

// Human-readable table.
std::string report_table(const MetricsReport& report);

}  // namespace lsrec
