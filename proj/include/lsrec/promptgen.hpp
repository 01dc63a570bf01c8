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
#include <vector>

#include "lsrec/dataset.hpp"

// Tokenized training/evaluation examples for the five tasks. Prompt shape:
//
//   BOS m_1 .. m_n TASK <task> [ARGUMENTS <arg>] START <target> EOS
//
// with the ARGUMENTS block present for the rating, movie-by-genre and
// movie-by-rating tasks. The loss mask selects the target token and the
// closing EOS; history tokens are conditioning only (the full-sequence
// alternative is a trainer option).

namespace lsrec {

enum class TaskKind {
  kMovie,
  kGenre,
  kRating,
  kMovieByGenre,
  kMovieByRating,
};

inline constexpr TaskKind kAllTasks[] = {
    TaskKind::kMovie, TaskKind::kGenre, TaskKind::kRating,
    TaskKind::kMovieByGenre, TaskKind::kMovieByRating};

int32_t task_token(TaskKind task);
const char* task_name(TaskKind task);

struct TrainingExample {
  std::vector<int32_t> tokens;
  std::vector<uint8_t> loss_mask;  // 1 on target and EOS
  TaskKind task = TaskKind::kMovie;
  int64_t user_id = 0;

  int length() const { return static_cast<int>(tokens.size()); }
};

// Builds one example with the target at `target_index`; history is the
// items strictly before it, oldest dropped first if the total would exceed
// context_length. `sample_key` seeds the genre pick for multi-genre targets.
TrainingExample make_example(const Corpus& corpus,
                             const InteractionSequence& seq, TaskKind task,
                             int target_index, int context_length,
                             uint64_t sample_key);

// One example per (user, task) with targets at the train split index, in a
// seed-determined shuffled order. Genre picks for multi-genre targets are
// re-sampled per call, so passing a per-epoch seed varies them per epoch.
std::vector<TrainingExample> enumerate_training_set(
    const Corpus& corpus, std::span<const TaskKind> tasks, int context_length,
    uint64_t seed);

// Movie-task prompt ending at START (no target/EOS), for ranking.
std::vector<int32_t> make_eval_prompt(const Corpus& corpus,
                                      const InteractionSequence& seq,
                                      int target_index, int context_length);

}  // namespace lsrec
