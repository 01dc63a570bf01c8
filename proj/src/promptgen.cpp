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
#include "lsrec/promptgen.hpp"

#include <algorithm>
#include <random>

#include "lsrec/common.hpp"

namespace lsrec {

int32_t task_token(TaskKind task) {
  switch (task) {
    case TaskKind::kMovie: return Vocabulary::kRecommend;
    case TaskKind::kGenre: return Vocabulary::kRecommendGenre;
    case TaskKind::kRating: return Vocabulary::kRateMovie;
    case TaskKind::kMovieByGenre: return Vocabulary::kMovieByGenre;
    case TaskKind::kMovieByRating: return Vocabulary::kRecommendRating;
  }
  fail("invalid task kind");
}

const char* task_name(TaskKind task) {
  switch (task) {
    case TaskKind::kMovie: return "movie";
    case TaskKind::kGenre: return "genre";
    case TaskKind::kRating: return "rating";
    case TaskKind::kMovieByGenre: return "movie_by_genre";
    case TaskKind::kMovieByRating: return "movie_by_rating";
  }
  return "?";
}

namespace {

// One uniformly sampled genre token of the target movie, keyed so the pick
// is stable for a given (seed, user, task) and varies across epochs.
int32_t pick_genre(const Corpus& corpus, int32_t movie_id,
                   uint64_t sample_key) {
  const auto& tokens = corpus.movie_by_id(movie_id).genre_tokens;
  LSREC_CHECK(!tokens.empty(), "movie ", movie_id, " has no genres");
  if (tokens.size() == 1) return tokens[0];
  const size_t idx = static_cast<size_t>(
      keyed_uniform(sample_key, static_cast<uint64_t>(movie_id)) *
      static_cast<double>(tokens.size()));
  return tokens[std::min(idx, tokens.size() - 1)];
}

}  // namespace

TrainingExample make_example(const Corpus& corpus,
                             const InteractionSequence& seq, TaskKind task,
                             int target_index, int context_length,
                             uint64_t sample_key) {
  LSREC_CHECK(target_index == seq.train_target_index ||
                  target_index == seq.val_target_index ||
                  target_index == seq.test_target_index,
              "target index ", target_index, " is not a split index");
  LSREC_CHECK(target_index >= 1, "empty history for user ", seq.user_id);

  const Vocabulary& vocab = corpus.vocab;
  const SequenceItem& target = seq.items[static_cast<size_t>(target_index)];

  // Tail after history: TASK <task> [ARGUMENTS <arg>] START <target> EOS.
  std::vector<int32_t> tail;
  tail.push_back(Vocabulary::kTask);
  tail.push_back(task_token(task));
  int32_t target_token = 0;
  switch (task) {
    case TaskKind::kMovie:
      target_token = vocab.movie_token(target.movie_id);
      break;
    case TaskKind::kGenre:
      target_token = pick_genre(corpus, target.movie_id, sample_key);
      break;
    case TaskKind::kRating:
      tail.push_back(Vocabulary::kArguments);
      tail.push_back(vocab.movie_token(target.movie_id));
      target_token = vocab.rating_token(target.rating);
      break;
    case TaskKind::kMovieByGenre:
      tail.push_back(Vocabulary::kArguments);
      tail.push_back(pick_genre(corpus, target.movie_id, sample_key));
      target_token = vocab.movie_token(target.movie_id);
      break;
    case TaskKind::kMovieByRating:
      tail.push_back(Vocabulary::kArguments);
      tail.push_back(vocab.rating_token(target.rating));
      target_token = vocab.movie_token(target.movie_id);
      break;
  }
  tail.push_back(Vocabulary::kStart);
  tail.push_back(target_token);
  tail.push_back(Vocabulary::kEos);

  // Oldest history items are dropped first when the example would exceed
  // the context; at least one history item always remains.
  const int overhead = 1 + static_cast<int>(tail.size());  // BOS + tail
  const int max_history = context_length - overhead;
  LSREC_CHECK(max_history >= 1, "context length ", context_length,
              " too short for any history");
  const int history_len = std::min(target_index, max_history);
  const int history_begin = target_index - history_len;

  TrainingExample ex;
  ex.task = task;
  ex.user_id = seq.user_id;
  ex.tokens.reserve(static_cast<size_t>(1 + history_len) + tail.size());
  ex.tokens.push_back(Vocabulary::kBos);
  for (int i = history_begin; i < target_index; ++i) {
    ex.tokens.push_back(
        vocab.movie_token(seq.items[static_cast<size_t>(i)].movie_id));
  }
  ex.tokens.insert(ex.tokens.end(), tail.begin(), tail.end());

  ex.loss_mask.assign(ex.tokens.size(), 0);
  ex.loss_mask[ex.tokens.size() - 2] = 1;  // target
  ex.loss_mask[ex.tokens.size() - 1] = 1;  // EOS
  return ex;
}

std::vector<TrainingExample> enumerate_training_set(
    const Corpus& corpus, std::span<const TaskKind> tasks, int context_length,
    uint64_t seed) {
  LSREC_CHECK(!tasks.empty(), "task set must be non-empty");
  std::vector<TrainingExample> out;
  out.reserve(corpus.sequences.size() * tasks.size());
  for (const auto& seq : corpus.sequences) {
    for (TaskKind task : tasks) {
      const uint64_t sample_key =
          mix_seed(seed, static_cast<uint64_t>(seq.user_id) * 8 +
                             static_cast<uint64_t>(task));
      out.push_back(make_example(corpus, seq, task, seq.train_target_index,
                                 context_length, sample_key));
    }
  }
  std::mt19937_64 rng(seed);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::vector<int32_t> make_eval_prompt(const Corpus& corpus,
                                      const InteractionSequence& seq,
                                      int target_index, int context_length) {
  LSREC_CHECK(target_index >= 1 && target_index < seq.length(),
              "invalid eval target index ", target_index);
  const Vocabulary& vocab = corpus.vocab;
  // BOS + history + TASK RECOMMEND START
  const int overhead = 4;
  const int max_history = context_length - overhead;
  LSREC_CHECK(max_history >= 1, "context length too short");
  const int history_len = std::min(target_index, max_history);
  std::vector<int32_t> prompt;
  prompt.reserve(static_cast<size_t>(history_len) + 4);
  prompt.push_back(Vocabulary::kBos);
  for (int i = target_index - history_len; i < target_index; ++i) {
    prompt.push_back(
        vocab.movie_token(seq.items[static_cast<size_t>(i)].movie_id));
  }
  prompt.push_back(Vocabulary::kTask);
  prompt.push_back(Vocabulary::kRecommend);
  prompt.push_back(Vocabulary::kStart);
  return prompt;
}

}  // namespace lsrec
