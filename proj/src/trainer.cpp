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
#include "lsrec/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "lsrec/evaluator.hpp"
#include "lsrec/optimizer.hpp"

namespace lsrec {

std::vector<PackedBatch> pack(const std::vector<TrainingExample>& examples,
                              int row_length, int rows_per_batch,
                              LossMaskMode mask_mode) {
  LSREC_CHECK(row_length > 0 && rows_per_batch > 0,
              "pack needs positive row length and row count");

  struct OpenRow {
    std::vector<int32_t> tokens;
    std::vector<int32_t> positions;
    std::vector<int32_t> segment_ids;
    std::vector<int32_t> targets;
    std::vector<uint8_t> mask;
    std::vector<PackedBatch::Span> spans;
    int used = 0;
  };

  std::vector<PackedBatch> batches;
  std::vector<OpenRow> rows;
  int32_t next_segment_id = 0;

  auto flush = [&]() {
    if (rows.empty()) return;
    PackedBatch batch;
    batch.rows = static_cast<int>(rows.size());
    batch.row_length = row_length;
    const size_t total =
        static_cast<size_t>(batch.rows) * static_cast<size_t>(row_length);
    batch.tokens.assign(total, Vocabulary::kPad);
    batch.positions.assign(total, 0);
    batch.segment_ids.assign(total, -1);
    batch.targets.assign(total, Vocabulary::kPad);
    batch.loss_mask.assign(total, 0);
    for (size_t r = 0; r < rows.size(); ++r) {
      OpenRow& row = rows[r];
      const size_t base = r * static_cast<size_t>(row_length);
      std::copy(row.tokens.begin(), row.tokens.end(),
                batch.tokens.begin() + static_cast<ptrdiff_t>(base));
      std::copy(row.positions.begin(), row.positions.end(),
                batch.positions.begin() + static_cast<ptrdiff_t>(base));
      std::copy(row.segment_ids.begin(), row.segment_ids.end(),
                batch.segment_ids.begin() + static_cast<ptrdiff_t>(base));
      std::copy(row.targets.begin(), row.targets.end(),
                batch.targets.begin() + static_cast<ptrdiff_t>(base));
      std::copy(row.mask.begin(), row.mask.end(),
                batch.loss_mask.begin() + static_cast<ptrdiff_t>(base));
      for (auto span : row.spans) {
        span.begin += static_cast<int>(base);
        batch.spans.push_back(span);
      }
    }
    for (uint8_t m : batch.loss_mask) batch.masked_positions += m;
    batches.push_back(std::move(batch));
    rows.clear();
  };

  for (size_t e = 0; e < examples.size(); ++e) {
    const TrainingExample& ex = examples[e];
    const int len = ex.length();
    LSREC_CHECK(len <= row_length, "example of length ", len,
                " exceeds packing row length ", row_length);
    size_t slot = rows.size();
    for (size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].used + len <= row_length) {
        slot = r;
        break;
      }
    }
    if (slot == rows.size()) {
      if (static_cast<int>(rows.size()) == rows_per_batch) {
        flush();
      }
      rows.emplace_back();
      slot = rows.size() - 1;
    }
    OpenRow& row = rows[slot];
    // Span offsets are row-local here; flush() adds the row base.
    row.spans.push_back(
        PackedBatch::Span{static_cast<int64_t>(e), row.used, len});
    for (int i = 0; i < len; ++i) {
      row.tokens.push_back(ex.tokens[static_cast<size_t>(i)]);
      row.positions.push_back(i);
      row.segment_ids.push_back(next_segment_id);
      const bool has_next = i + 1 < len;
      row.targets.push_back(has_next ? ex.tokens[static_cast<size_t>(i + 1)]
                                     : Vocabulary::kPad);
      uint8_t m = 0;
      if (has_next) {
        m = mask_mode == LossMaskMode::kFullSequence
                ? 1
                : ex.loss_mask[static_cast<size_t>(i + 1)];
      }
      row.mask.push_back(m);
    }
    row.used += len;
    ++next_segment_id;
  }
  flush();
  return batches;
}

namespace {

struct BatchLoss {
  double loss = 0.0;
  int64_t masked = 0;
};

// Movie-task examples at the validation target index, in user order.
std::vector<TrainingExample> validation_examples(const Corpus& corpus,
                                                 int context_length) {
  std::vector<TrainingExample> out;
  out.reserve(corpus.sequences.size());
  for (const auto& seq : corpus.sequences) {
    out.push_back(make_example(corpus, seq, TaskKind::kMovie,
                               seq.val_target_index, context_length, 0));
  }
  return out;
}

Tensor batch_forward(const ModelConfig& config, const Parameters& params,
                     const PackedBatch& batch, bool train,
                     uint64_t dropout_seed) {
  const auto segs = segments_from_ids(batch.segment_ids);
  return forward(config, params, batch.tokens, batch.positions, segs, train,
                 dropout_seed);
}

}  // namespace

std::string format_epoch_line(const EpochStats& s) {
  char buf[160];
  if (s.val_hr10 >= 0.0) {
    std::snprintf(buf, sizeof(buf),
                  "epoch=%d train_loss=%.6f val_loss=%.6f val_hr10=%.4f "
                  "wall_s=%.2f",
                  s.epoch, s.train_loss, s.val_loss, s.val_hr10,
                  s.wall_seconds);
  } else {
    std::snprintf(buf, sizeof(buf),
                  "epoch=%d train_loss=%.6f val_loss=%.6f wall_s=%.2f",
                  s.epoch, s.train_loss, s.val_loss, s.wall_seconds);
  }
  return buf;
}

double validation_loss(const Corpus& corpus, const ModelConfig& config,
                       const Parameters& params, int batch_rows,
                       LossMaskMode mask_mode) {
  NoGradGuard no_grad;
  const auto examples = validation_examples(corpus, config.context_length);
  const auto batches =
      pack(examples, config.context_length, batch_rows, mask_mode);
  double total = 0.0;
  int64_t masked = 0;
  for (const auto& batch : batches) {
    auto logits = batch_forward(config, params, batch, false, 0);
    auto loss = cross_entropy<float>(logits, batch.targets, batch.loss_mask);
    total += static_cast<double>(loss.scalar()) *
             static_cast<double>(batch.masked_positions);
    masked += batch.masked_positions;
  }
  LSREC_CHECK(masked > 0, "validation set is empty");
  return total / static_cast<double>(masked);
}

TrainResult train(const Corpus& corpus, const ModelConfig& config,
                  const TrainOptions& options) {
  config.validate();
  LSREC_CHECK(!corpus.sequences.empty(), "corpus has no sequences");
  LSREC_CHECK(config.vocab_size == corpus.vocab.size(),
              "model vocab_size ", config.vocab_size,
              " does not match corpus vocabulary size ", corpus.vocab.size());

  const std::vector<TaskKind> tasks =
      options.multi_task
          ? std::vector<TaskKind>(std::begin(kAllTasks), std::end(kAllTasks))
          : std::vector<TaskKind>{TaskKind::kMovie};

  TrainResult result;
  result.config = config;
  auto params = init_parameters<float>(config, options.seed);

  AdamWOptions<float> adam_opts;
  adam_opts.beta1 = options.beta1;
  adam_opts.beta2 = options.beta2;
  adam_opts.eps = options.adam_eps;
  adam_opts.weight_decay = options.weight_decay;
  AdamW optimizer(params.tensor_list(), adam_opts);

  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int epochs_since_best = 0;
  Parameters best_params = params.clone();
  int64_t global_step = 0;
  bool step_cap_hit = false;

  const auto t0 = std::chrono::steady_clock::now();
  for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
    const uint64_t epoch_seed = mix_seed(options.seed, 0x45504F43u + epoch);
    auto examples = enumerate_training_set(corpus, tasks,
                                           config.context_length, epoch_seed);
    auto batches = pack(examples, config.context_length, options.batch_rows,
                        options.loss_mask_mode);

    double epoch_loss = 0.0;
    int64_t epoch_masked = 0;
    for (size_t b = 0; b < batches.size(); ++b) {
      const auto& batch = batches[b];
      optimizer.zero_grad();
      const uint64_t step_seed =
          mix_seed(options.seed, 0xD0D0FEEDull + static_cast<uint64_t>(
                                                     global_step));
      auto logits = batch_forward(config, params, batch, true, step_seed);
      auto loss =
          cross_entropy<float>(logits, batch.targets, batch.loss_mask);
      const float loss_value = loss.scalar();
      if (!std::isfinite(loss_value)) {
        fail(str_cat("non-finite training loss ", loss_value, " at epoch ",
                     epoch, ", batch ", b));
      }
      backward(loss);
      if (options.clip_norm > 0.0f) {
        optimizer.clip_grad_norm(options.clip_norm);
      }
      ++global_step;
      const float warmup =
          options.warmup_steps > 0
              ? std::min(1.0f, static_cast<float>(global_step) /
                                   static_cast<float>(options.warmup_steps))
              : 1.0f;
      optimizer.step(options.lr * warmup);
      epoch_loss += static_cast<double>(loss_value) *
                    static_cast<double>(batch.masked_positions);
      epoch_masked += batch.masked_positions;
      if (options.max_steps > 0 && global_step >= options.max_steps) {
        step_cap_hit = true;
        break;
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_masked > 0
                           ? epoch_loss / static_cast<double>(epoch_masked)
                           : 0.0;
    stats.val_loss = validation_loss(corpus, config, params,
                                     options.batch_rows,
                                     options.loss_mask_mode);
    if (options.log_val_hr) {
      NoGradGuard no_grad;
      EvalOptions eval_opts;
      eval_opts.split = Split::kVal;
      eval_opts.ks = {10};
      const auto report = evaluate(corpus, config, params, eval_opts);
      stats.val_hr10 = report.rows[0].hr;
    }
    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (options.log_stream) {
      (*options.log_stream) << format_epoch_line(stats) << "\n";
      options.log_stream->flush();
    }
    result.history.push_back(stats);

    if (stats.val_loss < best_val) {
      best_val = stats.val_loss;
      best_epoch = epoch;
      best_params = params.clone();
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
    }
    if (step_cap_hit || epochs_since_best > options.patience) break;
  }

  result.params = std::move(best_params);
  result.final_params = params.clone();
  result.best_epoch = best_epoch;
  result.best_val_loss = best_val;
  result.steps = global_step;
  return result;
}

}  // namespace lsrec
