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
#include <iosfwd>
#include <vector>

#include "lsrec/dataset.hpp"
#include "lsrec/model.hpp"
#include "lsrec/promptgen.hpp"

// Supervised fine-tuning loop: first-fit sequence packing, AdamW with linear
// warmup and global-norm clipping, per-epoch validation, early stopping on
// validation loss, deterministic given the seed.

namespace lsrec {

enum class LossMaskMode { kTargetOnly, kFullSequence };

// Examples packed first-fit into rows of a fixed length. Within a row,
// segment ids are non-decreasing and globally unique across the batch;
// padding carries segment id -1 and zero loss mask. positions restart at 0
// at each segment start. targets[i] is the next token within the same
// segment; loss_mask[i]=1 marks positions whose prediction is scored.
struct PackedBatch {
  int rows = 0;
  int row_length = 0;
  std::vector<int32_t> tokens;
  std::vector<int32_t> positions;
  std::vector<int32_t> segment_ids;
  std::vector<int32_t> targets;
  std::vector<uint8_t> loss_mask;
  int64_t masked_positions = 0;

  // Where each input example landed (flattened begin offset), for tests and
  // per-example diagnostics.
  struct Span {
    int64_t example_index = 0;
    int begin = 0;
    int length = 0;
  };
  std::vector<Span> spans;

  int64_t size() const { return static_cast<int64_t>(rows) * row_length; }
};

// First-fit packing into rows of length `row_length`, at most
// `rows_per_batch` rows per batch; no example is split across rows.
std::vector<PackedBatch> pack(const std::vector<TrainingExample>& examples,
                              int row_length, int rows_per_batch,
                              LossMaskMode mask_mode);

struct TrainOptions {
  bool multi_task = false;
  uint64_t seed = 1;
  float lr = 1e-3f;
  int batch_rows = 16;
  int max_epochs = 100;
  int patience = 20;
  int warmup_steps = 100;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float adam_eps = 1e-8f;
  float weight_decay = 0.01f;
  float clip_norm = 1.0f;
  LossMaskMode loss_mask_mode = LossMaskMode::kTargetOnly;
  int64_t max_steps = 0;    // 0 = no step cap
  bool log_val_hr = true;   // rank the val split each epoch for the log
  std::ostream* log_stream = nullptr;  // epoch lines, same schema as the log file
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_hr10 = -1.0;  // -1 when not computed
  double wall_seconds = 0.0;
};

struct TrainResult {
  Parameters params;        // lowest-validation-loss parameters
  Parameters final_params;  // parameters after the last step
  ModelConfig config;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  int64_t steps = 0;
  std::vector<EpochStats> history;
};

// Formats one epoch log line:
//   epoch=E train_loss=X val_loss=Y val_hr10=Z wall_s=W
std::string format_epoch_line(const EpochStats& stats);

TrainResult train(const Corpus& corpus, const ModelConfig& config,
                  const TrainOptions& options);

// Mean masked cross-entropy of the val-split movie-task examples under the
// given parameters (eval mode); exposed for tests.
double validation_loss(const Corpus& corpus, const ModelConfig& config,
                       const Parameters& params, int batch_rows,
                       LossMaskMode mask_mode);

}  // namespace lsrec
