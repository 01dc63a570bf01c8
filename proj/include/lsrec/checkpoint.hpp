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
#include <stdexcept>
#include <string>

#include "lsrec/dataset.hpp"
#include "lsrec/model.hpp"

// Checkpoint file: magic, version, config fields, vocabulary hash, trainer
// metadata, then named tensors (name, shape, raw little-endian f32 data).
// Save -> load reproduces every tensor bit-exactly.

namespace lsrec {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// File is unreadable, has a bad magic, is truncated, or its tensor set does
// not match the stored config.
struct CheckpointCorrupt : CheckpointError {
  using CheckpointError::CheckpointError;
};
struct CheckpointVersionMismatch : CheckpointError {
  using CheckpointError::CheckpointError;
};
// Checkpoint was trained against a different vocabulary.
struct VocabHashMismatch : CheckpointError {
  using CheckpointError::CheckpointError;
};
// Checkpoint architecture differs from the requested config.
struct ConfigMismatch : CheckpointError {
  using CheckpointError::CheckpointError;
};

struct TrainStateMeta {
  int32_t epoch = 0;
  float best_val_loss = 0.0f;
};

struct Checkpoint {
  ModelConfig config;
  Parameters params;
  uint64_t vocab_hash = 0;
  TrainStateMeta state;
};

void save_checkpoint(const std::string& path, const ModelConfig& config,
                     Parameters& params, uint64_t vocab_hash,
                     const TrainStateMeta& state);

Checkpoint load_checkpoint(const std::string& path);

// Throws VocabHashMismatch / ConfigMismatch respectively.
void require_vocab_match(const Checkpoint& ckpt, const Vocabulary& vocab);
void require_config_match(const Checkpoint& ckpt, const ModelConfig& config);

}  // namespace lsrec
