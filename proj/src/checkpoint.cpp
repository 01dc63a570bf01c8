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
#include "lsrec/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace lsrec {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

constexpr char kMagic[8] = {'L', 'S', 'R', 'E', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in.good()) {
    throw CheckpointCorrupt(
        str_cat("checkpoint '", path, "' is corrupt or truncated"));
  }
  return value;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& config,
                     Parameters& params, uint64_t vocab_hash,
                     const TrainStateMeta& state) {
  std::ofstream out(path, std::ios::binary);
  LSREC_CHECK(out.good(), "cannot open '", path, "' for writing");
  out.write(kMagic, sizeof(kMagic));
  write_pod<uint32_t>(out, kVersion);
  write_pod<int32_t>(out, config.hidden_dims);
  write_pod<int32_t>(out, config.intermediate_dims);
  write_pod<int32_t>(out, config.context_length);
  write_pod<int32_t>(out, config.attn_heads);
  write_pod<int32_t>(out, config.kv_heads);
  write_pod<int32_t>(out, config.layers);
  write_pod<int32_t>(out, config.vocab_size);
  write_pod<float>(out, config.attn_dropout);
  write_pod<float>(out, config.rope_theta);
  write_pod<float>(out, config.rms_eps);
  write_pod<uint64_t>(out, vocab_hash);
  write_pod<int32_t>(out, state.epoch);
  write_pod<float>(out, state.best_val_loss);

  const auto named = params.named();
  write_pod<uint32_t>(out, static_cast<uint32_t>(named.size()));
  for (const auto& [name, tensor] : named) {
    LSREC_CHECK(name.size() <= 0xffff, "tensor name too long");
    write_pod<uint16_t>(out, static_cast<uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<uint8_t>(out, static_cast<uint8_t>(tensor->rank()));
    for (int i = 0; i < tensor->rank(); ++i) {
      write_pod<int32_t>(out, tensor->dim(i));
    }
    const auto data = tensor->data();
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(float)));
  }
  LSREC_CHECK(out.good(), "write failed for '", path, "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) {
    throw CheckpointCorrupt(str_cat("cannot open checkpoint '", path, "'"));
  }
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in.good() || std::memcmp(magic, kMagic, 8) != 0) {
    throw CheckpointCorrupt(str_cat("'", path, "' is not a checkpoint file"));
  }
  const auto version = read_pod<uint32_t>(in, path);
  if (version != kVersion) {
    throw CheckpointVersionMismatch(
        str_cat("checkpoint '", path, "' has version ", version,
                ", this build reads version ", kVersion));
  }

  Checkpoint ckpt;
  ckpt.config.hidden_dims = read_pod<int32_t>(in, path);
  ckpt.config.intermediate_dims = read_pod<int32_t>(in, path);
  ckpt.config.context_length = read_pod<int32_t>(in, path);
  ckpt.config.attn_heads = read_pod<int32_t>(in, path);
  ckpt.config.kv_heads = read_pod<int32_t>(in, path);
  ckpt.config.layers = read_pod<int32_t>(in, path);
  ckpt.config.vocab_size = read_pod<int32_t>(in, path);
  ckpt.config.attn_dropout = read_pod<float>(in, path);
  ckpt.config.rope_theta = read_pod<float>(in, path);
  ckpt.config.rms_eps = read_pod<float>(in, path);
  ckpt.vocab_hash = read_pod<uint64_t>(in, path);
  ckpt.state.epoch = read_pod<int32_t>(in, path);
  ckpt.state.best_val_loss = read_pod<float>(in, path);

  try {
    ckpt.config.validate();
  } catch (const std::exception& e) {
    throw CheckpointCorrupt(
        str_cat("checkpoint '", path, "' has an invalid config: ", e.what()));
  }

  // Allocate from the config, then fill tensors by name so the file order
  // is not load-bearing.
  ckpt.params = init_parameters<float>(ckpt.config, 0);
  auto named = ckpt.params.named();
  std::vector<bool> seen(named.size(), false);

  const auto n_tensors = read_pod<uint32_t>(in, path);
  if (n_tensors != named.size()) {
    throw CheckpointCorrupt(str_cat("checkpoint '", path, "' stores ",
                                    n_tensors, " tensors, config implies ",
                                    named.size()));
  }
  for (uint32_t t = 0; t < n_tensors; ++t) {
    const auto name_len = read_pod<uint16_t>(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in.good()) {
      throw CheckpointCorrupt(str_cat("checkpoint '", path, "' truncated"));
    }
    const auto rank = read_pod<uint8_t>(in, path);
    std::vector<int> dims(rank);
    for (auto& d : dims) d = read_pod<int32_t>(in, path);

    size_t idx = named.size();
    for (size_t i = 0; i < named.size(); ++i) {
      if (named[i].first == name) {
        idx = i;
        break;
      }
    }
    if (idx == named.size() || seen[idx]) {
      throw CheckpointCorrupt(str_cat("checkpoint '", path,
                                      "' has unexpected tensor '", name, "'"));
    }
    seen[idx] = true;
    auto* tensor = named[idx].second;
    if (dims != tensor->shape()) {
      throw CheckpointCorrupt(str_cat("checkpoint '", path, "' tensor '",
                                      name, "' has a shape inconsistent with "
                                      "the stored config"));
    }
    auto data = tensor->data();
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (!in.good()) {
      throw CheckpointCorrupt(str_cat("checkpoint '", path, "' truncated"));
    }
  }
  return ckpt;
}

void require_vocab_match(const Checkpoint& ckpt, const Vocabulary& vocab) {
  if (ckpt.vocab_hash != vocab.hash()) {
    throw VocabHashMismatch(
        "checkpoint was trained against a different vocabulary (hash "
        "mismatch)");
  }
}

void require_config_match(const Checkpoint& ckpt, const ModelConfig& config) {
  if (!(ckpt.config == config)) {
    throw ConfigMismatch(
        "checkpoint model config does not match the requested config");
  }
}

}  // namespace lsrec
