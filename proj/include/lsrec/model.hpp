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
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lsrec/common.hpp"
#include "lsrec/tensor.hpp"

// The LSRec decoder: token embedding, pre-norm blocks of grouped-query
// causal self-attention with rotary embeddings plus a two-matrix SiLU
// feed-forward, final norm, and a tied-embedding output head. All
// projections are bias-free.

namespace lsrec {

struct ModelConfig {
  int hidden_dims = 64;
  int intermediate_dims = 128;
  int context_length = 200;
  int attn_heads = 1;
  int kv_heads = 1;
  int layers = 2;
  int vocab_size = 0;
  float attn_dropout = 0.2f;
  float rope_theta = 10000.0f;
  float rms_eps = 1e-5f;

  int head_dim() const { return hidden_dims / attn_heads; }
  int kv_dims() const { return head_dim() * kv_heads; }

  void validate() const {
    LSREC_CHECK(hidden_dims > 0 && intermediate_dims > 0 && layers > 0 &&
                    context_length > 0 && vocab_size > 0,
                "model config has non-positive dimensions");
    LSREC_CHECK(hidden_dims % attn_heads == 0,
                "hidden_dims must be divisible by attn_heads");
    LSREC_CHECK(attn_heads % kv_heads == 0,
                "attn_heads must be divisible by kv_heads");
    LSREC_CHECK(head_dim() % 2 == 0, "rotary embedding needs even head_dim");
    LSREC_CHECK(attn_dropout >= 0.0f && attn_dropout < 1.0f,
                "attn_dropout must be in [0,1)");
  }

  bool operator==(const ModelConfig&) const = default;
};

enum class Preset { kSmall, kMedium, kLarge };

inline ModelConfig preset_config(Preset preset, int vocab_size) {
  ModelConfig c;
  c.vocab_size = vocab_size;
  switch (preset) {
    case Preset::kSmall:
      c.hidden_dims = 64;
      c.intermediate_dims = 128;
      c.attn_heads = 1;
      c.layers = 2;
      break;
    case Preset::kMedium:
      c.hidden_dims = 128;
      c.intermediate_dims = 384;
      c.attn_heads = 2;
      c.layers = 4;
      break;
    case Preset::kLarge:
      c.hidden_dims = 384;
      c.intermediate_dims = 512;
      c.attn_heads = 2;
      c.layers = 4;
      break;
  }
  return c;
}

inline std::optional<Preset> preset_from_name(const std::string& name) {
  if (name == "small") return Preset::kSmall;
  if (name == "medium") return Preset::kMedium;
  if (name == "large") return Preset::kLarge;
  return std::nullopt;
}

inline const char* preset_name(Preset p) {
  switch (p) {
    case Preset::kSmall: return "small";
    case Preset::kMedium: return "medium";
    case Preset::kLarge: return "large";
  }
  return "?";
}

// Closed-form parameter count with the tied output head:
// V*d + L*(2d + 2d^2 + 2*d*(head_dim*kv_heads) + 2*d*f) + d
inline int64_t parameter_count(const ModelConfig& c) {
  const int64_t d = c.hidden_dims;
  const int64_t f = c.intermediate_dims;
  const int64_t kv = c.kv_dims();
  const int64_t per_layer = 2 * d + 2 * d * d + 2 * d * kv + 2 * d * f;
  return static_cast<int64_t>(c.vocab_size) * d + c.layers * per_layer + d;
}

template <typename T>
struct LayerParamsT {
  TensorT<T> attn_norm;  // [d]
  TensorT<T> q_proj;     // [d x d]
  TensorT<T> k_proj;     // [d x kv_dims]
  TensorT<T> v_proj;     // [d x kv_dims]
  TensorT<T> o_proj;     // [d x d]
  TensorT<T> ffn_norm;   // [d]
  TensorT<T> ffn_up;     // [d x f]
  TensorT<T> ffn_down;   // [f x d]
};

template <typename T>
struct ParametersT {
  TensorT<T> token_embedding;  // [V x d]; also the output head, transposed
  std::vector<LayerParamsT<T>> layers;
  TensorT<T> final_norm;  // [d]

  // Stable name -> tensor listing; the checkpoint format and optimizer
  // ordering both rely on it.
  std::vector<std::pair<std::string, TensorT<T>*>> named() {
    std::vector<std::pair<std::string, TensorT<T>*>> out;
    out.emplace_back("token_embedding", &token_embedding);
    for (size_t i = 0; i < layers.size(); ++i) {
      auto& l = layers[i];
      const std::string p = str_cat("layers.", i, ".");
      out.emplace_back(p + "attn_norm", &l.attn_norm);
      out.emplace_back(p + "q_proj", &l.q_proj);
      out.emplace_back(p + "k_proj", &l.k_proj);
      out.emplace_back(p + "v_proj", &l.v_proj);
      out.emplace_back(p + "o_proj", &l.o_proj);
      out.emplace_back(p + "ffn_norm", &l.ffn_norm);
      out.emplace_back(p + "ffn_up", &l.ffn_up);
      out.emplace_back(p + "ffn_down", &l.ffn_down);
    }
    out.emplace_back("final_norm", &final_norm);
    return out;
  }

  std::vector<TensorT<T>> tensor_list() {
    std::vector<TensorT<T>> out;
    for (auto& [name, t] : named()) out.push_back(*t);
    return out;
  }

  int64_t count() {
    int64_t total = 0;
    for (auto& [name, t] : named()) total += t->numel();
    return total;
  }

  ParametersT<T> clone() {
    ParametersT<T> copy;
    copy.token_embedding = token_embedding.clone_detached();
    copy.layers.reserve(layers.size());
    for (auto& l : layers) {
      copy.layers.push_back(LayerParamsT<T>{
          l.attn_norm.clone_detached(), l.q_proj.clone_detached(),
          l.k_proj.clone_detached(), l.v_proj.clone_detached(),
          l.o_proj.clone_detached(), l.ffn_norm.clone_detached(),
          l.ffn_up.clone_detached(), l.ffn_down.clone_detached()});
    }
    copy.final_norm = final_norm.clone_detached();
    return copy;
  }
};

using Parameters = ParametersT<float>;

namespace detail {

// Deterministic truncated normal (|z| <= 2 std), Box-Muller over a
// mt19937_64 stream; avoids std::normal_distribution so two builds of the
// library draw identical values.
class TruncNormal {
 public:
  explicit TruncNormal(uint64_t seed) : rng_(seed) {}

  double sample(double stddev) {
    for (;;) {
      const double u1 =
          1.0 - static_cast<double>(rng_() >> 11) * 0x1.0p-53;  // (0,1]
      const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
      const double z =
          std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
      if (std::abs(z) <= 2.0) return z * stddev;
    }
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace detail

template <typename T>
ParametersT<T> init_parameters(const ModelConfig& c, uint64_t seed) {
  c.validate();
  constexpr double kInitStd = 0.02;
  const int d = c.hidden_dims;
  const int f = c.intermediate_dims;
  const int kv = c.kv_dims();

  ParametersT<T> p;
  p.token_embedding = TensorT<T>::zeros({c.vocab_size, d}, true);
  for (int i = 0; i < c.layers; ++i) {
    LayerParamsT<T> l;
    l.attn_norm = TensorT<T>::zeros({d}, true);
    l.q_proj = TensorT<T>::zeros({d, d}, true);
    l.k_proj = TensorT<T>::zeros({d, kv}, true);
    l.v_proj = TensorT<T>::zeros({d, kv}, true);
    l.o_proj = TensorT<T>::zeros({d, d}, true);
    l.ffn_norm = TensorT<T>::zeros({d}, true);
    l.ffn_up = TensorT<T>::zeros({d, f}, true);
    l.ffn_down = TensorT<T>::zeros({f, d}, true);
    p.layers.push_back(std::move(l));
  }
  p.final_norm = TensorT<T>::zeros({d}, true);

  detail::TruncNormal rng(seed);
  for (auto& [name, t] : p.named()) {
    if (name.find("norm") != std::string::npos) {
      for (T& v : t->data()) v = T(1);
    } else {
      for (T& v : t->data()) v = static_cast<T>(rng.sample(kInitStd));
    }
  }
  return p;
}

inline std::vector<Segment> segments_from_ids(
    std::span<const int32_t> segment_ids) {
  std::vector<Segment> segs;
  const int64_t n = static_cast<int64_t>(segment_ids.size());
  int64_t i = 0;
  while (i < n) {
    if (segment_ids[static_cast<size_t>(i)] < 0) {
      ++i;
      continue;
    }
    int64_t j = i + 1;
    while (j < n && segment_ids[static_cast<size_t>(j)] ==
                        segment_ids[static_cast<size_t>(i)]) {
      ++j;
    }
    segs.push_back(
        Segment{static_cast<int>(i), static_cast<int>(j - i)});
    i = j;
  }
  return segs;
}

// Attention block on a pre-normed input: projections, rotary q/k, grouped
// causal attention within each segment, output projection.
template <typename T>
TensorT<T> attention(const ModelConfig& c, const LayerParamsT<T>& layer,
                     const TensorT<T>& x, std::span<const int32_t> positions,
                     std::span<const Segment> segs, bool train,
                     uint64_t dropout_seed) {
  for (const Segment& s : segs) {
    LSREC_CHECK(s.len <= c.context_length, "segment of length ", s.len,
                " exceeds context length ", c.context_length);
  }
  auto q = rope(matmul(x, layer.q_proj), positions, c.attn_heads,
                static_cast<T>(c.rope_theta));
  auto k = rope(matmul(x, layer.k_proj), positions, c.kv_heads,
                static_cast<T>(c.rope_theta));
  auto v = matmul(x, layer.v_proj);
  auto att = gqa_attention(q, k, v, segs, c.attn_heads, c.kv_heads,
                           static_cast<T>(c.attn_dropout), train,
                           dropout_seed);
  return matmul(att, layer.o_proj);
}

// Two-matrix feed-forward: down(silu(up(x))), no gate branch.
template <typename T>
TensorT<T> ffn(const LayerParamsT<T>& layer, const TensorT<T>& x) {
  return matmul(silu(matmul(x, layer.ffn_up)), layer.ffn_down);
}

template <typename T>
TensorT<T> rope_rotate(const TensorT<T>& x,
                       std::span<const int32_t> positions, int heads,
                       T theta) {
  return rope(x, positions, heads, theta);
}

// Full decoder pass over a flattened (possibly packed) token axis.
// positions restart at 0 in each segment; segment_ids < 0 mark padding.
template <typename T>
TensorT<T> forward(const ModelConfig& c, const ParametersT<T>& params,
                   std::span<const int32_t> tokens,
                   std::span<const int32_t> positions,
                   std::span<const Segment> segs, bool train,
                   uint64_t dropout_seed) {
  LSREC_CHECK(tokens.size() == positions.size(),
              "tokens/positions length mismatch");
  for (int32_t pos : positions) {
    LSREC_CHECK(pos >= 0 && pos < c.context_length, "position ", pos,
                " outside context length ", c.context_length);
  }
  const T eps = static_cast<T>(c.rms_eps);
  auto x = embedding(params.token_embedding, tokens);
  for (size_t i = 0; i < params.layers.size(); ++i) {
    const auto& layer = params.layers[i];
    auto h = rms_norm(x, layer.attn_norm, eps);
    x = add(x, attention(c, layer, h, positions, segs, train,
                         mix_seed(dropout_seed, i)));
    auto h2 = rms_norm(x, layer.ffn_norm, eps);
    x = add(x, ffn(layer, h2));
  }
  x = rms_norm(x, params.final_norm, eps);
  return matmul_nt(x, params.token_embedding);
}

// Convenience for a single unpacked sequence: positions 0..n-1, one segment.
template <typename T>
TensorT<T> forward_sequence(const ModelConfig& c,
                            const ParametersT<T>& params,
                            std::span<const int32_t> tokens, bool train,
                            uint64_t dropout_seed) {
  const int n = static_cast<int>(tokens.size());
  std::vector<int32_t> positions(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) positions[static_cast<size_t>(i)] = i;
  const Segment seg{0, n};
  return forward(c, params, tokens, positions,
                 std::span<const Segment>(&seg, 1), train, dropout_seed);
}

}  // namespace lsrec
