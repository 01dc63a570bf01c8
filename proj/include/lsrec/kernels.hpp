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

// Dense kernels behind the tensor library. Every kernel exists twice with an
// identical loop structure: the OpenMP version in lsrec::kernels parallelizes
// over independently owned output elements, the twin in
// lsrec::kernels::serial drops the pragmas. Per output element the floating
// point accumulation order is the same in both, so results are bit-identical
// regardless of thread count. tools/bench_kernels compares their throughput.

namespace lsrec::kernels {

// One packed attention segment: rows [begin, begin+len) of the flattened
// token axis attend among themselves under a causal mask.
struct Segment {
  int begin = 0;
  int len = 0;
};

// out[m x n] = a[m x k] * b[k x n]
template <typename T>
void matmul_nn(int m, int k, int n, const T* a, const T* b, T* out,
               bool accumulate);

// out[m x n] = a[m x k] * b[n x k]^T
template <typename T>
void matmul_nt(int m, int k, int n, const T* a, const T* b, T* out,
               bool accumulate);

// out[k x n] = a[m x k]^T * b[m x n]
template <typename T>
void matmul_tn(int m, int k, int n, const T* a, const T* b, T* out,
               bool accumulate);

template <typename T>
void add(int64_t n, const T* a, const T* b, T* out);

template <typename T>
void mul(int64_t n, const T* a, const T* b, T* out);

// y += alpha * x
template <typename T>
void axpy(int64_t n, T alpha, const T* x, T* y);

template <typename T>
void scale(int64_t n, T alpha, const T* x, T* out);

template <typename T>
void silu_fwd(int64_t n, const T* x, T* y);

// gx += silu'(x) * gy
template <typename T>
void silu_bwd(int64_t n, const T* x, const T* gy, T* gx);

// Row-wise softmax over the last axis, max-subtracted.
template <typename T>
void softmax_rows(int64_t rows, int n, const T* x, T* y);

// gx += y .* (gy - sum(gy .* y)) per row
template <typename T>
void softmax_rows_bwd(int64_t rows, int n, const T* y, const T* gy, T* gx);

// y = x / sqrt(mean(x^2) + eps) .* w ; inv_rms[row] saved for backward
template <typename T>
void rmsnorm_fwd(int64_t rows, int d, const T* x, const T* w, T eps, T* y,
                 T* inv_rms);

template <typename T>
void rmsnorm_bwd(int64_t rows, int d, const T* x, const T* w, const T* inv_rms,
                 const T* gy, T* gx, T* gw);

template <typename T>
void embedding_fwd(int64_t t, int d, const T* table, const int32_t* ids,
                   T* out);

// gtable[ids[i]] += gy[i]
template <typename T>
void embedding_bwd(int64_t t, int d, const int32_t* ids, const T* gy,
                   T* gtable);

// Rotary rotation of interleaved pairs, angle = pos * theta^(-2i/head_dim).
// inverse=true rotates by the negated angle (the transpose, used in backward).
template <typename T>
void rope_fwd(int64_t t, int heads, int head_dim, T theta, const int32_t* pos,
              const T* x, T* y, bool inverse, bool accumulate);

// Grouped-query causal attention over packed segments.
// q: [t x H*hd], k/v: [t x KV*hd], out: [t x H*hd]. Query head h reads kv
// head h/(H/KV). probs holds one len x len block per (segment, head), post
// softmax and pre dropout; the dropout mask is regenerated from `seed` in
// the backward pass instead of being stored.
int64_t attention_probs_size(std::span<const Segment> segs, int heads);

template <typename T>
void attention_fwd(std::span<const Segment> segs, int heads, int kv_heads,
                   int head_dim, const T* q, const T* k, const T* v, T scale,
                   T dropout_p, bool train, uint64_t seed, T* probs, T* out);

template <typename T>
void attention_bwd(std::span<const Segment> segs, int heads, int kv_heads,
                   int head_dim, const T* q, const T* k, const T* v,
                   const T* probs, const T* gout, T scale, T dropout_p,
                   bool train, uint64_t seed, T* gq, T* gk, T* gv);

// Per-row -log softmax(logits)[target] for mask=1 rows; 0 elsewhere.
// lse[row] = logsumexp of the row, saved for backward.
template <typename T>
void ce_fwd(int64_t t, int vocab, const T* logits, const int32_t* targets,
            const uint8_t* mask, T* row_loss, T* lse);

// glogits[r] += gloss * inv_count * (softmax(logits[r]) - onehot(target[r]))
template <typename T>
void ce_bwd(int64_t t, int vocab, const T* logits, const int32_t* targets,
            const uint8_t* mask, const T* lse, T inv_count, T gloss,
            T* glogits);

// Inverted dropout; keep decision keyed by (seed, element index).
template <typename T>
void dropout_fwd(int64_t n, const T* x, T p, bool train, uint64_t seed, T* y);

template <typename T>
void dropout_bwd(int64_t n, const T* gy, T p, bool train, uint64_t seed,
                 T* gx);

// Decoupled weight decay Adam with bias correction; `step` is 1-based.
template <typename T>
void adamw_step(int64_t n, T* param, const T* grad, T* m, T* v, T lr, T beta1,
                T beta2, T eps, T weight_decay, int64_t step);

// Fixed-order reductions (serial accumulation; deterministic).
template <typename T>
T sum(int64_t n, const T* x);

template <typename T>
T sum_squares(int64_t n, const T* x);

namespace serial {

template <typename T>
void matmul_nn(int m, int k, int n, const T* a, const T* b, T* out,
               bool accumulate);
template <typename T>
void matmul_nt(int m, int k, int n, const T* a, const T* b, T* out,
               bool accumulate);
template <typename T>
void matmul_tn(int m, int k, int n, const T* a, const T* b, T* out,
               bool accumulate);
template <typename T>
void add(int64_t n, const T* a, const T* b, T* out);
template <typename T>
void mul(int64_t n, const T* a, const T* b, T* out);
template <typename T>
void axpy(int64_t n, T alpha, const T* x, T* y);
template <typename T>
void scale(int64_t n, T alpha, const T* x, T* out);
template <typename T>
void silu_fwd(int64_t n, const T* x, T* y);
template <typename T>
void silu_bwd(int64_t n, const T* x, const T* gy, T* gx);
template <typename T>
void softmax_rows(int64_t rows, int n, const T* x, T* y);
template <typename T>
void softmax_rows_bwd(int64_t rows, int n, const T* y, const T* gy, T* gx);
template <typename T>
void rmsnorm_fwd(int64_t rows, int d, const T* x, const T* w, T eps, T* y,
                 T* inv_rms);
template <typename T>
void rmsnorm_bwd(int64_t rows, int d, const T* x, const T* w, const T* inv_rms,
                 const T* gy, T* gx, T* gw);
template <typename T>
void embedding_fwd(int64_t t, int d, const T* table, const int32_t* ids,
                   T* out);
template <typename T>
void embedding_bwd(int64_t t, int d, const int32_t* ids, const T* gy,
                   T* gtable);
template <typename T>
void rope_fwd(int64_t t, int heads, int head_dim, T theta, const int32_t* pos,
              const T* x, T* y, bool inverse, bool accumulate);
template <typename T>
void attention_fwd(std::span<const Segment> segs, int heads, int kv_heads,
                   int head_dim, const T* q, const T* k, const T* v, T scale,
                   T dropout_p, bool train, uint64_t seed, T* probs, T* out);
template <typename T>
void attention_bwd(std::span<const Segment> segs, int heads, int kv_heads,
                   int head_dim, const T* q, const T* k, const T* v,
                   const T* probs, const T* gout, T scale, T dropout_p,
                   bool train, uint64_t seed, T* gq, T* gk, T* gv);
template <typename T>
void ce_fwd(int64_t t, int vocab, const T* logits, const int32_t* targets,
            const uint8_t* mask, T* row_loss, T* lse);
template <typename T>
void ce_bwd(int64_t t, int vocab, const T* logits, const int32_t* targets,
            const uint8_t* mask, const T* lse, T inv_count, T gloss,
            T* glogits);
template <typename T>
void dropout_fwd(int64_t n, const T* x, T p, bool train, uint64_t seed, T* y);
template <typename T>
void dropout_bwd(int64_t n, const T* gy, T p, bool train, uint64_t seed,
                 T* gx);
template <typename T>
void adamw_step(int64_t n, T* param, const T* grad, T* m, T* v, T lr, T beta1,
                T beta2, T eps, T weight_decay, int64_t step);
template <typename T>
T sum(int64_t n, const T* x);
template <typename T>
T sum_squares(int64_t n, const T* x);

}  // namespace serial

}  // namespace lsrec::kernels
