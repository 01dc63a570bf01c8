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
// Kernel bodies, included by kernels.cpp (LSREC_OMP expands to an OpenMP
// pragma) and kernels_serial.cpp (LSREC_OMP expands to nothing). Loops are
// parallel only over output elements owned by a single iteration, and every
// reduction runs in a fixed order, so the two builds agree bit for bit.

template <typename T>
void matmul_nn(int m, int k, int n, const T* a, const T* b, T* out,
               bool accumulate) {
  LSREC_OMP("omp parallel for schedule(static)")
  for (int i = 0; i < m; ++i) {
    T* orow = out + static_cast<int64_t>(i) * n;
    if (!accumulate) {
      for (int j = 0; j < n; ++j) orow[j] = T(0);
    }
    const T* arow = a + static_cast<int64_t>(i) * k;
    for (int kk = 0; kk < k; ++kk) {
      const T aik = arow[kk];
      const T* brow = b + static_cast<int64_t>(kk) * n;
      for (int j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
}

template <typename T>
void matmul_nt(int m, int k, int n, const T* a, const T* b, T* out,
               bool accumulate) {
  LSREC_OMP("omp parallel for schedule(static)")
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<int64_t>(i) * k;
    T* orow = out + static_cast<int64_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const T* brow = b + static_cast<int64_t>(j) * k;
      T acc = T(0);
      for (int kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      orow[j] = accumulate ? orow[j] + acc : acc;
    }
  }
}

template <typename T>
void matmul_tn(int m, int k, int n, const T* a, const T* b, T* out,
               bool accumulate) {
  LSREC_OMP("omp parallel for schedule(static)")
  for (int kk = 0; kk < k; ++kk) {
    T* orow = out + static_cast<int64_t>(kk) * n;
    if (!accumulate) {
      for (int j = 0; j < n; ++j) orow[j] = T(0);
    }
    for (int i = 0; i < m; ++i) {
      const T aik = a[static_cast<int64_t>(i) * k + kk];
      const T* brow = b + static_cast<int64_t>(i) * n;
      for (int j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
}

template <typename T>
void add(int64_t n, const T* a, const T* b, T* out) {
  LSREC_OMP("omp parallel for schedule(static)")
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <typename T>
void mul(int64_t n, const T* a, const T* b, T* out) {
  LSREC_OMP("omp parallel for schedule(static)")
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <typename T>
void axpy(int64_t n, T alpha, const T* x, T* y) {
  LSREC_OMP("omp parallel for schedule(static)")
  for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void scale(int64_t n, T alpha, const T* x, T* out) {
  LSREC_OMP("omp parallel for schedule(static)")
  for (int64_t i = 0; i < n; ++i) out[i] = alpha * x[i];
}

template <typename T>
void silu_fwd(int64_t n, const T* x, T* y) {
  LSREC_OMP("omp parallel for schedule(static)")
  for (int64_t i = 0; i < n; ++i) {
    const T s = T(1) / (T(1) + std::exp(-x[i]));
    y[i] = x[i] * s;
  }
}

template <typename T>
void silu_bwd(int64_t n, const T* x, const T* gy, T* gx) {
  LSREC_OMP("omp parallel for schedule(static)")
  for (int64_t i = 0; i < n; ++i) {
    const T s = T(1) / (T(1) + std::exp(-x[i]));
    gx[i] += gy[i] * s * (T(1) + x[i] * (T(1) - s));
  }
}

template <typename T>
void softmax_rows(int64_t rows, int n, const T* x, T* y) {
  LSREC_OMP("omp parallel for schedule(static)")
  for (int64_t r = 0; r < rows; ++r) {
    const T* xr = x + r * n;
    T* yr = y + r * n;
    T mx = xr[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, xr[j]);
    T denom = T(0);
    for (int j = 0; j < n; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      denom += yr[j];
    }
    const T inv = T(1) / denom;
    for (int j = 0; j < n; ++j) yr[j] *= inv;
  }
}

template <typename T>
void softmax_rows_bwd(int64_t rows, int n, const T* y, const T* gy, T* gx) {
  LSREC_OMP("omp parallel for schedule(static)")
  for (int64_t r = 0; r < rows; ++r) {
    const T* yr = y + r * n;
    const T* gr = gy + r * n;
    T dot = T(0);
    for (int j = 0; j < n; ++j) dot += gr[j] * yr[j];
    T* gxr = gx + r * n;
    for (int j = 0; j < n; ++j) gxr[j] += yr[j] * (gr[j] - dot);
  }
}

template <typename T>
void rmsnorm_fwd(int64_t rows, int d, const T* x, const T* w, T eps, T* y,
                 T* inv_rms) {
  LSREC_OMP("omp parallel for schedule(static)")
  for (int64_t r = 0; r < rows; ++r) {
    const T* xr = x + r * d;
    T ms = T(0);
    for (int j = 0; j < d; ++j) ms += xr[j] * xr[j];
    ms /= static_cast<T>(d);
    const T inv = T(1) / std::sqrt(ms + eps);
    inv_rms[r] = inv;
    T* yr = y + r * d;
    for (int j = 0; j < d; ++j) yr[j] = xr[j] * inv * w[j];
  }
}

template <typename T>
void rmsnorm_bwd(int64_t rows, int d, const T* x, const T* w, const T* inv_rms,
                 const T* gy, T* gx, T* gw) {
  LSREC_OMP("omp parallel for schedule(static)")
  for (int64_t r = 0; r < rows; ++r) {
    const T* xr = x + r * d;
    const T* gr = gy + r * d;
    const T inv = inv_rms[r];
    T dot = T(0);
    for (int j = 0; j < d; ++j) dot += gr[j] * w[j] * xr[j];
    const T coef = inv * inv * inv * dot / static_cast<T>(d);
    T* gxr = gx + r * d;
    for (int j = 0; j < d; ++j) gxr[j] += inv * w[j] * gr[j] - coef * xr[j];
  }
  LSREC_OMP("omp parallel for schedule(static)")
  for (int j = 0; j < d; ++j) {
    T acc = T(0);
    for (int64_t r = 0; r < rows; ++r) {
      acc += gy[r * d + j] * x[r * d + j] * inv_rms[r];
    }
    gw[j] += acc;
  }
}

template <typename T>
void embedding_fwd(int64_t t, int d, const T* table, const int32_t* ids,
                   T* out) {
  LSREC_OMP("omp parallel for schedule(static)")
  for (int64_t i = 0; i < t; ++i) {
    const T* src = table + static_cast<int64_t>(ids[i]) * d;
    T* dst = out + i * d;
    for (int j = 0; j < d; ++j) dst[j] = src[j];
  }
}

template <typename T>
void embedding_bwd(int64_t t, int d, const int32_t* ids, const T* gy,
                   T* gtable) {
  // Parallel over column blocks: rows collide across positions, columns
  // never do, and each (row, column) slot accumulates in ascending position
  // order in both builds.
  constexpr int kBlock = 16;
  const int nblocks = (d + kBlock - 1) / kBlock;
  LSREC_OMP("omp parallel for schedule(static)")
  for (int bi = 0; bi < nblocks; ++bi) {
    const int c0 = bi * kBlock;
    const int c1 = std::min(d, c0 + kBlock);
    for (int64_t i = 0; i < t; ++i) {
      const T* g = gy + i * d;
      T* dst = gtable + static_cast<int64_t>(ids[i]) * d;
      for (int c = c0; c < c1; ++c) dst[c] += g[c];
    }
  }
}

template <typename T>
void rope_fwd(int64_t t, int heads, int head_dim, T theta, const int32_t* pos,
              const T* x, T* y, bool inverse, bool accumulate) {
  const int half = head_dim / 2;
  std::vector<T> freq(half);
  for (int p = 0; p < half; ++p) {
    freq[p] = static_cast<T>(
        std::pow(static_cast<double>(theta), -2.0 * p / head_dim));
  }
  const int cols = heads * head_dim;
  LSREC_OMP("omp parallel for schedule(static)")
  for (int64_t i = 0; i < t; ++i) {
    const T* xr = x + i * cols;
    T* yr = y + i * cols;
    for (int p = 0; p < half; ++p) {
      const T angle = static_cast<T>(pos[i]) * freq[p];
      const T c = std::cos(angle);
      T s = std::sin(angle);
      if (inverse) s = -s;
      for (int h = 0; h < heads; ++h) {
        const int base = h * head_dim + 2 * p;
        const T x0 = xr[base];
        const T x1 = xr[base + 1];
        const T r0 = x0 * c - x1 * s;
        const T r1 = x0 * s + x1 * c;
        if (accumulate) {
          yr[base] += r0;
          yr[base + 1] += r1;
        } else {
          yr[base] = r0;
          yr[base + 1] = r1;
        }
      }
    }
  }
}

namespace detail {

// Keyed keep decision for attention-probability dropout. Regenerated in the
// backward pass from the same (seed, query row, key row, head) key.
inline bool attn_keep(uint64_t seed, int64_t qi, int64_t kj, int head,
                      double p) {
  const uint64_t key = (static_cast<uint64_t>(qi) << 32) |
                       (static_cast<uint64_t>(kj) << 8) |
                       static_cast<uint64_t>(head);
  return ::lsrec::keyed_uniform(seed, key) >= p;
}

}  // namespace detail

template <typename T>
void attention_fwd(std::span<const Segment> segs, int heads, int kv_heads,
                   int head_dim, const T* q, const T* k, const T* v, T scale,
                   T dropout_p, bool train, uint64_t seed, T* probs, T* out) {
  const int group = heads / kv_heads;
  const int ns = static_cast<int>(segs.size());
  std::vector<int64_t> off(ns);
  int64_t acc = 0;
  for (int s = 0; s < ns; ++s) {
    off[s] = acc;
    acc += static_cast<int64_t>(heads) * segs[s].len * segs[s].len;
  }
  const bool drop = train && dropout_p > T(0);
  const T inv_keep = drop ? T(1) / (T(1) - dropout_p) : T(1);
  const int64_t items = static_cast<int64_t>(ns) * heads;
  LSREC_OMP("omp parallel for schedule(dynamic)")
  for (int64_t it = 0; it < items; ++it) {
    const int s = static_cast<int>(it / heads);
    const int h = static_cast<int>(it % heads);
    const Segment seg = segs[s];
    const int kvh = h / group;
    T* pblock = probs + off[s] + static_cast<int64_t>(h) * seg.len * seg.len;
    for (int i = 0; i < seg.len; ++i) {
      const int64_t gi = seg.begin + i;
      const T* qi = q + gi * static_cast<int64_t>(heads) * head_dim +
                    static_cast<int64_t>(h) * head_dim;
      T* prow = pblock + static_cast<int64_t>(i) * seg.len;
      T mx = std::numeric_limits<T>::lowest();
      for (int j = 0; j <= i; ++j) {
        const T* kj = k +
                      (seg.begin + j) * static_cast<int64_t>(kv_heads) *
                          head_dim +
                      static_cast<int64_t>(kvh) * head_dim;
        T dot = T(0);
        for (int c = 0; c < head_dim; ++c) dot += qi[c] * kj[c];
        prow[j] = dot * scale;
        mx = std::max(mx, prow[j]);
      }
      T denom = T(0);
      for (int j = 0; j <= i; ++j) {
        prow[j] = std::exp(prow[j] - mx);
        denom += prow[j];
      }
      const T inv = T(1) / denom;
      for (int j = 0; j <= i; ++j) prow[j] *= inv;
      for (int j = i + 1; j < seg.len; ++j) prow[j] = T(0);
      T* orow = out + gi * static_cast<int64_t>(heads) * head_dim +
                static_cast<int64_t>(h) * head_dim;
      for (int c = 0; c < head_dim; ++c) orow[c] = T(0);
      for (int j = 0; j <= i; ++j) {
        T w = prow[j];
        if (drop) {
          w = detail::attn_keep(seed, gi, seg.begin + j, h,
                                static_cast<double>(dropout_p))
                  ? w * inv_keep
                  : T(0);
        }
        const T* vj = v +
                      (seg.begin + j) * static_cast<int64_t>(kv_heads) *
                          head_dim +
                      static_cast<int64_t>(kvh) * head_dim;
        for (int c = 0; c < head_dim; ++c) orow[c] += w * vj[c];
      }
    }
  }
}

template <typename T>
void attention_bwd(std::span<const Segment> segs, int heads, int kv_heads,
                   int head_dim, const T* q, const T* k, const T* v,
                   const T* probs, const T* gout, T scale, T dropout_p,
                   bool train, uint64_t seed, T* gq, T* gk, T* gv) {
  const int group = heads / kv_heads;
  const int ns = static_cast<int>(segs.size());
  std::vector<int64_t> off(ns);
  int64_t acc = 0;
  for (int s = 0; s < ns; ++s) {
    off[s] = acc;
    acc += static_cast<int64_t>(heads) * segs[s].len * segs[s].len;
  }
  const bool drop = train && dropout_p > T(0);
  const T inv_keep = drop ? T(1) / (T(1) - dropout_p) : T(1);
  // Parallel over segments only: a segment's gq/gk/gv rows are owned by one
  // iteration, including the accumulation shared by grouped query heads.
  LSREC_OMP("omp parallel for schedule(dynamic)")
  for (int s = 0; s < ns; ++s) {
    const Segment seg = segs[s];
    std::vector<T> dp(seg.len);
    for (int h = 0; h < heads; ++h) {
      const int kvh = h / group;
      const T* pblock =
          probs + off[s] + static_cast<int64_t>(h) * seg.len * seg.len;
      for (int i = 0; i < seg.len; ++i) {
        const int64_t gi = seg.begin + i;
        const T* prow = pblock + static_cast<int64_t>(i) * seg.len;
        const T* go = gout + gi * static_cast<int64_t>(heads) * head_dim +
                      static_cast<int64_t>(h) * head_dim;
        T dot_dp_p = T(0);
        for (int j = 0; j <= i; ++j) {
          const int64_t gj = seg.begin + j;
          const T* vj = v + gj * static_cast<int64_t>(kv_heads) * head_dim +
                        static_cast<int64_t>(kvh) * head_dim;
          T dpd = T(0);
          for (int c = 0; c < head_dim; ++c) dpd += go[c] * vj[c];
          T keepw = T(1);
          if (drop) {
            keepw = detail::attn_keep(seed, gi, gj, h,
                                      static_cast<double>(dropout_p))
                        ? inv_keep
                        : T(0);
          }
          T* gvj = gv + gj * static_cast<int64_t>(kv_heads) * head_dim +
                   static_cast<int64_t>(kvh) * head_dim;
          const T pd = prow[j] * keepw;
          for (int c = 0; c < head_dim; ++c) gvj[c] += pd * go[c];
          dp[j] = dpd * keepw;
          dot_dp_p += dp[j] * prow[j];
        }
        const T* qi = q + gi * static_cast<int64_t>(heads) * head_dim +
                      static_cast<int64_t>(h) * head_dim;
        T* gqi = gq + gi * static_cast<int64_t>(heads) * head_dim +
                 static_cast<int64_t>(h) * head_dim;
        for (int j = 0; j <= i; ++j) {
          const int64_t gj = seg.begin + j;
          const T ds = prow[j] * (dp[j] - dot_dp_p) * scale;
          const T* kj = k + gj * static_cast<int64_t>(kv_heads) * head_dim +
                        static_cast<int64_t>(kvh) * head_dim;
          T* gkj = gk + gj * static_cast<int64_t>(kv_heads) * head_dim +
                   static_cast<int64_t>(kvh) * head_dim;
          for (int c = 0; c < head_dim; ++c) {
            gqi[c] += ds * kj[c];
            gkj[c] += ds * qi[c];
          }
        }
      }
    }
  }
}

template <typename T>
void ce_fwd(int64_t t, int vocab, const T* logits, const int32_t* targets,
            const uint8_t* mask, T* row_loss, T* lse) {
  LSREC_OMP("omp parallel for schedule(static)")
  for (int64_t r = 0; r < t; ++r) {
    if (!mask[r]) {
      row_loss[r] = T(0);
      lse[r] = T(0);
      continue;
    }
    const T* xr = logits + r * vocab;
    T mx = xr[0];
    for (int j = 1; j < vocab; ++j) mx = std::max(mx, xr[j]);
    T denom = T(0);
    for (int j = 0; j < vocab; ++j) denom += std::exp(xr[j] - mx);
    const T l = mx + std::log(denom);
    lse[r] = l;
    row_loss[r] = l - xr[targets[r]];
  }
}

template <typename T>
void ce_bwd(int64_t t, int vocab, const T* logits, const int32_t* targets,
            const uint8_t* mask, const T* lse, T inv_count, T gloss,
            T* glogits) {
  LSREC_OMP("omp parallel for schedule(static)")
  for (int64_t r = 0; r < t; ++r) {
    if (!mask[r]) continue;
    const T* xr = logits + r * vocab;
    T* gr = glogits + r * vocab;
    const T g = gloss * inv_count;
    for (int j = 0; j < vocab; ++j) gr[j] += g * std::exp(xr[j] - lse[r]);
    gr[targets[r]] -= g;
  }
}

template <typename T>
void dropout_fwd(int64_t n, const T* x, T p, bool train, uint64_t seed, T* y) {
  if (!train || p <= T(0)) {
    LSREC_OMP("omp parallel for schedule(static)")
    for (int64_t i = 0; i < n; ++i) y[i] = x[i];
    return;
  }
  const T inv_keep = T(1) / (T(1) - p);
  const double pd = static_cast<double>(p);
  LSREC_OMP("omp parallel for schedule(static)")
  for (int64_t i = 0; i < n; ++i) {
    y[i] = (::lsrec::keyed_uniform(seed, static_cast<uint64_t>(i)) >= pd)
               ? x[i] * inv_keep
               : T(0);
  }
}

template <typename T>
void dropout_bwd(int64_t n, const T* gy, T p, bool train, uint64_t seed,
                 T* gx) {
  if (!train || p <= T(0)) {
    LSREC_OMP("omp parallel for schedule(static)")
    for (int64_t i = 0; i < n; ++i) gx[i] += gy[i];
    return;
  }
  const T inv_keep = T(1) / (T(1) - p);
  const double pd = static_cast<double>(p);
  LSREC_OMP("omp parallel for schedule(static)")
  for (int64_t i = 0; i < n; ++i) {
    if (::lsrec::keyed_uniform(seed, static_cast<uint64_t>(i)) >= pd) {
      gx[i] += gy[i] * inv_keep;
    }
  }
}

template <typename T>
void adamw_step(int64_t n, T* param, const T* grad, T* m, T* v, T lr, T beta1,
                T beta2, T eps, T weight_decay, int64_t step) {
  const T bc1 =
      T(1) - static_cast<T>(std::pow(static_cast<double>(beta1), step));
  const T bc2 =
      T(1) - static_cast<T>(std::pow(static_cast<double>(beta2), step));
  LSREC_OMP("omp parallel for schedule(static)")
  for (int64_t i = 0; i < n; ++i) {
    const T g = grad[i];
    m[i] = beta1 * m[i] + (T(1) - beta1) * g;
    v[i] = beta2 * v[i] + (T(1) - beta2) * g * g;
    const T mhat = m[i] / bc1;
    const T vhat = v[i] / bc2;
    param[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * param[i]);
  }
}

template <typename T>
T sum(int64_t n, const T* x) {
  T acc = T(0);
  for (int64_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

template <typename T>
T sum_squares(int64_t n, const T* x) {
  T acc = T(0);
  for (int64_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}
