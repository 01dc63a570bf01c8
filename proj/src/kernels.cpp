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
#include "lsrec/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "lsrec/common.hpp"

#if defined(_OPENMP)
#define LSREC_OMP(x) _Pragma(x)
#else
#define LSREC_OMP(x)
#endif

namespace lsrec::kernels {

int64_t attention_probs_size(std::span<const Segment> segs, int heads) {
  int64_t total = 0;
  for (const Segment& s : segs) {
    total += static_cast<int64_t>(heads) * s.len * s.len;
  }
  return total;
}

#include "kernels_impl.inl"

#define LSREC_INSTANTIATE_KERNELS(T)                                           \
  template void matmul_nn<T>(int, int, int, const T*, const T*, T*, bool);    \
  template void matmul_nt<T>(int, int, int, const T*, const T*, T*, bool);    \
  template void matmul_tn<T>(int, int, int, const T*, const T*, T*, bool);    \
  template void add<T>(int64_t, const T*, const T*, T*);                      \
  template void mul<T>(int64_t, const T*, const T*, T*);                      \
  template void axpy<T>(int64_t, T, const T*, T*);                            \
  template void scale<T>(int64_t, T, const T*, T*);                           \
  template void silu_fwd<T>(int64_t, const T*, T*);                           \
  template void silu_bwd<T>(int64_t, const T*, const T*, T*);                 \
  template void softmax_rows<T>(int64_t, int, const T*, T*);                  \
  template void softmax_rows_bwd<T>(int64_t, int, const T*, const T*, T*);    \
  template void rmsnorm_fwd<T>(int64_t, int, const T*, const T*, T, T*, T*);  \
  template void rmsnorm_bwd<T>(int64_t, int, const T*, const T*, const T*,    \
                               const T*, T*, T*);                             \
  template void embedding_fwd<T>(int64_t, int, const T*, const int32_t*, T*); \
  template void embedding_bwd<T>(int64_t, int, const int32_t*, const T*, T*); \
  template void rope_fwd<T>(int64_t, int, int, T, const int32_t*, const T*,   \
                            T*, bool, bool);                                  \
  template void attention_fwd<T>(std::span<const Segment>, int, int, int,     \
                                 const T*, const T*, const T*, T, T, bool,    \
                                 uint64_t, T*, T*);                           \
  template void attention_bwd<T>(std::span<const Segment>, int, int, int,     \
                                 const T*, const T*, const T*, const T*,      \
                                 const T*, T, T, bool, uint64_t, T*, T*, T*); \
  template void ce_fwd<T>(int64_t, int, const T*, const int32_t*,             \
                          const uint8_t*, T*, T*);                            \
  template void ce_bwd<T>(int64_t, int, const T*, const int32_t*,             \
                          const uint8_t*, const T*, T, T, T*);                \
  template void dropout_fwd<T>(int64_t, const T*, T, bool, uint64_t, T*);     \
  template void dropout_bwd<T>(int64_t, const T*, T, bool, uint64_t, T*);     \
  template void adamw_step<T>(int64_t, T*, const T*, T*, T*, T, T, T, T, T,   \
                              int64_t);                                       \
  template T sum<T>(int64_t, const T*);                                       \
  template T sum_squares<T>(int64_t, const T*);

LSREC_INSTANTIATE_KERNELS(float)
LSREC_INSTANTIATE_KERNELS(double)

}  // namespace lsrec::kernels
