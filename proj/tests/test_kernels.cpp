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
#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include <doctest.h>

#include "lsrec/kernels.hpp"

namespace k = lsrec::kernels;

namespace {

std::vector<float> randf(size_t n, uint64_t seed, float scale = 1.0f) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist(0.0f, scale);
  std::vector<float> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

bool bit_equal(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("matmul_nn matches naive triple-loop oracle") {
  const int m = 3, kk = 4, n = 2;
  const auto a = randf(static_cast<size_t>(m) * kk, 1);
  const auto b = randf(static_cast<size_t>(kk) * n, 2);
  std::vector<float> out(static_cast<size_t>(m) * n);
  k::matmul_nn(m, kk, n, a.data(), b.data(), out.data(), false);

  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int c = 0; c < kk; ++c) {
        acc += static_cast<double>(a[i * kk + c]) * b[c * n + j];
      }
      CHECK(out[i * n + j] ==
            doctest::Approx(acc).epsilon(1e-6));
    }
  }
}

TEST_CASE("matmul identity and 1x1") {
  // identity * x = x
  const int n = 5;
  std::vector<float> eye(static_cast<size_t>(n) * n, 0.0f);
  for (int i = 0; i < n; ++i) eye[static_cast<size_t>(i) * n + i] = 1.0f;
  const auto x = randf(static_cast<size_t>(n) * n, 3);
  std::vector<float> out(x.size());
  k::matmul_nn(n, n, n, eye.data(), x.data(), out.data(), false);
  CHECK(bit_equal(out, x));

  const float a = 2.0f, b = 3.0f;
  float c = 0.0f;
  k::matmul_nn(1, 1, 1, &a, &b, &c, false);
  CHECK(c == 6.0f);
}

TEST_CASE("matmul_nt / matmul_tn against transposed naive products") {
  const int m = 4, kk = 3, n = 5;
  const auto a = randf(static_cast<size_t>(m) * kk, 4);
  const auto b = randf(static_cast<size_t>(n) * kk, 5);  // [n x k]
  std::vector<float> out(static_cast<size_t>(m) * n);
  k::matmul_nt(m, kk, n, a.data(), b.data(), out.data(), false);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int c = 0; c < kk; ++c) {
        acc += static_cast<double>(a[i * kk + c]) * b[j * kk + c];
      }
      CHECK(out[i * n + j] == doctest::Approx(acc).epsilon(1e-6));
    }
  }

  const auto g = randf(static_cast<size_t>(m) * n, 6);  // [m x n]
  std::vector<float> tn(static_cast<size_t>(kk) * n);
  k::matmul_tn(m, kk, n, a.data(), g.data(), tn.data(), false);
  for (int c = 0; c < kk; ++c) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int i = 0; i < m; ++i) {
        acc += static_cast<double>(a[i * kk + c]) * g[i * n + j];
      }
      CHECK(tn[c * n + j] == doctest::Approx(acc).epsilon(1e-6));
    }
  }
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  const int m = 37, kk = 53, n = 29;
  const auto a = randf(static_cast<size_t>(m) * kk, 10);
  const auto b = randf(static_cast<size_t>(kk) * n, 11);
  const auto bt = randf(static_cast<size_t>(n) * kk, 12);
  std::vector<float> p(static_cast<size_t>(m) * n), s(p.size());

  k::matmul_nn(m, kk, n, a.data(), b.data(), p.data(), false);
  k::serial::matmul_nn(m, kk, n, a.data(), b.data(), s.data(), false);
  CHECK(bit_equal(p, s));

  k::matmul_nt(m, kk, n, a.data(), bt.data(), p.data(), false);
  k::serial::matmul_nt(m, kk, n, a.data(), bt.data(), s.data(), false);
  CHECK(bit_equal(p, s));

  std::vector<float> ptn(static_cast<size_t>(kk) * n), stn(ptn.size());
  const auto g = randf(static_cast<size_t>(m) * n, 13);
  k::matmul_tn(m, kk, n, a.data(), g.data(), ptn.data(), false);
  k::serial::matmul_tn(m, kk, n, a.data(), g.data(), stn.data(), false);
  CHECK(bit_equal(ptn, stn));

  // softmax / rmsnorm / silu / rope
  const int rows = 61, d = 48;
  const auto x = randf(static_cast<size_t>(rows) * d, 14);
  const auto w = randf(static_cast<size_t>(d), 15);
  std::vector<float> yp(x.size()), ys(x.size());
  k::softmax_rows(static_cast<int64_t>(rows), d, x.data(), yp.data());
  k::serial::softmax_rows(static_cast<int64_t>(rows), d, x.data(), ys.data());
  CHECK(bit_equal(yp, ys));

  std::vector<float> ip(static_cast<size_t>(rows)), is(ip.size());
  k::rmsnorm_fwd(static_cast<int64_t>(rows), d, x.data(), w.data(), 1e-5f,
                 yp.data(), ip.data());
  k::serial::rmsnorm_fwd(static_cast<int64_t>(rows), d, x.data(), w.data(),
                         1e-5f, ys.data(), is.data());
  CHECK(bit_equal(yp, ys));
  CHECK(bit_equal(ip, is));

  k::silu_fwd(static_cast<int64_t>(x.size()), x.data(), yp.data());
  k::serial::silu_fwd(static_cast<int64_t>(x.size()), x.data(), ys.data());
  CHECK(bit_equal(yp, ys));

  std::vector<int32_t> pos(static_cast<size_t>(rows));
  for (int i = 0; i < rows; ++i) pos[static_cast<size_t>(i)] = i % 17;
  k::rope_fwd(static_cast<int64_t>(rows), 4, d / 4, 10000.0f, pos.data(),
              x.data(), yp.data(), false, false);
  k::serial::rope_fwd(static_cast<int64_t>(rows), 4, d / 4, 10000.0f,
                      pos.data(), x.data(), ys.data(), false, false);
  CHECK(bit_equal(yp, ys));

  // attention (with dropout active: the keyed mask must also agree)
  const int heads = 2, head_dim = 16;
  std::vector<k::Segment> segs = {{0, 20}, {20, 31}, {51, 10}};
  const auto q = randf(static_cast<size_t>(rows) * heads * head_dim, 16);
  const auto kv = randf(static_cast<size_t>(rows) * head_dim, 17);
  const auto v = randf(static_cast<size_t>(rows) * head_dim, 18);
  std::vector<float> probs_p(
      static_cast<size_t>(k::attention_probs_size(segs, heads)));
  std::vector<float> probs_s(probs_p.size());
  std::vector<float> op(q.size()), os(q.size());
  k::attention_fwd<float>(segs, heads, 1, head_dim, q.data(), kv.data(),
                          v.data(), 0.25f, 0.2f, true, 42, probs_p.data(),
                          op.data());
  k::serial::attention_fwd<float>(segs, heads, 1, head_dim, q.data(),
                                  kv.data(), v.data(), 0.25f, 0.2f, true, 42,
                                  probs_s.data(), os.data());
  CHECK(bit_equal(op, os));
  CHECK(bit_equal(probs_p, probs_s));

  const auto gout = randf(q.size(), 19);
  std::vector<float> gq_p(q.size(), 0.0f), gk_p(kv.size(), 0.0f),
      gv_p(v.size(), 0.0f);
  std::vector<float> gq_s(q.size(), 0.0f), gk_s(kv.size(), 0.0f),
      gv_s(v.size(), 0.0f);
  k::attention_bwd<float>(segs, heads, 1, head_dim, q.data(), kv.data(),
                          v.data(), probs_p.data(), gout.data(), 0.25f, 0.2f,
                          true, 42, gq_p.data(), gk_p.data(), gv_p.data());
  k::serial::attention_bwd<float>(segs, heads, 1, head_dim, q.data(),
                                  kv.data(), v.data(), probs_s.data(),
                                  gout.data(), 0.25f, 0.2f, true, 42,
                                  gq_s.data(), gk_s.data(), gv_s.data());
  CHECK(bit_equal(gq_p, gq_s));
  CHECK(bit_equal(gk_p, gk_s));
  CHECK(bit_equal(gv_p, gv_s));

  // embedding backward (column-block parallelism)
  std::vector<int32_t> ids(static_cast<size_t>(rows));
  for (int i = 0; i < rows; ++i) ids[static_cast<size_t>(i)] = (i * 7) % 9;
  std::vector<float> gt_p(static_cast<size_t>(9) * d, 0.0f), gt_s(gt_p.size(),
                                                                  0.0f);
  k::embedding_bwd(static_cast<int64_t>(rows), d, ids.data(), x.data(),
                   gt_p.data());
  k::serial::embedding_bwd(static_cast<int64_t>(rows), d, ids.data(),
                           x.data(), gt_s.data());
  CHECK(bit_equal(gt_p, gt_s));
}

TEST_CASE("adamw single step from zero state") {
  // m=v=0, one step: delta = -lr * g / (|g| + eps), plus decoupled decay.
  const float lr = 0.1f, b1 = 0.9f, b2 = 0.999f, eps = 1e-8f;
  float p = 1.0f, g = 0.5f, m = 0.0f, v = 0.0f;
  k::adamw_step<float>(1, &p, &g, &m, &v, lr, b1, b2, eps, 0.0f, 1);
  const float expect = 1.0f - lr * (0.5f / (std::sqrt(0.25f) + eps));
  CHECK(p == doctest::Approx(expect).epsilon(1e-6));

  // zero grad, zero decay: unchanged
  float p2 = 2.0f, g2 = 0.0f, m2 = 0.0f, v2 = 0.0f;
  k::adamw_step<float>(1, &p2, &g2, &m2, &v2, lr, b1, b2, eps, 0.0f, 1);
  CHECK(p2 == 2.0f);

  // zero grad, decay > 0: shrink by lr*wd*param
  float p3 = 2.0f, g3 = 0.0f, m3 = 0.0f, v3 = 0.0f;
  k::adamw_step<float>(1, &p3, &g3, &m3, &v3, lr, b1, b2, eps, 0.01f, 1);
  CHECK(p3 == doctest::Approx(2.0f - lr * 0.01f * 2.0f).epsilon(1e-6));
}

TEST_CASE("dropout keep fraction and scaling") {
  const int64_t n = 100000;
  const float p = 0.2f;
  std::vector<float> x(static_cast<size_t>(n), 1.0f);
  std::vector<float> y(x.size());
  k::dropout_fwd(n, x.data(), p, true, 77, y.data());
  int64_t kept = 0;
  for (float v : y) {
    if (v != 0.0f) {
      ++kept;
      CHECK(v == doctest::Approx(1.0f / (1.0f - p)).epsilon(1e-6));
    }
  }
  const double keep_fraction =
      static_cast<double>(kept) / static_cast<double>(n);
  CHECK(keep_fraction == doctest::Approx(1.0 - p).epsilon(0.0125));

  // eval mode is the identity
  k::dropout_fwd(n, x.data(), p, false, 77, y.data());
  for (float v : y) CHECK(v == 1.0f);
}
