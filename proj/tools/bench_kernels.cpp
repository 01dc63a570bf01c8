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
// Compares the OpenMP kernels against the serial reference build: wall time,
// speedup, and maximum absolute difference (expected 0: same loop structure,
// same accumulation order).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "lsrec/kernels.hpp"

using Clock = std::chrono::steady_clock;
namespace k = lsrec::kernels;

namespace {

std::vector<float> random_vec(size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

double time_of(const std::function<void()>& fn, int iters) {
  fn();  // warmup
  const auto t0 = Clock::now();
  for (int i = 0; i < iters; ++i) fn();
  return std::chrono::duration<double>(Clock::now() - t0).count() / iters;
}

float max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
  float m = 0.0f;
  for (size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

void report(const char* name, double serial_s, double parallel_s,
            double gflop, float diff) {
  std::printf("%-12s serial %8.3f ms (%6.2f GFLOP/s)   omp %8.3f ms "
              "(%6.2f GFLOP/s)   speedup %.2fx   max|diff| %g\n",
              name, serial_s * 1e3, gflop / serial_s, parallel_s * 1e3,
              gflop / parallel_s, serial_s / parallel_s,
              static_cast<double>(diff));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lsrec kernel benchmark: serial reference vs OpenMP"};
  int size = 256;
  int iters = 10;
  int threads = 0;
  app.add_option("--size", size, "matrix dimension");
  app.add_option("--iters", iters, "timed iterations");
  app.add_option("--threads", threads, "OpenMP thread count (0 = default)");
  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP; comparing identical serial paths\n");
#endif

  const int n = size;
  const auto a = random_vec(static_cast<size_t>(n) * n, 1);
  const auto b = random_vec(static_cast<size_t>(n) * n, 2);
  std::vector<float> out_serial(static_cast<size_t>(n) * n);
  std::vector<float> out_parallel(out_serial.size());

  // matmul
  {
    const double gflop = 2.0 * n * n * n * 1e-9;
    const double ts = time_of(
        [&] {
          k::serial::matmul_nn(n, n, n, a.data(), b.data(), out_serial.data(),
                               false);
        },
        iters);
    const double tp = time_of(
        [&] {
          k::matmul_nn(n, n, n, a.data(), b.data(), out_parallel.data(),
                       false);
        },
        iters);
    report("matmul_nn", ts, tp, gflop, max_abs_diff(out_serial, out_parallel));
  }

  // softmax over rows
  {
    const int rows = n * 8;
    const auto x = random_vec(static_cast<size_t>(rows) * n, 3);
    std::vector<float> ys(x.size()), yp(x.size());
    const double gflop = 4.0 * rows * n * 1e-9;
    const double ts = time_of(
        [&] { k::serial::softmax_rows<float>(rows, n, x.data(), ys.data()); },
        iters);
    const double tp = time_of(
        [&] { k::softmax_rows<float>(rows, n, x.data(), yp.data()); }, iters);
    report("softmax", ts, tp, gflop, max_abs_diff(ys, yp));
  }

  // rmsnorm
  {
    const int rows = n * 8;
    const auto x = random_vec(static_cast<size_t>(rows) * n, 4);
    const auto w = random_vec(static_cast<size_t>(n), 5);
    std::vector<float> ys(x.size()), yp(x.size());
    std::vector<float> inv_s(static_cast<size_t>(rows)),
        inv_p(static_cast<size_t>(rows));
    const double gflop = 3.0 * rows * n * 1e-9;
    const double ts = time_of(
        [&] {
          k::serial::rmsnorm_fwd<float>(rows, n, x.data(), w.data(), 1e-5f,
                                        ys.data(), inv_s.data());
        },
        iters);
    const double tp = time_of(
        [&] {
          k::rmsnorm_fwd<float>(rows, n, x.data(), w.data(), 1e-5f, yp.data(),
                                inv_p.data());
        },
        iters);
    report("rmsnorm", ts, tp, gflop, max_abs_diff(ys, yp));
  }

  // causal attention over packed segments
  {
    const int heads = 2, head_dim = 64, seg_len = 200, n_segs = 16;
    const int t = seg_len * n_segs;
    std::vector<k::Segment> segs;
    for (int s = 0; s < n_segs; ++s) {
      segs.push_back(k::Segment{s * seg_len, seg_len});
    }
    const auto q = random_vec(static_cast<size_t>(t) * heads * head_dim, 6);
    const auto kk = random_vec(static_cast<size_t>(t) * head_dim, 7);
    const auto v = random_vec(static_cast<size_t>(t) * head_dim, 8);
    std::vector<float> probs(
        static_cast<size_t>(k::attention_probs_size(segs, heads)));
    std::vector<float> os(q.size()), op(q.size());
    const double gflop =
        2.0 * n_segs * heads * (static_cast<double>(seg_len) * seg_len / 2) *
        (2 * head_dim) * 1e-9;
    const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));
    const double ts = time_of(
        [&] {
          k::serial::attention_fwd<float>(segs, heads, 1, head_dim, q.data(),
                                          kk.data(), v.data(), scale, 0.0f,
                                          false, 0, probs.data(), os.data());
        },
        iters);
    const double tp = time_of(
        [&] {
          k::attention_fwd<float>(segs, heads, 1, head_dim, q.data(),
                                  kk.data(), v.data(), scale, 0.0f, false, 0,
                                  probs.data(), op.data());
        },
        iters);
    report("attention", ts, tp, gflop, max_abs_diff(os, op));
  }

  return 0;
}
