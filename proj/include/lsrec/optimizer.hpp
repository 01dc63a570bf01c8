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

#include <cmath>
#include <cstdint>
#include <vector>

#include "lsrec/kernels.hpp"
#include "lsrec/tensor.hpp"

namespace lsrec {

template <typename T>
struct AdamWOptions {
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps = T(1e-8);
  T weight_decay = T(0.01);
};

// Decoupled weight decay Adam over a fixed parameter list. Moment buffers
// are keyed by position, so the list must not change between steps.
template <typename T>
class AdamWT {
 public:
  AdamWT(std::vector<TensorT<T>> params, AdamWOptions<T> opts)
      : params_(std::move(params)), opts_(opts) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (auto& p : params_) {
      m_.emplace_back(static_cast<size_t>(p.numel()), T(0));
      v_.emplace_back(static_cast<size_t>(p.numel()), T(0));
    }
  }

  // Applies one update from the current grads; lr passed per call so the
  // caller owns the warmup schedule.
  void step(T lr) {
    ++step_count_;
    for (size_t i = 0; i < params_.size(); ++i) {
      auto& p = params_[i];
      kernels::adamw_step(p.numel(), p.data().data(), p.grad().data(),
                          m_[i].data(), v_[i].data(), lr, opts_.beta1,
                          opts_.beta2, opts_.eps, opts_.weight_decay,
                          step_count_);
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  T global_grad_norm() const {
    T total = T(0);
    for (const auto& p : params_) {
      total += kernels::sum_squares(p.numel(), p.grad().data());
    }
    return std::sqrt(total);
  }

  // Scales all grads so the global norm is at most max_norm; returns the
  // pre-clip norm.
  T clip_grad_norm(T max_norm) {
    const T norm = global_grad_norm();
    if (norm > max_norm) {
      const T factor = max_norm / norm;
      for (auto& p : params_) {
        auto g = p.grad();
        kernels::scale(p.numel(), factor, g.data(), g.data());
      }
    }
    return norm;
  }

  int64_t step_count() const { return step_count_; }

 private:
  std::vector<TensorT<T>> params_;
  std::vector<std::vector<T>> m_, v_;
  AdamWOptions<T> opts_;
  int64_t step_count_ = 0;
};

using AdamW = AdamWT<float>;

}  // namespace lsrec
