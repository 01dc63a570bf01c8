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
#include <functional>
#include <memory>
#include <span>
#include <unordered_set>
#include <vector>

#include "lsrec/common.hpp"
#include "lsrec/kernels.hpp"

// Reverse-mode autodiff over dense row-major tensors. Ops record their
// parents on the output node; backward() topologically sorts the reachable
// graph and visits each node once in reverse order. Templated on the scalar
// type so gradient checks can run the identical graph in double.

namespace lsrec {

using kernels::Segment;

// Scoped switch that stops ops from recording the graph (evaluation paths).
bool& autograd_enabled();

struct NoGradGuard {
  NoGradGuard() : prev_(autograd_enabled()) { autograd_enabled() = false; }
  ~NoGradGuard() { autograd_enabled() = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

inline bool& autograd_enabled() {
  thread_local bool enabled = true;
  return enabled;
}

namespace detail {

template <typename T>
struct NodeT {
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until first touched
  bool requires_grad = false;
  std::vector<std::shared_ptr<NodeT>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(NodeT&)> backward_fn;

  int64_t numel() const {
    int64_t n = 1;
    for (int e : shape) n *= e;
    return n;
  }
  void ensure_grad() {
    if (grad.empty()) grad.assign(static_cast<size_t>(numel()), T(0));
  }
};

}  // namespace detail

template <typename T>
class TensorT {
 public:
  TensorT() = default;

  static TensorT zeros(std::vector<int> shape, bool requires_grad = false) {
    auto node = std::make_shared<detail::NodeT<T>>();
    node->shape = std::move(shape);
    node->value.assign(static_cast<size_t>(node->numel()), T(0));
    node->requires_grad = requires_grad;
    return TensorT(std::move(node));
  }

  static TensorT from(std::vector<int> shape, std::vector<T> data,
                      bool requires_grad = false) {
    auto node = std::make_shared<detail::NodeT<T>>();
    node->shape = std::move(shape);
    LSREC_CHECK(static_cast<int64_t>(data.size()) == node->numel(),
                "tensor data size does not match shape");
    node->value = std::move(data);
    node->requires_grad = requires_grad;
    return TensorT(std::move(node));
  }

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int64_t numel() const { return node_->numel(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<T> data() { return {node_->value.data(), node_->value.size()}; }
  std::span<const T> data() const {
    return {node_->value.data(), node_->value.size()};
  }
  std::span<T> grad() {
    node_->ensure_grad();
    return {node_->grad.data(), node_->grad.size()};
  }
  std::span<const T> grad() const {
    node_->ensure_grad();
    return {node_->grad.data(), node_->grad.size()};
  }
  void zero_grad() {
    node_->grad.assign(static_cast<size_t>(numel()), T(0));
  }

  T scalar() const {
    LSREC_CHECK(numel() == 1, "scalar() on tensor with ", numel(),
                " elements");
    return node_->value[0];
  }

  // Deep copy of values; the copy is a detached leaf.
  TensorT clone_detached() const {
    auto node = std::make_shared<detail::NodeT<T>>();
    node->shape = node_->shape;
    node->value = node_->value;
    node->requires_grad = node_->requires_grad;
    return TensorT(std::move(node));
  }

  detail::NodeT<T>* node() const { return node_.get(); }
  const std::shared_ptr<detail::NodeT<T>>& node_ptr() const { return node_; }

  explicit TensorT(std::shared_ptr<detail::NodeT<T>> node)
      : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::NodeT<T>> node_;
};

using Tensor = TensorT<float>;

namespace detail {

template <typename T>
TensorT<T> make_result(std::vector<int> shape,
                       std::vector<std::shared_ptr<NodeT<T>>> parents,
                       std::function<void(NodeT<T>&)> backward_fn) {
  auto node = std::make_shared<NodeT<T>>();
  node->shape = std::move(shape);
  node->value.resize(static_cast<size_t>(node->numel()));
  bool track = false;
  if (autograd_enabled()) {
    for (const auto& p : parents) track = track || p->requires_grad;
  }
  if (track) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
  }
  return TensorT<T>(std::move(node));
}

}  // namespace detail

template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
  LSREC_CHECK(a.rank() == 2 && b.rank() == 2, "matmul expects rank-2 tensors");
  LSREC_CHECK(a.dim(1) == b.dim(0), "matmul shape mismatch: [", a.dim(0), "x",
              a.dim(1), "] * [", b.dim(0), "x", b.dim(1), "]");
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  auto out = detail::make_result<T>(
      {m, n}, {a.node_ptr(), b.node_ptr()}, [m, k, n](detail::NodeT<T>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
          pa.ensure_grad();
          // da += g * b^T
          kernels::matmul_nt(m, n, k, self.grad.data(), pb.value.data(),
                             pa.grad.data(), true);
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          // db += a^T * g
          kernels::matmul_tn(m, k, n, pa.value.data(), self.grad.data(),
                             pb.grad.data(), true);
        }
      });
  kernels::matmul_nn(m, k, n, a.data().data(), b.data().data(),
                     out.data().data(), false);
  return out;
}

// a[m x k] * b[n x k]^T; used for the tied output head.
template <typename T>
TensorT<T> matmul_nt(const TensorT<T>& a, const TensorT<T>& b) {
  LSREC_CHECK(a.rank() == 2 && b.rank() == 2,
              "matmul_nt expects rank-2 tensors");
  LSREC_CHECK(a.dim(1) == b.dim(1), "matmul_nt shape mismatch");
  const int m = a.dim(0), k = a.dim(1), n = b.dim(0);
  auto out = detail::make_result<T>(
      {m, n}, {a.node_ptr(), b.node_ptr()}, [m, k, n](detail::NodeT<T>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
          pa.ensure_grad();
          // da += g[m x n] * b[n x k]
          kernels::matmul_nn(m, n, k, self.grad.data(), pb.value.data(),
                             pa.grad.data(), true);
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          // db += g^T[n x m] * a[m x k]
          kernels::matmul_tn(m, n, k, self.grad.data(), pa.value.data(),
                             pb.grad.data(), true);
        }
      });
  kernels::matmul_nt(m, k, n, a.data().data(), b.data().data(),
                     out.data().data(), false);
  return out;
}

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  LSREC_CHECK(a.shape() == b.shape(), "add shape mismatch");
  const int64_t n = a.numel();
  auto out = detail::make_result<T>(
      a.shape(), {a.node_ptr(), b.node_ptr()}, [n](detail::NodeT<T>& self) {
        for (int i = 0; i < 2; ++i) {
          auto& p = *self.parents[static_cast<size_t>(i)];
          if (p.requires_grad) {
            p.ensure_grad();
            kernels::axpy(n, T(1), self.grad.data(), p.grad.data());
          }
        }
      });
  kernels::add(n, a.data().data(), b.data().data(), out.data().data());
  return out;
}

template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
  LSREC_CHECK(a.shape() == b.shape(), "mul shape mismatch");
  const int64_t n = a.numel();
  auto out = detail::make_result<T>(
      a.shape(), {a.node_ptr(), b.node_ptr()}, [n](detail::NodeT<T>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
          pa.ensure_grad();
          for (int64_t i = 0; i < n; ++i) {
            pa.grad[static_cast<size_t>(i)] +=
                self.grad[static_cast<size_t>(i)] *
                pb.value[static_cast<size_t>(i)];
          }
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          for (int64_t i = 0; i < n; ++i) {
            pb.grad[static_cast<size_t>(i)] +=
                self.grad[static_cast<size_t>(i)] *
                pa.value[static_cast<size_t>(i)];
          }
        }
      });
  kernels::mul(n, a.data().data(), b.data().data(), out.data().data());
  return out;
}

template <typename T>
TensorT<T> scale(const TensorT<T>& a, T alpha) {
  const int64_t n = a.numel();
  auto out = detail::make_result<T>(
      a.shape(), {a.node_ptr()}, [n, alpha](detail::NodeT<T>& self) {
        auto& pa = *self.parents[0];
        if (pa.requires_grad) {
          pa.ensure_grad();
          kernels::axpy(n, alpha, self.grad.data(), pa.grad.data());
        }
      });
  kernels::scale(n, alpha, a.data().data(), out.data().data());
  return out;
}

template <typename T>
TensorT<T> silu(const TensorT<T>& x) {
  const int64_t n = x.numel();
  auto out = detail::make_result<T>(
      x.shape(), {x.node_ptr()}, [n](detail::NodeT<T>& self) {
        auto& px = *self.parents[0];
        if (px.requires_grad) {
          px.ensure_grad();
          kernels::silu_bwd(n, px.value.data(), self.grad.data(),
                            px.grad.data());
        }
      });
  kernels::silu_fwd(n, x.data().data(), out.data().data());
  return out;
}

// Softmax over the last axis.
template <typename T>
TensorT<T> softmax(const TensorT<T>& x) {
  LSREC_CHECK(x.rank() >= 1, "softmax expects rank >= 1");
  const int n = x.dim(x.rank() - 1);
  LSREC_CHECK(n >= 1, "softmax over empty axis");
  for (T v : x.data()) {
    LSREC_CHECK(std::isfinite(v), "softmax input is not finite");
  }
  const int64_t rows = x.numel() / n;
  auto out = detail::make_result<T>(
      x.shape(), {x.node_ptr()}, [rows, n](detail::NodeT<T>& self) {
        auto& px = *self.parents[0];
        if (px.requires_grad) {
          px.ensure_grad();
          kernels::softmax_rows_bwd(rows, n, self.value.data(),
                                    self.grad.data(), px.grad.data());
        }
      });
  kernels::softmax_rows(rows, n, x.data().data(), out.data().data());
  return out;
}

template <typename T>
TensorT<T> rms_norm(const TensorT<T>& x, const TensorT<T>& w, T eps) {
  LSREC_CHECK(x.rank() == 2 && w.rank() == 1, "rms_norm expects [t x d], [d]");
  LSREC_CHECK(x.dim(1) == w.dim(0), "rms_norm dimension mismatch");
  const int64_t rows = x.dim(0);
  const int d = x.dim(1);
  auto inv_rms = std::make_shared<std::vector<T>>(static_cast<size_t>(rows));
  auto out = detail::make_result<T>(
      x.shape(), {x.node_ptr(), w.node_ptr()},
      [rows, d, inv_rms](detail::NodeT<T>& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        px.ensure_grad();
        pw.ensure_grad();
        kernels::rmsnorm_bwd(rows, d, px.value.data(), pw.value.data(),
                             inv_rms->data(), self.grad.data(), px.grad.data(),
                             pw.grad.data());
      });
  kernels::rmsnorm_fwd(rows, d, x.data().data(), w.data().data(), eps,
                       out.data().data(), inv_rms->data());
  return out;
}

template <typename T>
TensorT<T> embedding(const TensorT<T>& table, std::span<const int32_t> ids) {
  LSREC_CHECK(table.rank() == 2, "embedding table must be rank 2");
  const int vocab = table.dim(0);
  const int d = table.dim(1);
  for (int32_t id : ids) {
    LSREC_CHECK(id >= 0 && id < vocab, "token id ", id,
                " out of range for vocab ", vocab);
  }
  const int64_t t = static_cast<int64_t>(ids.size());
  auto ids_copy = std::make_shared<std::vector<int32_t>>(ids.begin(),
                                                         ids.end());
  auto out = detail::make_result<T>(
      {static_cast<int>(t), d}, {table.node_ptr()},
      [t, d, ids_copy](detail::NodeT<T>& self) {
        auto& pt = *self.parents[0];
        if (pt.requires_grad) {
          pt.ensure_grad();
          kernels::embedding_bwd(t, d, ids_copy->data(), self.grad.data(),
                                 pt.grad.data());
        }
      });
  kernels::embedding_fwd(t, d, table.data().data(), ids_copy->data(),
                         out.data().data());
  return out;
}

// Rotary rotation over [t x heads*head_dim]; head_dim must be even.
template <typename T>
TensorT<T> rope(const TensorT<T>& x, std::span<const int32_t> positions,
                int heads, T theta) {
  LSREC_CHECK(x.rank() == 2, "rope expects [t x heads*head_dim]");
  LSREC_CHECK(x.dim(1) % heads == 0, "rope: columns not divisible by heads");
  const int head_dim = x.dim(1) / heads;
  LSREC_CHECK(head_dim % 2 == 0, "rope requires even head_dim, got ",
              head_dim);
  const int64_t t = x.dim(0);
  LSREC_CHECK(static_cast<int64_t>(positions.size()) == t,
              "rope positions length mismatch");
  auto pos_copy = std::make_shared<std::vector<int32_t>>(positions.begin(),
                                                         positions.end());
  auto out = detail::make_result<T>(
      x.shape(), {x.node_ptr()},
      [t, heads, head_dim, theta, pos_copy](detail::NodeT<T>& self) {
        auto& px = *self.parents[0];
        if (px.requires_grad) {
          px.ensure_grad();
          // The rotation is orthogonal; its transpose rotates by -angle.
          kernels::rope_fwd(t, heads, head_dim, theta, pos_copy->data(),
                            self.grad.data(), px.grad.data(), true, true);
        }
      });
  kernels::rope_fwd(t, heads, head_dim, theta, pos_copy->data(),
                    x.data().data(), out.data().data(), false, false);
  return out;
}

// Grouped-query causal attention over packed segments (see kernels.hpp).
template <typename T>
TensorT<T> gqa_attention(const TensorT<T>& q, const TensorT<T>& k,
                         const TensorT<T>& v, std::span<const Segment> segs,
                         int heads, int kv_heads, T dropout_p, bool train,
                         uint64_t dropout_seed) {
  LSREC_CHECK(q.rank() == 2 && k.rank() == 2 && v.rank() == 2,
              "attention expects rank-2 q/k/v");
  LSREC_CHECK(heads % kv_heads == 0, "attn_heads must divide by kv_heads");
  LSREC_CHECK(q.dim(1) % heads == 0, "q columns not divisible by heads");
  const int head_dim = q.dim(1) / heads;
  LSREC_CHECK(k.dim(1) == kv_heads * head_dim && k.shape() == v.shape(),
              "k/v shape mismatch");
  LSREC_CHECK(k.dim(0) == q.dim(0), "q/k row mismatch");
  for (const Segment& s : segs) {
    LSREC_CHECK(s.begin >= 0 && s.len >= 1 && s.begin + s.len <= q.dim(0),
                "attention segment [", s.begin, ", ", s.begin + s.len,
                ") outside the token axis");
  }
  const T att_scale = T(1) / std::sqrt(static_cast<T>(head_dim));
  auto segs_copy = std::make_shared<std::vector<Segment>>(segs.begin(),
                                                          segs.end());
  auto probs = std::make_shared<std::vector<T>>(
      static_cast<size_t>(kernels::attention_probs_size(segs, heads)));
  auto out = detail::make_result<T>(
      q.shape(), {q.node_ptr(), k.node_ptr(), v.node_ptr()},
      [heads, kv_heads, head_dim, att_scale, dropout_p, train, dropout_seed,
       segs_copy, probs](detail::NodeT<T>& self) {
        auto& pq = *self.parents[0];
        auto& pk = *self.parents[1];
        auto& pv = *self.parents[2];
        pq.ensure_grad();
        pk.ensure_grad();
        pv.ensure_grad();
        kernels::attention_bwd<T>(
            std::span<const Segment>(*segs_copy), heads, kv_heads, head_dim,
            pq.value.data(), pk.value.data(), pv.value.data(), probs->data(),
            self.grad.data(), att_scale, dropout_p, train, dropout_seed,
            pq.grad.data(), pk.grad.data(), pv.grad.data());
      });
  // Rows outside every segment (padding) keep zero output.
  std::fill(out.data().begin(), out.data().end(), T(0));
  kernels::attention_fwd<T>(std::span<const Segment>(*segs_copy), heads,
                            kv_heads, head_dim, q.data().data(),
                            k.data().data(), v.data().data(), att_scale,
                            dropout_p, train, dropout_seed, probs->data(),
                            out.data().data());
  return out;
}

// Mean over mask=1 rows of -log softmax(logits)[target].
template <typename T>
TensorT<T> cross_entropy(const TensorT<T>& logits,
                         std::span<const int32_t> targets,
                         std::span<const uint8_t> mask) {
  LSREC_CHECK(logits.rank() == 2, "cross_entropy expects [t x V] logits");
  const int64_t t = logits.dim(0);
  const int vocab = logits.dim(1);
  LSREC_CHECK(static_cast<int64_t>(targets.size()) == t &&
                  static_cast<int64_t>(mask.size()) == t,
              "cross_entropy targets/mask length mismatch");
  int64_t count = 0;
  for (int64_t i = 0; i < t; ++i) {
    if (!mask[static_cast<size_t>(i)]) continue;
    ++count;
    const int32_t tgt = targets[static_cast<size_t>(i)];
    LSREC_CHECK(tgt >= 0 && tgt < vocab, "cross_entropy target ", tgt,
                " out of range for vocab ", vocab);
  }
  LSREC_CHECK(count > 0, "cross_entropy: mask selects no positions");
  auto targets_copy =
      std::make_shared<std::vector<int32_t>>(targets.begin(), targets.end());
  auto mask_copy =
      std::make_shared<std::vector<uint8_t>>(mask.begin(), mask.end());
  auto lse = std::make_shared<std::vector<T>>(static_cast<size_t>(t));
  const T inv_count = T(1) / static_cast<T>(count);
  auto out = detail::make_result<T>(
      {1}, {logits.node_ptr()},
      [t, vocab, targets_copy, mask_copy, lse,
       inv_count](detail::NodeT<T>& self) {
        auto& pl = *self.parents[0];
        if (pl.requires_grad) {
          pl.ensure_grad();
          kernels::ce_bwd(t, vocab, pl.value.data(), targets_copy->data(),
                          mask_copy->data(), lse->data(), inv_count,
                          self.grad[0], pl.grad.data());
        }
      });
  std::vector<T> row_loss(static_cast<size_t>(t));
  kernels::ce_fwd(t, vocab, logits.data().data(), targets_copy->data(),
                  mask_copy->data(), row_loss.data(), lse->data());
  out.data()[0] = kernels::sum(t, row_loss.data()) * inv_count;
  return out;
}

template <typename T>
TensorT<T> dropout(const TensorT<T>& x, T p, bool train, uint64_t seed) {
  LSREC_CHECK(p >= T(0) && p < T(1), "dropout probability must be in [0,1)");
  const int64_t n = x.numel();
  auto out = detail::make_result<T>(
      x.shape(), {x.node_ptr()}, [n, p, train, seed](detail::NodeT<T>& self) {
        auto& px = *self.parents[0];
        if (px.requires_grad) {
          px.ensure_grad();
          kernels::dropout_bwd(n, self.grad.data(), p, train, seed,
                               px.grad.data());
        }
      });
  kernels::dropout_fwd(n, x.data().data(), p, train, seed, out.data().data());
  return out;
}

template <typename T>
TensorT<T> sum(const TensorT<T>& x) {
  const int64_t n = x.numel();
  auto out = detail::make_result<T>(
      {1}, {x.node_ptr()}, [n](detail::NodeT<T>& self) {
        auto& px = *self.parents[0];
        if (px.requires_grad) {
          px.ensure_grad();
          for (int64_t i = 0; i < n; ++i) {
            px.grad[static_cast<size_t>(i)] += self.grad[0];
          }
        }
      });
  out.data()[0] = kernels::sum(n, x.data().data());
  return out;
}

// The executed graph in reverse-topological visit order.
template <typename T>
struct GraphT {
  std::vector<detail::NodeT<T>*> order;  // topological: parents first
};

template <typename T>
GraphT<T> record_graph(const TensorT<T>& root) {
  GraphT<T> g;
  std::unordered_set<detail::NodeT<T>*> visited;
  // Iterative post-order DFS.
  std::vector<std::pair<detail::NodeT<T>*, size_t>> stack;
  stack.emplace_back(root.node(), 0);
  visited.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::NodeT<T>* parent = node->parents[next++].get();
      if (visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      g.order.push_back(node);
      stack.pop_back();
    }
  }
  return g;
}

// Populates dLoss/dLeaf on every requires_grad leaf reachable from `loss`.
// Leaf grads accumulate across repeated calls; interior grads are reset per
// call so each pass contributes exactly once.
template <typename T>
void backward(const TensorT<T>& loss) {
  LSREC_CHECK(loss.numel() == 1, "backward requires a scalar loss");
  GraphT<T> g = record_graph(loss);
  for (auto* node : g.order) {
    if (node->backward_fn) {
      node->grad.assign(static_cast<size_t>(node->numel()), T(0));
    }
  }
  loss.node()->ensure_grad();
  loss.node()->grad[0] = T(1);
  for (auto it = g.order.rbegin(); it != g.order.rend(); ++it) {
    detail::NodeT<T>* node = *it;
    if (node->backward_fn) node->backward_fn(*node);
  }
}

}  // namespace lsrec
