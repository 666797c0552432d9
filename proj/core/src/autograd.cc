// Copyright 2026 The Otter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "otter/autograd.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace otter {

template <typename T>
Var<T> Tape<T>::constant(Tensor<T> value) {
  return record(std::move(value), false, nullptr, "constant");
}

template <typename T>
Var<T> Tape<T>::leaf(Tensor<T> value) {
  return record(std::move(value), grad_enabled_, nullptr, "leaf");
}

template <typename T>
Var<T> Tape<T>::parameter(const Parameter<T>& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) {
    return {this, it->second};
  }
  Node node;
  node.value = p.value;
  node.requires_grad = grad_enabled_ && p.any_trainable();
  node.param = &p;
  nodes_.push_back(std::move(node));
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_.emplace(&p, id);
  return {this, id};
}

template <typename T>
Tensor<T>& Tape<T>::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Tensor<T>(n.value.shape());
  return n.grad;
}

template <typename T>
Var<T> Tape<T>::record(Tensor<T> value, bool requires_grad, BackwardFn backward,
                       const char* op) {
  if (!value.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + op);
  }
  Node node;
  node.value = std::move(value);
  node.requires_grad = grad_enabled_ && requires_grad;
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
void Tape<T>::backward(Var<T> loss) {
  if (loss.tape != this) throw ConfigError("backward: loss from another tape");
  if (nodes_[loss.id].value.size() != 1) {
    throw ConfigError("backward: loss must be a single element, got shape " +
                      shape_string(nodes_[loss.id].value.shape()));
  }
  if (!nodes_[loss.id].requires_grad) return;
  grad(loss.id)[0] = T(1);
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, id);
  }
}

template <typename T>
std::vector<std::pair<const Parameter<T>*, const Tensor<T>*>>
Tape<T>::parameter_grads() const {
  std::vector<std::pair<const Parameter<T>*, const Tensor<T>*>> out;
  for (const Node& n : nodes_) {
    if (n.param != nullptr && n.requires_grad && !n.grad.empty()) {
      out.emplace_back(n.param, &n.grad);
    }
  }
  return out;
}

namespace ops {
namespace {

template <typename T>
void require_same_tape(Var<T> a, Var<T> b, const char* op) {
  if (a.tape != b.tape) throw ConfigError(std::string(op) + ": vars on different tapes");
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ConfigError(std::string(op) + ": shape mismatch " +
                      shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

template <typename T>
bool needs(Tape<T>& tape, Var<T> v) {
  return tape.requires_grad(v.id);
}

// y[r, :] = sum_i x[r, i] * w[:, i]. Each output accumulates its terms in
// ascending input index, so appending zero columns to w leaves y unchanged
// bit for bit.
template <typename T>
void matmul_xwt(const T* x, std::size_t rows, std::size_t in, const T* w,
                std::size_t out, T* y) {
  std::vector<T> wt(in * out);
  for (std::size_t o = 0; o < out; ++o) {
    for (std::size_t i = 0; i < in; ++i) wt[i * out + o] = w[o * in + i];
  }
  for (std::size_t r = 0; r < rows; ++r) {
    T* yr = y + r * out;
    std::fill(yr, yr + out, T(0));
    const T* xr = x + r * in;
    for (std::size_t i = 0; i < in; ++i) {
      const T a = xr[i];
      const T* wi = wt.data() + i * out;
      for (std::size_t o = 0; o < out; ++o) yr[o] += a * wi[o];
    }
  }
}

template <typename T>
T stable_softplus(T x) {
  return x > T(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <typename T>
T logistic(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same_tape(a, b, "add");
  Tape<T>& tape = *a.tape;
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  require_same_shape(av, bv, "add");
  Tensor<T> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  const bool rg = needs(tape, a) || needs(tape, b);
  return tape.record(std::move(out), rg, [a, b](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    for (Var<T> v : {a, b}) {
      if (!t.requires_grad(v.id)) continue;
      Tensor<T>& gv = t.grad(v.id);
      for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
    }
  }, "add");
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  require_same_tape(a, b, "sub");
  Tape<T>& tape = *a.tape;
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  require_same_shape(av, bv, "sub");
  Tensor<T> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  const bool rg = needs(tape, a) || needs(tape, b);
  return tape.record(std::move(out), rg, [a, b](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    if (t.requires_grad(a.id)) {
      Tensor<T>& ga = t.grad(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(b.id)) {
      Tensor<T>& gb = t.grad(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  }, "sub");
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  require_same_tape(a, b, "mul");
  Tape<T>& tape = *a.tape;
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  require_same_shape(av, bv, "mul");
  Tensor<T> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const bool rg = needs(tape, a) || needs(tape, b);
  return tape.record(std::move(out), rg, [a, b](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& av = t.value(a.id);
    const Tensor<T>& bv = t.value(b.id);
    if (t.requires_grad(a.id)) {
      Tensor<T>& ga = t.grad(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(b.id)) {
      Tensor<T>& gb = t.grad(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  }, "mul");
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  Tape<T>& tape = *a.tape;
  const Tensor<T>& av = a.value();
  Tensor<T> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * factor;
  return tape.record(std::move(out), needs(tape, a), [a, factor](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& ga = t.grad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
  }, "scale");
}

template <typename T>
Var<T> embedding(Var<T> table, std::span<const int> tokens) {
  Tape<T>& tape = *table.tape;
  const Tensor<T>& w = table.value();
  if (w.rank() != 2) throw ConfigError("embedding: table must be rank 2");
  const std::size_t vocab = w.dim(0);
  const std::size_t width = w.dim(1);
  std::vector<int> ids(tokens.begin(), tokens.end());
  Tensor<T> out({ids.size(), width});
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] < 0 || static_cast<std::size_t>(ids[t]) >= vocab) {
      throw InputError("embedding: token " + std::to_string(ids[t]) +
                       " outside vocabulary of " + std::to_string(vocab));
    }
    std::copy_n(w.row(ids[t]).begin(), width, out.row(t).begin());
  }
  return tape.record(std::move(out), needs(tape, table),
                     [table, ids = std::move(ids), width](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& gw = t.grad(table.id);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      T* dst = gw.row(ids[r]).data();
      const T* src = g.row(r).data();
      for (std::size_t c = 0; c < width; ++c) dst[c] += src[c];
    }
  }, "embedding");
}

namespace {

template <typename T>
Var<T> linear_impl(Var<T> x, Var<T> weight, const Var<T>* bias) {
  require_same_tape(x, weight, "linear");
  Tape<T>& tape = *x.tape;
  const Tensor<T>& xv = x.value();
  const Tensor<T>& wv = weight.value();
  if (wv.rank() != 2) throw ConfigError("linear: weight must be rank 2");
  const std::size_t in = wv.dim(1);
  const std::size_t out_dim = wv.dim(0);
  if (xv.cols() != in) {
    throw ConfigError("linear: input width " + std::to_string(xv.cols()) +
                      " does not match weight " + shape_string(wv.shape()));
  }
  const std::size_t rows = xv.rows();
  Tensor<T> out({rows, out_dim});
  matmul_xwt(xv.data().data(), rows, in, wv.data().data(), out_dim,
             out.data().data());
  bool rg = needs(tape, x) || needs(tape, weight);
  Var<T> b{};
  if (bias != nullptr) {
    b = *bias;
    const Tensor<T>& bv = b.value();
    if (bv.size() != out_dim) throw ConfigError("linear: bias length mismatch");
    for (std::size_t r = 0; r < rows; ++r) {
      T* yr = out.row(r).data();
      for (std::size_t o = 0; o < out_dim; ++o) yr[o] += bv[o];
    }
    rg = rg || needs(tape, b);
  }
  return tape.record(std::move(out), rg, [x, weight, b, rows, in, out_dim](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& wv = t.value(weight.id);
    if (t.requires_grad(x.id)) {
      Tensor<T>& gx = t.grad(x.id);
      for (std::size_t r = 0; r < rows; ++r) {
        T* gxr = gx.data().data() + r * in;
        const T* gr = g.data().data() + r * out_dim;
        for (std::size_t o = 0; o < out_dim; ++o) {
          const T a = gr[o];
          if (a == T(0)) continue;
          const T* wo = wv.data().data() + o * in;
          for (std::size_t i = 0; i < in; ++i) gxr[i] += a * wo[i];
        }
      }
    }
    if (t.requires_grad(weight.id)) {
      const Tensor<T>& xv = t.value(x.id);
      Tensor<T>& gw = t.grad(weight.id);
      for (std::size_t r = 0; r < rows; ++r) {
        const T* xr = xv.data().data() + r * in;
        const T* gr = g.data().data() + r * out_dim;
        for (std::size_t o = 0; o < out_dim; ++o) {
          const T a = gr[o];
          if (a == T(0)) continue;
          T* gwo = gw.data().data() + o * in;
          for (std::size_t i = 0; i < in; ++i) gwo[i] += a * xr[i];
        }
      }
    }
    if (b.valid() && t.requires_grad(b.id)) {
      Tensor<T>& gb = t.grad(b.id);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t o = 0; o < out_dim; ++o) gb[o] += g.at(r, o);
      }
    }
  }, "linear");
}

}  // namespace

template <typename T>
Var<T> linear(Var<T> x, Var<T> weight) {
  return linear_impl<T>(x, weight, nullptr);
}

template <typename T>
Var<T> linear(Var<T> x, Var<T> weight, Var<T> bias) {
  return linear_impl<T>(x, weight, &bias);
}

template <typename T>
Var<T> rmsnorm(Var<T> x, Var<T> gamma, std::size_t norm_dims, T eps) {
  require_same_tape(x, gamma, "rmsnorm");
  Tape<T>& tape = *x.tape;
  const Tensor<T>& xv = x.value();
  const Tensor<T>& gv = gamma.value();
  const std::size_t width = xv.cols();
  if (gv.size() != width) {
    throw ConfigError("rmsnorm: gamma length " + std::to_string(gv.size()) +
                      " does not match width " + std::to_string(width));
  }
  if (norm_dims == 0 || norm_dims > width) {
    throw ConfigError("rmsnorm: norm_dims " + std::to_string(norm_dims) +
                      " outside (0, " + std::to_string(width) + "]");
  }
  const std::size_t rows = xv.rows();
  Tensor<T> out({rows, width});
  std::vector<T> inv(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = xv.row(r).data();
    T sum_sq = T(0);
    for (std::size_t i = 0; i < norm_dims; ++i) sum_sq += xr[i] * xr[i];
    inv[r] = T(1) / std::sqrt(sum_sq / static_cast<T>(norm_dims) + eps);
    T* yr = out.row(r).data();
    for (std::size_t i = 0; i < width; ++i) yr[i] = xr[i] * inv[r] * gv[i];
  }
  const bool rg = needs(tape, x) || needs(tape, gamma);
  return tape.record(std::move(out), rg,
                     [x, gamma, norm_dims, rows, width, inv = std::move(inv)](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& xv = t.value(x.id);
    const Tensor<T>& gv = t.value(gamma.id);
    if (t.requires_grad(gamma.id)) {
      Tensor<T>& gg = t.grad(gamma.id);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < width; ++i) gg[i] += g.at(r, i) * xv.at(r, i) * inv[r];
      }
    }
    if (t.requires_grad(x.id)) {
      Tensor<T>& gx = t.grad(x.id);
      const T n = static_cast<T>(norm_dims);
      for (std::size_t r = 0; r < rows; ++r) {
        // d inv / d x_i = -inv^3 x_i / n for i < norm_dims.
        T dot = T(0);
        for (std::size_t i = 0; i < width; ++i) dot += g.at(r, i) * gv[i] * xv.at(r, i);
        const T coef = -inv[r] * inv[r] * inv[r] * dot / n;
        for (std::size_t i = 0; i < width; ++i) {
          T d = g.at(r, i) * gv[i] * inv[r];
          if (i < norm_dims) d += coef * xv.at(r, i);
          gx.at(r, i) += d;
        }
      }
    }
  }, "rmsnorm");
}

template <typename T>
Var<T> rope(Var<T> x, std::size_t head_dim, const Tensor<T>& cos,
            const Tensor<T>& sin) {
  Tape<T>& tape = *x.tape;
  const Tensor<T>& xv = x.value();
  const std::size_t rows = xv.rows();
  const std::size_t width = xv.cols();
  const std::size_t half = head_dim / 2;
  if (head_dim == 0 || head_dim % 2 != 0 || width % head_dim != 0) {
    throw ConfigError("rope: width " + std::to_string(width) +
                      " is not a multiple of even head_dim " + std::to_string(head_dim));
  }
  if (cos.rows() < rows || cos.cols() != half || sin.shape() != cos.shape()) {
    throw ConfigError("rope: cos/sin tables do not cover the sequence");
  }
  const std::size_t heads = width / head_dim;
  Tensor<T> out({rows, width});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t base = h * head_dim;
      for (std::size_t i = 0; i < half; ++i) {
        const T x1 = xv.at(r, base + i);
        const T x2 = xv.at(r, base + i + half);
        const T c = cos.at(r, i);
        const T s = sin.at(r, i);
        out.at(r, base + i) = x1 * c - x2 * s;
        out.at(r, base + i + half) = x1 * s + x2 * c;
      }
    }
  }
  return tape.record(std::move(out), needs(tape, x),
                     [x, head_dim, half, heads, rows, cos, sin](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& gx = t.grad(x.id);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t base = h * head_dim;
        for (std::size_t i = 0; i < half; ++i) {
          const T g1 = g.at(r, base + i);
          const T g2 = g.at(r, base + i + half);
          const T c = cos.at(r, i);
          const T s = sin.at(r, i);
          gx.at(r, base + i) += g1 * c + g2 * s;
          gx.at(r, base + i + half) += -g1 * s + g2 * c;
        }
      }
    }
  }, "rope");
}

template <typename T>
Var<T> causal_attention(Var<T> q, Var<T> k, Var<T> v, std::size_t n_heads,
                        std::size_t head_dim) {
  require_same_tape(q, k, "attention");
  require_same_tape(q, v, "attention");
  Tape<T>& tape = *q.tape;
  const Tensor<T>& qv = q.value();
  const Tensor<T>& kv = k.value();
  const Tensor<T>& vv = v.value();
  require_same_shape(qv, kv, "attention");
  require_same_shape(qv, vv, "attention");
  const std::size_t seq = qv.rows();
  if (qv.cols() != n_heads * head_dim) {
    throw ConfigError("attention: width " + std::to_string(qv.cols()) +
                      " != n_heads * head_dim");
  }
  const T scale_factor = T(1) / std::sqrt(static_cast<T>(head_dim));
  // probs[h][t][s] for s <= t, stored densely.
  std::vector<T> probs(n_heads * seq * seq, T(0));
  Tensor<T> out({seq, n_heads * head_dim});
  std::vector<T> scores(seq);
  for (std::size_t h = 0; h < n_heads; ++h) {
    const std::size_t off = h * head_dim;
    for (std::size_t t = 0; t < seq; ++t) {
      const T* qt = qv.row(t).data() + off;
      T max_score = -std::numeric_limits<T>::infinity();
      for (std::size_t s = 0; s <= t; ++s) {
        const T* ks = kv.row(s).data() + off;
        T dot = T(0);
        for (std::size_t d = 0; d < head_dim; ++d) dot += qt[d] * ks[d];
        scores[s] = dot * scale_factor;
        max_score = std::max(max_score, scores[s]);
      }
      T denom = T(0);
      for (std::size_t s = 0; s <= t; ++s) {
        scores[s] = std::exp(scores[s] - max_score);
        denom += scores[s];
      }
      T* p = probs.data() + (h * seq + t) * seq;
      T* ot = out.row(t).data() + off;
      for (std::size_t s = 0; s <= t; ++s) {
        p[s] = scores[s] / denom;
        const T* vs = vv.row(s).data() + off;
        for (std::size_t d = 0; d < head_dim; ++d) ot[d] += p[s] * vs[d];
      }
    }
  }
  const bool rg = needs(tape, q) || needs(tape, k) || needs(tape, v);
  return tape.record(std::move(out), rg,
                     [q, k, v, n_heads, head_dim, seq, scale_factor,
                      probs = std::move(probs)](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& qv = t.value(q.id);
    const Tensor<T>& kv = t.value(k.id);
    const Tensor<T>& vv = t.value(v.id);
    const bool gq_on = t.requires_grad(q.id);
    const bool gk_on = t.requires_grad(k.id);
    const bool gv_on = t.requires_grad(v.id);
    Tensor<T>* gq = gq_on ? &t.grad(q.id) : nullptr;
    Tensor<T>* gk = gk_on ? &t.grad(k.id) : nullptr;
    Tensor<T>* gv = gv_on ? &t.grad(v.id) : nullptr;
    std::vector<T> dp(seq);
    for (std::size_t h = 0; h < n_heads; ++h) {
      const std::size_t off = h * head_dim;
      for (std::size_t tt = 0; tt < seq; ++tt) {
        const T* p = probs.data() + (h * seq + tt) * seq;
        const T* go = g.row(tt).data() + off;
        T weighted = T(0);
        for (std::size_t s = 0; s <= tt; ++s) {
          const T* vs = vv.row(s).data() + off;
          T dot = T(0);
          for (std::size_t d = 0; d < head_dim; ++d) dot += go[d] * vs[d];
          dp[s] = dot;
          weighted += dot * p[s];
          if (gv_on) {
            T* gvs = gv->row(s).data() + off;
            for (std::size_t d = 0; d < head_dim; ++d) gvs[d] += p[s] * go[d];
          }
        }
        if (!gq_on && !gk_on) continue;
        const T* qt = qv.row(tt).data() + off;
        for (std::size_t s = 0; s <= tt; ++s) {
          const T ds = p[s] * (dp[s] - weighted) * scale_factor;
          if (ds == T(0)) continue;
          const T* ks = kv.row(s).data() + off;
          if (gq_on) {
            T* gqt = gq->row(tt).data() + off;
            for (std::size_t d = 0; d < head_dim; ++d) gqt[d] += ds * ks[d];
          }
          if (gk_on) {
            T* gks = gk->row(s).data() + off;
            for (std::size_t d = 0; d < head_dim; ++d) gks[d] += ds * qt[d];
          }
        }
      }
    }
  }, "attention");
}

template <typename T>
Var<T> swiglu(Var<T> gate, Var<T> up) {
  require_same_tape(gate, up, "swiglu");
  Tape<T>& tape = *gate.tape;
  const Tensor<T>& gv = gate.value();
  const Tensor<T>& uv = up.value();
  require_same_shape(gv, uv, "swiglu");
  Tensor<T> out(gv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gv[i] * logistic(gv[i]) * uv[i];
  const bool rg = needs(tape, gate) || needs(tape, up);
  return tape.record(std::move(out), rg, [gate, up](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& gv = t.value(gate.id);
    const Tensor<T>& uv = t.value(up.id);
    const bool g_on = t.requires_grad(gate.id);
    const bool u_on = t.requires_grad(up.id);
    Tensor<T>* gg = g_on ? &t.grad(gate.id) : nullptr;
    Tensor<T>* gu = u_on ? &t.grad(up.id) : nullptr;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T sig = logistic(gv[i]);
      const T silu = gv[i] * sig;
      if (u_on) (*gu)[i] += g[i] * silu;
      if (g_on) (*gg)[i] += g[i] * uv[i] * sig * (T(1) + gv[i] * (T(1) - sig));
    }
  }, "swiglu");
}

template <typename T>
Var<T> sigmoid(Var<T> x) {
  Tape<T>& tape = *x.tape;
  const Tensor<T>& xv = x.value();
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = logistic(xv[i]);
  return tape.record(std::move(out), needs(tape, x), [x](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& y = t.value(self);
    Tensor<T>& gx = t.grad(x.id);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (T(1) - y[i]);
  }, "sigmoid");
}

template <typename T>
Var<T> softplus(Var<T> x) {
  Tape<T>& tape = *x.tape;
  const Tensor<T>& xv = x.value();
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_softplus(xv[i]);
  return tape.record(std::move(out), needs(tape, x), [x](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& xv = t.value(x.id);
    Tensor<T>& gx = t.grad(x.id);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * logistic(xv[i]);
  }, "softplus");
}

template <typename T>
Var<T> softmax(Var<T> x) {
  Tape<T>& tape = *x.tape;
  Tensor<T> out = otter::softmax(x.value(), x.value().rank() - 1);
  const std::size_t rows = out.rows();
  const std::size_t cols = out.cols();
  return tape.record(std::move(out), needs(tape, x), [x, rows, cols](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& y = t.value(self);
    Tensor<T>& gx = t.grad(x.id);
    for (std::size_t r = 0; r < rows; ++r) {
      T dot = T(0);
      for (std::size_t c = 0; c < cols; ++c) dot += g.at(r, c) * y.at(r, c);
      for (std::size_t c = 0; c < cols; ++c) gx.at(r, c) += y.at(r, c) * (g.at(r, c) - dot);
    }
  }, "softmax");
}

template <typename T>
Var<T> slice_cols(Var<T> x, std::size_t begin, std::size_t end) {
  Tape<T>& tape = *x.tape;
  const Tensor<T>& xv = x.value();
  const std::size_t cols = xv.cols();
  if (begin > end || end > cols) {
    throw ConfigError("slice_cols: [" + std::to_string(begin) + ", " +
                      std::to_string(end) + ") outside width " + std::to_string(cols));
  }
  const std::size_t rows = xv.rows();
  const std::size_t w = end - begin;
  Tensor<T> out({rows, w});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(xv.row(r).begin() + begin, w, out.row(r).begin());
  }
  return tape.record(std::move(out), needs(tape, x), [x, begin, w, rows](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& gx = t.grad(x.id);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < w; ++c) gx.at(r, begin + c) += g.at(r, c);
    }
  }, "slice_cols");
}

template <typename T>
Var<T> take_row(Var<T> x, std::size_t r) {
  Tape<T>& tape = *x.tape;
  const Tensor<T>& xv = x.value();
  if (r >= xv.rows()) throw ConfigError("take_row: row out of range");
  const std::size_t cols = xv.cols();
  Tensor<T> out({1, cols});
  std::copy_n(xv.row(r).begin(), cols, out.row(0).begin());
  return tape.record(std::move(out), needs(tape, x), [x, r, cols](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& gx = t.grad(x.id);
    for (std::size_t c = 0; c < cols; ++c) gx.at(r, c) += g[c];
  }, "take_row");
}

template <typename T>
Var<T> sum(Var<T> x) {
  Tape<T>& tape = *x.tape;
  const Tensor<T>& xv = x.value();
  T acc = T(0);
  for (T v : xv.data()) acc += v;
  return tape.record(Tensor<T>({1}, {acc}), needs(tape, x), [x](Tape<T>& t, int self) {
    const T g = t.grad(self)[0];
    Tensor<T>& gx = t.grad(x.id);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
  }, "sum");
}

template <typename T>
Var<T> mean(Var<T> x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw ConfigError("mean: empty tensor");
  return scale(sum(x), T(1) / static_cast<T>(n));
}

template <typename T>
Var<T> cross_entropy(Var<T> logits, std::span<const int> targets) {
  Tape<T>& tape = *logits.tape;
  const Tensor<T>& lv = logits.value();
  const std::size_t rows = lv.rows();
  const std::size_t vocab = lv.cols();
  if (targets.size() != rows) {
    throw InputError("cross_entropy: " + std::to_string(targets.size()) +
                     " targets for " + std::to_string(rows) + " positions");
  }
  std::vector<int> tg(targets.begin(), targets.end());
  std::size_t counted = 0;
  for (int target : tg) {
    if (target < 0) continue;
    if (static_cast<std::size_t>(target) >= vocab) {
      throw InputError("cross_entropy: target " + std::to_string(target) +
                       " outside vocabulary of " + std::to_string(vocab));
    }
    ++counted;
  }
  if (counted == 0) throw InputError("cross_entropy: no positions with a target");
  // Softmax rows kept for the backward pass.
  Tensor<T> probs({rows, vocab});
  T total = T(0);
  for (std::size_t r = 0; r < rows; ++r) {
    if (tg[r] < 0) continue;
    const T* lr = lv.row(r).data();
    T mx = *std::max_element(lr, lr + vocab);
    T denom = T(0);
    for (std::size_t c = 0; c < vocab; ++c) {
      probs.at(r, c) = std::exp(lr[c] - mx);
      denom += probs.at(r, c);
    }
    for (std::size_t c = 0; c < vocab; ++c) probs.at(r, c) /= denom;
    total += -(lr[tg[r]] - mx - std::log(denom));
  }
  const T inv_n = T(1) / static_cast<T>(counted);
  return tape.record(Tensor<T>({1}, {total * inv_n}), needs(tape, logits),
                     [logits, tg = std::move(tg), probs = std::move(probs), inv_n, vocab](Tape<T>& t, int self) {
    const T g = t.grad(self)[0] * inv_n;
    Tensor<T>& gl = t.grad(logits.id);
    for (std::size_t r = 0; r < tg.size(); ++r) {
      if (tg[r] < 0) continue;
      for (std::size_t c = 0; c < vocab; ++c) gl.at(r, c) += g * probs.at(r, c);
      gl.at(r, tg[r]) -= g;
    }
  }, "cross_entropy");
}

template <typename T>
Var<T> rms_gap_sq(Var<T> x, std::size_t norm_dims, T eps) {
  Tape<T>& tape = *x.tape;
  const Tensor<T>& xv = x.value();
  const std::size_t rows = xv.rows();
  const std::size_t width = xv.cols();
  if (norm_dims == 0 || norm_dims > width) {
    throw ConfigError("rms_gap_sq: norm_dims outside (0, width]");
  }
  std::vector<T> orig(rows), full(rows);
  T total = T(0);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = xv.row(r).data();
    T s_orig = T(0);
    for (std::size_t i = 0; i < norm_dims; ++i) s_orig += xr[i] * xr[i];
    T s_full = s_orig;
    for (std::size_t i = norm_dims; i < width; ++i) s_full += xr[i] * xr[i];
    orig[r] = std::sqrt(s_orig / static_cast<T>(norm_dims) + eps);
    full[r] = std::sqrt(s_full / static_cast<T>(width) + eps);
    const T gap = orig[r] - full[r];
    total += gap * gap;
  }
  const T inv_rows = T(1) / static_cast<T>(rows);
  return tape.record(Tensor<T>({1}, {total * inv_rows}), needs(tape, x),
                     [x, norm_dims, rows, width, inv_rows, orig = std::move(orig),
                      full = std::move(full)](Tape<T>& t, int self) {
    const T g = t.grad(self)[0] * inv_rows;
    const Tensor<T>& xv = t.value(x.id);
    Tensor<T>& gx = t.grad(x.id);
    for (std::size_t r = 0; r < rows; ++r) {
      const T two_gap = T(2) * (orig[r] - full[r]) * g;
      // d orig / d x_i = x_i / (n * orig) on the first n coordinates.
      const T a = orig[r] > T(0) ? two_gap / (static_cast<T>(norm_dims) * orig[r]) : T(0);
      const T b = full[r] > T(0) ? two_gap / (static_cast<T>(width) * full[r]) : T(0);
      for (std::size_t i = 0; i < width; ++i) {
        T d = -b * xv.at(r, i);
        if (i < norm_dims) d += a * xv.at(r, i);
        gx.at(r, i) += d;
      }
    }
  }, "rms_gap_sq");
}

#define OTTER_INSTANTIATE_OPS(T)                                             \
  template Var<T> add(Var<T>, Var<T>);                                       \
  template Var<T> sub(Var<T>, Var<T>);                                       \
  template Var<T> mul(Var<T>, Var<T>);                                       \
  template Var<T> scale(Var<T>, T);                                          \
  template Var<T> embedding(Var<T>, std::span<const int>);                   \
  template Var<T> linear(Var<T>, Var<T>);                                    \
  template Var<T> linear(Var<T>, Var<T>, Var<T>);                            \
  template Var<T> rmsnorm(Var<T>, Var<T>, std::size_t, T);                   \
  template Var<T> rope(Var<T>, std::size_t, const Tensor<T>&,                \
                       const Tensor<T>&);                                    \
  template Var<T> causal_attention(Var<T>, Var<T>, Var<T>, std::size_t,      \
                                   std::size_t);                             \
  template Var<T> swiglu(Var<T>, Var<T>);                                    \
  template Var<T> sigmoid(Var<T>);                                           \
  template Var<T> softplus(Var<T>);                                          \
  template Var<T> softmax(Var<T>);                                           \
  template Var<T> slice_cols(Var<T>, std::size_t, std::size_t);              \
  template Var<T> take_row(Var<T>, std::size_t);                             \
  template Var<T> sum(Var<T>);                                               \
  template Var<T> mean(Var<T>);                                              \
  template Var<T> cross_entropy(Var<T>, std::span<const int>);               \
  template Var<T> rms_gap_sq(Var<T>, std::size_t, T);

OTTER_INSTANTIATE_OPS(float)
OTTER_INSTANTIATE_OPS(double)
OTTER_INSTANTIATE_OPS(long double)
#undef OTTER_INSTANTIATE_OPS

}  // namespace ops

template class Tape<float>;
template class Tape<double>;
template class Tape<long double>;

}  // namespace otter
