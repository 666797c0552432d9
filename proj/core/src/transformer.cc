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

#include "otter/transformer.h"

#include <cmath>
#include <random>
#include <string>

namespace otter {

void ModelConfig::validate() const {
  if (vocab_size <= 0 || d_model <= 0 || d_inner <= 0 || n_layers <= 0 ||
      n_heads <= 0 || head_dim <= 0 || max_seq_len <= 0) {
    throw ConfigError("model config: every size must be positive");
  }
  if (d_model != n_heads * head_dim) {
    throw ConfigError("model config: d_model " + std::to_string(d_model) +
                      " != n_heads * head_dim (" + std::to_string(n_heads) +
                      " * " + std::to_string(head_dim) + ")");
  }
  if (head_dim % 2 != 0) throw ConfigError("model config: head_dim must be even");
  if (!(norm_eps >= 0.0)) throw ConfigError("model config: norm_eps must be >= 0");
}

ForwardDims base_dims(const ModelConfig& c) {
  ForwardDims d;
  d.vocab = static_cast<std::size_t>(c.vocab_size);
  d.d_model = static_cast<std::size_t>(c.d_model);
  d.width = d.d_model;
  d.inner = static_cast<std::size_t>(c.d_inner);
  d.n_heads = static_cast<std::size_t>(c.n_heads);
  d.head_dim = static_cast<std::size_t>(c.head_dim);
  d.max_seq_len = static_cast<std::size_t>(c.max_seq_len);
  d.eps = c.norm_eps;
  d.rope_base = c.rope_base;
  return d;
}

template <typename T>
RopeTables<T> make_rope_tables(std::size_t positions, std::size_t head_dim,
                               double base) {
  const std::size_t half = head_dim / 2;
  RopeTables<T> t{Tensor<T>({positions, half}), Tensor<T>({positions, half})};
  for (std::size_t p = 0; p < positions; ++p) {
    for (std::size_t i = 0; i < half; ++i) {
      const double theta =
          std::pow(base, -2.0 * static_cast<double>(i) / static_cast<double>(head_dim));
      const double angle = static_cast<double>(p) * theta;
      t.cos.at(p, i) = static_cast<T>(std::cos(angle));
      t.sin.at(p, i) = static_cast<T>(std::sin(angle));
    }
  }
  return t;
}

template <typename T>
Var<T> ffn_forward(Var<T> h, const LayerWeights<T>& w) {
  Tape<T>& tape = *h.tape;
  Var<T> gate = ops::linear(h, tape.parameter(w.wg), tape.parameter(w.bg));
  Var<T> up = ops::linear(h, tape.parameter(w.wu), tape.parameter(w.bu));
  return ops::linear(ops::swiglu(gate, up), tape.parameter(w.wd),
                     tape.parameter(w.bd));
}

template <typename T>
Var<T> mha_forward(Var<T> h, const LayerWeights<T>& w, const ForwardDims& dims,
                   const RopeTables<T>& rope) {
  Tape<T>& tape = *h.tape;
  const std::size_t seq = h.value().rows();
  if (seq > dims.max_seq_len) {
    throw InputError("sequence length " + std::to_string(seq) +
                     " exceeds max_seq_len " + std::to_string(dims.max_seq_len));
  }
  Var<T> q = ops::linear(h, tape.parameter(w.wq));
  Var<T> k = ops::linear(h, tape.parameter(w.wk));
  Var<T> v = ops::linear(h, tape.parameter(w.wv));
  q = ops::rope(q, dims.head_dim, rope.cos, rope.sin);
  k = ops::rope(k, dims.head_dim, rope.cos, rope.sin);
  Var<T> heads = ops::causal_attention(q, k, v, dims.n_heads, dims.head_dim);
  return ops::linear(heads, tape.parameter(w.wo));
}

template <typename T>
Tensor<T> rmsnorm(const Tensor<T>& h, const Tensor<T>& gamma, T eps) {
  Tape<T> tape(false);
  Var<T> x = tape.constant(h);
  Var<T> g = tape.constant(gamma);
  return ops::rmsnorm(x, g, h.cols(), eps).value();
}

template <typename T>
ForwardTrace<T> transformer_forward(Tape<T>& tape, const Weights<T>& weights,
                                    const ForwardDims& dims,
                                    std::span<const int> tokens) {
  if (tokens.empty()) throw InputError("forward: empty token sequence");
  if (tokens.size() > dims.max_seq_len) {
    throw InputError("sequence length " + std::to_string(tokens.size()) +
                     " exceeds max_seq_len " + std::to_string(dims.max_seq_len));
  }
  const T eps = static_cast<T>(dims.eps);
  const RopeTables<T> rope =
      make_rope_tables<T>(tokens.size(), dims.head_dim, dims.rope_base);
  ForwardTrace<T> trace;
  trace.hidden_sites.reserve(2 * weights.layers.size() + 1);

  Var<T> h = ops::embedding(tape.parameter(weights.embedding), tokens);
  for (const LayerWeights<T>& layer : weights.layers) {
    Var<T> x = ops::rmsnorm(h, tape.parameter(layer.attn_norm), dims.d_model, eps);
    trace.hidden_sites.push_back({h, x});
    h = ops::add(h, mha_forward(x, layer, dims, rope));

    x = ops::rmsnorm(h, tape.parameter(layer.ffn_norm), dims.d_model, eps);
    trace.hidden_sites.push_back({h, x});
    h = ops::add(h, ffn_forward(x, layer));
  }
  Var<T> out = ops::rmsnorm(h, tape.parameter(weights.final_norm), dims.d_model, eps);
  trace.hidden_sites.push_back({h, out});
  trace.final_hidden = out;
  Var<T> h_orig = dims.width == dims.d_model ? out : ops::slice_cols(out, 0, dims.d_model);
  trace.logits = ops::linear(h_orig, tape.parameter(weights.lm_head));
  return trace;
}

template <typename T>
Weights<T> make_base_weights(const ModelConfig& c, std::uint64_t seed) {
  c.validate();
  const std::size_t V = c.vocab_size, D = c.d_model, I = c.d_inner;
  const std::size_t A = static_cast<std::size_t>(c.n_heads) * c.head_dim;
  std::mt19937_64 rng(seed);
  auto gaussian = [&rng](Parameter<T>& p, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (T& v : p.value.storage()) v = static_cast<T>(dist(rng));
  };
  auto ones = [](Parameter<T>& p) { p.value.fill(T(1)); };
  const double depth_scale = 1.0 / std::sqrt(2.0 * c.n_layers);

  Weights<T> w;
  w.embedding = make_parameter<T>("embedding", {V, D}, {}, {D});
  gaussian(w.embedding, 1.0);
  for (int l = 0; l < c.n_layers; ++l) {
    const std::string pre = "layers." + std::to_string(l) + ".";
    LayerWeights<T> lw;
    lw.attn_norm = make_parameter<T>(pre + "attn_norm", {D}, {D}, {});
    ones(lw.attn_norm);
    lw.wq = make_parameter<T>(pre + "wq", {A, D}, {A}, {D});
    lw.wk = make_parameter<T>(pre + "wk", {A, D}, {A}, {D});
    lw.wv = make_parameter<T>(pre + "wv", {A, D}, {A}, {D});
    lw.wo = make_parameter<T>(pre + "wo", {D, A}, {D}, {A});
    for (auto* p : {&lw.wq, &lw.wk, &lw.wv}) gaussian(*p, 1.0 / std::sqrt(double(D)));
    gaussian(lw.wo, depth_scale / std::sqrt(double(A)));
    lw.ffn_norm = make_parameter<T>(pre + "ffn_norm", {D}, {D}, {});
    ones(lw.ffn_norm);
    lw.wg = make_parameter<T>(pre + "wg", {I, D}, {I}, {D});
    lw.bg = make_parameter<T>(pre + "bg", {I}, {I}, {});
    lw.wu = make_parameter<T>(pre + "wu", {I, D}, {I}, {D});
    lw.bu = make_parameter<T>(pre + "bu", {I}, {I}, {});
    lw.wd = make_parameter<T>(pre + "wd", {D, I}, {D}, {I});
    lw.bd = make_parameter<T>(pre + "bd", {D}, {D}, {});
    gaussian(lw.wg, 1.0 / std::sqrt(double(D)));
    gaussian(lw.wu, 1.0 / std::sqrt(double(D)));
    gaussian(lw.wd, depth_scale / std::sqrt(double(I)));
    w.layers.push_back(std::move(lw));
  }
  w.final_norm = make_parameter<T>("final_norm", {D}, {D}, {});
  ones(w.final_norm);
  w.lm_head = make_parameter<T>("lm_head", {V, D}, {}, {});
  gaussian(w.lm_head, 1.0 / std::sqrt(double(D)));
  return w;
}

#define OTTER_INSTANTIATE_TRANSFORMER(T)                                       \
  template RopeTables<T> make_rope_tables<T>(std::size_t, std::size_t, double); \
  template Var<T> ffn_forward(Var<T>, const LayerWeights<T>&);                  \
  template Var<T> mha_forward(Var<T>, const LayerWeights<T>&,                   \
                              const ForwardDims&, const RopeTables<T>&);        \
  template Tensor<T> rmsnorm(const Tensor<T>&, const Tensor<T>&, T);            \
  template ForwardTrace<T> transformer_forward(Tape<T>&, const Weights<T>&,     \
                                               const ForwardDims&,              \
                                               std::span<const int>);           \
  template Weights<T> make_base_weights<T>(const ModelConfig&, std::uint64_t);

OTTER_INSTANTIATE_TRANSFORMER(float)
OTTER_INSTANTIATE_TRANSFORMER(double)
OTTER_INSTANTIATE_TRANSFORMER(long double)
#undef OTTER_INSTANTIATE_TRANSFORMER

}  // namespace otter
