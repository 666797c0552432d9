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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "otter/autograd.h"
#include "otter/parameter.h"

namespace otter {

// Decoder-only transformer: token embedding, n_layers pre-norm blocks of
// (MHA, gated-SiLU FFN) with residual connections, final RMSNorm and an
// untied LM head. Attention projections are bias-free; FFN projections
// carry biases.
struct ModelConfig {
  int vocab_size = 64;
  int d_model = 32;
  int d_inner = 64;
  int n_layers = 2;
  int n_heads = 4;
  int head_dim = 8;
  int max_seq_len = 64;
  double norm_eps = 1e-5;
  double rope_base = 10000.0;

  // Throws ConfigError when d_model != n_heads * head_dim, head_dim is odd,
  // or any size is non-positive.
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

template <typename T>
struct LayerWeights {
  Parameter<T> attn_norm;
  Parameter<T> wq, wk, wv, wo;
  Parameter<T> ffn_norm;
  Parameter<T> wg, bg, wu, bu, wd, bd;
};

template <typename T>
struct Weights {
  Parameter<T> embedding;
  std::vector<LayerWeights<T>> layers;
  Parameter<T> final_norm;
  Parameter<T> lm_head;

  template <typename F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

 private:
  template <typename Self, typename F>
  static void visit(Self& self, F& f) {
    f(self.embedding);
    for (auto& l : self.layers) {
      for (auto* p : {&l.attn_norm, &l.wq, &l.wk, &l.wv, &l.wo, &l.ffn_norm,
                      &l.wg, &l.bg, &l.wu, &l.bu, &l.wd, &l.bd}) {
        f(*p);
      }
    }
    f(self.final_norm);
    f(self.lm_head);
  }
};

// Runtime widths. For a base model width == d_model and inner == d_inner;
// inserted extensions widen them while norm_dims stays at d_model.
struct ForwardDims {
  std::size_t vocab = 0;
  std::size_t d_model = 0;
  std::size_t width = 0;
  std::size_t inner = 0;
  std::size_t n_heads = 0;
  std::size_t head_dim = 0;
  std::size_t max_seq_len = 0;
  double eps = 1e-5;
  double rope_base = 10000.0;
};

ForwardDims base_dims(const ModelConfig& config);

template <typename T>
struct NormSite {
  Var<T> pre;   // residual stream entering the norm
  Var<T> post;  // normalized output
};

template <typename T>
struct ForwardTrace {
  Var<T> logits;  // [positions, vocab]
  // attn_norm and ffn_norm of every block, then the final norm:
  // 2 * n_layers + 1 entries.
  std::vector<NormSite<T>> hidden_sites;
  Var<T> final_hidden;  // post final norm, full width
};

// cos/sin tables [positions, head_dim / 2] for rotary embedding.
template <typename T>
struct RopeTables {
  Tensor<T> cos;
  Tensor<T> sin;
};

template <typename T>
RopeTables<T> make_rope_tables(std::size_t positions, std::size_t head_dim,
                               double base);

// h_ffn = W_d (silu(W_g h + b_g) * (W_u h + b_u)) + b_d.
template <typename T>
Var<T> ffn_forward(Var<T> h, const LayerWeights<T>& w);

// Causal multi-head attention with rotary q/k; heads concatenated and
// projected by W_O. Throws InputError when the sequence exceeds max_seq_len.
template <typename T>
Var<T> mha_forward(Var<T> h, const LayerWeights<T>& w, const ForwardDims& dims,
                   const RopeTables<T>& rope);

// Plain RMSNorm over the full last axis.
template <typename T>
Tensor<T> rmsnorm(const Tensor<T>& h, const Tensor<T>& gamma, T eps);

// Full forward pass on one token sequence.
template <typename T>
ForwardTrace<T> transformer_forward(Tape<T>& tape, const Weights<T>& weights,
                                    const ForwardDims& dims,
                                    std::span<const int> tokens);

// Allocates base weights with group partitions of size one per axis and a
// seeded Gaussian initialization.
template <typename T>
Weights<T> make_base_weights(const ModelConfig& config, std::uint64_t seed);

}  // namespace otter
