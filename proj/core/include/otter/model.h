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
#include <string>
#include <vector>

#include "otter/autograd.h"
#include "otter/parameter.h"
#include "otter/transformer.h"

namespace otter {

enum class InitStrategy { kRandom, kNormal, kCopy };

std::string to_string(InitStrategy s);
// Throws ConfigError on an unknown name.
InitStrategy parse_init_strategy(const std::string& name);

struct OtterConfig {
  std::string name = "otter";
  int d_ext = 8;        // residual-stream extension width
  int d_inner_ext = 16;  // FFN inner extension width
  int n_ext_heads = 2;  // added attention heads
  InitStrategy init = InitStrategy::kNormal;
  double reg_lambda = 5.0;

  // Throws ConfigError on negative sizes, an all-zero extension, or
  // d_ext == 0 (extension heads and FFN units need residual coordinates to
  // write into).
  void validate() const;
  friend bool operator==(const OtterConfig&, const OtterConfig&) = default;
};

enum class HeadKind { kReward, kGeneration };

// Task head attached to one extension. Reward heads hold W_on [1, d_ext];
// generation heads hold W_hm [d_model, d_ext] and predict the token
// `lookahead` positions past the usual next token.
template <typename T>
struct TaskHead {
  std::string name;
  HeadKind kind = HeadKind::kReward;
  int extension = 1;
  int lookahead = 0;
  Parameter<T> weight;
};

template <typename T>
struct Model {
  ModelConfig config;
  std::vector<OtterConfig> extensions;
  Weights<T> weights;
  std::vector<TaskHead<T>> heads;
  // Group whose parameters are currently trainable; kNoGroup freezes all.
  int trainable_group = kNoGroup;

  int num_extensions() const { return static_cast<int>(extensions.size()); }
  std::size_t width() const;
  std::size_t inner() const;
  std::size_t total_heads() const;
  // First residual coordinate of extension `k` (1-based) and its width.
  std::size_t ext_offset(int k) const;
  std::size_t ext_width(int k) const;
  ForwardDims dims() const;

  void set_trainable_group(int group);
  void freeze() { set_trainable_group(kNoGroup); }

  ForwardTrace<T> forward(Tape<T>& tape, std::span<const int> tokens) const;
  // Logits of the original coordinates, no gradient.
  Tensor<T> logits(std::span<const int> tokens) const;

  template <typename F>
  void for_each_parameter(F&& f) {
    weights.for_each(f);
    for (auto& h : heads) f(h.weight);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    weights.for_each(f);
    for (const auto& h : heads) f(h.weight);
  }
};

using OtterModel = Model<float>;

template <typename T>
Model<T> make_base_model(const ModelConfig& config, std::uint64_t seed);

template <typename U, typename T>
Model<U> cast_model(const Model<T>& m) {
  Model<U> out;
  out.config = m.config;
  out.extensions = m.extensions;
  out.trainable_group = m.trainable_group;
  out.weights.embedding = cast_parameter<U>(m.weights.embedding);
  for (const auto& l : m.weights.layers) {
    LayerWeights<U> c;
    c.attn_norm = cast_parameter<U>(l.attn_norm);
    c.wq = cast_parameter<U>(l.wq);
    c.wk = cast_parameter<U>(l.wk);
    c.wv = cast_parameter<U>(l.wv);
    c.wo = cast_parameter<U>(l.wo);
    c.ffn_norm = cast_parameter<U>(l.ffn_norm);
    c.wg = cast_parameter<U>(l.wg);
    c.bg = cast_parameter<U>(l.bg);
    c.wu = cast_parameter<U>(l.wu);
    c.bu = cast_parameter<U>(l.bu);
    c.wd = cast_parameter<U>(l.wd);
    c.bd = cast_parameter<U>(l.bd);
    out.weights.layers.push_back(std::move(c));
  }
  out.weights.final_norm = cast_parameter<U>(m.weights.final_norm);
  out.weights.lm_head = cast_parameter<U>(m.weights.lm_head);
  for (const auto& h : m.heads) {
    out.heads.push_back({h.name, h.kind, h.extension, h.lookahead,
                         cast_parameter<U>(h.weight)});
  }
  return out;
}

// Stand-alone expanded linear layer with the block layout [[W, Z], [A, B]]
// and bias [b; b'].
template <typename T>
struct ExpandedLinear {
  Parameter<T> weight;
  Parameter<T> bias;

  // y = weight [x; x'] + bias.
  Tensor<T> apply(const Tensor<T>& x) const;
};

// Widens a [d_out, d_in] layer by d_in_ext inputs and d_out_ext outputs.
// Trainable blocks (A, B, b') start at zero; W and b are frozen.
template <typename T>
ExpandedLinear<T> expand_linear(const Tensor<T>& weight, const Tensor<T>& bias,
                                int d_in_ext, int d_out_ext);

// Grows one parameter by a new group on each partitioned axis. New
// trainable elements are set to `fill`; the structural zero stays zero.
template <typename T>
Parameter<T> grow_parameter(const Parameter<T>& p, std::size_t add_rows,
                            std::size_t add_cols, T fill);

// Appends an extension: every projection, the embedding and every norm
// weight gain a new group. New weights start at zero and new norm entries
// at one, so the result is output-identical to `model`. The new extension
// becomes the trainable group. Throws SequencingError when an existing
// extension is still trainable.
template <typename T>
Model<T> expand_model(const Model<T>& model, const OtterConfig& cfg);

// Drops the newest extension and its heads.
template <typename T>
Model<T> remove_last_extension(const Model<T>& model);

struct InitReport {
  InitStrategy strategy = InitStrategy::kNormal;
  // Parameters where copying had no source rows and normal was used.
  std::vector<std::string> fallbacks;
};

// Initializes the trainable blocks of extension `k`. Norm entries are set
// to one and structural zeros stay zero for every strategy.
template <typename T>
InitReport init_params(Model<T>& model, int k, InitStrategy strategy,
                       std::uint64_t seed);

// h / rms(h[:, :d_orig]) * gamma.
template <typename T>
Tensor<T> restricted_rmsnorm(const Tensor<T>& h, std::size_t d_orig,
                             const Tensor<T>& gamma, T eps);

struct NonDisruptionReport {
  std::vector<double> per_prompt;  // max abs logit deviation per prompt
  double max_deviation = 0.0;
  double tol = 0.0;
};

// Compares original-coordinate logits of `otter` with `base` on every
// prompt, checks that structural zeros are exactly zero and that base
// blocks are untouched. Throws VerificationError on the first violation.
template <typename T>
NonDisruptionReport verify_non_disruption(
    const Model<T>& base, const Model<T>& otter,
    const std::vector<std::vector<int>>& prompts, double tol);

struct ParamCount {
  std::int64_t base = 0;
  std::int64_t added_analytic = 0;
  std::int64_t added_enumerated = 0;
  std::int64_t allocated = 0;  // every stored element, zero blocks included
  double ratio = 0.0;          // (base + added) / base
};

template <typename T>
ParamCount count_params(const Model<T>& model);

// Closed-form counts from configuration alone.
std::int64_t analytic_base_count(const ModelConfig& config);
std::int64_t analytic_added_count(const ModelConfig& config,
                                  const std::vector<OtterConfig>& extensions,
                                  std::int64_t head_params);

struct ScaleReport {
  std::int64_t base = 0;
  std::int64_t total = 0;
  double reference_total = 8.51e9;
  double reference_base = 6.74e9;
};

// Counts for Llama-7b dimensions with a 256/512/16 extension and one
// reward head.
ScaleReport llama7b_report();

}  // namespace otter
