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

#include "otter/heads.h"

#include <cmath>
#include <string>

namespace otter {

template <typename T>
void attach_reward_head(Model<T>& model, int k, const std::string& name) {
  const std::size_t de = model.ext_width(k);
  TaskHead<T> h;
  h.name = name;
  h.kind = HeadKind::kReward;
  h.extension = k;
  h.weight = make_parameter<T>("heads." + name + ".w_on", {1, de}, {}, {}, k);
  h.weight.set_trainable_group(model.trainable_group);
  model.heads.push_back(std::move(h));
}

template <typename T>
void attach_generation_heads(Model<T>& model, int k, int count, int first_lookahead,
                             const std::string& name) {
  if (count < 1) throw ConfigError("generation heads: count must be >= 1");
  if (first_lookahead < 0) throw ConfigError("generation heads: negative lookahead");
  const std::size_t de = model.ext_width(k);
  const std::size_t d = model.config.d_model;
  for (int i = 0; i < count; ++i) {
    TaskHead<T> h;
    h.name = count == 1 ? name : name + "." + std::to_string(i);
    h.kind = HeadKind::kGeneration;
    h.extension = k;
    h.lookahead = first_lookahead + i;
    h.weight = make_parameter<T>("heads." + h.name + ".w_hm", {d, de}, {}, {}, k);
    h.weight.set_trainable_group(model.trainable_group);
    model.heads.push_back(std::move(h));
  }
}

template <typename T>
std::vector<const TaskHead<T>*> heads_of(const Model<T>& model, int k, HeadKind kind) {
  std::vector<const TaskHead<T>*> out;
  for (const auto& h : model.heads) {
    if (h.extension == k && h.kind == kind) out.push_back(&h);
  }
  return out;
}

template <typename T>
const TaskHead<T>& reward_head(const Model<T>& model, int k) {
  auto hs = heads_of(model, k, HeadKind::kReward);
  if (hs.empty()) {
    throw ConfigError("extension " + std::to_string(k) + " has no reward head");
  }
  return *hs.front();
}

template <typename T>
Var<T> extension_hidden(const Model<T>& model, const ForwardTrace<T>& trace, int k) {
  const std::size_t off = model.ext_offset(k);
  return ops::slice_cols(trace.final_hidden, off, off + model.ext_width(k));
}

template <typename T>
Var<T> reward_logit(const Model<T>& model, const ForwardTrace<T>& trace,
                    const TaskHead<T>& head) {
  Tape<T>& tape = *trace.final_hidden.tape;
  const std::size_t last = trace.final_hidden.value().rows() - 1;
  Var<T> h = ops::take_row(extension_hidden(model, trace, head.extension), last);
  return ops::linear(h, tape.parameter(head.weight));
}

template <typename T>
Var<T> head_logits(const Model<T>& model, const ForwardTrace<T>& trace,
                   const TaskHead<T>& head) {
  Tape<T>& tape = *trace.final_hidden.tape;
  Var<T> h_prime = extension_hidden(model, trace, head.extension);
  Var<T> h_o = ops::slice_cols(trace.final_hidden, 0, model.config.d_model);
  Var<T> h_m = ops::linear(h_prime, tape.parameter(head.weight));
  return ops::linear(ops::add(h_m, h_o), tape.parameter(model.weights.lm_head));
}

template <typename T>
T reward_score(std::span<const T> h_prime, const Tensor<T>& w_on) {
  if (w_on.size() != h_prime.size()) {
    throw ConfigError("reward_score: H' width " + std::to_string(h_prime.size()) +
                      " does not match head width " + std::to_string(w_on.size()));
  }
  T z = T(0);
  for (std::size_t i = 0; i < h_prime.size(); ++i) z += w_on[i] * h_prime[i];
  return z >= T(0) ? T(1) / (T(1) + std::exp(-z)) : std::exp(z) / (T(1) + std::exp(z));
}

template <typename T>
T sequence_reward(const Model<T>& model, std::span<const int> tokens, int k) {
  const TaskHead<T>& head = reward_head(model, k);
  Tape<T> tape(false);
  const ForwardTrace<T> trace = model.forward(tape, tokens);
  const Tensor<T>& hidden = trace.final_hidden.value();
  const std::size_t off = model.ext_offset(k);
  std::span<const T> row = hidden.row(hidden.rows() - 1);
  return reward_score<T>(row.subspan(off, model.ext_width(k)), head.weight.value);
}

template <typename T>
std::vector<Tensor<T>> draft_distributions(std::span<const T> h_prime,
                                           std::span<const T> h_o,
                                           const std::vector<const Tensor<T>*>& w_hm,
                                           const Tensor<T>& lm_head) {
  const std::size_t d = h_o.size(), de = h_prime.size();
  if (lm_head.cols() != d) throw ConfigError("draft_distributions: lm_head width mismatch");
  std::vector<Tensor<T>> out;
  for (const Tensor<T>* w : w_hm) {
    if (w->rows() != d || w->cols() != de) {
      throw ConfigError("draft_distributions: W_hm must be [d_model, d_ext]");
    }
    Tape<T> tape(false);
    Var<T> hp = tape.constant(Tensor<T>({1, de}, std::vector<T>(h_prime.begin(), h_prime.end())));
    Var<T> ho = tape.constant(Tensor<T>({1, d}, std::vector<T>(h_o.begin(), h_o.end())));
    Var<T> hm = ops::linear(hp, tape.constant(*w));
    Var<T> logits = ops::linear(ops::add(hm, ho), tape.constant(lm_head));
    out.push_back(softmax(logits.value(), 1));
  }
  return out;
}

#define OTTER_INSTANTIATE_HEADS(T)                                                   \
  template void attach_reward_head(Model<T>&, int, const std::string&);              \
  template void attach_generation_heads(Model<T>&, int, int, int, const std::string&); \
  template std::vector<const TaskHead<T>*> heads_of(const Model<T>&, int, HeadKind); \
  template const TaskHead<T>& reward_head(const Model<T>&, int);                     \
  template Var<T> extension_hidden(const Model<T>&, const ForwardTrace<T>&, int);    \
  template Var<T> reward_logit(const Model<T>&, const ForwardTrace<T>&,              \
                               const TaskHead<T>&);                                  \
  template Var<T> head_logits(const Model<T>&, const ForwardTrace<T>&,               \
                              const TaskHead<T>&);                                   \
  template T reward_score(std::span<const T>, const Tensor<T>&);                     \
  template T sequence_reward(const Model<T>&, std::span<const int>, int);            \
  template std::vector<Tensor<T>> draft_distributions(                               \
      std::span<const T>, std::span<const T>, const std::vector<const Tensor<T>*>&,  \
      const Tensor<T>&);

OTTER_INSTANTIATE_HEADS(float)
OTTER_INSTANTIATE_HEADS(double)
OTTER_INSTANTIATE_HEADS(long double)
#undef OTTER_INSTANTIATE_HEADS

}  // namespace otter
