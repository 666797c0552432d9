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

#include <span>
#include <string>
#include <vector>

#include "otter/autograd.h"
#include "otter/model.h"

namespace otter {

// Adds a zero-initialized reward head W_on [1, d_ext] owned by extension k.
template <typename T>
void attach_reward_head(Model<T>& model, int k, const std::string& name = "reward");

// Adds `count` zero-initialized generation heads W_hm [d_model, d_ext] owned
// by extension k. Head i (0-based) predicts `first_lookahead + i` positions
// past the next token: draft heads use first_lookahead = 1, expert heads a
// single head with first_lookahead = 0.
template <typename T>
void attach_generation_heads(Model<T>& model, int k, int count, int first_lookahead,
                             const std::string& name = "draft");

// Heads of extension k in attachment order.
template <typename T>
std::vector<const TaskHead<T>*> heads_of(const Model<T>& model, int k, HeadKind kind);

// Reward head of extension k; throws ConfigError when absent.
template <typename T>
const TaskHead<T>& reward_head(const Model<T>& model, int k);

// Extension-k columns H' of the final normed hidden state.
template <typename T>
Var<T> extension_hidden(const Model<T>& model, const ForwardTrace<T>& trace, int k);

// Pre-sigmoid reward W_on H' at the last position, as a [1, 1] value.
template <typename T>
Var<T> reward_logit(const Model<T>& model, const ForwardTrace<T>& trace,
                    const TaskHead<T>& head);

// lm_head(W_hm H' + H_o) at every position, [positions, vocab].
template <typename T>
Var<T> head_logits(const Model<T>& model, const ForwardTrace<T>& trace,
                   const TaskHead<T>& head);

// sigmoid(W_on . h_prime). Throws ConfigError on a width mismatch.
template <typename T>
T reward_score(std::span<const T> h_prime, const Tensor<T>& w_on);

// Reward of a full sequence under extension k's reward head.
template <typename T>
T sequence_reward(const Model<T>& model, std::span<const int> tokens, int k);

// softmax(lm_head(W_hm h_prime + h_o)) for each head.
template <typename T>
std::vector<Tensor<T>> draft_distributions(std::span<const T> h_prime,
                                           std::span<const T> h_o,
                                           const std::vector<const Tensor<T>*>& w_hm,
                                           const Tensor<T>& lm_head);

}  // namespace otter
