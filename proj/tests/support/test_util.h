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

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "otter/model.h"
#include "otter/parameter.h"

namespace otter::testing {

// Free trainable parameter with no group partition.
template <typename T>
Parameter<T> free_param(const std::string& name, Shape shape, std::vector<T> values) {
  Parameter<T> p = make_parameter<T>(name, std::move(shape), {}, {});
  p.value = Tensor<T>(p.value.shape(), std::move(values));
  p.set_trainable_group(kBaseGroup);
  return p;
}

template <typename T>
Parameter<T> random_param(const std::string& name, Shape shape, std::mt19937_64& rng,
                          double stddev = 1.0) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<T> values(shape_size(shape));
  for (T& v : values) v = static_cast<T>(dist(rng));
  return free_param<T>(name, std::move(shape), std::move(values));
}

inline ModelConfig tiny_config(int layers = 2) {
  ModelConfig c;
  c.vocab_size = 16;
  c.d_model = 8;
  c.d_inner = 16;
  c.n_layers = layers;
  c.n_heads = 2;
  c.head_dim = 4;
  c.max_seq_len = 32;
  return c;
}

// The 4-layer configuration used by the non-disruption checks.
inline ModelConfig small_config() {
  ModelConfig c;
  c.vocab_size = 64;
  c.d_model = 32;
  c.d_inner = 64;
  c.n_layers = 4;
  c.n_heads = 4;
  c.head_dim = 8;
  c.max_seq_len = 64;
  return c;
}

inline std::vector<std::vector<int>> random_prompts(int count, int vocab, int max_len,
                                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<int>> out;
  for (int i = 0; i < count; ++i) {
    const int len = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_len));
    std::vector<int> p;
    for (int j = 0; j < len; ++j) p.push_back(static_cast<int>(rng() % vocab));
    out.push_back(std::move(p));
  }
  return out;
}

// Gives every element of `p` a fresh N(0, stddev) value, including blocks
// that start at zero; structural zeros are restored afterwards.
template <typename T>
void randomize(Parameter<T>& p, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (T& v : p.value.storage()) v = static_cast<T>(dist(rng));
  p.rezero();
}

}  // namespace otter::testing
