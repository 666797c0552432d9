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
#include <random>
#include <span>
#include <vector>

namespace otter {

// Index of the largest value; ties go to the lowest index.
std::size_t argmax(std::span<const float> x);

// Indices of the k largest values, ordered by value descending and index
// ascending among equal values. k is clipped to the input length.
std::vector<std::size_t> top_k_indices(std::span<const float> x, std::size_t k);

// Numerically stable softmax of a vector, computed in double.
std::vector<double> softmax(std::span<const float> x, double tau = 1.0);
std::vector<double> log_softmax(std::span<const float> x);

// Uniform draw in [0, 1) from the top 53 bits of the generator, identical
// on every platform.
double uniform01(std::mt19937_64& rng);

// Draws index i with probability weights[i] / sum(weights).
std::size_t sample_index(std::span<const double> weights, std::mt19937_64& rng);

// Draws from softmax(scores / tau). Used for top-k over candidate scores.
std::size_t sample_scores(std::span<const double> scores, double tau,
                          std::mt19937_64& rng);

// Top-k sampling: candidates are the top-k logits, scored by log-softmax and
// drawn from softmax(score / tau).
std::size_t sample_top_k(std::span<const float> logits, std::size_t k, double tau,
                         std::mt19937_64& rng);

// Nucleus sampling over softmax(logits / tau): the smallest prefix of the
// sorted distribution whose mass reaches p, renormalized.
std::size_t sample_top_p(std::span<const float> logits, double p, double tau,
                         std::mt19937_64& rng);

// The nucleus itself, highest probability first.
std::vector<std::size_t> nucleus(std::span<const double> probs, double p);

}  // namespace otter
