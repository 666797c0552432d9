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
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "otter/autograd.h"
#include "otter/model.h"
#include "otter/optimizer.h"

namespace otter {

struct TrainConfig {
  int steps = 200;
  double lr = 3e-3;
  double warmup_fraction = 0.01;
  double reg_lambda = 5.0;
  int batch_size = 4;
  std::uint64_t seed = 0;
  double medusa_c = 0.8;  // head k is weighted by c^k
  int K = 4;
  double weight_decay = 0.0;

  // Throws ConfigError unless lambda >= 0, 0 < c <= 1 and sizes are positive.
  void validate() const;
};

// Sum over normalization sites of the squared gap between the RMS of the
// original coordinates and the RMS of the full hidden state, each site
// averaged over positions. Throws ConfigError for a trace without
// extension coordinates.
template <typename T>
Var<T> reg_loss(const ForwardTrace<T>& trace, std::size_t d_model, T eps);

template <typename T>
T total_loss(T task_loss, T reg, T lambda) {
  return task_loss + lambda * reg;
}

// -log sigmoid(s_chosen - s_rejected) from two pre-sigmoid reward logits.
template <typename T>
Var<T> pairwise_reward_loss(Var<T> s_chosen, Var<T> s_rejected);

// Weight of draft head k (1-based): c^k.
double medusa_weight(int k, double c);

// Sum over heads of c^k * loss_k for per-head losses listed from k = 1.
double medusa_combine(std::span<const double> head_losses, double c);


template <typename T>
struct TaskLoss {
  Var<T> task;
  Var<T> reg;
};

// Bradley-Terry loss of extension k's reward head on one preference pair.
template <typename T>
TaskLoss<T> reward_loss(Tape<T>& tape, const Model<T>& model, int k,
                        std::span<const int> chosen, std::span<const int> rejected);

// Next-token cross-entropy of extension k's single generation head.
template <typename T>
TaskLoss<T> expert_lm_loss(Tape<T>& tape, const Model<T>& model, int k,
                           std::span<const int> tokens);

// Sum over extension k's draft heads of c^lookahead times the cross-entropy
// against the token lookahead + 1 positions ahead. Positions without a
// target are left out of that head's mean; a head with no target at all
// raises InputError.
template <typename T>
TaskLoss<T> medusa_loss(Tape<T>& tape, const Model<T>& model, int k,
                        std::span<const int> tokens, double c);

// Plain next-token cross-entropy of the base path (base pre-training).
template <typename T>
Var<T> lm_loss(Tape<T>& tape, const Model<T>& model, std::span<const int> tokens);

struct StepRecord {
  int step = 0;
  std::string task;
  double task_loss = 0.0;
  double reg = 0.0;
  double total = 0.0;
  double wall_ms = 0.0;
};

// Builds the loss of example `i` of the current batch on `tape`.
template <typename T>
using ExampleLoss = std::function<TaskLoss<T>(Tape<T>&, const Model<T>&, std::size_t)>;

// One optimizer step over `batch` examples: mean of task + lambda * reg.
// Requires at least one trainable parameter. Non-finite values abort with
// a NumericError naming the step.
template <typename T>
StepRecord train_step(Model<T>& model, AdamW<T>& opt, const ExampleLoss<T>& loss,
                      const std::vector<std::size_t>& batch, double lambda,
                      const std::string& task);

// Writes one JSON object per line.
void write_metrics(std::ostream& out, const StepRecord& r);

}  // namespace otter
