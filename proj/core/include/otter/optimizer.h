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

#include <map>
#include <string>

#include "otter/autograd.h"
#include "otter/model.h"

namespace otter {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  double warmup_fraction = 0.01;
  int total_steps = 1;
};

// Adaptive-moment optimizer with decoupled weight decay and a linear
// learning-rate warm-up. Only coordinates whose trainable flag is set are
// touched; structural zeros are rewritten to zero after every update.
template <typename T>
class AdamW {
 public:
  explicit AdamW(AdamWConfig config);

  const AdamWConfig& config() const { return config_; }
  int steps_taken() const { return step_; }
  double lr_at(int step) const;

  // Applies one update from the gradients recorded on `tape`.
  void step(Model<T>& model, const Tape<T>& tape);

 private:
  struct Moments {
    Tensor<T> m;
    Tensor<T> v;
  };

  AdamWConfig config_;
  int step_ = 0;
  std::map<std::string, Moments> state_;
};

}  // namespace otter
