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

#include "otter/optimizer.h"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace otter {

template <typename T>
AdamW<T>::AdamW(AdamWConfig config) : config_(config) {
  if (!(config_.lr >= 0.0)) throw ConfigError("adamw: learning rate must be >= 0");
  if (config_.total_steps < 1) throw ConfigError("adamw: total_steps must be >= 1");
  if (!(config_.warmup_fraction >= 0.0 && config_.warmup_fraction <= 1.0)) {
    throw ConfigError("adamw: warm-up fraction must lie in [0, 1]");
  }
}

template <typename T>
double AdamW<T>::lr_at(int step) const {
  const int warmup =
      static_cast<int>(std::ceil(config_.warmup_fraction * config_.total_steps));
  if (warmup <= 0 || step >= warmup) return config_.lr;
  return config_.lr * static_cast<double>(step + 1) / warmup;
}

template <typename T>
void AdamW<T>::step(Model<T>& model, const Tape<T>& tape) {
  std::unordered_map<const Parameter<T>*, const Tensor<T>*> grads;
  for (const auto& [p, g] : tape.parameter_grads()) grads.emplace(p, g);
  const double lr = lr_at(step_);
  ++step_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, step_);
  const double c2 = 1.0 - std::pow(b2, step_);
  model.for_each_parameter([&](Parameter<T>& p) {
    auto it = grads.find(&p);
    if (it == grads.end()) return;
    const Tensor<T>& g = *it->second;
    Moments& s = state_[p.name];
    if (s.m.size() != p.value.size()) {
      s.m = Tensor<T>(p.value.shape());
      s.v = Tensor<T>(p.value.shape());
    }
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      if (!p.trainable[i]) continue;
      const double gi = g[i];
      const double m = b1 * s.m[i] + (1.0 - b1) * gi;
      const double v = b2 * s.v[i] + (1.0 - b2) * gi * gi;
      s.m[i] = static_cast<T>(m);
      s.v[i] = static_cast<T>(v);
      double w = p.value[i];
      w -= lr * config_.weight_decay * w;
      w -= lr * (m / c1) / (std::sqrt(v / c2) + config_.eps);
      p.value[i] = static_cast<T>(w);
    }
    p.rezero();
  });
}

template class AdamW<float>;
template class AdamW<double>;
template class AdamW<long double>;

}  // namespace otter
