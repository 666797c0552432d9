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

#include "otter/grad_check.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace otter {
namespace {

template <typename T>
T evaluate(const std::function<Var<T>(Tape<T>&)>& loss) {
  Tape<T> tape(false);
  const Var<T> v = loss(tape);
  if (v.value().size() != 1) throw ConfigError("grad_check: loss must be scalar");
  return v.value()[0];
}

std::map<const Parameter<double>*, Tensor<double>> analytic_grads(const LossFn& loss) {
  const double f0 = evaluate(loss);
  if (evaluate(loss) != f0) {
    throw UnreliableOracleError("grad_check: loss function is not deterministic");
  }
  std::map<const Parameter<double>*, Tensor<double>> analytic;
  Tape<double> tape(true);
  const Var<double> v = loss(tape);
  tape.backward(v);
  for (const auto& [p, g] : tape.parameter_grads()) analytic.emplace(p, *g);
  return analytic;
}

// Compares analytic gradients of `params` with central differences of
// `numeric` taken on the matching coordinates of `probe`.
template <typename T>
GradCheckResult compare(const std::map<const Parameter<double>*, Tensor<double>>& analytic,
                        const std::vector<Parameter<double>*>& params,
                        const std::function<Var<T>(Tape<T>&)>& numeric,
                        const std::vector<Parameter<T>*>& probe, T step,
                        std::size_t max_coords_per_param, std::uint64_t seed) {
  if (!(step > 0)) throw ConfigError("grad_check: step must be positive");
  GradCheckResult result;
  std::mt19937_64 rng(seed);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter<double>* p = params[pi];
    Parameter<T>* q = probe[pi];
    std::vector<std::size_t> coords;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      if (i < p->trainable.size() && p->trainable[i]) {
        coords.push_back(i);
      } else {
        ++result.skipped_frozen;
      }
    }
    if (max_coords_per_param > 0 && coords.size() > max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    auto it = analytic.find(p);
    for (std::size_t i : coords) {
      const double a = it == analytic.end() ? 0.0 : it->second[i];
      const T saved = q->value[i];
      q->value[i] = saved + step;
      const T fp = evaluate(numeric);
      q->value[i] = saved - step;
      const T fm = evaluate(numeric);
      q->value[i] = saved;
      const double n = static_cast<double>((fp - fm) / (2 * step));
      const double denom = std::abs(a) + std::abs(n);
      if (denom > 1e-12) {
        result.max_rel_error = std::max(result.max_rel_error, std::abs(a - n) / denom);
        ++result.checked;
      }
    }
  }
  return result;
}

}  // namespace

GradCheckResult grad_check(const LossFn& loss, const std::vector<Parameter<double>*>& params,
                           double step, std::size_t max_coords_per_param,
                           std::uint64_t seed) {
  if (!(step > 0.0)) throw ConfigError("grad_check: step must be positive");
  const auto analytic = analytic_grads(loss);
  return compare<double>(analytic, params, loss, params, step, max_coords_per_param, seed);
}

GradCheckResult grad_check_extended(const LossFn& loss,
                                    const std::vector<Parameter<double>*>& params,
                                    const ExtendedLossFn& oracle,
                                    const std::vector<Parameter<long double>*>& oracle_params,
                                    long double step, std::size_t max_coords_per_param,
                                    std::uint64_t seed) {
  if (!(step > 0)) throw ConfigError("grad_check: step must be positive");
  if (oracle_params.size() != params.size()) {
    throw UnreliableOracleError("grad_check: oracle parameter list does not mirror params");
  }
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    const auto& a = params[pi]->value;
    const auto& b = oracle_params[pi]->value;
    if (a.shape() != b.shape() || params[pi]->trainable != oracle_params[pi]->trainable) {
      throw UnreliableOracleError("grad_check: oracle mirror differs for " + params[pi]->name);
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (static_cast<long double>(a[i]) != b[i]) {
        throw UnreliableOracleError("grad_check: oracle mirror differs for " + params[pi]->name);
      }
    }
  }
  const double f = evaluate(loss);
  const long double g = evaluate(oracle);
  if (std::abs(static_cast<long double>(f) - g) > 1e-9L * (1 + std::abs(g))) {
    throw UnreliableOracleError("grad_check: oracle loss does not match loss");
  }
  const auto analytic = analytic_grads(loss);
  return compare<long double>(analytic, params, oracle, oracle_params, step,
                              max_coords_per_param, seed);
}

}  // namespace otter
