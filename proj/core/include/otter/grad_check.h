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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "otter/autograd.h"
#include "otter/parameter.h"

namespace otter {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;         // coordinates compared
  std::size_t skipped_frozen = 0;  // coordinates excluded by the freeze mask
};

using LossFn = std::function<Var<double>(Tape<double>&)>;

// Compares reverse-mode gradients of `loss` with central differences
// (f(x + step) - f(x - step)) / (2 step) on every trainable coordinate of
// `params`. Relative error is |a - n| / (|a| + |n|), taken over coordinates
// with |a| + |n| > 1e-12. When `max_coords_per_param` is nonzero a seeded
// subset of each parameter's coordinates is checked. Throws
// UnreliableOracleError when two evaluations of `loss` disagree.
GradCheckResult grad_check(const LossFn& loss, const std::vector<Parameter<double>*>& params,
                           double step, std::size_t max_coords_per_param = 0,
                           std::uint64_t seed = 0);

using ExtendedLossFn = std::function<Var<long double>(Tape<long double>&)>;

// Same comparison, but the central differences are taken on `oracle`, an
// extended-precision twin of `loss` whose parameters `oracle_params` mirror
// `params` element for element. Analytic gradients still come from `loss`.
// Double rounding of the loss caps ordinary central differences at roughly
// ulp(f) / step absolute error, which swamps coordinates whose gradient is
// below about 1e-5; the wider mantissa moves that floor down by three orders
// of magnitude. Throws UnreliableOracleError when the mirrors disagree.
GradCheckResult grad_check_extended(const LossFn& loss,
                                    const std::vector<Parameter<double>*>& params,
                                    const ExtendedLossFn& oracle,
                                    const std::vector<Parameter<long double>*>& oracle_params,
                                    long double step, std::size_t max_coords_per_param = 0,
                                    std::uint64_t seed = 0);

}  // namespace otter
