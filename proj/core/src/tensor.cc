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

#include "otter/tensor.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace otter {

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw ConfigError("softmax: axis " + std::to_string(axis) +
                      " invalid for shape " + shape_string(x.shape()));
  }
  if (!x.all_finite()) throw NumericError("softmax: non-finite input");
  const Shape& s = x.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t n = s[axis];
  Tensor<T> out(s);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t j = 0; j < inner; ++j) {
      auto idx = [&](std::size_t i) { return (o * n + i) * inner + j; };
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, x[idx(i)]);
      T denom = T(0);
      for (std::size_t i = 0; i < n; ++i) {
        out[idx(i)] = std::exp(x[idx(i)] - mx);
        denom += out[idx(i)];
      }
      for (std::size_t i = 0; i < n; ++i) out[idx(i)] /= denom;
    }
  }
  return out;
}

template <typename T>
Tensor<T> rms(const Tensor<T>& x, std::size_t over_dims, T eps) {
  if (over_dims == 0 || over_dims > x.cols()) {
    throw ConfigError("rms: over_dims " + std::to_string(over_dims) +
                      " outside (0, " + std::to_string(x.cols()) + "]");
  }
  if (!(eps >= T(0))) throw ConfigError("rms: eps must be non-negative");
  Shape out_shape(x.shape().begin(), x.shape().end() - 1);
  if (out_shape.empty()) out_shape = {1};
  Tensor<T> out(out_shape);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    T sum_sq = T(0);
    for (std::size_t i = 0; i < over_dims; ++i) sum_sq += row[i] * row[i];
    out[r] = std::sqrt(sum_sq / static_cast<T>(over_dims) + eps);
  }
  return out;
}

template <typename T>
T cross_entropy(const Tensor<T>& logits, std::span<const int> targets) {
  if (targets.size() != logits.rows()) {
    throw InputError("cross_entropy: target count does not match positions");
  }
  const std::size_t vocab = logits.cols();
  T total = T(0);
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= vocab) {
      throw InputError("cross_entropy: target " + std::to_string(targets[r]) +
                       " outside vocabulary of " + std::to_string(vocab));
    }
    const auto row = logits.row(r);
    const T mx = *std::max_element(row.begin(), row.end());
    T denom = T(0);
    for (T v : row) denom += std::exp(v - mx);
    total += -(row[targets[r]] - mx - std::log(denom));
  }
  return total / static_cast<T>(logits.rows());
}

template Tensor<float> softmax(const Tensor<float>&, std::size_t);
template Tensor<double> softmax(const Tensor<double>&, std::size_t);
template Tensor<float> rms(const Tensor<float>&, std::size_t, float);
template Tensor<double> rms(const Tensor<double>&, std::size_t, double);
template float cross_entropy(const Tensor<float>&, std::span<const int>);
template double cross_entropy(const Tensor<double>&, std::span<const int>);
template Tensor<long double> softmax(const Tensor<long double>&, std::size_t);
template Tensor<long double> rms(const Tensor<long double>&, std::size_t, long double);
template long double cross_entropy(const Tensor<long double>&, std::span<const int>);

}  // namespace otter
