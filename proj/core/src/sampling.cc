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

#include "otter/sampling.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "otter/errors.h"

namespace otter {

std::size_t argmax(std::span<const float> x) {
  if (x.empty()) throw InputError("argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (x[i] > x[best]) best = i;
  }
  return best;
}

std::vector<std::size_t> top_k_indices(std::span<const float> x, std::size_t k) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<long>(k), idx.end(),
                    [&x](std::size_t a, std::size_t b) {
                      return x[a] > x[b] || (x[a] == x[b] && a < b);
                    });
  idx.resize(k);
  return idx;
}

std::vector<double> softmax(std::span<const float> x, double tau) {
  if (x.empty()) throw InputError("softmax: empty input");
  if (!(tau > 0.0)) throw ConfigError("softmax: temperature must be positive");
  double mx = -std::numeric_limits<double>::infinity();
  for (float v : x) {
    if (!std::isfinite(v)) throw NumericError("softmax: non-finite logit");
    mx = std::max(mx, static_cast<double>(v) / tau);
  }
  std::vector<double> out(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(static_cast<double>(x[i]) / tau - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

std::vector<double> log_softmax(std::span<const float> x) {
  if (x.empty()) throw InputError("log_softmax: empty input");
  double mx = -std::numeric_limits<double>::infinity();
  for (float v : x) mx = std::max(mx, static_cast<double>(v));
  double sum = 0.0;
  for (float v : x) sum += std::exp(static_cast<double>(v) - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<double>(x[i]) - lse;
  return out;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t sample_index(std::span<const double> weights, std::mt19937_64& rng) {
  if (weights.empty()) throw InputError("sample_index: no candidates");
  double total = 0.0;
  for (double w : weights) total += w;
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  // Rounding can leave u just above the running sum; take the last
  // candidate with positive weight.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

std::size_t sample_scores(std::span<const double> scores, double tau,
                          std::mt19937_64& rng) {
  if (!(tau > 0.0)) throw ConfigError("sampling: temperature must be positive");
  double mx = -std::numeric_limits<double>::infinity();
  for (double s : scores) mx = std::max(mx, s / tau);
  std::vector<double> w(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) w[i] = std::exp(scores[i] / tau - mx);
  return sample_index(w, rng);
}

std::size_t sample_top_k(std::span<const float> logits, std::size_t k, double tau,
                         std::mt19937_64& rng) {
  const std::vector<std::size_t> cand = top_k_indices(logits, k);
  const std::vector<double> lp = log_softmax(logits);
  std::vector<double> scores(cand.size());
  for (std::size_t i = 0; i < cand.size(); ++i) scores[i] = lp[cand[i]];
  return cand[sample_scores(scores, tau, rng)];
}

std::vector<std::size_t> nucleus(std::span<const double> probs, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("top-p: p must lie in (0, 1]");
  std::vector<std::size_t> idx(probs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&probs](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  if (p >= 1.0) return idx;
  double mass = 0.0;
  std::size_t n = 0;
  while (n < idx.size()) {
    mass += probs[idx[n]];
    ++n;
    if (mass >= p) break;
  }
  idx.resize(n);
  return idx;
}

std::size_t sample_top_p(std::span<const float> logits, double p, double tau,
                         std::mt19937_64& rng) {
  const std::vector<double> probs = softmax(logits, tau);
  const std::vector<std::size_t> keep = nucleus(probs, p);
  std::vector<double> w(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) w[i] = probs[keep[i]];
  return keep[sample_index(w, rng)];
}

}  // namespace otter
