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

#include "otter/metrics.h"

#include <algorithm>
#include <chrono>

#include "json.hpp"
#include "otter/heads.h"

namespace otter {

OverheadReport make_overhead_report(double time_ratio, double space_ratio,
                                    double accepted_length) {
  if (!(time_ratio > 0.0) || !(space_ratio > 0.0)) {
    throw MeasurementError("overhead ratios must be positive");
  }
  OverheadReport r;
  r.time_ratio = time_ratio;
  r.space_ratio = space_ratio;
  r.accepted_length = accepted_length;
  r.speedup = accepted_length / time_ratio;
  return r;
}

namespace {

struct Run {
  double seconds = 0.0;
  int passes = 0;
  double accepted = 0.0;
};

Run run_workload(const OtterModel& model, const DecodeParams& params,
                 const std::vector<std::vector<int>>& prompts) {
  Run run;
  double accepted_sum = 0.0;
  const auto start = std::chrono::steady_clock::now();
  for (const auto& p : prompts) {
    const DecodeResult r = decode(model, p, params);
    run.passes += r.forward_passes;
    accepted_sum += r.accepted.empty() ? 1.0 : r.average_accepted();
  }
  run.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  run.accepted = prompts.empty() ? 1.0 : accepted_sum / prompts.size();
  return run;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double param_bytes(const OtterModel& m) {
  return static_cast<double>(count_params(m).allocated) * sizeof(float);
}

}  // namespace

OverheadReport measure_overhead(const OtterModel& base, const DecodeParams& base_params,
                                const OtterModel& modified,
                                const DecodeParams& modified_params,
                                const std::vector<std::vector<int>>& prompts,
                                const OverheadOptions& options) {
  if (options.repetitions < 5) {
    throw MeasurementError("overhead: at least 5 timed repetitions are required");
  }
  if (prompts.empty()) throw InputError("overhead: empty workload");
  run_workload(base, base_params, prompts);
  run_workload(modified, modified_params, prompts);
  std::vector<double> tb, tm, ratios;
  double accepted = 1.0;
  // Interleave the two setups so drift in machine load affects both.
  for (int i = 0; i < options.repetitions; ++i) {
    const Run b = run_workload(base, base_params, prompts);
    const Run m = run_workload(modified, modified_params, prompts);
    tb.push_back(options.per_pass ? b.seconds / std::max(b.passes, 1) : b.seconds);
    tm.push_back(options.per_pass ? m.seconds / std::max(m.passes, 1) : m.seconds);
    if (tb.back() > 0.0) ratios.push_back(tm.back() / tb.back());
    accepted = m.accepted;
  }
  const double base_t = median(tb), mod_t = median(tm);
  if (!(base_t > 0.0) || ratios.empty()) {
    throw MeasurementError("overhead: base run took no measurable time");
  }
  // Each ratio pairs adjacent runs, so slow load drift cancels.
  OverheadReport r =
      make_overhead_report(median(ratios), param_bytes(modified) / param_bytes(base),
                           accepted);
  r.base_seconds = base_t;
  r.modified_seconds = mod_t;
  r.time_basis = options.per_pass ? "forward pass" : "workload";
  return r;
}

DistinctResult distinct_n(const std::vector<std::vector<int>>& texts, int n) {
  if (n < 1) throw ConfigError("distinct_n: n must be >= 1");
  DistinctResult out;
  double sum = 0.0;
  std::size_t counted = 0;
  const std::size_t un = static_cast<std::size_t>(n);
  for (const auto& t : texts) {
    if (t.size() < un) {
      ++out.excluded;
      continue;
    }
    std::set<std::vector<int>> grams;
    const std::size_t total = t.size() - un + 1;
    for (std::size_t i = 0; i < total; ++i) grams.emplace(t.begin() + i, t.begin() + i + un);
    sum += static_cast<double>(grams.size()) / static_cast<double>(total);
    ++counted;
  }
  out.score = counted == 0 ? 0.0 : sum / counted;
  return out;
}

double text_toxicity(const std::vector<int>& text, const std::set<int>& lexicon) {
  if (text.empty()) return 0.0;
  std::size_t hits = 0;
  for (int t : text) hits += lexicon.count(t);
  return static_cast<double>(hits) / static_cast<double>(text.size());
}

ToxicityResult toxicity_from_scores(const std::vector<std::vector<double>>& scores) {
  ToxicityResult r;
  if (scores.empty()) return r;
  for (const auto& per_prompt : scores) {
    double mx = 0.0;
    for (double s : per_prompt) mx = std::max(mx, s);
    r.avg_max += mx;
    if (mx > 0.5) r.prob_any += 1.0;
  }
  r.avg_max /= scores.size();
  r.prob_any /= scores.size();
  return r;
}

ToxicityResult lexicon_toxicity(const std::vector<std::vector<std::vector<int>>>& samples,
                                 const std::set<int>& lexicon) {
  if (lexicon.empty()) throw ConfigError("lexicon_toxicity: empty lexicon");
  std::vector<std::vector<double>> scores;
  for (const auto& per_prompt : samples) {
    std::vector<double> s;
    for (const auto& text : per_prompt) s.push_back(text_toxicity(text, lexicon));
    scores.push_back(std::move(s));
  }
  return toxicity_from_scores(scores);
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) throw InputError("mean: empty set");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double avg_reward(const OtterModel& model, int k,
                  const std::vector<std::vector<int>>& responses) {
  if (responses.empty()) throw InputError("avg_reward: empty response set");
  std::vector<double> r;
  for (const auto& seq : responses) r.push_back(sequence_reward(model, seq, k));
  return mean_of(r);
}

std::string to_json_line(const OverheadReport& r) {
  nlohmann::json j;
  j["time_ratio"] = r.time_ratio;
  j["space_ratio"] = r.space_ratio;
  j["accepted_length"] = r.accepted_length;
  j["speedup"] = r.speedup;
  j["base_seconds"] = r.base_seconds;
  j["modified_seconds"] = r.modified_seconds;
  j["time_basis"] = r.time_basis;
  j["space_basis"] = r.space_basis;
  return j.dump();
}

}  // namespace otter
