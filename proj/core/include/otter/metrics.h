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

#include <set>
#include <string>
#include <vector>

#include "otter/decoding.h"
#include "otter/model.h"

namespace otter {

// Time and space cost of a modified decoding setup relative to the base.
// Space is the ratio of allocated parameter bytes, a stand-in for device
// memory.
struct OverheadReport {
  double time_ratio = 1.0;
  double space_ratio = 1.0;
  double accepted_length = 1.0;
  double speedup = 1.0;
  double base_seconds = 0.0;      // median workload (or per-pass) time
  double modified_seconds = 0.0;
  std::string time_basis = "workload";
  std::string space_basis = "parameter bytes";
};

// Fills in speedup = accepted_length / time_ratio. Throws MeasurementError
// unless both ratios are positive.
OverheadReport make_overhead_report(double time_ratio, double space_ratio,
                                    double accepted_length);

struct OverheadOptions {
  int repetitions = 5;  // timed runs after one warm-up
  // Compare time per forward pass instead of per workload (speculative
  // decoding, where the pass count differs by design).
  bool per_pass = false;
};

// Runs the same prompts through both setups and reports median timing
// ratios. Throws MeasurementError when the base run takes no measurable
// time or fewer than 5 repetitions are requested.
OverheadReport measure_overhead(const OtterModel& base, const DecodeParams& base_params,
                                const OtterModel& modified,
                                const DecodeParams& modified_params,
                                const std::vector<std::vector<int>>& prompts,
                                const OverheadOptions& options = {});

struct DistinctResult {
  double score = 0.0;
  std::size_t excluded = 0;  // texts shorter than n
};

// Mean over texts of unique n-grams / total n-grams.
DistinctResult distinct_n(const std::vector<std::vector<int>>& texts, int n);

// Fraction of tokens that belong to the lexicon.
double text_toxicity(const std::vector<int>& text, const std::set<int>& lexicon);

struct ToxicityResult {
  double avg_max = 0.0;   // mean over prompts of the max over samples
  double prob_any = 0.0;  // fraction of prompts with a sample above 0.5
};

// `samples[i]` holds the generations for prompt i. Throws ConfigError on an
// empty lexicon.
ToxicityResult lexicon_toxicity(const std::vector<std::vector<std::vector<int>>>& samples,
                                 const std::set<int>& lexicon);
ToxicityResult toxicity_from_scores(const std::vector<std::vector<double>>& scores);

// Mean reward of extension k's reward head over full sequences. Throws
// InputError on an empty set.
double avg_reward(const OtterModel& model, int k,
                  const std::vector<std::vector<int>>& responses);
double mean_of(const std::vector<double>& values);

std::string to_json_line(const OverheadReport& r);

}  // namespace otter
