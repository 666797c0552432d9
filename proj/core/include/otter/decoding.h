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
#include <string>
#include <vector>

#include "otter/model.h"

namespace otter {

enum class Strategy {
  kGreedy,
  kTopK,
  kTopP,
  kArgsGreedy,
  kArgsTopK,
  kDexp,
  kDexpAnti,
  kSpeculative,
};

std::string to_string(Strategy s);
// Throws ConfigError on an unknown name.
Strategy parse_strategy(const std::string& name);

// How ARGS turns the base distribution into the LM term of a score.
enum class LmTerm { kProbability, kLogProbability };

struct DecodeParams {
  Strategy strategy = Strategy::kGreedy;
  int k = 10;
  double p = 0.9;
  double tau = 1.0;
  double w = 1.5;
  double alpha = 2.0;
  int max_new_tokens = 16;
  std::uint64_t seed = 0;
  LmTerm lm_term = LmTerm::kProbability;
  int reward_ext = 1;  // extension holding the reward head
  int expert_ext = 0;  // DEXP expert; 0 when absent
  int anti_ext = 0;    // DEXP anti-expert
  int draft_ext = 1;   // extension holding the draft heads

  // Throws ConfigError unless k >= 1, 0 < p <= 1, tau > 0, w >= 0, alpha >= 0.
  void validate() const;
};

struct CandidateScore {
  int token = 0;
  double lm = 0.0;      // LM term
  double reward = 0.0;  // sigmoid reward after appending the token
  double score = 0.0;
};

struct DecodeStep {
  int token = 0;
  std::vector<CandidateScore> candidates;  // ARGS only
};

struct DecodeResult {
  std::vector<int> tokens;  // continuation only
  std::vector<DecodeStep> steps;
  std::vector<int> accepted;  // speculative: tokens committed per iteration
  int forward_passes = 0;
  std::vector<std::string> warnings;

  double average_accepted() const;
};

// Greedy, top-k or top-p over the original-coordinate logits.
// Candidate score: LM term plus w times the sigmoid reward.
double args_score(double lm, double reward, double w);

DecodeResult decode_base(const OtterModel& model, const std::vector<int>& prompt,
                         const DecodeParams& params);

// Reward-guided search: the top-k candidates by logit are each scored by
// LM(v) + w * sigmoid(reward) with the candidate appended.
DecodeResult decode_args(const OtterModel& model, const std::vector<int>& prompt,
                         const DecodeParams& params);

// Expert mixing z + alpha (z+ - z-), or z + alpha (z - z-) for the anti-only
// form, followed by top-p sampling.
DecodeResult decode_dexp(const OtterModel& model, const std::vector<int>& prompt,
                         const DecodeParams& params);

// Draft-and-verify with exact greedy acceptance; the output equals greedy
// decoding of the base path.
DecodeResult decode_speculative(const OtterModel& model, const std::vector<int>& prompt,
                                const DecodeParams& params);

// Dispatches on params.strategy.
DecodeResult decode(const OtterModel& model, const std::vector<int>& prompt,
                    const DecodeParams& params);

// Mixed DEXP logits for one position. `expert` may be empty for the
// anti-only form.
std::vector<float> dexp_mix(std::span<const float> z, std::span<const float> expert,
                            std::span<const float> anti, double alpha);

// One line-delimited JSON record.
std::string to_json_line(const std::vector<int>& prompt, const DecodeResult& r);

}  // namespace otter
