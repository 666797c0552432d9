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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "json.hpp"
#include "otter/decoding.h"
#include "otter/heads.h"
#include "otter/recipes.h"
#include "otter/sampling.h"
#include "test_util.h"

namespace otter {
namespace {

OtterConfig ext_config() {
  OtterConfig e;
  e.d_ext = 4;
  e.d_inner_ext = 8;
  e.n_ext_heads = 1;
  return e;
}

// Base model with extension 1 carrying a reward head and three draft heads,
// and extensions 2 and 3 carrying one lookahead-0 head each.
OtterModel decoding_model(std::uint64_t seed = 7) {
  auto m = make_base_model<float>(testing::tiny_config(), seed);
  const int r = insert_extension(m, ext_config(), seed + 1);
  attach_reward_head(m, r);
  attach_generation_heads(m, r, 3, 1);
  const int pos = insert_extension(m, ext_config(), seed + 2);
  attach_generation_heads(m, pos, 1, 0, "expert");
  const int neg = insert_extension(m, ext_config(), seed + 3);
  attach_generation_heads(m, neg, 1, 0, "anti");
  m.freeze();
  return m;
}

void randomize_heads(OtterModel& m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& h : m.heads) testing::randomize(h.weight, rng, 1.0);
}

DecodeParams params(Strategy s, std::uint64_t seed = 3) {
  DecodeParams p;
  p.strategy = s;
  p.seed = seed;
  p.max_new_tokens = 12;
  p.k = 5;
  p.p = 0.9;
  p.reward_ext = 1;
  p.draft_ext = 1;
  p.expert_ext = 2;
  p.anti_ext = 3;
  return p;
}

std::vector<std::vector<int>> prompts(std::size_t n = 20) {
  return testing::random_prompts(n, 16, 6, 11);
}

TEST(Args, HandScores) {
  const double s0 = args_score(0.2, 0.9, 1.5);
  const double s1 = args_score(0.5, 0.1, 1.5);
  EXPECT_NEAR(s0, 1.55, 1e-15);
  EXPECT_NEAR(s1, 0.65, 1e-15);
  EXPECT_GT(s0, s1);
}

TEST(Args, DefaultsFromPublishedSettings) {
  const DecodeParams p;
  EXPECT_EQ(p.w, 1.5);
  EXPECT_EQ(p.alpha, 2.0);
}

TEST(Args, ZeroWeightGreedyEqualsBase) {
  auto m = decoding_model();
  randomize_heads(m, 1);
  for (LmTerm term : {LmTerm::kProbability, LmTerm::kLogProbability}) {
    for (const auto& pr : prompts()) {
      auto a = params(Strategy::kArgsGreedy);
      a.w = 0.0;
      a.lm_term = term;
      EXPECT_EQ(decode(m, pr, a).tokens, decode(m, pr, params(Strategy::kGreedy)).tokens);
    }
  }
}

TEST(Args, ZeroWeightTopKEqualsBaseInLogMode) {
  auto m = decoding_model();
  randomize_heads(m, 2);
  for (const auto& pr : prompts()) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      auto a = params(Strategy::kArgsTopK, seed);
      a.w = 0.0;
      a.lm_term = LmTerm::kLogProbability;
      EXPECT_EQ(decode(m, pr, a).tokens, decode(m, pr, params(Strategy::kTopK, seed)).tokens);
    }
  }
}

TEST(Args, CandidatesAreTopKAndPickIsBestScore) {
  auto m = decoding_model();
  randomize_heads(m, 3);
  const std::vector<int> pr{1, 2, 3};
  const auto r = decode(m, pr, params(Strategy::kArgsGreedy));
  ASSERT_EQ(r.steps.size(), 12u);
  std::vector<int> seq = pr;
  for (const auto& step : r.steps) {
    const auto logits = m.logits(seq);
    const auto row = logits.row(logits.rows() - 1);
    const auto top = top_k_indices(std::vector<float>(row.begin(), row.end()), 5);
    ASSERT_EQ(step.candidates.size(), 5u);
    double best = -1e300;
    int best_tok = -1;
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(step.candidates[i].token, static_cast<int>(top[i]));
      EXPECT_GT(step.candidates[i].reward, 0.0);
      EXPECT_LT(step.candidates[i].reward, 1.0);
      if (step.candidates[i].score > best) {
        best = step.candidates[i].score;
        best_tok = step.candidates[i].token;
      }
    }
    EXPECT_EQ(step.token, best_tok);
    seq.push_back(step.token);
  }
}

TEST(Args, OversizedKIsClippedWithWarning) {
  auto m = decoding_model();
  auto a = params(Strategy::kArgsGreedy);
  a.k = 1000;
  a.max_new_tokens = 2;
  const auto r = decode(m, {1, 2}, a);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_EQ(r.steps[0].candidates.size(), 16u);
}

TEST(Args, MissingRewardHeadIsConfigError) {
  auto m = make_base_model<float>(testing::tiny_config(), 1);
  EXPECT_THROW(decode(m, {1}, params(Strategy::kArgsGreedy)), ConfigError);
}

TEST(Dexp, ZeroAlphaEqualsBaseTopP) {
  auto m = decoding_model();
  randomize_heads(m, 4);
  for (Strategy s : {Strategy::kDexp, Strategy::kDexpAnti}) {
    for (const auto& pr : prompts()) {
      auto d = params(s, 9);
      d.alpha = 0.0;
      EXPECT_EQ(decode(m, pr, d).tokens, decode(m, pr, params(Strategy::kTopP, 9)).tokens);
    }
  }
}

TEST(Dexp, IdenticalLogitsEqualBaseForAnyAlpha) {
  // Zero-initialized heads reproduce the base logits exactly.
  const auto m = decoding_model();
  for (Strategy s : {Strategy::kDexp, Strategy::kDexpAnti}) {
    for (double alpha : {0.5, 2.0}) {
      for (const auto& pr : prompts()) {
        auto d = params(s, 5);
        d.alpha = alpha;
        EXPECT_EQ(decode(m, pr, d).tokens, decode(m, pr, params(Strategy::kTopP, 5)).tokens);
      }
    }
  }
}

TEST(Dexp, MixFormulas) {
  std::mt19937_64 rng(6);
  std::normal_distribution<float> nd;
  std::vector<float> z(32), zp(32), zm(32);
  for (std::size_t i = 0; i < 32; ++i) {
    z[i] = nd(rng);
    zp[i] = nd(rng);
    zm[i] = nd(rng);
  }
  const auto mixed = dexp_mix(z, zp, zm, 2.0);
  const auto anti = dexp_mix(z, {}, zm, 2.0);
  for (std::size_t i = 0; i < 32; ++i) {
    EXPECT_NEAR(mixed[i], z[i] + 2.0 * (zp[i] - zm[i]), 1e-5);
    EXPECT_NEAR(anti[i], 3.0 * z[i] - 2.0 * zm[i], 1e-5);
  }
  double total = 0.0;
  for (double p : softmax(mixed)) total += p;
  EXPECT_NEAR(total, 1.0, 1e-6);
  EXPECT_EQ(dexp_mix(z, z, z, 2.0), z);
}

TEST(Dexp, MissingExtensionIsConfigError) {
  auto m = decoding_model();
  auto d = params(Strategy::kDexp);
  d.expert_ext = 9;
  EXPECT_THROW(decode(m, {1}, d), ConfigError);
  d = params(Strategy::kDexpAnti);
  d.anti_ext = 0;
  EXPECT_THROW(decode(m, {1}, d), ConfigError);
}

TEST(Speculative, EqualsGreedyWhateverTheHeads) {
  for (bool trained : {false, true}) {
    auto m = decoding_model();
    if (trained) randomize_heads(m, 5);
    for (const auto& pr : prompts()) {
      const auto s = decode(m, pr, params(Strategy::kSpeculative));
      const auto g = decode(m, pr, params(Strategy::kGreedy));
      EXPECT_EQ(s.tokens, g.tokens);
      EXPECT_LE(s.forward_passes, g.forward_passes);
      int total = 0;
      for (int a : s.accepted) {
        EXPECT_GE(a, 1);
        EXPECT_LE(a, 4);
        total += a;
      }
      EXPECT_EQ(total, 12);
      EXPECT_GE(s.average_accepted(), 1.0);
    }
  }
}

TEST(Speculative, MissingHeadsIsConfigError) {
  auto m = make_base_model<float>(testing::tiny_config(), 1);
  insert_extension(m, ext_config(), 2);
  EXPECT_THROW(decode(m, {1}, params(Strategy::kSpeculative)), ConfigError);
}

TEST(Base, TopKOfOneIsGreedy) {
  const auto m = decoding_model();
  for (const auto& pr : prompts()) {
    auto t = params(Strategy::kTopK, 17);
    t.k = 1;
    EXPECT_EQ(decode(m, pr, t).tokens, decode(m, pr, params(Strategy::kGreedy)).tokens);
  }
}

TEST(Base, SameSeedSameOutput) {
  const auto m = decoding_model();
  for (Strategy s : {Strategy::kTopK, Strategy::kTopP}) {
    const auto a = decode(m, {1, 2, 3}, params(s, 42));
    const auto b = decode(m, {1, 2, 3}, params(s, 42));
    EXPECT_EQ(a.tokens, b.tokens);
  }
}

TEST(Base, ZeroNewTokens) {
  const auto m = decoding_model();
  for (Strategy s : {Strategy::kGreedy, Strategy::kTopP, Strategy::kArgsGreedy,
                     Strategy::kDexp, Strategy::kSpeculative}) {
    auto p = params(s);
    p.max_new_tokens = 0;
    EXPECT_TRUE(decode(m, {1, 2}, p).tokens.empty()) << to_string(s);
  }
}

TEST(Base, RequestErrors) {
  const auto m = decoding_model();
  EXPECT_THROW(decode(m, {}, params(Strategy::kGreedy)), InputError);
  auto p = params(Strategy::kGreedy);
  p.max_new_tokens = 40;
  EXPECT_THROW(decode(m, {1}, p), InputError);
}

TEST(Params, Validation) {
  DecodeParams p;
  EXPECT_NO_THROW(p.validate());
  p.k = 0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = DecodeParams{};
  p.p = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p.p = 1.01;
  EXPECT_THROW(p.validate(), ConfigError);
  p = DecodeParams{};
  p.tau = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = DecodeParams{};
  p.w = -1.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = DecodeParams{};
  p.alpha = -0.5;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Params, StrategyNamesRoundTrip) {
  for (Strategy s : {Strategy::kGreedy, Strategy::kTopK, Strategy::kTopP,
                     Strategy::kArgsGreedy, Strategy::kArgsTopK, Strategy::kDexp,
                     Strategy::kDexpAnti, Strategy::kSpeculative}) {
    EXPECT_EQ(parse_strategy(to_string(s)), s);
  }
  EXPECT_THROW(parse_strategy("beam"), ConfigError);
}

TEST(Sampling, TiesGoToLowestIndex) {
  const std::vector<float> x{1.0f, 3.0f, 3.0f, 2.0f, 3.0f};
  EXPECT_EQ(argmax(x), 1u);
  EXPECT_EQ(top_k_indices(x, 4), (std::vector<std::size_t>{1, 2, 4, 3}));
}

TEST(Sampling, FullNucleusMatchesSoftmax) {
  const std::vector<float> logits{0.5f, -1.0f, 2.0f, 0.0f, 1.0f};
  const auto probs = softmax(logits);
  constexpr int kDraws = 100000;
  std::vector<int> counts(logits.size());
  std::mt19937_64 rng(2026);
  for (int i = 0; i < kDraws; ++i) ++counts[sample_top_p(logits, 1.0, 1.0, rng)];
  for (std::size_t v = 0; v < logits.size(); ++v) {
    const double sigma = std::sqrt(kDraws * probs[v] * (1 - probs[v]));
    EXPECT_LE(std::abs(counts[v] - kDraws * probs[v]), 3 * sigma) << v;
  }
}

TEST(Sampling, NucleusIsSmallestPrefix) {
  const std::vector<double> probs{0.1, 0.5, 0.3, 0.1};
  EXPECT_EQ(nucleus(probs, 0.5), (std::vector<std::size_t>{1}));
  EXPECT_EQ(nucleus(probs, 0.8), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(nucleus(probs, 0.85).size(), 3u);
}

TEST(Output, JsonLine) {
  const auto m = decoding_model();
  const auto r = decode(m, {1, 2}, params(Strategy::kSpeculative));
  const auto j = nlohmann::json::parse(to_json_line({1, 2}, r));
  EXPECT_EQ(j.at("prompt"), (std::vector<int>{1, 2}));
  EXPECT_EQ(j.at("continuation").get<std::vector<int>>(), r.tokens);
}

}  // namespace
}  // namespace otter
