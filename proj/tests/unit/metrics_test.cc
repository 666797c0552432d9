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

#include <random>
#include <set>
#include <vector>

#include "json.hpp"
#include "otter/heads.h"
#include "otter/metrics.h"
#include "otter/recipes.h"
#include "test_util.h"

namespace otter {
namespace {

TEST(DistinctN, HandValues) {
  EXPECT_EQ(distinct_n({{1, 2, 3, 4}}, 1).score, 1.0);
  EXPECT_EQ(distinct_n({{1, 1, 1, 1}}, 1).score, 0.25);
  EXPECT_DOUBLE_EQ(distinct_n({{1, 2, 1, 2}}, 2).score, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(distinct_n({{1, 2, 3, 4}, {1, 1, 1, 1}}, 1).score, 0.625);
}

TEST(DistinctN, ShortTextsExcluded) {
  const auto r = distinct_n({{1, 1, 1, 1}, {5}, {}}, 2);
  EXPECT_EQ(r.excluded, 2u);
  EXPECT_DOUBLE_EQ(r.score, 1.0 / 3.0);
  EXPECT_THROW(distinct_n({{1}}, 0), ConfigError);
}

TEST(DistinctN, NewNgramNeverLowersScore) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> tok(0, 5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> t(2 + trial % 10);
    for (int& v : t) v = tok(rng);
    const double before = distinct_n({t}, 2).score;
    t.push_back(100 + trial);  // unseen token makes an unseen bigram
    EXPECT_GE(distinct_n({t}, 2).score, before);
  }
}

TEST(Toxicity, HandValues) {
  const auto r = toxicity_from_scores({{0.2, 0.6}, {0.1, 0.3}});
  EXPECT_DOUBLE_EQ(r.avg_max, 0.45);
  EXPECT_EQ(r.prob_any, 0.5);
}

TEST(Toxicity, LexiconExtremes) {
  const std::set<int> lex{7, 8};
  const auto none = lexicon_toxicity({{{1, 2}, {3}}, {{4, 5, 6}}}, lex);
  EXPECT_EQ(none.avg_max, 0.0);
  EXPECT_EQ(none.prob_any, 0.0);
  const auto all = lexicon_toxicity({{{7, 8}, {7}}, {{8, 8, 8}}}, lex);
  EXPECT_EQ(all.avg_max, 1.0);
  EXPECT_EQ(all.prob_any, 1.0);
  EXPECT_DOUBLE_EQ(text_toxicity({7, 1, 2, 8}, lex), 0.5);
  EXPECT_THROW(lexicon_toxicity({{{1}}}, {}), ConfigError);
}

TEST(Overhead, SpeedupArithmetic) {
  const auto r = make_overhead_report(1.07, 1.26, 2.91);
  EXPECT_NEAR(r.speedup, 2.72, 5e-3);
  EXPECT_EQ(r.speedup, r.accepted_length / r.time_ratio);
  EXPECT_THROW(make_overhead_report(0.0, 1.0, 1.0), MeasurementError);
  const auto j = nlohmann::json::parse(to_json_line(r));
  EXPECT_EQ(j.at("speedup").get<double>(), r.speedup);
}

TEST(Overhead, SpeedupIdentityOnRandomInputs) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.5, 4.0);
  for (int i = 0; i < 1000; ++i) {
    const auto r = make_overhead_report(u(rng), u(rng), u(rng));
    EXPECT_NEAR(r.speedup, r.accepted_length / r.time_ratio, 1e-12);
  }
}

TEST(Overhead, IdenticalModelsMeasureAsOne) {
  const auto m = make_base_model<float>(testing::small_config(), 1);
  DecodeParams p;
  p.max_new_tokens = 16;
  const auto prompts = testing::random_prompts(8, 64, 8, 2);
  const auto r = measure_overhead(m, p, m, p, prompts, {21, false});
  EXPECT_EQ(r.space_ratio, 1.0);
  EXPECT_GE(r.time_ratio, 0.9);
  EXPECT_LE(r.time_ratio, 1.1);
  EXPECT_GT(r.base_seconds, 0.0);
}

TEST(Overhead, RequiresFiveRepetitions) {
  const auto m = make_base_model<float>(testing::tiny_config(), 1);
  DecodeParams p;
  EXPECT_THROW(measure_overhead(m, p, m, p, {{1}}, {4, false}), MeasurementError);
  EXPECT_THROW(measure_overhead(m, p, m, p, {}, {5, false}), InputError);
}

TEST(AvgReward, ZeroHeadAndMean) {
  auto m = make_base_model<float>(testing::tiny_config(), 1);
  OtterConfig e;
  e.d_ext = 2;
  e.d_inner_ext = 4;
  e.n_ext_heads = 1;
  const int k = insert_extension(m, e, 2);
  attach_reward_head(m, k);
  EXPECT_EQ(avg_reward(m, k, {{1, 2}, {3}, {4, 5, 6}}), 0.5);
  EXPECT_THROW(avg_reward(m, k, {}), InputError);
  EXPECT_DOUBLE_EQ(mean_of({0.2, 0.8}), 0.5);
  EXPECT_THROW(mean_of({}), InputError);
}

}  // namespace
}  // namespace otter
