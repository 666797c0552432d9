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

#include "otter/heads.h"
#include "otter/model.h"
#include "test_util.h"

namespace otter {
namespace {

TEST(RewardScore, ZeroHeadGivesHalf) {
  const std::vector<double> h{0.3, -2.0, 7.0};
  EXPECT_EQ(reward_score<double>(h, Tensor<double>({1, 3})), 0.5);
}

TEST(RewardScore, LogisticOfTwo) {
  const std::vector<double> h{1.0, 0.5};
  EXPECT_NEAR(reward_score<double>(h, Tensor<double>({1, 2}, {1.0, 2.0})), 0.88080, 5e-6);
}

TEST(RewardScore, MonotoneInScale) {
  const Tensor<double> w({1, 3}, {0.5, -0.2, 0.1});
  const std::vector<double> h{1.0, 0.5, 2.0};  // positive inner product
  double prev = 0.0;
  for (double t : {0.1, 0.5, 1.0, 2.0, 4.0}) {
    std::vector<double> ht = h;
    for (double& v : ht) v *= t;
    const double s = reward_score<double>(ht, w);
    EXPECT_GT(s, prev);
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
    prev = s;
  }
}

TEST(RewardScore, WidthMismatch) {
  const std::vector<double> h{1.0, 0.5};
  EXPECT_THROW(reward_score<double>(h, Tensor<double>({1, 3})), ConfigError);
}

TEST(DraftDistributions, ZeroHeadReproducesBaseDistribution) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  Tensor<double> lm({5, 3});
  for (double& v : lm.storage()) v = nd(rng);
  const std::vector<double> h_o{0.2, -1.0, 0.7}, h_p{5.0, -3.0};
  const Tensor<double> zero({3, 2});
  Tensor<double> w({3, 2});
  for (double& v : w.storage()) v = nd(rng);
  const auto d = draft_distributions<double>(h_p, h_o, {&zero, &w}, lm);
  ASSERT_EQ(d.size(), 2u);
  Tensor<double> base_logits({5});
  for (std::size_t v = 0; v < 5; ++v) {
    for (std::size_t i = 0; i < 3; ++i) base_logits[v] += lm.at(v, i) * h_o[i];
  }
  const auto base = softmax(base_logits, 0);
  for (std::size_t v = 0; v < 5; ++v) EXPECT_NEAR(d[0][v], base[v], 1e-15);
  for (const auto& dist : d) {
    double total = 0;
    for (double p : dist.storage()) total += p;
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

Model<double> model_with_extension() {
  auto base = make_base_model<double>(testing::tiny_config(), 2);
  OtterConfig c;
  c.d_ext = 4;
  c.d_inner_ext = 8;
  c.n_ext_heads = 1;
  auto m = expand_model(base, c);
  init_params(m, 1, InitStrategy::kRandom, 3);
  return m;
}

TEST(Heads, AttachAndLookup) {
  auto m = model_with_extension();
  attach_reward_head(m, 1);
  attach_generation_heads(m, 1, 3, 1);
  ASSERT_EQ(m.heads.size(), 4u);
  EXPECT_EQ(m.heads[0].weight.value.shape(), (Shape{1, 4}));
  EXPECT_EQ(m.heads[1].weight.value.shape(), (Shape{8, 4}));
  const auto drafts = heads_of(m, 1, HeadKind::kGeneration);
  ASSERT_EQ(drafts.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(drafts[i]->lookahead, i + 1);
  EXPECT_EQ(&reward_head(m, 1), &m.heads[0]);
  for (const auto& h : m.heads) {
    for (double v : h.weight.value.storage()) EXPECT_EQ(v, 0.0);
    EXPECT_TRUE(h.weight.any_trainable());
  }
  EXPECT_THROW(reward_head(m, 2), ConfigError);
  EXPECT_THROW(attach_reward_head(m, 2), ConfigError);
}

TEST(Heads, ZeroGenerationHeadEqualsBaseLogits) {
  auto m = model_with_extension();
  attach_generation_heads(m, 1, 1, 0, "expert");
  const std::vector<int> tokens{3, 1, 4, 1, 5};
  Tape<double> tape(false);
  const auto trace = m.forward(tape, tokens);
  const auto head = head_logits(m, trace, m.heads[0]).value();
  EXPECT_EQ(head, trace.logits.value());
}

TEST(Heads, GenerationHeadReadsExtensionHidden) {
  auto m = model_with_extension();
  attach_generation_heads(m, 1, 1, 0, "expert");
  std::mt19937_64 rng(4);
  testing::randomize(m.heads[0].weight, rng, 0.5);
  const std::vector<int> tokens{3, 1, 4};
  Tape<double> tape(false);
  const auto trace = m.forward(tape, tokens);
  const auto h_all = trace.final_hidden.value();
  const auto logits = head_logits(m, trace, m.heads[0]).value();
  const std::size_t last = tokens.size() - 1;
  std::vector<double> h_o(h_all.row(last).begin(), h_all.row(last).begin() + 8);
  std::vector<double> h_p(h_all.row(last).begin() + 8, h_all.row(last).end());
  const auto d = draft_distributions<double>(h_p, h_o, {&m.heads[0].weight.value},
                                             m.weights.lm_head.value);
  Tensor<double> row({logits.cols()});
  for (std::size_t v = 0; v < logits.cols(); ++v) row[v] = logits.at(last, v);
  const auto want = softmax(row, 0);
  for (std::size_t v = 0; v < want.size(); ++v) EXPECT_NEAR(d[0][v], want[v], 1e-12);
}

TEST(Heads, SequenceRewardLiesInUnitInterval) {
  auto m = model_with_extension();
  attach_reward_head(m, 1);
  const std::vector<int> tokens{1, 2, 3};
  EXPECT_EQ(sequence_reward(m, std::span<const int>(tokens), 1), 0.5);
  std::mt19937_64 rng(5);
  testing::randomize(m.heads[0].weight, rng, 2.0);
  const double r = sequence_reward(m, std::span<const int>(tokens), 1);
  EXPECT_GT(r, 0.0);
  EXPECT_LT(r, 1.0);
  EXPECT_NE(r, 0.5);
}

}  // namespace
}  // namespace otter
