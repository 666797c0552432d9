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

#include <cstdio>
#include <filesystem>
#include <set>

#include "otter/corpus.h"
#include "otter/errors.h"

namespace otter {
namespace {

std::set<int> as_set(const std::vector<int>& v) { return {v.begin(), v.end()}; }

TEST(Corpus, DeterministicInSeed) {
  for (CorpusKind k : {CorpusKind::kPreference, CorpusKind::kToxicity, CorpusKind::kSpeculative}) {
    const auto a = gen_corpus(default_corpus_spec(k, 5));
    EXPECT_EQ(a, gen_corpus(default_corpus_spec(k, 5))) << to_string(k);
    EXPECT_NE(a, gen_corpus(default_corpus_spec(k, 6))) << to_string(k);
    EXPECT_EQ(parse_corpus_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_corpus_kind("poetry"), ConfigError);
}

TEST(Corpus, PreferencePairsFavorGoodLexicon) {
  const auto c = gen_corpus(default_corpus_spec(CorpusKind::kPreference, 11));
  ASSERT_EQ(c.pairs.size(), static_cast<std::size_t>(c.spec.count));
  ASSERT_EQ(c.prompts.size(), static_cast<std::size_t>(c.spec.n_prompts));
  const auto good = as_set(c.spec.good_lexicon);
  for (const auto& p : c.pairs) {
    const std::size_t from = p.prompt.size();
    ASSERT_EQ(std::vector<int>(p.chosen.begin(), p.chosen.begin() + from), p.prompt);
    ASSERT_EQ(std::vector<int>(p.rejected.begin(), p.rejected.begin() + from), p.prompt);
    EXPECT_GT(lexicon_count(p.chosen, good, from), lexicon_count(p.rejected, good, from));
  }
}

TEST(Corpus, ToxicityLexiconsDisjointAndSplitsClean) {
  const auto c = gen_corpus(default_corpus_spec(CorpusKind::kToxicity, 13));
  const auto clean = as_set(c.spec.clean_lexicon), toxic = as_set(c.spec.toxic_lexicon);
  for (int t : clean) EXPECT_EQ(toxic.count(t), 0u);
  ASSERT_FALSE(c.clean.empty());
  ASSERT_FALSE(c.toxic.empty());
  for (const auto& s : c.clean) EXPECT_EQ(lexicon_count(s, toxic), 0);
  for (const auto& s : c.toxic) EXPECT_EQ(lexicon_count(s, clean), 0);
  for (const auto& s : c.sequences) {
    for (int t : s) {
      EXPECT_GE(t, 0);
      EXPECT_LT(t, c.spec.active_vocab);
    }
  }
}

TEST(Corpus, SpeculativeSequencesHaveRequestedShape) {
  const auto c = gen_corpus(default_corpus_spec(CorpusKind::kSpeculative, 7));
  ASSERT_EQ(c.sequences.size(), static_cast<std::size_t>(c.spec.count));
  for (const auto& s : c.sequences) EXPECT_EQ(s.size(), static_cast<std::size_t>(c.spec.seq_len));
}

TEST(Corpus, SpecValidation) {
  auto s = default_corpus_spec(CorpusKind::kPreference, 1);
  s.good_lexicon.clear();
  EXPECT_THROW(s.validate(), ConfigError);
  s = default_corpus_spec(CorpusKind::kToxicity, 1);
  s.toxic_lexicon.push_back(s.clean_lexicon.front());
  EXPECT_THROW(s.validate(), ConfigError);
  s = default_corpus_spec(CorpusKind::kToxicity, 1);
  s.clean_lexicon.push_back(s.active_vocab);
  EXPECT_THROW(gen_corpus(s), ConfigError);
}

TEST(Corpus, LexiconCountFromOffset) {
  EXPECT_EQ(lexicon_count({1, 2, 1, 3, 1}, {1}), 3);
  EXPECT_EQ(lexicon_count({1, 2, 1, 3, 1}, {1}, 1), 2);
  EXPECT_EQ(lexicon_count({1, 2}, {1}, 5), 0);
}

TEST(Corpus, SaveLoadRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "otter_corpus_test.json";
  for (CorpusKind k : {CorpusKind::kPreference, CorpusKind::kToxicity}) {
    const auto c = gen_corpus(default_corpus_spec(k, 3));
    save_corpus(c, path.string());
    EXPECT_EQ(load_corpus(path.string()), c);
  }
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".spec.json");
  EXPECT_THROW(load_corpus(path.string()), InputError);
}

}  // namespace
}  // namespace otter
