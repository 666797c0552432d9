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
#include <set>
#include <string>
#include <vector>

namespace otter {

enum class CorpusKind { kPreference, kToxicity, kSpeculative };

std::string to_string(CorpusKind k);
CorpusKind parse_corpus_kind(const std::string& name);

// Generator description. Token ids are symbols of a character-level
// vocabulary; only ids below `active_vocab` are emitted.
struct CorpusSpec {
  CorpusKind kind = CorpusKind::kPreference;
  int active_vocab = 64;
  int count = 256;      // training sequences (pairs for preference)
  int n_prompts = 32;   // held-out prompts
  int seq_len = 24;
  int prompt_len = 8;
  int branching = 4;    // successors per token in the Markov grammar
  std::vector<int> good_lexicon;   // preference
  std::vector<int> clean_lexicon;  // toxicity
  std::vector<int> toxic_lexicon;  // toxicity
  double marker_rate = 0.3;        // toxicity: chance of a marker per position
  int max_cycle = 4;               // speculative: longest permutation cycle
  double dominance = 0.9;          // speculative: chance of the dominant successor
  std::uint64_t seed = 0;

  // Throws ConfigError on an empty or out-of-range lexicon, overlapping
  // toxicity lexicons or inconsistent sizes.
  void validate() const;
  friend bool operator==(const CorpusSpec&, const CorpusSpec&) = default;
};

// Reasonable defaults for each kind.
CorpusSpec default_corpus_spec(CorpusKind kind, std::uint64_t seed);

struct PreferencePair {
  std::vector<int> prompt;
  std::vector<int> chosen;    // prompt + continuation
  std::vector<int> rejected;  // prompt + continuation

  friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};

struct Corpus {
  CorpusSpec spec;
  std::vector<std::vector<int>> sequences;  // language-model text
  std::vector<PreferencePair> pairs;
  std::vector<std::vector<int>> clean;
  std::vector<std::vector<int>> toxic;
  std::vector<std::vector<int>> prompts;  // held out

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

Corpus gen_corpus(const CorpusSpec& spec);

// Count of tokens from `lexicon` in `seq` starting at `from`.
int lexicon_count(const std::vector<int>& seq, const std::set<int>& lexicon,
                  std::size_t from = 0);

// Writes `path` (one tab-separated record per line, tokens space-separated)
// and `path + ".spec.json"`.
void save_corpus(const Corpus& corpus, const std::string& path);
Corpus load_corpus(const std::string& path);

}  // namespace otter
