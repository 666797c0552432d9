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

#include "otter/corpus.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "otter/errors.h"
#include "otter/sampling.h"

namespace otter {

std::string to_string(CorpusKind k) {
  switch (k) {
    case CorpusKind::kPreference: return "preference";
    case CorpusKind::kToxicity: return "toxicity";
    case CorpusKind::kSpeculative: return "speculative";
  }
  return "unknown";
}

CorpusKind parse_corpus_kind(const std::string& name) {
  if (name == "preference") return CorpusKind::kPreference;
  if (name == "toxicity") return CorpusKind::kToxicity;
  if (name == "speculative") return CorpusKind::kSpeculative;
  throw ConfigError("unknown corpus kind '" + name + "'");
}

namespace {

void check_lexicon(const std::vector<int>& lex, int active, const char* what) {
  if (lex.empty()) throw ConfigError(std::string("corpus: empty ") + what);
  for (int t : lex) {
    if (t < 0 || t >= active) {
      throw ConfigError(std::string("corpus: ") + what + " token " + std::to_string(t) +
                        " outside the active vocabulary");
    }
  }
}

}  // namespace

void CorpusSpec::validate() const {
  if (active_vocab < 2 || active_vocab > 256) {
    throw ConfigError("corpus: active_vocab must lie in [2, 256]");
  }
  if (count < 1 || n_prompts < 0 || seq_len < 2 || prompt_len < 1 ||
      prompt_len >= seq_len) {
    throw ConfigError("corpus: need count >= 1, seq_len >= 2 and 1 <= prompt_len < seq_len");
  }
  if (branching < 1) throw ConfigError("corpus: branching must be >= 1");
  switch (kind) {
    case CorpusKind::kPreference:
      check_lexicon(good_lexicon, active_vocab, "good lexicon");
      if (static_cast<int>(good_lexicon.size()) >= active_vocab) {
        throw ConfigError("corpus: good lexicon covers the whole vocabulary");
      }
      break;
    case CorpusKind::kToxicity: {
      check_lexicon(clean_lexicon, active_vocab, "clean lexicon");
      check_lexicon(toxic_lexicon, active_vocab, "toxic lexicon");
      std::set<int> c(clean_lexicon.begin(), clean_lexicon.end());
      for (int t : toxic_lexicon) {
        if (c.count(t)) throw ConfigError("corpus: clean and toxic lexicons overlap");
      }
      if (static_cast<int>(clean_lexicon.size() + toxic_lexicon.size()) >= active_vocab) {
        throw ConfigError("corpus: marker lexicons leave no content tokens");
      }
      if (!(marker_rate > 0.0 && marker_rate < 1.0)) {
        throw ConfigError("corpus: marker_rate must lie in (0, 1)");
      }
      break;
    }
    case CorpusKind::kSpeculative:
      if (max_cycle < 2) throw ConfigError("corpus: max_cycle must be >= 2");
      if (!(dominance > 0.0 && dominance <= 1.0)) {
        throw ConfigError("corpus: dominance must lie in (0, 1]");
      }
      break;
  }
}

CorpusSpec default_corpus_spec(CorpusKind kind, std::uint64_t seed) {
  CorpusSpec s;
  s.kind = kind;
  s.seed = seed;
  switch (kind) {
    case CorpusKind::kPreference:
      s.active_vocab = 48;
      s.good_lexicon = {3, 8, 13, 18, 23, 28, 33, 38};
      break;
    case CorpusKind::kToxicity:
      s.active_vocab = 48;
      s.clean_lexicon = {32, 33, 34, 35, 36, 37, 38, 39};
      s.toxic_lexicon = {40, 41, 42, 43, 44, 45, 46, 47};
      break;
    case CorpusKind::kSpeculative:
      s.active_vocab = 24;
      s.max_cycle = 4;
      s.dominance = 0.9;
      s.prompt_len = 4;
      break;
  }
  return s;
}

namespace {

std::size_t pick(std::size_t n, std::mt19937_64& rng) {
  return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

// Markov grammar over `content` tokens: each token has `branching`
// successors with Zipf-like weights.
class Grammar {
 public:
  Grammar(std::vector<int> content, int branching, std::mt19937_64& rng)
      : content_(std::move(content)) {
    const std::size_t b = std::min<std::size_t>(branching, content_.size());
    for (std::size_t i = 0; i < content_.size(); ++i) {
      std::vector<int> pool = content_;
      for (std::size_t j = 0; j < b; ++j) {
        std::swap(pool[j], pool[j + pick(pool.size() - j, rng)]);
      }
      pool.resize(b);
      succ_[content_[i]] = pool;
    }
    for (std::size_t j = 0; j < b; ++j) weights_.push_back(1.0 / static_cast<double>(j + 1));
  }

  int start(std::mt19937_64& rng) const { return content_[pick(content_.size(), rng)]; }
  int next(int tok, std::mt19937_64& rng) const {
    const auto& s = succ_.at(tok);
    return s[sample_index(weights_, rng)];
  }

 private:
  std::vector<int> content_;
  std::map<int, std::vector<int>> succ_;
  std::vector<double> weights_;
};

std::vector<int> chain(const Grammar& g, int first, std::size_t len, std::mt19937_64& rng) {
  std::vector<int> out{first};
  while (out.size() < len) out.push_back(g.next(out.back(), rng));
  return out;
}

std::vector<int> complement(int active, const std::set<int>& excluded) {
  std::vector<int> out;
  for (int t = 0; t < active; ++t) {
    if (!excluded.count(t)) out.push_back(t);
  }
  return out;
}

void gen_preference(const CorpusSpec& s, Corpus& c, std::mt19937_64& rng) {
  const std::set<int> good(s.good_lexicon.begin(), s.good_lexicon.end());
  std::vector<int> all(s.active_vocab);
  std::iota(all.begin(), all.end(), 0);
  const Grammar g(all, s.branching, rng);
  const std::size_t len = s.seq_len, plen = s.prompt_len;
  for (int i = 0; i < s.count; ++i) c.sequences.push_back(chain(g, g.start(rng), len, rng));
  while (static_cast<int>(c.pairs.size()) < s.count) {
    const std::vector<int> prompt = chain(g, g.start(rng), plen, rng);
    auto continuation = [&] {
      std::vector<int> seq = prompt;
      while (seq.size() < len) seq.push_back(g.next(seq.back(), rng));
      return seq;
    };
    std::vector<int> a = continuation(), b = continuation();
    const int ca = lexicon_count(a, good, plen), cb = lexicon_count(b, good, plen);
    if (ca == cb) continue;
    if (ca < cb) std::swap(a, b);
    c.pairs.push_back({prompt, a, b});
  }
  for (int i = 0; i < s.n_prompts; ++i) c.prompts.push_back(chain(g, g.start(rng), plen, rng));
}

void gen_toxicity(const CorpusSpec& s, Corpus& c, std::mt19937_64& rng) {
  std::set<int> markers(s.clean_lexicon.begin(), s.clean_lexicon.end());
  markers.insert(s.toxic_lexicon.begin(), s.toxic_lexicon.end());
  const Grammar g(complement(s.active_vocab, markers), s.branching, rng);
  auto sample = [&](const std::vector<int>& lexicon, std::size_t len) {
    std::vector<int> out;
    int content = g.start(rng);
    out.push_back(content);
    while (out.size() < len) {
      if (uniform01(rng) < s.marker_rate) {
        out.push_back(lexicon[pick(lexicon.size(), rng)]);
      } else {
        content = g.next(content, rng);
        out.push_back(content);
      }
    }
    return out;
  };
  for (int i = 0; i < s.count; ++i) {
    c.clean.push_back(sample(s.clean_lexicon, s.seq_len));
    c.toxic.push_back(sample(s.toxic_lexicon, s.seq_len));
    c.sequences.push_back(c.clean.back());
    c.sequences.push_back(c.toxic.back());
  }
  for (int i = 0; i < s.n_prompts; ++i) {
    c.prompts.push_back(sample(i % 2 == 0 ? s.toxic_lexicon : s.clean_lexicon, s.prompt_len));
  }
}

void gen_speculative(const CorpusSpec& s, Corpus& c, std::mt19937_64& rng) {
  // Permutation built from cycles of length 2..max_cycle.
  std::vector<int> order(s.active_vocab);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[pick(i, rng)]);
  std::vector<int> perm(s.active_vocab);
  std::size_t at = 0;
  while (at < order.size()) {
    const std::size_t rem = order.size() - at;
    std::size_t len = std::min(rem, 2 + pick(static_cast<std::size_t>(s.max_cycle - 1), rng));
    // Avoid leaving a single token behind.
    if (rem - len == 1) len = len < static_cast<std::size_t>(s.max_cycle) ? len + 1 : len - 1;
    for (std::size_t j = 0; j < len; ++j) perm[order[at + j]] = order[at + (j + 1) % len];
    at += len;
  }
  auto sample = [&](std::size_t len) {
    std::vector<int> out{static_cast<int>(pick(s.active_vocab, rng))};
    while (out.size() < len) {
      out.push_back(uniform01(rng) < s.dominance
                        ? perm[out.back()]
                        : static_cast<int>(pick(s.active_vocab, rng)));
    }
    return out;
  };
  for (int i = 0; i < s.count; ++i) c.sequences.push_back(sample(s.seq_len));
  for (int i = 0; i < s.n_prompts; ++i) c.prompts.push_back(sample(s.prompt_len));
}

}  // namespace

Corpus gen_corpus(const CorpusSpec& spec) {
  spec.validate();
  Corpus c;
  c.spec = spec;
  std::mt19937_64 rng(spec.seed);
  switch (spec.kind) {
    case CorpusKind::kPreference: gen_preference(spec, c, rng); break;
    case CorpusKind::kToxicity: gen_toxicity(spec, c, rng); break;
    case CorpusKind::kSpeculative: gen_speculative(spec, c, rng); break;
  }
  return c;
}

int lexicon_count(const std::vector<int>& seq, const std::set<int>& lexicon,
                  std::size_t from) {
  int n = 0;
  for (std::size_t i = from; i < seq.size(); ++i) n += lexicon.count(seq[i]) ? 1 : 0;
  return n;
}

namespace {

nlohmann::json spec_to_json(const CorpusSpec& s) {
  return {{"kind", to_string(s.kind)},       {"active_vocab", s.active_vocab},
          {"count", s.count},                {"n_prompts", s.n_prompts},
          {"seq_len", s.seq_len},            {"prompt_len", s.prompt_len},
          {"branching", s.branching},        {"good_lexicon", s.good_lexicon},
          {"clean_lexicon", s.clean_lexicon}, {"toxic_lexicon", s.toxic_lexicon},
          {"marker_rate", s.marker_rate},    {"max_cycle", s.max_cycle},
          {"dominance", s.dominance},        {"seed", s.seed}};
}

CorpusSpec spec_from_json(const nlohmann::json& j) {
  CorpusSpec s;
  s.kind = parse_corpus_kind(j.at("kind").get<std::string>());
  s.active_vocab = j.at("active_vocab").get<int>();
  s.count = j.at("count").get<int>();
  s.n_prompts = j.at("n_prompts").get<int>();
  s.seq_len = j.at("seq_len").get<int>();
  s.prompt_len = j.at("prompt_len").get<int>();
  s.branching = j.at("branching").get<int>();
  s.good_lexicon = j.at("good_lexicon").get<std::vector<int>>();
  s.clean_lexicon = j.at("clean_lexicon").get<std::vector<int>>();
  s.toxic_lexicon = j.at("toxic_lexicon").get<std::vector<int>>();
  s.marker_rate = j.at("marker_rate").get<double>();
  s.max_cycle = j.at("max_cycle").get<int>();
  s.dominance = j.at("dominance").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<int> split_tokens(const std::string& field) {
  std::vector<int> out;
  std::istringstream in(field);
  int t = 0;
  while (in >> t) out.push_back(t);
  if (!in.eof()) throw InputError("corpus: malformed token field '" + field + "'");
  return out;
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write corpus " + path);
  for (const auto& s : corpus.sequences) out << "seq\t" << join(s) << '\n';
  for (const auto& p : corpus.pairs) {
    out << "pair\t" << join(p.prompt) << '\t' << join(p.chosen) << '\t' << join(p.rejected)
        << '\n';
  }
  for (const auto& s : corpus.clean) out << "clean\t" << join(s) << '\n';
  for (const auto& s : corpus.toxic) out << "toxic\t" << join(s) << '\n';
  for (const auto& s : corpus.prompts) out << "prompt\t" << join(s) << '\n';
  std::ofstream side(path + ".spec.json");
  if (!side) throw InputError("cannot write corpus spec " + path + ".spec.json");
  side << spec_to_json(corpus.spec).dump(2) << '\n';
}

Corpus load_corpus(const std::string& path) {
  std::ifstream side(path + ".spec.json");
  if (!side) throw InputError("missing corpus spec " + path + ".spec.json");
  Corpus c;
  try {
    c.spec = spec_from_json(nlohmann::json::parse(side));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("corpus spec " + path + ".spec.json: " + e.what());
  }
  std::ifstream in(path);
  if (!in) throw InputError("cannot read corpus " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string f;
    while (std::getline(ls, f, '\t')) fields.push_back(f);
    const std::string& kind = fields.front();
    if (kind == "pair" && fields.size() == 4) {
      c.pairs.push_back({split_tokens(fields[1]), split_tokens(fields[2]),
                         split_tokens(fields[3])});
    } else if (fields.size() == 2 && kind == "seq") {
      c.sequences.push_back(split_tokens(fields[1]));
    } else if (fields.size() == 2 && kind == "clean") {
      c.clean.push_back(split_tokens(fields[1]));
    } else if (fields.size() == 2 && kind == "toxic") {
      c.toxic.push_back(split_tokens(fields[1]));
    } else if (fields.size() == 2 && kind == "prompt") {
      c.prompts.push_back(split_tokens(fields[1]));
    } else {
      throw InputError("corpus " + path + ": malformed line '" + line + "'");
    }
  }
  return c;
}

}  // namespace otter
