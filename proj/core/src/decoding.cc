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

#include "otter/decoding.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"
#include "otter/heads.h"
#include "otter/sampling.h"

namespace otter {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kGreedy: return "greedy";
    case Strategy::kTopK: return "topk";
    case Strategy::kTopP: return "topp";
    case Strategy::kArgsGreedy: return "args_greedy";
    case Strategy::kArgsTopK: return "args_topk";
    case Strategy::kDexp: return "dexp";
    case Strategy::kDexpAnti: return "dexp_anti";
    case Strategy::kSpeculative: return "speculative";
  }
  return "unknown";
}

Strategy parse_strategy(const std::string& name) {
  for (Strategy s : {Strategy::kGreedy, Strategy::kTopK, Strategy::kTopP,
                     Strategy::kArgsGreedy, Strategy::kArgsTopK, Strategy::kDexp,
                     Strategy::kDexpAnti, Strategy::kSpeculative}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown decoding strategy '" + name + "'");
}

void DecodeParams::validate() const {
  if (k < 1) throw ConfigError("decode: k must be >= 1");
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("decode: p must lie in (0, 1]");
  if (!(tau > 0.0)) throw ConfigError("decode: tau must be positive");
  if (!(w >= 0.0)) throw ConfigError("decode: w must be >= 0");
  if (!(alpha >= 0.0)) throw ConfigError("decode: alpha must be >= 0");
  if (max_new_tokens < 0) throw ConfigError("decode: max_new_tokens must be >= 0");
}

double DecodeResult::average_accepted() const {
  if (accepted.empty()) return 0.0;
  double total = 0.0;
  for (int a : accepted) total += a;
  return total / static_cast<double>(accepted.size());
}

namespace {

std::vector<float> row_of(const Tensor<float>& t, std::size_t r) {
  auto row = t.row(r);
  return {row.begin(), row.end()};
}

void check_request(const OtterModel& model, const std::vector<int>& prompt,
                   const DecodeParams& params) {
  params.validate();
  if (prompt.empty()) throw InputError("decode: empty prompt");
  const std::size_t need = prompt.size() + static_cast<std::size_t>(params.max_new_tokens);
  if (need > static_cast<std::size_t>(model.config.max_seq_len)) {
    throw InputError("decode: prompt plus continuation (" + std::to_string(need) +
                     ") exceeds max_seq_len " +
                     std::to_string(model.config.max_seq_len));
  }
}

const TaskHead<float>& single_generation_head(const OtterModel& model, int k,
                                              const char* role) {
  if (k < 1 || k > model.num_extensions()) {
    throw ConfigError(std::string("decode: ") + role + " extension " +
                      std::to_string(k) + " is missing");
  }
  auto hs = heads_of(model, k, HeadKind::kGeneration);
  if (hs.size() != 1) {
    throw ConfigError(std::string("decode: ") + role + " extension " +
                      std::to_string(k) + " needs exactly one generation head");
  }
  return *hs.front();
}

}  // namespace

double args_score(double lm, double reward, double w) { return lm + w * reward; }

DecodeResult decode_base(const OtterModel& model, const std::vector<int>& prompt,
                         const DecodeParams& params) {
  check_request(model, prompt, params);
  DecodeResult out;
  std::mt19937_64 rng(params.seed);
  std::vector<int> seq = prompt;
  for (int step = 0; step < params.max_new_tokens; ++step) {
    const Tensor<float> logits = model.logits(seq);
    ++out.forward_passes;
    const std::vector<float> z = row_of(logits, logits.rows() - 1);
    std::size_t tok = 0;
    switch (params.strategy) {
      case Strategy::kTopK:
        tok = sample_top_k(z, static_cast<std::size_t>(params.k), params.tau, rng);
        break;
      case Strategy::kTopP:
        tok = sample_top_p(z, params.p, params.tau, rng);
        break;
      default:
        tok = argmax(z);
        break;
    }
    seq.push_back(static_cast<int>(tok));
    out.tokens.push_back(static_cast<int>(tok));
    out.steps.push_back({static_cast<int>(tok), {}});
  }
  return out;
}

DecodeResult decode_args(const OtterModel& model, const std::vector<int>& prompt,
                         const DecodeParams& params) {
  check_request(model, prompt, params);
  const TaskHead<float>& head = reward_head(model, params.reward_ext);
  DecodeResult out;
  if (params.max_new_tokens == 0) return out;
  std::size_t k = static_cast<std::size_t>(params.k);
  const std::size_t vocab = static_cast<std::size_t>(model.config.vocab_size);
  if (k > vocab) {
    out.warnings.push_back("k=" + std::to_string(k) + " clipped to vocabulary size " +
                           std::to_string(vocab));
    k = vocab;
  }
  std::mt19937_64 rng(params.seed);
  std::vector<int> seq = prompt;
  Tensor<float> logits = model.logits(seq);
  ++out.forward_passes;
  std::vector<float> z = row_of(logits, logits.rows() - 1);
  for (int step = 0; step < params.max_new_tokens; ++step) {
    const std::vector<std::size_t> cand = top_k_indices(z, k);
    const std::vector<double> lm = params.lm_term == LmTerm::kProbability
                                       ? softmax(z)
                                       : log_softmax(z);
    DecodeStep rec;
    std::vector<std::vector<float>> next_logits;
    std::vector<double> scores;
    for (std::size_t c : cand) {
      seq.push_back(static_cast<int>(c));
      Tape<float> tape(false);
      const ForwardTrace<float> trace = model.forward(tape, seq);
      ++out.forward_passes;
      seq.pop_back();
      const double s_r = reward_logit(model, trace, head).value()[0];
      CandidateScore cs;
      cs.token = static_cast<int>(c);
      cs.lm = lm[c];
      cs.reward = 1.0 / (1.0 + std::exp(-s_r));
      cs.score = args_score(cs.lm, cs.reward, params.w);
      rec.candidates.push_back(cs);
      scores.push_back(cs.score);
      const Tensor<float>& lv = trace.logits.value();
      next_logits.push_back(row_of(lv, lv.rows() - 1));
    }
    std::size_t pick = 0;
    if (params.strategy == Strategy::kArgsTopK) {
      pick = sample_scores(scores, params.tau, rng);
    } else {
      // Candidates are ordered by logit then index, so the first maximal
      // score implements the tie-break.
      for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[pick]) pick = i;
      }
    }
    const int tok = static_cast<int>(cand[pick]);
    rec.token = tok;
    seq.push_back(tok);
    out.tokens.push_back(tok);
    out.steps.push_back(std::move(rec));
    z = std::move(next_logits[pick]);
  }
  return out;
}

std::vector<float> dexp_mix(std::span<const float> z, std::span<const float> expert,
                            std::span<const float> anti, double alpha) {
  if (anti.size() != z.size() || (!expert.empty() && expert.size() != z.size())) {
    throw ConfigError("dexp: logit widths differ");
  }
  const float a = static_cast<float>(alpha);
  std::vector<float> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const float pos = expert.empty() ? z[i] : expert[i];
    out[i] = z[i] + a * (pos - anti[i]);
  }
  return out;
}

DecodeResult decode_dexp(const OtterModel& model, const std::vector<int>& prompt,
                         const DecodeParams& params) {
  check_request(model, prompt, params);
  const bool anti_only = params.strategy == Strategy::kDexpAnti;
  const TaskHead<float>& anti = single_generation_head(model, params.anti_ext, "anti-expert");
  const TaskHead<float>* expert =
      anti_only ? nullptr : &single_generation_head(model, params.expert_ext, "expert");
  DecodeResult out;
  std::mt19937_64 rng(params.seed);
  std::vector<int> seq = prompt;
  for (int step = 0; step < params.max_new_tokens; ++step) {
    Tape<float> tape(false);
    const ForwardTrace<float> trace = model.forward(tape, seq);
    ++out.forward_passes;
    const std::size_t last = seq.size() - 1;
    const std::vector<float> z = row_of(trace.logits.value(), last);
    const std::vector<float> zm = row_of(head_logits(model, trace, anti).value(), last);
    std::vector<float> zp;
    if (expert != nullptr) zp = row_of(head_logits(model, trace, *expert).value(), last);
    const std::vector<float> mixed = dexp_mix(z, zp, zm, params.alpha);
    const int tok = static_cast<int>(sample_top_p(mixed, params.p, params.tau, rng));
    seq.push_back(tok);
    out.tokens.push_back(tok);
    out.steps.push_back({tok, {}});
  }
  return out;
}

DecodeResult decode_speculative(const OtterModel& model, const std::vector<int>& prompt,
                                const DecodeParams& params) {
  check_request(model, prompt, params);
  auto heads = heads_of(model, params.draft_ext, HeadKind::kGeneration);
  if (heads.empty()) {
    throw ConfigError("speculative: extension " + std::to_string(params.draft_ext) +
                      " has no draft heads");
  }
  std::sort(heads.begin(), heads.end(), [](const TaskHead<float>* a, const TaskHead<float>* b) {
    return a->lookahead < b->lookahead;
  });
  DecodeResult out;
  if (params.max_new_tokens == 0) return out;
  const std::size_t max_len = static_cast<std::size_t>(model.config.max_seq_len);
  std::vector<int> seq = prompt;

  int next = 0;
  std::vector<int> drafts;
  // Base greedy token and head proposals read at row `pos` of a pass.
  auto propose = [&](const ForwardTrace<float>& trace, std::size_t pos) {
    next = static_cast<int>(argmax(row_of(trace.logits.value(), pos)));
    drafts.clear();
    for (const TaskHead<float>* h : heads) {
      drafts.push_back(
          static_cast<int>(argmax(row_of(head_logits(model, trace, *h).value(), pos))));
    }
  };
  {
    Tape<float> tape(false);
    const ForwardTrace<float> trace = model.forward(tape, seq);
    ++out.forward_passes;
    propose(trace, seq.size() - 1);
  }
  while (out.tokens.size() < static_cast<std::size_t>(params.max_new_tokens)) {
    const std::size_t remaining = params.max_new_tokens - out.tokens.size();
    if (remaining == 1) {
      seq.push_back(next);
      out.tokens.push_back(next);
      out.accepted.push_back(1);
      break;
    }
    const std::size_t n_draft =
        std::min({drafts.size(), remaining - 1, max_len - seq.size() - 1});
    std::vector<int> verify = seq;
    verify.push_back(next);
    verify.insert(verify.end(), drafts.begin(), drafts.begin() + static_cast<long>(n_draft));
    Tape<float> tape(false);
    const ForwardTrace<float> trace = model.forward(tape, verify);
    ++out.forward_passes;
    const Tensor<float>& lv = trace.logits.value();
    std::size_t m = 0;
    while (m < n_draft && drafts[m] == static_cast<int>(argmax(row_of(lv, seq.size() + m)))) {
      ++m;
    }
    seq.push_back(next);
    out.tokens.push_back(next);
    for (std::size_t i = 0; i < m; ++i) {
      seq.push_back(drafts[i]);
      out.tokens.push_back(drafts[i]);
    }
    out.accepted.push_back(static_cast<int>(1 + m));
    if (out.tokens.size() >= static_cast<std::size_t>(params.max_new_tokens)) break;
    propose(trace, seq.size() - 1);
  }
  for (int t : out.tokens) out.steps.push_back({t, {}});
  return out;
}

DecodeResult decode(const OtterModel& model, const std::vector<int>& prompt,
                    const DecodeParams& params) {
  switch (params.strategy) {
    case Strategy::kGreedy:
    case Strategy::kTopK:
    case Strategy::kTopP:
      return decode_base(model, prompt, params);
    case Strategy::kArgsGreedy:
    case Strategy::kArgsTopK:
      return decode_args(model, prompt, params);
    case Strategy::kDexp:
    case Strategy::kDexpAnti:
      return decode_dexp(model, prompt, params);
    case Strategy::kSpeculative:
      return decode_speculative(model, prompt, params);
  }
  throw ConfigError("decode: unhandled strategy");
}

std::string to_json_line(const std::vector<int>& prompt, const DecodeResult& r) {
  nlohmann::json j;
  j["prompt"] = prompt;
  j["continuation"] = r.tokens;
  j["forward_passes"] = r.forward_passes;
  if (!r.accepted.empty()) {
    j["accepted"] = r.accepted;
    j["average_accepted"] = r.average_accepted();
  }
  nlohmann::json steps = nlohmann::json::array();
  for (const DecodeStep& s : r.steps) {
    nlohmann::json js;
    js["token"] = s.token;
    if (!s.candidates.empty()) {
      nlohmann::json cs = nlohmann::json::array();
      for (const CandidateScore& c : s.candidates) {
        cs.push_back({{"token", c.token}, {"lm", c.lm}, {"reward", c.reward},
                      {"score", c.score}});
      }
      js["candidates"] = cs;
    }
    steps.push_back(js);
  }
  j["steps"] = steps;
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j.dump();
}

}  // namespace otter
