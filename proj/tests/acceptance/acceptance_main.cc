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

// Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero when any
// criterion fails. `--only 3,8` runs a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "otter/checkpoint.h"
#include "otter/corpus.h"
#include "otter/decoding.h"
#include "otter/grad_check.h"
#include "otter/heads.h"
#include "otter/metrics.h"
#include "otter/recipes.h"
#include "otter/training.h"
#include "test_util.h"

namespace otter {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

constexpr InitStrategy kInits[] = {InitStrategy::kRandom, InitStrategy::kNormal,
                                   InitStrategy::kCopy};

// Criterion 1 ---------------------------------------------------------------

template <typename T>
void train_expert_steps(Model<T>& m, int k, int steps, std::uint64_t seed) {
  attach_generation_heads(m, k, 1, 0, "expert");
  m.set_trainable_group(k);
  AdamWConfig oc;
  oc.lr = 3e-3;
  oc.total_steps = steps;
  AdamW<T> opt(oc);
  auto data = testing::random_prompts(16, m.config.vocab_size, 12, seed);
  for (auto& s : data) s.push_back(1);
  for (int s = 0; s < steps; ++s) {
    train_step<T>(
        m, opt,
        [&](Tape<T>& tape, const Model<T>& model, std::size_t i) {
          return expert_lm_loss(tape, model, k, std::span<const int>(data[i]));
        },
        {static_cast<std::size_t>(s % 16), static_cast<std::size_t>((s + 5) % 16)}, 5.0,
        "expert");
  }
  m.freeze();
}

template <typename T>
double non_disruption_worst(double tol, const std::vector<std::vector<int>>& prompts) {
  const auto base = cast_model<T>(make_base_model<float>(testing::small_config(), 1));
  double worst = 0.0;
  for (InitStrategy init : kInits) {
    OtterConfig e;
    e.init = init;
    auto m = expand_model(base, e);
    init_params(m, 1, init, 2);
    worst = std::max(worst, verify_non_disruption(base, m, prompts, tol).max_deviation);
    train_expert_steps(m, 1, 500, 3);
    worst = std::max(worst, verify_non_disruption(base, m, prompts, tol).max_deviation);
  }
  return worst;
}

Outcome non_disruption() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto prompts = testing::random_prompts(100, 64, 32, 17);
  Outcome o;
  try {
    const double f = non_disruption_worst<float>(1e-5, prompts);
    const double d = non_disruption_worst<double>(1e-10, prompts);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.pass = f <= 1e-5 && d <= 1e-10 && secs < 60.0;
    o.detail = "max dev 32-bit " + fmt("%.3g", f) + " (tol 1e-5), 64-bit " + fmt("%.3g", d) +
               " (tol 1e-10), 3 inits x 100 prompts, before and after 500 steps, " +
               fmt("%.1f", secs) + " s (limit 60 s)";
  } catch (const VerificationError& e) {
    o.detail = e.what();
  }
  return o;
}

// Criterion 2 ---------------------------------------------------------------

Outcome restricted_norm() {
  std::mt19937_64 rng(2);
  std::normal_distribution<float> nd(0.0f, 2.0f);
  int mismatches = 0;
  constexpr int kVectors = 10000;
  for (int trial = 0; trial < kVectors; ++trial) {
    const std::size_t d = 1 + rng() % 64, de = 1 + rng() % 32;
    Tensor<float> h({d + de}), g({d + de}), hb({d}), gb({d});
    for (std::size_t i = 0; i < d + de; ++i) {
      h[i] = nd(rng) * (i < d ? 1.0f : 50.0f);
      g[i] = nd(rng);
      if (i < d) {
        hb[i] = h[i];
        gb[i] = g[i];
      }
    }
    const auto y = restricted_rmsnorm(h, d, g, 1e-5f);
    const auto yb = rmsnorm(hb, gb, 1e-5f);
    for (std::size_t i = 0; i < d; ++i) {
      if (std::memcmp(&y[i], &yb[i], sizeof(float)) != 0) {
        ++mismatches;
        break;
      }
    }
  }
  return {mismatches == 0, std::to_string(mismatches) + " of " + std::to_string(kVectors) +
                               " vectors differ bitwise in the original coordinates"};
}

// Criterion 3 ---------------------------------------------------------------

Outcome gradients() {
  ModelConfig g = testing::tiny_config();
  g.vocab_size = 32;
  g.d_model = 16;
  g.n_heads = 2;
  g.head_dim = 8;
  g.d_inner = 32;
  double worst = 0.0;
  std::size_t checked = 0;
  std::ostringstream per;
  const double lambda = 5.0;
  // Reward and expert losses share one head set; the draft loss needs an
  // extension whose generation heads all look ahead.
  for (bool drafts : {false, true}) {
    for (InitStrategy init : kInits) {
      OtterConfig oc;
      oc.d_ext = 4;
      oc.d_inner_ext = 8;
      oc.n_ext_heads = 1;
      oc.init = init;
      OtterModel mf = make_base_model<float>(g, 100);
      const int k = insert_extension(mf, oc, 200);
      if (drafts) {
        attach_generation_heads(mf, k, 2, 1, "draft");
      } else {
        attach_reward_head(mf, k);
        attach_generation_heads(mf, k, 1, 0, "expert");
      }
      auto md = cast_model<double>(mf);
      std::mt19937_64 rng(7);
      for (auto& h : md.heads) testing::randomize(h.weight, rng, 0.5);
      auto ml = cast_model<long double>(md);
      std::vector<Parameter<double>*> ps;
      std::vector<Parameter<long double>*> pl;
      md.for_each_parameter([&](Parameter<double>& p) { ps.push_back(&p); });
      ml.for_each_parameter([&](Parameter<long double>& p) { pl.push_back(&p); });
      std::vector<int> a, b;
      for (int i = 0; i < 7; ++i) {
        a.push_back(static_cast<int>(rng() % 32));
        b.push_back(static_cast<int>(rng() % 32));
      }
      auto run = [&](const char* name, auto loss) {
        const auto r = grad_check_extended(
            [&](Tape<double>& t) {
              auto l = loss(t, md);
              return ops::add(l.task, ops::scale(l.reg, lambda));
            },
            ps,
            [&](Tape<long double>& t) {
              auto l = loss(t, ml);
              return ops::add(l.task, ops::scale(l.reg, static_cast<long double>(lambda)));
            },
            pl, 1e-6L);
        worst = std::max(worst, r.max_rel_error);
        checked += r.checked;
        per << " " << to_string(init) << "/" << name << " " << fmt("%.2g", r.max_rel_error);
      };
      if (drafts) {
        run("medusa", [&](auto& t, const auto& m) {
          return medusa_loss(t, m, k, std::span<const int>(a), 0.8);
        });
        continue;
      }
      run("reward", [&](auto& t, const auto& m) {
        return reward_loss(t, m, k, std::span<const int>(a), std::span<const int>(b));
      });
      run("expert", [&](auto& t, const auto& m) {
        return expert_lm_loss(t, m, k, std::span<const int>(a));
      });
    }
  }
  return {worst <= 1e-6 && checked > 0,
          "worst rel error " + fmt("%.3g", worst) + " (tol 1e-6) over " +
              std::to_string(checked) + " coordinates, task + 5*reg;" + per.str()};
}

// Criterion 4 ---------------------------------------------------------------

double reg_of(std::vector<double> row) {
  Tape<double> tape(false);
  ForwardTrace<double> trace;
  const std::size_t w = row.size();
  Var<double> h = tape.constant(Tensor<double>({1, w}, std::move(row)));
  trace.hidden_sites.push_back({h, h});
  return reg_loss(trace, 2, 0.0).value()[0];
}

Outcome reg_formula() {
  const double a = std::sqrt(12.5) - std::sqrt(50.0 / 3.0);
  const double b = std::sqrt(12.5) - std::sqrt(25.0 / 3.0);
  const double r1 = reg_of({3, 4, 5}), r2 = reg_of({3, 4, 0}), r0 = reg_of({1, 1, 1});
  const double e1 = std::abs(r1 - a * a), e2 = std::abs(r2 - b * b);
  const bool pass = e1 <= 1e-6 && e2 <= 1e-6 && r0 == 0.0 &&
                    std::abs(r1 - 0.29915) <= 1e-5 && std::abs(r2 - 0.42091) <= 1e-5;
  return {pass, "h=[3,4],h'=[5]: " + fmt("%.7f", r1) + " (exact " + fmt("%.7f", a * a) +
                    ", listed 0.29915); h'=[0]: " + fmt("%.7f", r2) + " (exact " +
                    fmt("%.7f", b * b) + ", listed 0.42091 is truncated); matched RMS: " +
                    fmt("%g", r0)};
}

// Criterion 5 ---------------------------------------------------------------

OtterModel decoding_model(bool random_heads) {
  auto m = make_base_model<float>(testing::small_config(), 21);
  OtterConfig e;
  const int r = insert_extension(m, e, 22);
  attach_reward_head(m, r);
  attach_generation_heads(m, r, 4, 1);
  const int pos = insert_extension(m, e, 23);
  attach_generation_heads(m, pos, 1, 0, "expert");
  const int neg = insert_extension(m, e, 24);
  attach_generation_heads(m, neg, 1, 0, "anti");
  m.freeze();
  if (random_heads) {
    std::mt19937_64 rng(25);
    for (auto& h : m.heads) testing::randomize(h.weight, rng, 1.0);
  }
  return m;
}

Outcome decoder_equivalences() {
  const auto zero = decoding_model(false), rnd = decoding_model(true);
  const auto prompts = testing::random_prompts(50, 64, 12, 26);
  int checks = 0, mismatches = 0;
  auto same = [&](const OtterModel& m, const std::vector<int>& pr, DecodeParams a,
                  DecodeParams b) {
    ++checks;
    if (decode(m, pr, a).tokens != decode(m, pr, b).tokens) ++mismatches;
  };
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const auto& pr = prompts[i];
    DecodeParams base;
    base.max_new_tokens = 16;
    base.seed = 1000 + i;
    base.reward_ext = 1;
    base.draft_ext = 1;
    base.expert_ext = 2;
    base.anti_ext = 3;
    auto with = [&](Strategy s) {
      DecodeParams p = base;
      p.strategy = s;
      return p;
    };
    // ARGS, w = 0.
    for (LmTerm term : {LmTerm::kProbability, LmTerm::kLogProbability}) {
      auto a = with(Strategy::kArgsGreedy);
      a.w = 0.0;
      a.lm_term = term;
      same(rnd, pr, a, with(Strategy::kGreedy));
    }
    auto at = with(Strategy::kArgsTopK);
    at.w = 0.0;
    at.lm_term = LmTerm::kLogProbability;
    same(rnd, pr, at, with(Strategy::kTopK));
    // DEXP, alpha = 0, and identical logits for alpha 0.5 and 2.0.
    for (Strategy s : {Strategy::kDexp, Strategy::kDexpAnti}) {
      auto d = with(s);
      d.alpha = 0.0;
      same(rnd, pr, d, with(Strategy::kTopP));
      for (double alpha : {0.5, 2.0}) {
        d.alpha = alpha;
        same(zero, pr, d, with(Strategy::kTopP));
      }
    }
    // Speculative, zero and random heads.
    same(zero, pr, with(Strategy::kSpeculative), with(Strategy::kGreedy));
    same(rnd, pr, with(Strategy::kSpeculative), with(Strategy::kGreedy));
  }
  return {mismatches == 0,
          std::to_string(mismatches) + " mismatches in " + std::to_string(checks) +
              " token-for-token comparisons over 50 prompts (ARGS w=0 greedy and top-k, "
              "DEXP alpha=0, DEXP z=z+=z- alpha 0.5/2.0, speculative vs greedy)"};
}

// Criterion 6 ---------------------------------------------------------------

TrainConfig toy_train(int steps) {
  TrainConfig tc;
  tc.steps = steps;
  tc.lr = 3e-3;
  tc.batch_size = 8;
  return tc;
}

Outcome args_effect() {
  auto spec = default_corpus_spec(CorpusKind::kPreference, 11);
  spec.count = 512;
  spec.n_prompts = 40;
  const Corpus c = gen_corpus(spec);
  auto base = make_base_model<float>(testing::small_config(), 1);
  train_base(base, c.sequences, toy_train(400));
  // Reward model used by the decoder and an independently trained
  // evaluation reward model on the other half of the pairs.
  const std::size_t half = c.pairs.size() / 2;
  const std::vector<PreferencePair> train_pairs(c.pairs.begin(), c.pairs.begin() + half);
  const std::vector<PreferencePair> eval_pairs(c.pairs.begin() + half, c.pairs.end());
  OtterConfig oc;
  oc.init = InitStrategy::kCopy;
  oc.name = "reward";
  TrainConfig rc = toy_train(400);
  rc.reg_lambda = 5.0;
  OtterModel m = base;
  const int k = insert_extension(m, oc, 9);
  train_reward(m, k, train_pairs, rc);
  OtterModel ev = base;
  const int ke = insert_extension(ev, oc, 17);
  rc.seed = 5;
  rc.steps = 800;
  train_reward(ev, ke, eval_pairs, rc);

  const std::set<int> good(spec.good_lexicon.begin(), spec.good_lexicon.end());
  DecodeParams dp;
  dp.max_new_tokens = 16;
  dp.reward_ext = k;
  dp.w = 1.5;
  dp.k = 10;
  double oracle_base = 0, oracle_args = 0;
  std::vector<std::vector<int>> rb, ra;
  for (const auto& p : c.prompts) {
    dp.strategy = Strategy::kGreedy;
    const auto b = decode(m, p, dp);
    dp.strategy = Strategy::kArgsGreedy;
    const auto a = decode(m, p, dp);
    oracle_base += lexicon_count(b.tokens, good) / 16.0;
    oracle_args += lexicon_count(a.tokens, good) / 16.0;
    auto fb = p;
    fb.insert(fb.end(), b.tokens.begin(), b.tokens.end());
    rb.push_back(fb);
    auto fa = p;
    fa.insert(fa.end(), a.tokens.begin(), a.tokens.end());
    ra.push_back(fa);
  }
  oracle_base /= c.prompts.size();
  oracle_args /= c.prompts.size();
  const double r_base = avg_reward(ev, ke, rb), r_args = avg_reward(ev, ke, ra);
  const double rel = oracle_base > 0 ? oracle_args / oracle_base - 1.0 : 0.0;
  return {oracle_base > 0 && rel >= 0.10 && r_args > r_base,
          "oracle lexicon reward " + fmt("%.4f", oracle_base) + " -> " +
              fmt("%.4f", oracle_args) + " (" + fmt("%+.1f", 100 * rel) +
              "%, need >= +10%); eval avg_reward " + fmt("%.4f", r_base) + " -> " +
              fmt("%.4f", r_args)};
}

// Criterion 7 ---------------------------------------------------------------

Outcome dexp_effect() {
  auto spec = default_corpus_spec(CorpusKind::kToxicity, 13);
  spec.count = 512;
  spec.n_prompts = 40;
  const Corpus c = gen_corpus(spec);
  auto base = make_base_model<float>(testing::small_config(), 1);
  train_base(base, c.sequences, toy_train(400));
  OtterModel m = base;
  OtterConfig pc;
  pc.init = InitStrategy::kCopy;
  pc.name = "expert";
  pc.reg_lambda = 10;
  TrainConfig xc = toy_train(300);
  xc.reg_lambda = 10;
  const int kp = insert_extension(m, pc, 21);
  train_expert(m, kp, c.clean, xc);
  OtterConfig nc = pc;
  nc.name = "anti";
  const int kn = insert_extension(m, nc, 22);
  train_expert(m, kn, c.toxic, xc);

  const std::set<int> tox(spec.toxic_lexicon.begin(), spec.toxic_lexicon.end());
  DecodeParams dp;
  dp.max_new_tokens = 16;
  dp.p = 0.9;
  dp.alpha = 2.0;
  dp.expert_ext = kp;
  dp.anti_ext = kn;
  std::vector<std::vector<std::vector<int>>> sb, sd, sa;
  for (const auto& p : c.prompts) {
    std::vector<std::vector<int>> b, d, a;
    for (int s = 0; s < 8; ++s) {
      dp.seed = static_cast<std::uint64_t>(s);
      dp.strategy = Strategy::kTopP;
      b.push_back(decode(m, p, dp).tokens);
      dp.strategy = Strategy::kDexp;
      d.push_back(decode(m, p, dp).tokens);
      dp.strategy = Strategy::kDexpAnti;
      a.push_back(decode(m, p, dp).tokens);
    }
    sb.push_back(b);
    sd.push_back(d);
    sa.push_back(a);
  }
  const auto tb = lexicon_toxicity(sb, tox), td = lexicon_toxicity(sd, tox),
             ta = lexicon_toxicity(sa, tox);
  const double drop = tb.avg_max > 0 ? 1.0 - td.avg_max / tb.avg_max : 0.0;
  return {tb.avg_max > 0 && drop >= 0.30 && ta.avg_max < tb.avg_max,
          "avg_max top-p " + fmt("%.4f", tb.avg_max) + ", dexp " + fmt("%.4f", td.avg_max) +
              " (" + fmt("%.1f", 100 * drop) + "% drop, need >= 30%), anti-only " +
              fmt("%.4f", ta.avg_max) + "; prob_any " + fmt("%.3f", tb.prob_any) + " / " +
              fmt("%.3f", td.prob_any) + " / " + fmt("%.3f", ta.prob_any)};
}

// Criterion 8 ---------------------------------------------------------------

Outcome speculative_effect() {
  auto spec = default_corpus_spec(CorpusKind::kSpeculative, 7);
  spec.count = 512;
  const Corpus c = gen_corpus(spec);
  auto base = make_base_model<float>(testing::small_config(), 1);
  train_base(base, c.sequences, toy_train(300));
  OtterModel m = base;
  OtterConfig oc;
  oc.d_ext = 16;
  oc.d_inner_ext = 32;
  oc.n_ext_heads = 2;
  oc.init = InitStrategy::kCopy;
  const int k = insert_extension(m, oc, 9);
  TrainConfig dc = toy_train(300);
  dc.reg_lambda = 50;
  dc.K = 4;
  dc.medusa_c = 0.8;
  train_draft_heads(m, k, c.sequences, dc);

  DecodeParams sp;
  sp.strategy = Strategy::kSpeculative;
  sp.max_new_tokens = 20;
  sp.draft_ext = k;
  DecodeParams gp = sp;
  gp.strategy = Strategy::kGreedy;
  double accepted = 0.0;
  int identical = 0;
  for (const auto& p : c.prompts) {
    const auto r = decode(m, p, sp);
    accepted += r.average_accepted();
    identical += r.tokens == decode(m, p, gp).tokens;
  }
  accepted /= c.prompts.size();
  OverheadOptions opts;
  opts.per_pass = true;
  const auto report = measure_overhead(base, gp, m, sp, c.prompts, opts);
  const double identity = std::abs(report.speedup - report.accepted_length / report.time_ratio);
  const auto table = make_overhead_report(1.07, 1.0, 2.91);
  const bool pass = accepted > 1.5 && identity <= 1e-9 &&
                    std::abs(table.speedup - 2.72) <= 5e-3 &&
                    identical == static_cast<int>(c.prompts.size());
  return {pass, "avg accepted " + fmt("%.3f", accepted) + " (need > 1.5); greedy-identical " +
                    std::to_string(identical) + "/" + std::to_string(c.prompts.size()) +
                    "; report " + to_json_line(report) + ", |speedup - accepted/time| " +
                    fmt("%.1e", identity) + "; 2.91/1.07 = " + fmt("%.4f", table.speedup)};
}

// Criterion 9 ---------------------------------------------------------------

Outcome parameter_accounting() {
  std::mt19937_64 rng(9);
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng() % (hi - lo + 1)); };
  int agree = 0;
  std::ostringstream bad;
  for (int trial = 0; trial < 20; ++trial) {
    ModelConfig mc;
    mc.vocab_size = pick(4, 80);
    mc.n_heads = pick(1, 4);
    mc.head_dim = 2 * pick(1, 4);
    mc.d_model = mc.n_heads * mc.head_dim;
    mc.d_inner = pick(1, 48);
    mc.n_layers = pick(1, 4);
    OtterConfig oc;
    oc.d_ext = pick(1, 12);
    oc.d_inner_ext = pick(0, 24);
    oc.n_ext_heads = pick(0, 3);
    OtterModel m = make_base_model<float>(mc, trial);
    const int k = insert_extension(m, oc, trial);
    if (rng() % 2) attach_reward_head(m, k);
    const int drafts = pick(0, 3);
    if (drafts > 0) attach_generation_heads(m, k, drafts, 1);
    // Independent enumeration: trainable elements of the new extension,
    // task heads included.
    std::int64_t enumerated = 0, head_params = 0;
    m.for_each_parameter([&](const Parameter<float>& p) {
      for (std::size_t i = 0; i < p.value.size(); ++i) enumerated += p.trainable[i];
    });
    for (const auto& h : m.heads) head_params += h.weight.value.size();
    const auto pc = count_params(m);
    const std::int64_t analytic = analytic_added_count(mc, {oc}, head_params);
    if (analytic == enumerated && pc.added_analytic == analytic &&
        pc.added_enumerated == enumerated && pc.base == analytic_base_count(mc)) {
      ++agree;
    } else {
      bad << " trial " << trial << ": analytic " << analytic << " enumerated " << enumerated;
    }
  }
  const auto r = llama7b_report();
  std::ostringstream d;
  d << agree << "/20 configurations agree exactly" << bad.str()
    << "; informational 7B report: base " << fmt("%.4g", r.base / 1e9) << "B (reference "
    << fmt("%.3g", r.reference_base / 1e9) << "B), total " << fmt("%.4g", r.total / 1e9)
    << "B (reference " << fmt("%.3g", r.reference_total / 1e9) << "B, difference "
    << fmt("%+.2f", (r.total - r.reference_total) / 1e9) << "B)";
  return {agree == 20, d.str()};
}

// Criterion 10 --------------------------------------------------------------

Outcome init_ordering() {
  auto spec = default_corpus_spec(CorpusKind::kSpeculative, 7);
  spec.count = 512;
  const Corpus c = gen_corpus(spec);
  auto base = make_base_model<float>(testing::small_config(), 1);
  train_base(base, c.sequences, toy_train(300));
  TrainConfig dc = toy_train(200);
  dc.K = 4;
  const std::vector<std::vector<int>> train(c.sequences.begin(), c.sequences.begin() + 448);
  const std::vector<std::vector<int>> held(c.sequences.begin() + 448, c.sequences.end());
  const auto runs = init_study(base, OtterConfig{}, train, held, dc, 42);
  double loss[3] = {0, 0, 0}, eval[3] = {0, 0, 0};
  std::ostringstream d;
  for (const auto& r : runs) {
    const int i = static_cast<int>(r.strategy == InitStrategy::kRandom ? 0
                                   : r.strategy == InitStrategy::kNormal ? 1
                                                                         : 2);
    loss[i] = r.final_loss;
    eval[i] = r.eval.loss;
    d << to_string(r.strategy) << " final " << fmt("%.4f", r.final_loss) << " held-out "
      << fmt("%.4f", r.eval.loss) << "; ";
  }
  d << "copy - normal held-out gap " << fmt("%+.4f", eval[2] - eval[1]) << " (reported)";
  return {runs.size() == 3 && loss[2] < loss[0] && loss[1] < loss[0], d.str()};
}

// Criterion 11 --------------------------------------------------------------

Outcome checkpoint_round_trip() {
  auto m = make_base_model<float>(testing::small_config(), 31);
  OtterConfig oc;
  oc.init = InitStrategy::kCopy;
  const int k = insert_extension(m, oc, 32);
  attach_reward_head(m, k);
  attach_generation_heads(m, k, 3, 1);
  std::mt19937_64 rng(33);
  for (auto& h : m.heads) testing::randomize(h.weight, rng, 0.3);
  const std::string path = "otter_acceptance_ckpt.bin";
  save_checkpoint(m, path);
  const OtterModel loaded = load_checkpoint(path);
  std::remove(path.c_str());
  const std::string first = serialize_checkpoint(m), second = serialize_checkpoint(loaded);
  const bool identical = first == second;

  // Flip one byte inside every tensor's payload region.
  const std::size_t nl1 = first.find('\n'), nl2 = first.find('\n', nl1 + 1);
  const std::size_t payload =
      nl2 + 1 + std::stoull(first.substr(nl1 + 1, nl2 - nl1 - 1));
  std::vector<std::string> names;
  std::vector<std::size_t> sizes;
  m.for_each_parameter([&](const Parameter<float>& p) {
    names.push_back(p.name);
    sizes.push_back(p.value.size() * 4);
  });
  int detected = 0;
  std::size_t offset = 0;
  for (std::size_t t = 0; t < names.size(); ++t) {
    std::string bad = first;
    const std::size_t at = payload + offset + (rng() % sizes[t]);
    bad[at] = static_cast<char>(bad[at] ^ 0x04);
    try {
      deserialize_checkpoint(bad);
    } catch (const CorruptionError& e) {
      detected += e.tensor() == names[t];
    }
    offset += sizes[t];
  }
  return {identical && detected == static_cast<int>(names.size()),
          std::string("save -> load -> save ") + (identical ? "byte-identical" : "DIFFERS") +
              " (" + std::to_string(first.size()) + " bytes); corruption detected with the "
              "right tensor name in " + std::to_string(detected) + "/" +
              std::to_string(names.size()) + " tensors"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace otter

int main(int argc, char** argv) {
  using namespace otter;
  CLI::App app{"Otter acceptance suite"};
  std::vector<int> only;
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all = {
      {1, "non-disruption", non_disruption},
      {2, "restricted rmsnorm exactness", restricted_norm},
      {3, "gradient correctness", gradients},
      {4, "norm regularizer values", reg_formula},
      {5, "decoder equivalences", decoder_equivalences},
      {6, "reward-guided decoding toy effect", args_effect},
      {7, "expert mixing toy effect", dexp_effect},
      {8, "speculative decoding toy effect", speculative_effect},
      {9, "parameter accounting", parameter_accounting},
      {10, "initialization study", init_ordering},
      {11, "checkpoint round trip", checkpoint_round_trip},
  };
  int failed = 0, ran = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("[%s] %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
