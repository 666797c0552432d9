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

#include "commands.h"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>

#include "json.hpp"
#include "otter/checkpoint.h"
#include "otter/corpus.h"
#include "otter/heads.h"
#include "otter/metrics.h"
#include "otter/recipes.h"

namespace otter::cli {
namespace {

using nlohmann::json;

// Output sink: the named file, or stdout when `path` is empty.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw InputError("cannot write " + path);
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::unique_ptr<std::ofstream> open_metrics(const std::string& path) {
  if (path.empty()) return nullptr;
  auto out = std::make_unique<std::ofstream>(path);
  if (!*out) throw InputError("cannot write metrics " + path);
  return out;
}

std::vector<int> parse_tokens(const std::string& text) {
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::vector<int> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw InputError("bad token '" + tok + "' in prompt");
    out.push_back(v);
  }
  if (out.empty()) throw InputError("empty prompt");
  return out;
}

std::vector<std::vector<int>> random_prompts(int n, int vocab, int max_len,
                                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<int>> out;
  for (int i = 0; i < n; ++i) {
    const int len = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_len));
    std::vector<int> p;
    for (int t = 0; t < len; ++t) {
      p.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(vocab)));
    }
    out.push_back(std::move(p));
  }
  return out;
}

OtterModel strip_to_base(OtterModel m) {
  while (m.num_extensions() > 0) m = remove_last_extension(m);
  return m;
}

json step_summary(const std::vector<StepRecord>& records) {
  if (records.empty()) return json::object();
  const StepRecord& last = records.back();
  return {{"steps", records.size()},
          {"first_task_loss", records.front().task_loss},
          {"final_task_loss", last.task_loss},
          {"final_reg", last.reg},
          {"final_total", last.total}};
}

struct VerifyOutcome {
  bool passed = false;
  json summary;
};

// Runs the non-disruption check of `otter` against `base` and writes the
// deviation report.
VerifyOutcome run_verify(const OtterModel& base, const OtterModel& otter,
                         const VerifyOptions& v, std::uint64_t seed,
                         const std::string& report_path) {
  const int max_len = std::min(v.max_len, base.config.max_seq_len);
  const auto prompts = random_prompts(v.prompts, base.config.vocab_size, max_len, seed);
  json report = {{"tol", v.tol}, {"prompts", v.prompts}, {"seed", seed}};
  VerifyOutcome out;
  try {
    const NonDisruptionReport r = verify_non_disruption(base, otter, prompts, v.tol);
    out.passed = true;
    report["passed"] = true;
    report["max_deviation"] = r.max_deviation;
    report["per_prompt"] = r.per_prompt;
  } catch (const VerificationError& e) {
    report["passed"] = false;
    report["error"] = e.what();
    report["prompt_index"] = e.prompt_index();
    report["parameter"] = e.parameter();
  }
  std::ofstream f(report_path);
  if (!f) throw InputError("cannot write verification report " + report_path);
  f << report.dump(2) << '\n';
  out.summary = {{"passed", out.passed}, {"report", report_path}};
  if (out.passed) out.summary["max_deviation"] = report["max_deviation"];
  if (!out.passed) {
    std::cerr << "verification failed: " << report["error"].get<std::string>()
              << "\nreport: " << report_path << '\n';
  }
  return out;
}

std::string default_report(const std::string& checkpoint, const std::string& given) {
  return given.empty() ? checkpoint + ".verify.json" : given;
}

// Finds the newest extension carrying a head that satisfies `pred`; 0 when
// none does.
template <typename Pred>
int find_extension(const OtterModel& m, Pred pred) {
  int found = 0;
  for (const auto& h : m.heads) {
    if (pred(h)) found = std::max(found, h.extension);
  }
  return found;
}

void resolve_extensions(const OtterModel& m, DecodeParams& p) {
  if (p.reward_ext == 0) {
    p.reward_ext = find_extension(m, [](const auto& h) { return h.kind == HeadKind::kReward; });
  }
  if (p.expert_ext == 0) {
    p.expert_ext = find_extension(m, [](const auto& h) { return h.name == "expert"; });
  }
  if (p.anti_ext == 0) {
    p.anti_ext = find_extension(m, [](const auto& h) { return h.name == "anti"; });
  }
  if (p.draft_ext == 0) {
    p.draft_ext = find_extension(m, [](const auto& h) {
      return h.kind == HeadKind::kGeneration && h.lookahead >= 1;
    });
  }
}

Strategy baseline_for(Strategy s) {
  switch (s) {
    case Strategy::kTopK:
    case Strategy::kArgsTopK:
      return Strategy::kTopK;
    case Strategy::kTopP:
    case Strategy::kDexp:
    case Strategy::kDexpAnti:
      return Strategy::kTopP;
    default:
      return Strategy::kGreedy;
  }
}

using Recipe = std::function<std::vector<StepRecord>(OtterModel&, int, const Corpus&,
                                                     std::ostream*)>;

// Shared flow of the train-* commands: train the newest extension, verify
// the result against the base carried by the input checkpoint, then save.
int train_extension(const TrainExtOptions& o, const std::string& command,
                     const Recipe& recipe) {
  OtterModel model = load_checkpoint(o.in);
  if (model.num_extensions() == 0) {
    throw SequencingError(command + ": " + o.in + " has no extension; run insert first");
  }
  const int k = model.num_extensions();
  const OtterModel base = strip_to_base(model);
  const Corpus corpus = load_corpus(o.corpus);
  auto metrics = open_metrics(o.metrics);
  const auto records = recipe(model, k, corpus, metrics.get());
  const VerifyOutcome v =
      run_verify(base, model, o.verify, o.seed, default_report(o.out, o.verify.report));
  json line = {{"command", command}, {"extension", k}, {"training", step_summary(records)},
               {"verify", v.summary}};
  if (!v.passed) {
    std::cout << line.dump() << '\n';
    return kExitVerifyFailed;
  }
  save_checkpoint(model, o.out);
  line["out"] = o.out;
  std::cout << line.dump() << '\n';
  return kExitOk;
}

}  // namespace

int gen_corpus_cmd(const GenCorpusOptions& o) {
  CorpusSpec spec = default_corpus_spec(parse_corpus_kind(o.kind), o.seed);
  if (o.count > 0) spec.count = o.count;
  if (o.prompts > 0) spec.n_prompts = o.prompts;
  if (o.seq_len > 0) spec.seq_len = o.seq_len;
  if (o.prompt_len > 0) spec.prompt_len = o.prompt_len;
  if (o.vocab > 0) spec.active_vocab = o.vocab;
  const Corpus c = gen_corpus(spec);
  save_corpus(c, o.out);
  std::cout << json{{"command", "gen-corpus"}, {"kind", o.kind},     {"seed", o.seed},
                    {"sequences", c.sequences.size()}, {"pairs", c.pairs.size()},
                    {"clean", c.clean.size()},         {"toxic", c.toxic.size()},
                    {"prompts", c.prompts.size()},     {"out", o.out}}
                   .dump()
            << '\n';
  return kExitOk;
}

int train_base_cmd(const TrainBaseOptions& o) {
  const Corpus c = load_corpus(o.corpus);
  ModelConfig mc = o.model;
  if (mc.vocab_size < c.spec.active_vocab) {
    throw ConfigError("train-base: vocab size " + std::to_string(mc.vocab_size) +
                      " is smaller than the corpus vocabulary " +
                      std::to_string(c.spec.active_vocab));
  }
  OtterModel model = make_base_model<float>(mc, o.seed);
  TrainConfig tc = o.train;
  tc.seed = o.seed;
  auto metrics = open_metrics(o.metrics);
  const auto records = train_base(model, c.sequences, tc, metrics.get());
  save_checkpoint(model, o.out);
  std::cout << json{{"command", "train-base"},
                    {"training", step_summary(records)},
                    {"parameters", count_params(model).base},
                    {"out", o.out}}
                   .dump()
            << '\n';
  return kExitOk;
}

int insert_cmd(const InsertOptions& o) {
  OtterModel model = load_checkpoint(o.in);
  InitReport report;
  const int k = insert_extension(model, o.ext, o.seed, &report);
  save_checkpoint(model, o.out);
  const ParamCount pc = count_params(model);
  std::cout << json{{"command", "insert"},
                    {"extension", k},
                    {"name", o.ext.name},
                    {"init", to_string(o.ext.init)},
                    {"added_parameters", pc.added_analytic},
                    {"ratio", pc.ratio},
                    {"out", o.out}}
                   .dump()
            << '\n';
  return kExitOk;
}

int init_cmd(const InitOptions& o) {
  OtterModel model = load_checkpoint(o.in);
  if (model.num_extensions() == 0) {
    throw SequencingError("init: " + o.in + " has no extension to initialize");
  }
  const int k = model.num_extensions();
  const InitStrategy s = parse_init_strategy(o.strategy);
  init_params(model, k, s, o.seed);
  model.extensions[k - 1].init = s;
  save_checkpoint(model, o.out);
  std::cout << json{{"command", "init"}, {"extension", k}, {"strategy", o.strategy},
                    {"seed", o.seed},    {"out", o.out}}
                   .dump()
            << '\n';
  return kExitOk;
}

int train_reward_cmd(const TrainExtOptions& o) {
  TrainConfig tc = o.train;
  tc.seed = o.seed;
  return train_extension(o, "train-reward",
                         [&](OtterModel& m, int k, const Corpus& c, std::ostream* log) {
                           if (c.pairs.empty()) {
                             throw ConfigError("train-reward: corpus has no preference pairs");
                           }
                           return train_reward(m, k, c.pairs, tc, log);
                         });
}

int train_experts_cmd(const TrainExtOptions& o) {
  const bool positive = o.role == "positive";
  if (!positive && o.role != "negative") {
    throw ConfigError("train-experts: --role must be positive or negative");
  }
  TrainConfig tc = o.train;
  tc.seed = o.seed;
  const std::string head = positive ? "expert" : "anti";
  return train_extension(
      o, "train-experts", [&](OtterModel& m, int k, const Corpus& c, std::ostream* log) {
        if (positive) {
          for (const auto& h : m.heads) {
            if (h.name == "anti") {
              throw SequencingError(
                  "train-experts: the positive expert must be trained before the "
                  "negative expert is stacked");
            }
          }
        }
        const auto& data = positive ? c.clean : c.toxic;
        if (data.empty()) {
          throw ConfigError("train-experts: corpus has no " +
                            std::string(positive ? "clean" : "toxic") + " sequences");
        }
        if (heads_of(m, k, HeadKind::kGeneration).empty()) {
          attach_generation_heads(m, k, 1, 0, head);
        }
        return train_expert(m, k, data, tc, log);
      });
}

int train_heads_cmd(const TrainExtOptions& o) {
  TrainConfig tc = o.train;
  tc.seed = o.seed;
  return train_extension(o, "train-heads",
                         [&](OtterModel& m, int k, const Corpus& c, std::ostream* log) {
                           return train_draft_heads(m, k, c.sequences, tc, log);
                         });
}

int verify_cmd(const VerifyCommandOptions& o) {
  const OtterModel base = load_checkpoint(o.base);
  const OtterModel otter = load_checkpoint(o.otter);
  const VerifyOutcome v =
      run_verify(base, otter, o.verify, o.seed, default_report(o.otter, o.verify.report));
  json line = v.summary;
  line["command"] = "verify";
  std::cout << line.dump() << '\n';
  return v.passed ? kExitOk : kExitVerifyFailed;
}

int decode_cmd(const DecodeOptions& o) {
  const OtterModel model = load_checkpoint(o.model);
  DecodeParams p = o.params;
  p.strategy = parse_strategy(o.strategy);
  if (o.lm_term == "prob") {
    p.lm_term = LmTerm::kProbability;
  } else if (o.lm_term == "logprob") {
    p.lm_term = LmTerm::kLogProbability;
  } else {
    throw ConfigError("decode: --lm-term must be prob or logprob");
  }
  resolve_extensions(model, p);
  std::vector<std::vector<int>> prompts;
  for (const auto& s : o.prompts) prompts.push_back(parse_tokens(s));
  if (prompts.empty()) {
    if (o.corpus.empty()) throw ConfigError("decode: give --prompt or --corpus");
    prompts = load_corpus(o.corpus).prompts;
    if (o.n_prompts > 0 && static_cast<std::size_t>(o.n_prompts) < prompts.size()) {
      prompts.resize(static_cast<std::size_t>(o.n_prompts));
    }
  }
  Sink sink(o.out);
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    DecodeParams pi = p;
    pi.seed = p.seed + i;
    const DecodeResult r = decode(model, prompts[i], pi);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    sink.stream() << to_json_line(prompts[i], r) << '\n';
  }
  return kExitOk;
}

int bench_cmd(const BenchOptions& o) {
  Sink sink(o.out);
  if (o.study == "scale") {
    const ScaleReport r = llama7b_report();
    sink.stream() << json{{"study", "scale"},
                          {"base", r.base},
                          {"total", r.total},
                          {"ratio", static_cast<double>(r.total) / r.base},
                          {"reference_base", r.reference_base},
                          {"reference_total", r.reference_total}}
                         .dump()
                  << '\n';
    return kExitOk;
  }
  if (o.study == "overhead") {
    const OtterModel modified = load_checkpoint(o.model);
    const OtterModel base = o.base.empty() ? strip_to_base(modified) : load_checkpoint(o.base);
    DecodeParams mp = o.params;
    mp.strategy = parse_strategy(o.strategy);
    resolve_extensions(modified, mp);
    DecodeParams bp = o.params;
    bp.strategy = o.base_strategy.empty() ? baseline_for(mp.strategy)
                                          : parse_strategy(o.base_strategy);
    std::vector<std::vector<int>> prompts;
    if (!o.corpus.empty()) {
      prompts = load_corpus(o.corpus).prompts;
      if (static_cast<std::size_t>(o.n_prompts) < prompts.size()) {
        prompts.resize(static_cast<std::size_t>(o.n_prompts));
      }
    } else {
      prompts = random_prompts(o.n_prompts, base.config.vocab_size, 8, o.seed);
    }
    OverheadOptions opts;
    opts.repetitions = o.repetitions;
    opts.per_pass = o.per_pass || mp.strategy == Strategy::kSpeculative;
    const OverheadReport r = measure_overhead(base, bp, modified, mp, prompts, opts);
    json line = json::parse(to_json_line(r));
    line["study"] = "overhead";
    line["strategy"] = to_string(mp.strategy);
    line["base_strategy"] = to_string(bp.strategy);
    sink.stream() << line.dump() << '\n';
    return kExitOk;
  }
  if (o.study == "init") {
    const OtterModel base = load_checkpoint(o.base.empty() ? o.model : o.base);
    const Corpus c = load_corpus(o.corpus);
    const auto n_held = static_cast<std::size_t>(
        std::max(1.0, o.heldout_fraction * static_cast<double>(c.sequences.size())));
    if (n_held >= c.sequences.size()) throw ConfigError("bench: held-out split leaves no data");
    const std::vector<std::vector<int>> train(c.sequences.begin(), c.sequences.end() - n_held);
    const std::vector<std::vector<int>> held(c.sequences.end() - n_held, c.sequences.end());
    TrainConfig tc = o.train;
    tc.seed = o.seed;
    const auto runs = init_study(base, o.ext, train, held, tc, o.seed, &sink.stream());
    double loss[3] = {0, 0, 0}, eval[3] = {0, 0, 0};
    for (const auto& r : runs) {
      const int i = static_cast<int>(r.strategy);
      loss[i] = r.final_loss;
      eval[i] = r.eval.loss;
      sink.stream() << json{{"study", "init"},
                            {"strategy", to_string(r.strategy)},
                            {"final_loss", r.final_loss},
                            {"heldout_loss", r.eval.loss},
                            {"head1_accuracy", r.eval.head1_accuracy}}
                           .dump()
                    << '\n';
    }
    const int rnd = static_cast<int>(InitStrategy::kRandom);
    const int nrm = static_cast<int>(InitStrategy::kNormal);
    const int cpy = static_cast<int>(InitStrategy::kCopy);
    sink.stream() << json{{"study", "init"},
                          {"copy_below_random", loss[cpy] < loss[rnd]},
                          {"normal_below_random", loss[nrm] < loss[rnd]},
                          {"copy_minus_normal_heldout", eval[cpy] - eval[nrm]}}
                         .dump()
                  << '\n';
    return kExitOk;
  }
  throw ConfigError("bench: --study must be overhead, init or scale");
}

int inspect_cmd(const InspectOptions& o) {
  const OtterModel m = load_checkpoint(o.model);
  json exts = json::array();
  for (const auto& e : m.extensions) {
    exts.push_back({{"name", e.name},
                    {"d_ext", e.d_ext},
                    {"d_inner_ext", e.d_inner_ext},
                    {"n_ext_heads", e.n_ext_heads},
                    {"init", to_string(e.init)}});
  }
  json heads = json::array();
  for (const auto& h : m.heads) {
    heads.push_back({{"name", h.name},
                     {"kind", h.kind == HeadKind::kReward ? "reward" : "generation"},
                     {"extension", h.extension},
                     {"lookahead", h.lookahead}});
  }
  const ParamCount pc = count_params(m);
  const ModelConfig& c = m.config;
  std::cout << json{{"model_config",
                     {{"vocab_size", c.vocab_size},
                      {"d_model", c.d_model},
                      {"d_inner", c.d_inner},
                      {"n_layers", c.n_layers},
                      {"n_heads", c.n_heads},
                      {"head_dim", c.head_dim},
                      {"max_seq_len", c.max_seq_len}}},
                    {"extensions", exts},
                    {"heads", heads},
                    {"trainable_group", m.trainable_group},
                    {"parameters",
                     {{"base", pc.base},
                      {"added", pc.added_analytic},
                      {"allocated", pc.allocated},
                      {"ratio", pc.ratio}}}}
                   .dump(2)
            << '\n';
  return kExitOk;
}

}  // namespace otter::cli
