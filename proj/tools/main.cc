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

// Command-line driver. Options may also come from a JSON file given with
// --config: top-level keys set global options, nested objects named after a
// subcommand set that subcommand's options. Explicit flags win over the
// file, and the file wins over OTTER_SEED.

#include <functional>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "commands.h"
#include "json.hpp"
#include "otter/errors.h"

namespace otter::cli {
namespace {

class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool,
                        std::string) const override {
    nlohmann::json j;
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames().front();
      if (opt->count() > 0) {
        j[name] = opt->results().size() == 1 ? nlohmann::json(opt->results().front())
                                             : nlohmann::json(opt->results());
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(input);
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config file: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  }

  static void collect(const nlohmann::json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto p = parents;
        p.push_back(key);
        collect(value, p, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

void add_seed(CLI::App* sub, std::uint64_t& seed) {
  sub->add_option("--seed", seed, "Random seed")->envname("OTTER_SEED")->capture_default_str();
}

void add_train(CLI::App* sub, TrainConfig& t) {
  sub->add_option("--steps", t.steps, "Optimizer steps")->capture_default_str();
  sub->add_option("--lr", t.lr, "Learning rate")->capture_default_str();
  sub->add_option("--warmup", t.warmup_fraction, "Warm-up fraction of the steps")
      ->capture_default_str();
  sub->add_option("--batch", t.batch_size, "Batch size")->capture_default_str();
  sub->add_option("--lambda", t.reg_lambda, "Norm regularizer weight")->capture_default_str();
  sub->add_option("--weight-decay", t.weight_decay, "Decoupled weight decay")
      ->capture_default_str();
}

void add_verify(CLI::App* sub, VerifyOptions& v) {
  sub->add_option("--prompts", v.prompts, "Random verification prompts")->capture_default_str();
  sub->add_option("--max-len", v.max_len, "Longest verification prompt")->capture_default_str();
  sub->add_option("--tol", v.tol, "Max-abs logit deviation allowed")->capture_default_str();
  sub->add_option("--report", v.report, "Deviation report path");
}

void add_ext(CLI::App* sub, OtterConfig& e) {
  sub->add_option("--name", e.name, "Extension name")->capture_default_str();
  sub->add_option("--d-ext", e.d_ext, "Added residual width")->capture_default_str();
  sub->add_option("--d-inner-ext", e.d_inner_ext, "Added FFN inner width")
      ->capture_default_str();
  sub->add_option("--ext-heads", e.n_ext_heads, "Added attention heads")->capture_default_str();
  sub->add_option_function<std::string>(
         "--init", [&e](const std::string& s) { e.init = parse_init_strategy(s); },
         "Initialization: random, normal or copy")
      ->default_str("normal");
}

void add_decode_params(CLI::App* sub, DecodeParams& p) {
  sub->add_option("--k", p.k, "Top-k / ARGS candidate count")->capture_default_str();
  sub->add_option("--p", p.p, "Nucleus mass")->capture_default_str();
  sub->add_option("--tau", p.tau, "Temperature")->capture_default_str();
  sub->add_option("--w", p.w, "ARGS reward weight")->capture_default_str();
  sub->add_option("--alpha", p.alpha, "DEXP mixing weight")->capture_default_str();
  sub->add_option("--max-new", p.max_new_tokens, "Tokens to generate")->capture_default_str();
  sub->add_option("--reward-ext", p.reward_ext, "Reward extension (0: detect)");
  sub->add_option("--expert-ext", p.expert_ext, "Expert extension (0: detect)");
  sub->add_option("--anti-ext", p.anti_ext, "Anti-expert extension (0: detect)");
  sub->add_option("--draft-ext", p.draft_ext, "Draft-head extension (0: detect)");
}

int run(int argc, char** argv) {
  CLI::App app{"otter: extension insertion, training and decoding for small transformers"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON configuration file");
  app.require_subcommand(1);
  std::function<int()> action;

  GenCorpusOptions gc;
  auto* s = app.add_subcommand("gen-corpus", "Generate a synthetic corpus");
  s->add_option("--kind", gc.kind, "preference, toxicity or speculative")->required();
  s->add_option("--out", gc.out, "Corpus path")->required();
  s->add_option("--count", gc.count, "Training sequences or pairs");
  s->add_option("--n-prompts", gc.prompts, "Held-out prompts");
  s->add_option("--seq-len", gc.seq_len, "Sequence length");
  s->add_option("--prompt-len", gc.prompt_len, "Prompt length");
  s->add_option("--vocab", gc.vocab, "Active vocabulary size");
  add_seed(s, gc.seed);
  s->callback([&] { action = [&] { return gen_corpus_cmd(gc); }; });

  TrainBaseOptions tb;
  tb.model.n_layers = 4;
  s = app.add_subcommand("train-base", "Train a base language model on a corpus");
  s->add_option("--corpus", tb.corpus, "Corpus path")->required();
  s->add_option("--out", tb.out, "Checkpoint path")->required();
  s->add_option("--metrics", tb.metrics, "JSON-lines metrics path");
  s->add_option("--vocab-size", tb.model.vocab_size, "Vocabulary size")->capture_default_str();
  s->add_option("--d-model", tb.model.d_model, "Residual width")->capture_default_str();
  s->add_option("--d-inner", tb.model.d_inner, "FFN inner width")->capture_default_str();
  s->add_option("--layers", tb.model.n_layers, "Blocks")->capture_default_str();
  s->add_option("--heads", tb.model.n_heads, "Attention heads")->capture_default_str();
  s->add_option("--max-seq", tb.model.max_seq_len, "Context length")->capture_default_str();
  add_train(s, tb.train);
  add_seed(s, tb.seed);
  s->callback([&] {
    tb.model.head_dim = tb.model.n_heads > 0 ? tb.model.d_model / tb.model.n_heads : 0;
    action = [&] { return train_base_cmd(tb); };
  });

  InsertOptions in;
  s = app.add_subcommand("insert", "Add an extension to a checkpoint");
  s->add_option("--in", in.in, "Input checkpoint")->required();
  s->add_option("--out", in.out, "Output checkpoint")->required();
  add_ext(s, in.ext);
  add_seed(s, in.seed);
  s->callback([&] { action = [&] { return insert_cmd(in); }; });

  InitOptions io;
  s = app.add_subcommand("init", "Re-initialize the newest extension");
  s->add_option("--in", io.in, "Input checkpoint")->required();
  s->add_option("--out", io.out, "Output checkpoint")->required();
  s->add_option("--strategy", io.strategy, "random, normal or copy")->capture_default_str();
  add_seed(s, io.seed);
  s->callback([&] { action = [&] { return init_cmd(io); }; });

  TrainExtOptions tr, te, th;
  auto add_train_ext = [&](const char* name, const char* help, TrainExtOptions& o) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--in", o.in, "Checkpoint whose newest extension trains")->required();
    sub->add_option("--corpus", o.corpus, "Corpus path")->required();
    sub->add_option("--out", o.out, "Output checkpoint")->required();
    sub->add_option("--metrics", o.metrics, "JSON-lines metrics path");
    add_train(sub, o.train);
    add_verify(sub, o.verify);
    add_seed(sub, o.seed);
    return sub;
  };
  s = add_train_ext("train-reward", "Train a reward head on preference pairs", tr);
  s->callback([&] { action = [&] { return train_reward_cmd(tr); }; });
  s = add_train_ext("train-experts", "Train an expert or anti-expert", te);
  s->add_option("--role", te.role, "positive or negative")
      ->required()
      ->check(CLI::IsMember({"positive", "negative"}));
  s->callback([&] { action = [&] { return train_experts_cmd(te); }; });
  s = add_train_ext("train-heads", "Train speculative draft heads", th);
  s->add_option("--K", th.train.K, "Draft heads")->capture_default_str();
  s->add_option("--c", th.train.medusa_c, "Per-lookahead loss decay")->capture_default_str();
  s->callback([&] { action = [&] { return train_heads_cmd(th); }; });

  VerifyCommandOptions vo;
  s = app.add_subcommand("verify", "Check non-disruption of an extended checkpoint");
  s->add_option("--base", vo.base, "Base checkpoint")->required();
  s->add_option("--otter", vo.otter, "Extended checkpoint")->required();
  add_verify(s, vo.verify);
  add_seed(s, vo.seed);
  s->callback([&] { action = [&] { return verify_cmd(vo); }; });

  DecodeOptions dec;
  dec.params.reward_ext = dec.params.expert_ext = dec.params.anti_ext =
      dec.params.draft_ext = 0;
  s = app.add_subcommand("decode", "Generate continuations");
  s->add_option("--model", dec.model, "Checkpoint")->required();
  s->add_option("--strategy", dec.strategy,
                "greedy, topk, topp, args_greedy, args_topk, dexp, dexp_anti or speculative")
      ->capture_default_str();
  s->add_option("--prompt", dec.prompts, "Prompt tokens, e.g. \"3 1 4\"; repeatable");
  s->add_option("--corpus", dec.corpus, "Use the corpus's held-out prompts");
  s->add_option("--n-prompts", dec.n_prompts, "Limit the number of corpus prompts");
  s->add_option("--lm-term", dec.lm_term, "ARGS LM term: prob or logprob")
      ->capture_default_str();
  s->add_option("--out", dec.out, "JSON-lines output path (default stdout)");
  add_decode_params(s, dec.params);
  add_seed(s, dec.params.seed);
  s->callback([&] { action = [&] { return decode_cmd(dec); }; });

  BenchOptions bo;
  bo.params.reward_ext = bo.params.expert_ext = bo.params.anti_ext = bo.params.draft_ext = 0;
  bo.train.steps = 200;
  bo.seed = 42;
  s = app.add_subcommand("bench", "Overhead, initialization and scale studies");
  s->add_option("--study", bo.study, "overhead, init or scale")
      ->required()
      ->check(CLI::IsMember({"overhead", "init", "scale"}));
  s->add_option("--model", bo.model, "Modified checkpoint (overhead)");
  s->add_option("--base", bo.base, "Base checkpoint");
  s->add_option("--corpus", bo.corpus, "Corpus path");
  s->add_option("--out", bo.out, "JSON-lines output path (default stdout)");
  s->add_option("--strategy", bo.strategy, "Modified decoding strategy")->capture_default_str();
  s->add_option("--base-strategy", bo.base_strategy, "Baseline strategy (default: matching)");
  s->add_option("--n-prompts", bo.n_prompts, "Workload prompts")->capture_default_str();
  s->add_option("--repetitions", bo.repetitions, "Timed repetitions")->capture_default_str();
  s->add_flag("--per-pass", bo.per_pass, "Compare time per forward pass");
  s->add_option("--heldout-fraction", bo.heldout_fraction, "Init study held-out share")
      ->capture_default_str();
  s->add_option("--K", bo.train.K, "Draft heads (init study)")->capture_default_str();
  s->add_option("--c", bo.train.medusa_c, "Per-lookahead decay")->capture_default_str();
  add_decode_params(s, bo.params);
  add_train(s, bo.train);
  add_ext(s, bo.ext);
  add_seed(s, bo.seed);
  s->callback([&] { action = [&] { return bench_cmd(bo); }; });

  InspectOptions ins;
  s = app.add_subcommand("inspect", "Summarize a checkpoint");
  s->add_option("--model", ins.model, "Checkpoint")->required();
  s->callback([&] { action = [&] { return inspect_cmd(ins); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  try {
    return action();
  } catch (const VerificationError& e) {
    std::cerr << "verification failed: " << e.what() << '\n';
    return kExitVerifyFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace
}  // namespace otter::cli

int main(int argc, char** argv) { return otter::cli::run(argc, argv); }
