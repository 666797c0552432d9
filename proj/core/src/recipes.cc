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

#include "otter/recipes.h"

#include <algorithm>
#include <random>

#include "otter/heads.h"
#include "otter/sampling.h"

namespace otter {
namespace {

// Samples `batch` indices per step with a seeded generator.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, int batch, std::uint64_t seed)
      : n_(n), batch_(static_cast<std::size_t>(batch)), rng_(seed) {
    if (n_ == 0) throw InputError("training: empty data set");
  }
  std::vector<std::size_t> next() {
    std::vector<std::size_t> out(batch_);
    for (auto& i : out) {
      i = std::min(n_ - 1, static_cast<std::size_t>(uniform01(rng_) * static_cast<double>(n_)));
    }
    return out;
  }

 private:
  std::size_t n_;
  std::size_t batch_;
  std::mt19937_64 rng_;
};

AdamW<float> make_optimizer(const TrainConfig& c) {
  AdamWConfig a;
  a.lr = c.lr;
  a.warmup_fraction = c.warmup_fraction;
  a.weight_decay = c.weight_decay;
  a.total_steps = c.steps;
  return AdamW<float>(a);
}

void claim_extension(OtterModel& model, int k, const char* recipe) {
  if (k < 1 || k > model.num_extensions()) {
    throw ConfigError(std::string(recipe) + ": no extension " + std::to_string(k));
  }
  if (k != model.num_extensions()) {
    throw SequencingError(std::string(recipe) + ": extension " + std::to_string(k) +
                          " has later extensions stacked on top; only the newest "
                          "extension may train");
  }
  model.set_trainable_group(k);
}

std::vector<StepRecord> run(OtterModel& model, const TrainConfig& config, std::size_t n,
                            const ExampleLoss<float>& loss, double lambda,
                            const std::string& task, std::ostream* log) {
  config.validate();
  AdamW<float> opt = make_optimizer(config);
  BatchSampler sampler(n, config.batch_size, config.seed);
  std::vector<StepRecord> records;
  for (int s = 0; s < config.steps; ++s) {
    records.push_back(train_step(model, opt, loss, sampler.next(), lambda, task));
    if (log != nullptr) write_metrics(*log, records.back());
  }
  return records;
}

}  // namespace

std::vector<StepRecord> train_base(OtterModel& model,
                                   const std::vector<std::vector<int>>& sequences,
                                   const TrainConfig& config, std::ostream* log) {
  if (!model.extensions.empty()) {
    throw SequencingError("train_base: the model already has extensions");
  }
  model.set_trainable_group(kBaseGroup);
  auto loss = [&sequences](Tape<float>& tape, const OtterModel& m, std::size_t i) {
    return TaskLoss<float>{lm_loss(tape, m, sequences[i]), {}};
  };
  auto records = run(model, config, sequences.size(), loss, 0.0, "base", log);
  model.freeze();
  return records;
}

int insert_extension(OtterModel& model, const OtterConfig& cfg, std::uint64_t seed,
                     InitReport* report) {
  model.freeze();
  model = expand_model(model, cfg);
  const int k = model.num_extensions();
  InitReport r = init_params(model, k, cfg.init, seed);
  if (report != nullptr) *report = std::move(r);
  return k;
}

std::vector<StepRecord> train_reward(OtterModel& model, int k,
                                     const std::vector<PreferencePair>& pairs,
                                     const TrainConfig& config, std::ostream* log) {
  claim_extension(model, k, "train_reward");
  if (heads_of(model, k, HeadKind::kReward).empty()) attach_reward_head(model, k);
  auto loss = [&pairs, k](Tape<float>& tape, const OtterModel& m, std::size_t i) {
    return reward_loss(tape, m, k, pairs[i].chosen, pairs[i].rejected);
  };
  auto records = run(model, config, pairs.size(), loss, config.reg_lambda, "reward", log);
  model.freeze();
  return records;
}

std::vector<StepRecord> train_expert(OtterModel& model, int k,
                                     const std::vector<std::vector<int>>& sequences,
                                     const TrainConfig& config, std::ostream* log) {
  claim_extension(model, k, "train_expert");
  if (heads_of(model, k, HeadKind::kGeneration).empty()) {
    attach_generation_heads(model, k, 1, 0, model.extensions[k - 1].name);
  }
  auto loss = [&sequences, k](Tape<float>& tape, const OtterModel& m, std::size_t i) {
    return expert_lm_loss(tape, m, k, sequences[i]);
  };
  auto records =
      run(model, config, sequences.size(), loss, config.reg_lambda, "expert", log);
  model.freeze();
  return records;
}

std::vector<StepRecord> train_draft_heads(OtterModel& model, int k,
                                          const std::vector<std::vector<int>>& sequences,
                                          const TrainConfig& config, std::ostream* log) {
  claim_extension(model, k, "train_draft_heads");
  if (heads_of(model, k, HeadKind::kGeneration).empty()) {
    attach_generation_heads(model, k, config.K, 1, "draft");
  }
  const double c = config.medusa_c;
  auto loss = [&sequences, k, c](Tape<float>& tape, const OtterModel& m, std::size_t i) {
    return medusa_loss(tape, m, k, sequences[i], c);
  };
  auto records = run(model, config, sequences.size(), loss, config.reg_lambda, "draft", log);
  model.freeze();
  return records;
}

DraftEval evaluate_draft_heads(const OtterModel& model, int k,
                               const std::vector<std::vector<int>>& sequences, double c) {
  auto heads = heads_of(model, k, HeadKind::kGeneration);
  if (heads.empty()) throw ConfigError("evaluate_draft_heads: no draft heads");
  const TaskHead<float>* first = *std::min_element(
      heads.begin(), heads.end(),
      [](const TaskHead<float>* a, const TaskHead<float>* b) { return a->lookahead < b->lookahead; });
  DraftEval out;
  std::size_t hits = 0, total = 0;
  for (const auto& seq : sequences) {
    Tape<float> tape(false);
    out.loss += medusa_loss(tape, model, k, seq, c).task.value()[0];
    Tape<float> t2(false);
    const ForwardTrace<float> trace = model.forward(t2, seq);
    const Tensor<float>& lg = head_logits(model, trace, *first).value();
    for (std::size_t t = 0; t + 1 + first->lookahead < seq.size(); ++t) {
      const auto row = lg.row(t);
      hits += static_cast<int>(argmax(std::span<const float>(row.data(), row.size()))) ==
              seq[t + 1 + first->lookahead];
      ++total;
    }
  }
  if (!sequences.empty()) out.loss /= static_cast<double>(sequences.size());
  out.head1_accuracy = total == 0 ? 0.0 : static_cast<double>(hits) / total;
  return out;
}

std::vector<InitStudyRun> init_study(const OtterModel& base, const OtterConfig& cfg,
                                     const std::vector<std::vector<int>>& train,
                                     const std::vector<std::vector<int>>& heldout,
                                     const TrainConfig& config, std::uint64_t seed,
                                     std::ostream* log) {
  std::vector<InitStudyRun> runs;
  for (InitStrategy s : {InitStrategy::kRandom, InitStrategy::kNormal, InitStrategy::kCopy}) {
    OtterModel model = base;
    OtterConfig c = cfg;
    c.init = s;
    c.name = "draft_" + to_string(s);
    const int k = insert_extension(model, c, seed);
    InitStudyRun run;
    run.strategy = s;
    TrainConfig tc = config;
    std::vector<StepRecord> curve = train_draft_heads(model, k, train, tc, nullptr);
    for (auto& r : curve) {
      r.task = "init_" + to_string(s);
      if (log != nullptr) write_metrics(*log, r);
    }
    const std::size_t tail = std::max<std::size_t>(1, curve.size() / 10);
    for (std::size_t i = curve.size() - tail; i < curve.size(); ++i) {
      run.final_loss += curve[i].task_loss;
    }
    run.final_loss /= static_cast<double>(tail);
    run.eval = evaluate_draft_heads(model, k, heldout, config.medusa_c);
    run.curve = std::move(curve);
    runs.push_back(std::move(run));
  }
  return runs;
}

}  // namespace otter
