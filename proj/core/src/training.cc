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

#include "otter/training.h"

#include <chrono>
#include <cmath>
#include <string>

#include "json.hpp"
#include "otter/heads.h"

namespace otter {

void TrainConfig::validate() const {
  if (!(reg_lambda >= 0.0)) throw ConfigError("train config: lambda must be >= 0");
  if (!(medusa_c > 0.0 && medusa_c <= 1.0)) {
    throw ConfigError("train config: medusa constant must lie in (0, 1]");
  }
  if (steps < 1 || batch_size < 1 || K < 1) {
    throw ConfigError("train config: steps, batch size and K must be positive");
  }
  if (!(lr >= 0.0)) throw ConfigError("train config: learning rate must be >= 0");
}

template <typename T>
Var<T> reg_loss(const ForwardTrace<T>& trace, std::size_t d_model, T eps) {
  if (trace.hidden_sites.empty()) throw ConfigError("reg_loss: trace has no norm sites");
  if (trace.hidden_sites.front().pre.value().cols() <= d_model) {
    throw ConfigError("reg_loss: trace comes from a model without extensions");
  }
  Var<T> total;
  for (const NormSite<T>& site : trace.hidden_sites) {
    Var<T> term = ops::rms_gap_sq(site.pre, d_model, eps);
    total = total.valid() ? ops::add(total, term) : term;
  }
  return total;
}

template <typename T>
Var<T> pairwise_reward_loss(Var<T> s_chosen, Var<T> s_rejected) {
  return ops::sum(ops::softplus(ops::sub(s_rejected, s_chosen)));
}

double medusa_weight(int k, double c) { return std::pow(c, k); }

double medusa_combine(std::span<const double> head_losses, double c) {
  double total = 0.0;
  for (std::size_t i = 0; i < head_losses.size(); ++i) {
    total += medusa_weight(static_cast<int>(i) + 1, c) * head_losses[i];
  }
  return total;
}

namespace {

// targets[t] = tokens[t + 1 + lookahead], or -1 past the end.
std::vector<int> shifted_targets(std::span<const int> tokens, int lookahead) {
  std::vector<int> out(tokens.size(), -1);
  for (std::size_t t = 0; t + 1 + lookahead < tokens.size(); ++t) {
    out[t] = tokens[t + 1 + lookahead];
  }
  return out;
}

template <typename T>
T model_eps(const Model<T>& m) {
  return static_cast<T>(m.config.norm_eps);
}

}  // namespace

template <typename T>
TaskLoss<T> reward_loss(Tape<T>& tape, const Model<T>& model, int k,
                        std::span<const int> chosen, std::span<const int> rejected) {
  if (chosen.empty() || rejected.empty()) {
    throw InputError("reward_loss: empty sequence");
  }
  const TaskHead<T>& head = reward_head(model, k);
  const ForwardTrace<T> tc = model.forward(tape, chosen);
  const ForwardTrace<T> tr = model.forward(tape, rejected);
  TaskLoss<T> out;
  out.task = pairwise_reward_loss(reward_logit(model, tc, head), reward_logit(model, tr, head));
  const std::size_t d = model.config.d_model;
  out.reg = ops::scale(ops::add(reg_loss(tc, d, model_eps(model)),
                                reg_loss(tr, d, model_eps(model))),
                       T(0.5));
  return out;
}

template <typename T>
TaskLoss<T> expert_lm_loss(Tape<T>& tape, const Model<T>& model, int k,
                           std::span<const int> tokens) {
  const auto heads = heads_of(model, k, HeadKind::kGeneration);
  if (heads.size() != 1) {
    throw ConfigError("expert_lm_loss: extension " + std::to_string(k) +
                      " needs exactly one generation head");
  }
  const ForwardTrace<T> trace = model.forward(tape, tokens);
  TaskLoss<T> out;
  out.task = ops::cross_entropy(head_logits(model, trace, *heads.front()),
                                shifted_targets(tokens, heads.front()->lookahead));
  out.reg = reg_loss(trace, model.config.d_model, model_eps(model));
  return out;
}

template <typename T>
TaskLoss<T> medusa_loss(Tape<T>& tape, const Model<T>& model, int k,
                        std::span<const int> tokens, double c) {
  const auto heads = heads_of(model, k, HeadKind::kGeneration);
  if (heads.empty()) {
    throw ConfigError("medusa_loss: extension " + std::to_string(k) +
                      " has no generation heads");
  }
  const ForwardTrace<T> trace = model.forward(tape, tokens);
  TaskLoss<T> out;
  for (const TaskHead<T>* h : heads) {
    Var<T> ce = ops::cross_entropy(head_logits(model, trace, *h),
                                   shifted_targets(tokens, h->lookahead));
    Var<T> term = ops::scale(ce, static_cast<T>(medusa_weight(h->lookahead, c)));
    out.task = out.task.valid() ? ops::add(out.task, term) : term;
  }
  out.reg = reg_loss(trace, model.config.d_model, model_eps(model));
  return out;
}

template <typename T>
Var<T> lm_loss(Tape<T>& tape, const Model<T>& model, std::span<const int> tokens) {
  const ForwardTrace<T> trace = model.forward(tape, tokens);
  return ops::cross_entropy(trace.logits, shifted_targets(tokens, 0));
}

template <typename T>
StepRecord train_step(Model<T>& model, AdamW<T>& opt, const ExampleLoss<T>& loss,
                      const std::vector<std::size_t>& batch, double lambda,
                      const std::string& task) {
  if (batch.empty()) throw ConfigError("train_step: empty batch");
  bool any = false;
  model.for_each_parameter([&any](const Parameter<T>& p) { any = any || p.any_trainable(); });
  if (!any) throw SequencingError("train_step: no trainable parameters");

  const auto start = std::chrono::steady_clock::now();
  StepRecord rec;
  rec.step = opt.steps_taken();
  rec.task = task;
  try {
    Tape<T> tape(true);
    Var<T> sum;
    double task_sum = 0.0, reg_sum = 0.0;
    for (std::size_t i : batch) {
      TaskLoss<T> parts = loss(tape, model, i);
      Var<T> total = parts.task;
      task_sum += parts.task.value()[0];
      if (parts.reg.valid()) {
        reg_sum += parts.reg.value()[0];
        if (lambda != 0.0) {
          total = ops::add(total, ops::scale(parts.reg, static_cast<T>(lambda)));
        }
      }
      sum = sum.valid() ? ops::add(sum, total) : total;
    }
    const T inv = T(1) / static_cast<T>(batch.size());
    Var<T> mean = ops::scale(sum, inv);
    tape.backward(mean);
    opt.step(model, tape);
    rec.task_loss = task_sum / batch.size();
    rec.reg = reg_sum / batch.size();
    rec.total = mean.value()[0];
  } catch (const NumericError& e) {
    throw NumericError("step " + std::to_string(rec.step) + " (" + task +
                       "): " + e.what());
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  return rec;
}

void write_metrics(std::ostream& out, const StepRecord& r) {
  nlohmann::json j;
  j["step"] = r.step;
  j["task"] = r.task;
  j["task_loss"] = r.task_loss;
  j["reg"] = r.reg;
  j["total"] = r.total;
  j["wall_ms"] = r.wall_ms;
  out << j.dump() << '\n';
}

#define OTTER_INSTANTIATE_TRAINING(T)                                                  \
  template Var<T> reg_loss(const ForwardTrace<T>&, std::size_t, T);                    \
  template Var<T> pairwise_reward_loss(Var<T>, Var<T>);                                \
  template TaskLoss<T> reward_loss(Tape<T>&, const Model<T>&, int,                     \
                                   std::span<const int>, std::span<const int>);        \
  template TaskLoss<T> expert_lm_loss(Tape<T>&, const Model<T>&, int,                  \
                                      std::span<const int>);                           \
  template TaskLoss<T> medusa_loss(Tape<T>&, const Model<T>&, int,                     \
                                   std::span<const int>, double);                      \
  template Var<T> lm_loss(Tape<T>&, const Model<T>&, std::span<const int>);            \
  template StepRecord train_step(Model<T>&, AdamW<T>&, const ExampleLoss<T>&,          \
                                 const std::vector<std::size_t>&, double,              \
                                 const std::string&);

OTTER_INSTANTIATE_TRAINING(float)
OTTER_INSTANTIATE_TRAINING(double)
OTTER_INSTANTIATE_TRAINING(long double)
#undef OTTER_INSTANTIATE_TRAINING

}  // namespace otter
