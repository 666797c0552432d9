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
#include <ostream>
#include <string>
#include <vector>

#include "otter/corpus.h"
#include "otter/model.h"
#include "otter/training.h"

namespace otter {

// Next-token pre-training of a model without extensions.
std::vector<StepRecord> train_base(OtterModel& model,
                                   const std::vector<std::vector<int>>& sequences,
                                   const TrainConfig& config, std::ostream* log = nullptr);

// Freezes everything, appends `cfg` and initializes it with cfg.init.
// Returns the new extension index.
int insert_extension(OtterModel& model, const OtterConfig& cfg, std::uint64_t seed,
                     InitReport* report = nullptr);

// The three task recipes train extension k, which must be the newest
// extension (SequencingError otherwise), and leave the model frozen.
std::vector<StepRecord> train_reward(OtterModel& model, int k,
                                     const std::vector<PreferencePair>& pairs,
                                     const TrainConfig& config, std::ostream* log = nullptr);
std::vector<StepRecord> train_expert(OtterModel& model, int k,
                                     const std::vector<std::vector<int>>& sequences,
                                     const TrainConfig& config, std::ostream* log = nullptr);
std::vector<StepRecord> train_draft_heads(OtterModel& model, int k,
                                          const std::vector<std::vector<int>>& sequences,
                                          const TrainConfig& config,
                                          std::ostream* log = nullptr);

// Mean draft-head loss and top-1 accuracy of the first head on held-out text.
struct DraftEval {
  double loss = 0.0;
  double head1_accuracy = 0.0;
};
DraftEval evaluate_draft_heads(const OtterModel& model, int k,
                               const std::vector<std::vector<int>>& sequences, double c);

struct InitStudyRun {
  InitStrategy strategy = InitStrategy::kNormal;
  std::vector<StepRecord> curve;
  double final_loss = 0.0;  // mean task loss over the last tenth of the steps
  DraftEval eval;
};

// Trains the same draft-head extension from `base` once per strategy with
// identical data order and seeds.
std::vector<InitStudyRun> init_study(const OtterModel& base, const OtterConfig& cfg,
                                     const std::vector<std::vector<int>>& train,
                                     const std::vector<std::vector<int>>& heldout,
                                     const TrainConfig& config, std::uint64_t seed,
                                     std::ostream* log = nullptr);

}  // namespace otter
