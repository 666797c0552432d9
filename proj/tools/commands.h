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
#include <string>
#include <vector>

#include "otter/decoding.h"
#include "otter/model.h"
#include "otter/training.h"

namespace otter::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitError = 3;

struct GenCorpusOptions {
  std::string kind;
  std::string out;
  std::uint64_t seed = 0;
  int count = 0;  // 0 keeps the kind's default
  int prompts = 0;
  int seq_len = 0;
  int prompt_len = 0;
  int vocab = 0;
};

struct VerifyOptions {
  int prompts = 100;
  int max_len = 16;
  double tol = 1e-5;
  std::string report;  // empty: next to the checked checkpoint
};

struct TrainBaseOptions {
  std::string corpus;
  std::string out;
  std::string metrics;
  std::uint64_t seed = 0;
  ModelConfig model;
  TrainConfig train;
};

struct InsertOptions {
  std::string in;
  std::string out;
  std::uint64_t seed = 0;
  OtterConfig ext;
};

struct InitOptions {
  std::string in;
  std::string out;
  std::string strategy = "normal";
  std::uint64_t seed = 0;
};

// Shared by train-reward, train-experts and train-heads.
struct TrainExtOptions {
  std::string in;
  std::string corpus;
  std::string out;
  std::string metrics;
  std::string role;  // train-experts: positive | negative
  std::uint64_t seed = 0;
  TrainConfig train;
  VerifyOptions verify;
};

struct VerifyCommandOptions {
  std::string base;
  std::string otter;
  std::uint64_t seed = 0;
  VerifyOptions verify;
};

struct DecodeOptions {
  std::string model;
  std::vector<std::string> prompts;  // token lists, "1 2 3" or "1,2,3"
  std::string corpus;                // held-out prompts when no --prompt
  int n_prompts = 0;                 // 0: all corpus prompts
  std::string lm_term = "prob";
  std::string strategy = "greedy";
  std::string out;
  DecodeParams params;
};

struct BenchOptions {
  std::string study;
  std::string base;
  std::string model;
  std::string corpus;
  std::string out;
  std::string strategy = "greedy";
  std::string base_strategy;  // empty: the matching baseline
  int n_prompts = 16;
  int repetitions = 5;
  bool per_pass = false;
  std::uint64_t seed = 0;
  DecodeParams params;
  TrainConfig train;
  OtterConfig ext;
  double heldout_fraction = 0.125;
};

struct InspectOptions {
  std::string model;
};

int gen_corpus_cmd(const GenCorpusOptions& o);
int train_base_cmd(const TrainBaseOptions& o);
int insert_cmd(const InsertOptions& o);
int init_cmd(const InitOptions& o);
int train_reward_cmd(const TrainExtOptions& o);
int train_experts_cmd(const TrainExtOptions& o);
int train_heads_cmd(const TrainExtOptions& o);
int verify_cmd(const VerifyCommandOptions& o);
int decode_cmd(const DecodeOptions& o);
int bench_cmd(const BenchOptions& o);
int inspect_cmd(const InspectOptions& o);

}  // namespace otter::cli
