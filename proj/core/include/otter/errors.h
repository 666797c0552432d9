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

#include <stdexcept>
#include <string>

namespace otter {

// Root of every error the library raises. Each subclass names one failure
// category; callers that only care about "something went wrong" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid shapes, sizes or option combinations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bad caller-supplied data: empty prompts, out-of-vocab tokens, etc.
class InputError : public Error {
 public:
  using Error::Error;
};

// A NaN or Inf appeared where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Operations requested in an order the freeze contract forbids.
class SequencingError : public Error {
 public:
  using Error::Error;
};

// The finite-difference oracle saw two different losses for the same point.
class UnreliableOracleError : public Error {
 public:
  using Error::Error;
};

// Non-disruption check failed. Carries the offending prompt and tensor.
class VerificationError : public Error {
 public:
  VerificationError(const std::string& what, int prompt_index,
                    std::string parameter)
      : Error(what),
        prompt_index_(prompt_index),
        parameter_(std::move(parameter)) {}

  // -1 when the failure is structural (not tied to a prompt).
  int prompt_index() const { return prompt_index_; }
  const std::string& parameter() const { return parameter_; }

 private:
  int prompt_index_;
  std::string parameter_;
};

// Checkpoint payload does not match its manifest.
class CorruptionError : public Error {
 public:
  CorruptionError(const std::string& what, std::string tensor)
      : Error(what), tensor_(std::move(tensor)) {}
  const std::string& tensor() const { return tensor_; }

 private:
  std::string tensor_;
};

// Checkpoint was written by an incompatible format version.
class VersionError : public Error {
 public:
  using Error::Error;
};

// Timing measurement could not produce a usable ratio.
class MeasurementError : public Error {
 public:
  using Error::Error;
};

}  // namespace otter
