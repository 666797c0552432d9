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

#include <string>

#include "otter/model.h"

namespace otter {

inline constexpr int kCheckpointVersion = 1;

// File layout: the line "OTTERCKPT", the manifest byte length on its own
// line, a JSON manifest (model config, extensions, trainable group, heads
// and a tensor directory with shapes, offsets, CRC32 and block flags), then
// every tensor as little-endian float32 in manifest order.
void save_checkpoint(const OtterModel& model, const std::string& path);

// Throws VersionError for another format version and CorruptionError (with
// the tensor name) for truncation, checksum mismatches or nonzero
// structural zeros.
OtterModel load_checkpoint(const std::string& path);

// Serialized bytes of `model`; save_checkpoint writes exactly these.
std::string serialize_checkpoint(const OtterModel& model);
OtterModel deserialize_checkpoint(const std::string& bytes);

}  // namespace otter
