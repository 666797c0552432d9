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

#include "otter/tensor.h"

namespace otter {

// Parameter groups: 0 is the base model, k >= 1 is the k-th inserted
// extension. Every stored element belongs to exactly one group.
inline constexpr int kBaseGroup = 0;
inline constexpr int kNoGroup = -1;

// Rectangular region of a parameter viewed as [rows, cols]. Rank-1
// parameters are treated as a single column.
struct Block {
  std::size_t row_begin = 0;
  std::size_t row_end = 0;
  std::size_t col_begin = 0;
  std::size_t col_end = 0;
  int owner = kBaseGroup;
  // Structural zeros route extension inputs into original outputs; they are
  // never trained and are re-zeroed after every update.
  bool structural_zero = false;

  std::size_t size() const {
    return (row_end - row_begin) * (col_end - col_begin);
  }
  friend bool operator==(const Block&, const Block&) = default;
};

// A named weight plus its group partition. Axes that are partitioned by
// extension carry per-group sizes; an empty list means the axis is shared
// (vocabulary rows of the embedding, for instance).
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  std::vector<std::size_t> row_groups;
  std::vector<std::size_t> col_groups;
  std::vector<Block> blocks;
  // Group that owns unpartitioned axes (task heads belong to an extension).
  int base_owner = kBaseGroup;
  // Per-element trainability for the currently active group.
  std::vector<std::uint8_t> trainable;

  std::size_t num_rows() const { return value.rank() == 1 ? value.size() : value.rows(); }
  std::size_t num_cols() const { return value.rank() == 1 ? 1 : value.cols(); }

  bool any_trainable() const {
    for (auto t : trainable) {
      if (t) return true;
    }
    return false;
  }

  // Rebuilds `blocks` from the group lists. Block (i, j) is owned by
  // max(i, j); it is a structural zero when both axes are partitioned and
  // the column group is newer than the row group.
  void rebuild_blocks();

  // Recomputes `trainable` for `group` (kNoGroup freezes everything).
  void set_trainable_group(int group);

  // Writes +0 into every structural-zero element.
  void rezero();

  // First structural-zero element that is not exactly zero, or -1.
  long first_nonzero_structural() const;
};

template <typename T>
Parameter<T> make_parameter(std::string name, Shape shape,
                            std::vector<std::size_t> row_groups,
                            std::vector<std::size_t> col_groups,
                            int base_owner = kBaseGroup);

template <typename U, typename T>
Parameter<U> cast_parameter(const Parameter<T>& p) {
  Parameter<U> out;
  out.name = p.name;
  out.value = p.value.template cast<U>();
  out.row_groups = p.row_groups;
  out.col_groups = p.col_groups;
  out.blocks = p.blocks;
  out.base_owner = p.base_owner;
  out.trainable = p.trainable;
  return out;
}

}  // namespace otter
