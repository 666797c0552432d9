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

#include "otter/parameter.h"

#include <algorithm>

namespace otter {

template <typename T>
void Parameter<T>::rebuild_blocks() {
  blocks.clear();
  const std::vector<std::size_t> rows =
      row_groups.empty() ? std::vector<std::size_t>{num_rows()} : row_groups;
  const std::vector<std::size_t> cols =
      col_groups.empty() ? std::vector<std::size_t>{num_cols()} : col_groups;
  std::size_t r0 = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::size_t c0 = 0;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      Block b;
      b.row_begin = r0;
      b.row_end = r0 + rows[i];
      b.col_begin = c0;
      b.col_end = c0 + cols[j];
      const int row_owner = row_groups.empty() ? base_owner : static_cast<int>(i);
      const int col_owner = col_groups.empty() ? base_owner : static_cast<int>(j);
      b.owner = std::max(row_owner, col_owner);
      b.structural_zero = !row_groups.empty() && !col_groups.empty() && j > i;
      if (b.size() > 0) blocks.push_back(b);
      c0 += cols[j];
    }
    r0 += rows[i];
  }
}

template <typename T>
void Parameter<T>::set_trainable_group(int group) {
  trainable.assign(value.size(), 0);
  if (group == kNoGroup) return;
  const std::size_t nc = num_cols();
  for (const Block& b : blocks) {
    if (b.owner != group || b.structural_zero) continue;
    for (std::size_t r = b.row_begin; r < b.row_end; ++r) {
      std::fill(trainable.begin() + r * nc + b.col_begin,
                trainable.begin() + r * nc + b.col_end, std::uint8_t{1});
    }
  }
}

template <typename T>
void Parameter<T>::rezero() {
  const std::size_t nc = num_cols();
  for (const Block& b : blocks) {
    if (!b.structural_zero) continue;
    for (std::size_t r = b.row_begin; r < b.row_end; ++r) {
      std::fill(value.storage().begin() + r * nc + b.col_begin,
                value.storage().begin() + r * nc + b.col_end, T(0));
    }
  }
}

template <typename T>
long Parameter<T>::first_nonzero_structural() const {
  const std::size_t nc = num_cols();
  for (const Block& b : blocks) {
    if (!b.structural_zero) continue;
    for (std::size_t r = b.row_begin; r < b.row_end; ++r) {
      for (std::size_t c = b.col_begin; c < b.col_end; ++c) {
        if (value[r * nc + c] != T(0)) return static_cast<long>(r * nc + c);
      }
    }
  }
  return -1;
}

template <typename T>
Parameter<T> make_parameter(std::string name, Shape shape,
                            std::vector<std::size_t> row_groups,
                            std::vector<std::size_t> col_groups,
                            int base_owner) {
  Parameter<T> p;
  p.name = std::move(name);
  p.value = Tensor<T>(std::move(shape));
  p.row_groups = std::move(row_groups);
  p.col_groups = std::move(col_groups);
  p.base_owner = base_owner;
  p.rebuild_blocks();
  p.set_trainable_group(kNoGroup);
  return p;
}

template struct Parameter<float>;
template struct Parameter<double>;
template struct Parameter<long double>;
template Parameter<float> make_parameter<float>(std::string, Shape,
                                                std::vector<std::size_t>,
                                                std::vector<std::size_t>, int);
template Parameter<double> make_parameter<double>(std::string, Shape,
                                                  std::vector<std::size_t>,
                                                  std::vector<std::size_t>, int);
template Parameter<long double> make_parameter<long double>(std::string, Shape,
                                                            std::vector<std::size_t>,
                                                            std::vector<std::size_t>, int);

}  // namespace otter
