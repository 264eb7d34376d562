// Copyright 2026 The modalest Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================
#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include "modalest/errors.hpp"
#include "modalest/numerics.hpp"

namespace modalest {

/// Ordered sensor locations; stands for the selection matrix S whose columns
/// are the identity columns e_{indices[i]}.
class SensorSelection {
 public:
  SensorSelection() = default;
  SensorSelection(std::vector<Index> indices, Index n_locations)
      : indices_(std::move(indices)), n_locations_(n_locations) {
    std::unordered_set<Index> seen;
    for (const Index i : indices_) {
      if (i < 0 || i >= n_locations_) {
        throw InputError("sensor index " + std::to_string(i) + " outside [0, " + std::to_string(n_locations_) + ")");
      }
      if (!seen.insert(i).second) throw InputError("duplicate sensor index " + std::to_string(i));
    }
  }

  const std::vector<Index>& indices() const { return indices_; }
  Index size() const { return static_cast<Index>(indices_.size()); }
  Index n_locations() const { return n_locations_; }
  bool empty() const { return indices_.empty(); }

  /// S^T M: the selected rows of M.
  Matrix rows_of(const Matrix& m) const {
    detail::require(m.rows() == n_locations_, "selection: row count does not match n_locations");
    Matrix out(size(), m.cols());
    for (Index i = 0; i < size(); ++i) out.row(i) = m.row(indices_[static_cast<std::size_t>(i)]);
    return out;
  }

  Vector entries_of(const Vector& v) const {
    detail::require(v.size() == n_locations_, "selection: vector length does not match n_locations");
    Vector out(size());
    for (Index i = 0; i < size(); ++i) out(i) = v(indices_[static_cast<std::size_t>(i)]);
    return out;
  }

  SensorSelection with(Index extra) const {
    auto idx = indices_;
    idx.push_back(extra);
    return SensorSelection(std::move(idx), n_locations_);
  }

  friend bool operator==(const SensorSelection&, const SensorSelection&) = default;

 private:
  std::vector<Index> indices_;
  Index n_locations_ = 0;
};

/// 2 |a n b| / (|a| + |b|).
inline double dice(const SensorSelection& a, const SensorSelection& b) {
  detail::require(a.n_locations() == b.n_locations(), "dice: selections use different location counts");
  if (a.empty() && b.empty()) return 1.0;
  const std::unordered_set<Index> sa(a.indices().begin(), a.indices().end());
  Index common = 0;
  for (const Index i : b.indices()) common += sa.count(i) ? 1 : 0;
  return 2.0 * static_cast<double>(common) / static_cast<double>(a.size() + b.size());
}

}  // namespace modalest
