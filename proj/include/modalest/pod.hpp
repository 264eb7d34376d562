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

#include "modalest/datasets.hpp"
#include "modalest/errors.hpp"
#include "modalest/numerics.hpp"

namespace modalest {

/// Orthonormal POD basis plus the spectrum it was cut from.
struct ModalBasis {
  Matrix phi;              // N x n
  Vector singular_values;  // all r values of the centered data
  Vector mean;             // training mean, added back to reconstructions
  Index n_samples_used = 0;

  Index n_modes() const { return phi.cols(); }
  Index n_dims() const { return phi.rows(); }

  /// Same data truncated to the first `n` modes.
  ModalBasis truncated(Index n) const {
    detail::require(n >= 1 && n <= n_modes(), "truncated: mode count out of range");
    return ModalBasis{phi.leftCols(n), singular_values, mean, n_samples_used};
  }
};

struct PriorCovariance {
  Matrix gamma;
  bool diagonal = false;

  Index size() const { return gamma.rows(); }
};

/// Subtract the column mean; p >= 2.
inline SnapshotMatrix center(const SnapshotMatrix& x) {
  detail::require(x.n_samples() >= 2, "center: need at least 2 samples");
  const Vector mean = x.data.rowwise().mean();
  SnapshotMatrix out{x.data.colwise() - mean, mean};
  return out;
}

/// First `n` left singular vectors of the centered snapshots.
inline ModalBasis pod_basis(const SnapshotMatrix& centered, Index n) {
  detail::require(centered.mean.has_value(), "pod_basis: snapshots must be centered first");
  detail::require(n >= 1, "pod_basis: need at least one mode");
  const EconSvd svd = econ_svd(centered.data);
  const double tol = rank_tolerance(centered.data.rows(), centered.data.cols(), svd.s(0));
  const Index rank = static_cast<Index>((svd.s.array() > tol).count());
  if (n > rank) {
    throw InputError("pod_basis: requested " + std::to_string(n) + " modes but the data has numerical rank " +
                     std::to_string(rank));
  }
  return ModalBasis{svd.u.leftCols(n), svd.s, *centered.mean, centered.n_samples()};
}

/// Sample covariance of the POD coordinates: diag(sigma_i^2 / (p - 1)).
inline PriorCovariance prior_from_pod(const ModalBasis& basis) {
  detail::require(basis.n_samples_used >= 2, "prior_from_pod: basis must record p >= 2");
  const Vector s = basis.singular_values.head(basis.n_modes());
  const double denom = static_cast<double>(basis.n_samples_used - 1);
  return PriorCovariance{(s.array().square() / denom).matrix().asDiagonal(), true};
}

/// Comparison priors: diag(sigma_i) or c * I.
enum class PriorPreset { kSampleCovariance, kSingularValues, kScaledIdentity };

inline PriorCovariance prior_preset(const ModalBasis& basis, PriorPreset preset, double scale = 1.0) {
  switch (preset) {
    case PriorPreset::kSampleCovariance:
      return prior_from_pod(basis);
    case PriorPreset::kSingularValues:
      return PriorCovariance{basis.singular_values.head(basis.n_modes()).asDiagonal(), true};
    case PriorPreset::kScaledIdentity:
      detail::require(scale > 0.0, "prior_preset: scale must be positive");
      return PriorCovariance{scale * Matrix::Identity(basis.n_modes(), basis.n_modes()), true};
  }
  throw InputError("prior_preset: unknown preset");
}

}  // namespace modalest
