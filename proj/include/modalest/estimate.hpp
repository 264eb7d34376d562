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
//
// Point estimators for modal coefficients from sparse measurements.
//
// Both estimators work on centered measurements y - S^T mean and add the
// training mean back into the full-state estimate.

#pragma once

#include <string>

#include "modalest/datasets.hpp"
#include "modalest/errors.hpp"
#include "modalest/numerics.hpp"
#include "modalest/pod.hpp"
#include "modalest/selection.hpp"

namespace modalest {

enum class EstimatorKind { kDeim, kMap };

inline const char* to_string(EstimatorKind k) { return k == EstimatorKind::kDeim ? "deim" : "map"; }

struct Estimate {
  Vector coefficients;
  Vector full_state;
  EstimatorKind method = EstimatorKind::kDeim;
};

/// Gaussian posterior of the modal coefficients for one sensor set.
struct Posterior {
  Matrix gamma_post;    // n x n
  Matrix map_operator;  // n x k, Gamma_post A^T / sigma^2
  Matrix a_matrix;      // k x n, S^T Phi
};

/// Cholesky of the prior with a message that points at the usual cause.
inline void require_spd_prior(const PriorCovariance& prior) {
  try {
    (void)cholesky_lower(prior.gamma);
  } catch (const NumericalError& e) {
    throw InputError(std::string("prior covariance is singular or indefinite (") + e.what() +
                     "); reduce the number of modes to at most the rank of the training data");
  }
}

inline Matrix prior_inverse(const PriorCovariance& prior) {
  const Index n = prior.size();
  if (prior.diagonal) {
    const Vector d = prior.gamma.diagonal();
    for (Index i = 0; i < n; ++i) {
      if (!(d(i) > 0.0)) {
        throw InputError("prior covariance is singular (entry " + std::to_string(i) +
                         " is zero); reduce the number of modes to at most the rank of the training data");
      }
    }
    return d.cwiseInverse().asDiagonal();
  }
  require_spd_prior(prior);
  return spd_solve(prior.gamma, Matrix::Identity(n, n));
}

/// Gamma_post = (Gamma_prior^-1 + A^T A / sigma^2)^-1 for a general A.
inline Matrix posterior_covariance(const Matrix& a, const PriorCovariance& prior, const NoiseModel& noise) {
  detail::require(a.cols() == prior.size(), "posterior: A has wrong column count for the prior");
  noise.validate();
  const Index n = prior.size();
  if (a.rows() == 0) return prior.gamma;
  detail::require(noise.sigma > 0.0, "posterior: sigma = 0 (noiseless Bayesian limit) is not supported");
  const Matrix precision = prior_inverse(prior) + a.transpose() * a / noise.variance();
  Matrix post = spd_solve(precision, Matrix::Identity(n, n));
  return 0.5 * (post + post.transpose());
}

inline Posterior build_posterior(const Matrix& a, const PriorCovariance& prior, const NoiseModel& noise) {
  Posterior out;
  out.a_matrix = a;
  out.gamma_post = posterior_covariance(a, prior, noise);
  out.map_operator = out.gamma_post * a.transpose() / noise.variance();
  return out;
}

inline Posterior build_posterior(const ModalBasis& basis, const SensorSelection& sel, const PriorCovariance& prior,
                                 const NoiseModel& noise) {
  return build_posterior(sel.rows_of(basis.phi), prior, noise);
}

/// Measurements relative to the training mean.
inline Vector centered_measurements(const ModalBasis& basis, const SensorSelection& sel, const Vector& y) {
  detail::require(y.size() == sel.size(), "measurement length does not match the sensor count");
  if (basis.mean.size() == 0) return y;
  return y - sel.entries_of(basis.mean);
}

inline Vector lift(const ModalBasis& basis, const Vector& coefficients) {
  Vector state = basis.phi * coefficients;
  if (basis.mean.size() != 0) state += basis.mean;
  return state;
}

/// Minimum-norm least-squares (DEIM) estimate.
inline Estimate deim_estimate(const ModalBasis& basis, const SensorSelection& sel, const Vector& y) {
  const Matrix a = sel.rows_of(basis.phi);
  Estimate out;
  out.coefficients = min_norm_solve(a, centered_measurements(basis, sel, y));
  out.full_state = lift(basis, out.coefficients);
  out.method = EstimatorKind::kDeim;
  return out;
}

/// Posterior mean, which is also the MAP point.
inline Estimate map_estimate(const Posterior& post, const ModalBasis& basis, const SensorSelection& sel,
                             const Vector& y) {
  detail::require(post.map_operator.cols() == y.size(), "map_estimate: measurement length mismatch");
  Estimate out;
  out.coefficients = post.map_operator * centered_measurements(basis, sel, y);
  out.full_state = lift(basis, out.coefficients);
  out.method = EstimatorKind::kMap;
  return out;
}

inline double relative_error(const Vector& estimate, const Vector& truth) {
  detail::require(estimate.size() == truth.size(), "relative_error: length mismatch");
  const double denom = truth.norm();
  detail::require(denom > 0.0, "relative_error: truth has zero norm");
  return (estimate - truth).norm() / denom;
}

inline double relative_error(const Estimate& estimate, const Vector& truth) {
  return relative_error(estimate.full_state, truth);
}

/// A-priori bound on the MAP relative error:
///   ||D - I||_2 + ||Gamma_post A^T / sigma^2||_2 * noise_ratio,
/// D = Phi Gamma_post A^T S^T / sigma^2, noise_ratio = ||eta|| / ||u||.
inline double map_error_bound(const Posterior& post, const ModalBasis& basis, const SensorSelection& sel,
                              double noise_norm_ratio) {
  const Index N = basis.n_dims();
  Matrix d = Matrix::Zero(N, N);
  const Matrix lifted = basis.phi * post.map_operator;  // N x k
  for (Index j = 0; j < sel.size(); ++j) d.col(sel.indices()[static_cast<std::size_t>(j)]) = lifted.col(j);
  d -= Matrix::Identity(N, N);
  return spectral_norm(d) + spectral_norm(post.map_operator) * noise_norm_ratio;
}

/// A-priori bound on the DEIM relative error: ||(S^T Phi)^+||_2 (1 + noise_ratio).
inline double deim_error_bound(const ModalBasis& basis, const SensorSelection& sel, double noise_norm_ratio) {
  const Matrix a = sel.rows_of(basis.phi);
  detail::require(a.size() > 0 && a.cwiseAbs().maxCoeff() > 0.0, "deim_error_bound: S^T Phi is zero");
  return spectral_norm(pseudo_inverse(a)) * (1.0 + noise_norm_ratio);
}

}  // namespace modalest
