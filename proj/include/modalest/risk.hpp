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
// Bayes risk of the minimum-norm least-squares and MAP estimators for the
// linear model y = A m + eta, m ~ N(0, Gamma_prior), eta ~ N(0, sigma^2 I),
// and the decomposition of their difference (the risk premium)
//
//   Risk(m_LS) - Risk(m_MAP) = delta_prior + delta_noise,
//   delta_prior = tr[(I - A^+ A)(Gamma_prior - Gamma_post)]   >= 0
//   delta_noise = tr[A^+ Gamma_noise A^+T - A^+ A Gamma_post] >= 0
//
// with upper bounds zeta_prior (sum of the top nullity(A) eigenvalues of
// Gamma_prior - Gamma_post) and zeta_noise = tr[A^+ Gamma_noise A^+T].
// Everything accepts a general dense A, not only S^T Phi.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>

#include "modalest/datasets.hpp"
#include "modalest/errors.hpp"
#include "modalest/estimate.hpp"
#include "modalest/io.hpp"
#include "modalest/numerics.hpp"
#include "modalest/pod.hpp"
#include "modalest/rng.hpp"
#include "modalest/selection.hpp"

namespace modalest {

/// Range/null-space split of R^n induced by A.
struct RangeSplit {
  Matrix pinv;            // A^+, n x k
  Matrix range_projector; // A^+ A
  Matrix null_projector;  // I - A^+ A, exactly zero when nullity is 0
  Index rank = 0;
  Index nullity = 0;
  Vector singular_values; // nonzero singular values of A
};

inline RangeSplit range_split(const Matrix& a) {
  const Index n = a.cols();
  RangeSplit out;
  out.pinv = Matrix::Zero(n, a.rows());
  out.range_projector = Matrix::Zero(n, n);
  if (a.size() > 0) {
    const EconSvd svd = econ_svd(a);
    const double tol = rank_tolerance(a.rows(), a.cols(), svd.s(0));
    out.rank = static_cast<Index>((svd.s.array() > tol).count());
    out.singular_values = svd.s.head(out.rank);
    for (Index i = 0; i < out.rank; ++i) {
      const Vector v = svd.vt.row(i).transpose();
      out.pinv.noalias() += (v / svd.s(i)) * svd.u.col(i).transpose();
      out.range_projector.noalias() += v * v.transpose();
    }
  }
  out.nullity = n - out.rank;
  out.null_projector = out.nullity == 0 ? Matrix::Zero(n, n) : Matrix(Matrix::Identity(n, n) - out.range_projector);
  return out;
}

inline double risk_map(const Posterior& post) { return post.gamma_post.trace(); }

struct LsRisk {
  double prior_term = 0.0;  // tr[(I - A^+A) Gamma_prior]
  double noise_term = 0.0;  // tr[A^+ Gamma_noise A^+T]
  double total() const { return prior_term + noise_term; }
};

inline LsRisk risk_ls(const Matrix& a, const PriorCovariance& prior, const NoiseModel& noise) {
  detail::require(a.cols() == prior.size(), "risk_ls: A has wrong column count for the prior");
  noise.validate();
  const RangeSplit split = range_split(a);
  return LsRisk{(split.null_projector * prior.gamma).trace(), noise.variance() * split.pinv.squaredNorm()};
}

struct DeltaTerms {
  double delta_prior = 0.0;
  double delta_noise = 0.0;
  Matrix delta_prior_matrix;
  Matrix delta_noise_matrix;
};

inline DeltaTerms delta_terms(const Matrix& a, const PriorCovariance& prior, const NoiseModel& noise) {
  const RangeSplit split = range_split(a);
  const Matrix post = posterior_covariance(a, prior, noise);
  DeltaTerms out;
  out.delta_prior_matrix = split.null_projector * (prior.gamma - post);
  out.delta_noise_matrix =
      noise.variance() * split.pinv * split.pinv.transpose() - split.range_projector * post;
  out.delta_prior = out.delta_prior_matrix.trace();
  out.delta_noise = out.delta_noise_matrix.trace();
  return out;
}

struct ZetaTerms {
  double zeta_prior = 0.0;
  double zeta_noise = 0.0;
  double zeta_noise_singular = 0.0;  // sigma^2 * sum 1/sigma_i(A)^2
  Index nullity = 0;
};

inline ZetaTerms zeta_terms(const Matrix& a, const PriorCovariance& prior, const NoiseModel& noise) {
  const RangeSplit split = range_split(a);
  const Matrix post = posterior_covariance(a, prior, noise);
  ZetaTerms out;
  out.nullity = split.nullity;
  out.zeta_noise = noise.variance() * (split.pinv * split.pinv.transpose()).trace();
  out.zeta_noise_singular = noise.variance() * split.singular_values.array().square().inverse().sum();
  if (split.nullity > 0) {
    const SymEig eig = sym_eig(prior.gamma - post);
    out.zeta_prior = eig.values.head(split.nullity).sum();
  }
  return out;
}

struct RiskReport {
  double risk_ls = 0.0;
  double risk_map = 0.0;
  double delta_prior = 0.0;
  double delta_noise = 0.0;
  double zeta_prior = 0.0;
  double zeta_noise = 0.0;
  double premium = 0.0;
  Index nullity = 0;

  double scale() const { return std::max(risk_ls, 1.0); }
};

/// Column names of the flat CSV row.
inline constexpr const char* kRiskCsvHeader =
    "risk_ls,risk_map,delta_prior,delta_noise,zeta_prior,zeta_noise,premium,nullity";

inline std::string to_csv_row(const RiskReport& r) {
  using detail::format_double;
  return format_double(r.risk_ls) + ',' + format_double(r.risk_map) + ',' + format_double(r.delta_prior) + ',' +
         format_double(r.delta_noise) + ',' + format_double(r.zeta_prior) + ',' + format_double(r.zeta_noise) + ',' +
         format_double(r.premium) + ',' + std::to_string(r.nullity);
}

/// Returns an empty string when every invariant holds, else a description
/// of the first violation.
inline std::string check_invariants(const RiskReport& r) {
  const double s = r.scale();
  std::ostringstream os;
  os.precision(6);
  if (r.delta_prior < -1e-10 * s) os << "delta_prior negative (" << r.delta_prior << ")";
  else if (r.delta_noise < -1e-10 * s) os << "delta_noise negative (" << r.delta_noise << ")";
  else if (std::abs(r.premium - r.delta_prior - r.delta_noise) > 1e-9 * s)
    os << "premium " << r.premium << " != delta_prior + delta_noise " << r.delta_prior + r.delta_noise;
  else if (r.delta_prior > r.zeta_prior + 1e-9 * s)
    os << "delta_prior " << r.delta_prior << " exceeds zeta_prior " << r.zeta_prior;
  else if (r.delta_noise > r.zeta_noise + 1e-9 * s)
    os << "delta_noise " << r.delta_noise << " exceeds zeta_noise " << r.zeta_noise;
  return os.str();
}

/// All risk quantities for one (A, Gamma_prior, sigma). Throws
/// NumericalError if a risk invariant fails in floating point.
inline RiskReport risk_report(const Matrix& a, const PriorCovariance& prior, const NoiseModel& noise) {
  const LsRisk ls = risk_ls(a, prior, noise);
  const Matrix post = posterior_covariance(a, prior, noise);
  const DeltaTerms delta = delta_terms(a, prior, noise);
  const ZetaTerms zeta = zeta_terms(a, prior, noise);
  RiskReport r;
  r.risk_ls = ls.total();
  r.risk_map = post.trace();
  r.premium = r.risk_ls - r.risk_map;
  r.delta_prior = delta.delta_prior;
  r.delta_noise = delta.delta_noise;
  r.zeta_prior = zeta.zeta_prior;
  r.zeta_noise = zeta.zeta_noise;
  r.nullity = zeta.nullity;
  if (const std::string bad = check_invariants(r); !bad.empty()) {
    throw NumericalError("risk_report invariant violated: " + bad);
  }
  return r;
}

inline RiskReport risk_report(const ModalBasis& basis, const SensorSelection& sel, const PriorCovariance& prior,
                              const NoiseModel& noise) {
  return risk_report(sel.rows_of(basis.phi), prior, noise);
}

/// tr[Gamma_prior - A^+ A Gamma_prior]: prior variance the sensors cannot see.
inline double null_space_prior_mass(const Matrix& a, const PriorCovariance& prior) {
  detail::require(a.cols() == prior.size(), "null_space_prior_mass: shape mismatch");
  return (range_split(a).null_projector * prior.gamma).trace();
}

inline double null_space_prior_mass(const ModalBasis& basis, const SensorSelection& sel,
                                    const PriorCovariance& prior) {
  return null_space_prior_mass(sel.rows_of(basis.phi), prior);
}

enum class RiskEstimator { kDeim, kMap, kZero };

struct MonteCarloResult {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t n_pairs = 0;
};

/// Monte Carlo Bayes risk E ||m_hat(y) - m||^2.
///
/// Draws come in antithetic pairs (m, eta) and (-m, eta); each pair's
/// average squared error is one sample for the mean and standard error.
/// Pairs are grouped in blocks of 1000, one random substream per block.
inline MonteCarloResult monte_carlo_risk(RiskEstimator estimator, const Matrix& a, const PriorCovariance& prior,
                                         const NoiseModel& noise, std::int64_t n_draws, std::uint64_t seed) {
  detail::require(n_draws >= 100, "monte_carlo_risk: need at least 100 draws");
  detail::require(a.cols() == prior.size(), "monte_carlo_risk: shape mismatch");
  noise.validate();
  const Index n = a.cols();
  const Index k = a.rows();

  Matrix op = Matrix::Zero(n, k);
  if (estimator == RiskEstimator::kDeim) {
    op = pseudo_inverse(a);
  } else if (estimator == RiskEstimator::kMap) {
    op = build_posterior(a, prior, noise).map_operator;
  }
  const Matrix prior_factor = psd_sqrt(prior.gamma);
  const Matrix error_map = op * a - Matrix::Identity(n, n);  // error = error_map m + op eta

  constexpr std::int64_t kBlock = 1000;
  const std::int64_t pairs = n_draws / 2;
  double sum = 0.0;
  double sum_sq = 0.0;
  Vector z(n);
  Vector eta(k);
  for (std::int64_t start = 0; start < pairs; start += kBlock) {
    Stream rng(seed, streams::kMonteCarlo + static_cast<std::uint64_t>(start / kBlock));
    const std::int64_t end = std::min(pairs, start + kBlock);
    for (std::int64_t p = start; p < end; ++p) {
      for (Index i = 0; i < n; ++i) z(i) = rng.normal();
      for (Index i = 0; i < k; ++i) eta(i) = noise.sigma * rng.normal();
      const Vector prior_part = error_map * (prior_factor * z);
      const Vector noise_part = op * eta;
      const double sample = 0.5 * ((prior_part + noise_part).squaredNorm() + (noise_part - prior_part).squaredNorm());
      sum += sample;
      sum_sq += sample * sample;
    }
  }
  const double count = static_cast<double>(pairs);
  MonteCarloResult out;
  out.n_pairs = pairs;
  out.mean = sum / count;
  const double var = std::max(0.0, (sum_sq - count * out.mean * out.mean) / (count - 1.0));
  out.std_error = std::sqrt(var / count);
  return out;
}

}  // namespace modalest
