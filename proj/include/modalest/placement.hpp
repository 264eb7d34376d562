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
// Sensor placement.
//
//   cpqr     pivots of column-pivoted QR on Phi^T (Q-DEIM placement)
//   qmap     pivots of column-pivoted QR on sigma^-1 Gamma_prior^1/2 Phi^T
//   greedy_d greedy minimisation of Theta_D(S) = log det Gamma_post(S)
//   brute_d  exhaustive minimisation of Theta_D over all k-subsets
//
// All methods are deterministic. Ties go to the smallest index (greedy,
// CPQR) or the lexicographically smallest subset (brute force).

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "modalest/datasets.hpp"
#include "modalest/errors.hpp"
#include "modalest/estimate.hpp"
#include "modalest/numerics.hpp"
#include "modalest/parallel.hpp"
#include "modalest/pod.hpp"
#include "modalest/selection.hpp"

namespace modalest {

enum class PlacementMethod { kCpqr, kQmap, kGreedyD, kBruteD };

inline const char* to_string(PlacementMethod m) {
  switch (m) {
    case PlacementMethod::kCpqr: return "cpqr";
    case PlacementMethod::kQmap: return "qmap";
    case PlacementMethod::kGreedyD: return "greedy_d";
    case PlacementMethod::kBruteD: return "brute_d";
  }
  return "?";
}

inline std::optional<PlacementMethod> parse_placement_method(const std::string& s) {
  if (s == "cpqr") return PlacementMethod::kCpqr;
  if (s == "qmap") return PlacementMethod::kQmap;
  if (s == "greedy_d") return PlacementMethod::kGreedyD;
  if (s == "brute_d") return PlacementMethod::kBruteD;
  return std::nullopt;
}

struct PlacementResult {
  SensorSelection selection;
  PlacementMethod method = PlacementMethod::kCpqr;
  std::vector<double> objective_trace;  // Theta_D after each greedy step
  std::chrono::duration<double> elapsed{0.0};
};

/// Theta_D(S) = log det Gamma_post(S); the empty set gives log det Gamma_prior.
inline double theta_d(const ModalBasis& basis, const SensorSelection& sel, const PriorCovariance& prior,
                      const NoiseModel& noise) {
  return logdet_spd(posterior_covariance(sel.rows_of(basis.phi), prior, noise));
}

/// J_D(S) = Theta_D(empty) - Theta_D(S).
inline double info_gain(const ModalBasis& basis, const SensorSelection& sel, const PriorCovariance& prior,
                        const NoiseModel& noise) {
  if (sel.empty()) return 0.0;
  return logdet_spd(prior.gamma) - theta_d(basis, sel, prior, noise);
}

/// F = sigma^-1 Gamma_prior^1/2 Phi^T, n x N.
inline Matrix regularized_basis(const ModalBasis& basis, const PriorCovariance& prior, const NoiseModel& noise) {
  noise.validate();
  detail::require(noise.sigma > 0.0, "regularized_basis: sigma must be positive");
  detail::require(prior.size() == basis.n_modes(), "regularized_basis: prior size does not match mode count");
  return psd_sqrt(prior.gamma) * basis.phi.transpose() / noise.sigma;
}

/// J_D(S) through log det(I + (FS)^T (FS)), the k x k form of the same gain.
inline double info_gain_regularized(const ModalBasis& basis, const SensorSelection& sel,
                                    const PriorCovariance& prior, const NoiseModel& noise) {
  if (sel.empty()) return 0.0;
  const Matrix fs = sel.rows_of(regularized_basis(basis, prior, noise).transpose());  // k x n = (FS)^T
  return logdet_spd(Matrix::Identity(sel.size(), sel.size()) + fs * fs.transpose());
}

namespace detail {

inline SensorSelection first_pivots(const std::vector<Index>& pivots, Index k, Index n_locations) {
  return SensorSelection(std::vector<Index>(pivots.begin(), pivots.begin() + k), n_locations);
}

using Clock = std::chrono::steady_clock;

}  // namespace detail

inline PlacementResult place_cpqr(const ModalBasis& basis, Index k) {
  const auto t0 = detail::Clock::now();
  const Index N = basis.n_dims();
  detail::require(k >= 0 && k <= N, "place_cpqr: k must lie in [0, N]");
  PlacementResult out;
  out.method = PlacementMethod::kCpqr;
  out.selection = detail::first_pivots(cpqr(basis.phi.transpose()).pivots, k, N);
  out.elapsed = detail::Clock::now() - t0;
  return out;
}

inline PlacementResult place_qmap(const ModalBasis& basis, const PriorCovariance& prior, const NoiseModel& noise,
                                  Index k) {
  const auto t0 = detail::Clock::now();
  const Index N = basis.n_dims();
  detail::require(k >= 0 && k <= N, "place_qmap: k must lie in [0, N]");
  PlacementResult out;
  out.method = PlacementMethod::kQmap;
  out.selection = detail::first_pivots(cpqr(regularized_basis(basis, prior, noise)).pivots, k, N);
  out.elapsed = detail::Clock::now() - t0;
  return out;
}

/// Greedy D-optimal placement.
///
/// With `use_rank1` the gain of adding location l to S is
/// log(1 + phi_l^T Gamma_post(S) phi_l / sigma^2) (matrix determinant lemma)
/// and Gamma_post is updated by Sherman-Morrison after each pick, so each
/// candidate costs O(n^2). Without it every candidate recomputes
/// Theta_D(S u {l}) from scratch.
inline PlacementResult place_greedy_d(const ModalBasis& basis, const PriorCovariance& prior,
                                      const NoiseModel& noise, Index k, bool use_rank1 = true) {
  const auto t0 = detail::Clock::now();
  const Index N = basis.n_dims();
  detail::require(k >= 0, "place_greedy_d: k must be >= 0");
  detail::require(k <= N, "place_greedy_d: k = " + std::to_string(k) + " exceeds N = " + std::to_string(N));
  detail::require(prior.size() == basis.n_modes(), "place_greedy_d: prior size does not match mode count");
  noise.validate();
  detail::require(noise.sigma > 0.0, "place_greedy_d: sigma must be positive");
  require_spd_prior(prior);

  const double var = noise.variance();
  std::vector<bool> used(static_cast<std::size_t>(N), false);
  SensorSelection sel({}, N);
  PlacementResult out;
  out.method = PlacementMethod::kGreedyD;

  Matrix post = prior.gamma;
  double theta = logdet_spd(prior.gamma);
  for (Index step = 0; step < k; ++step) {
    Index best = -1;
    double best_gain = -std::numeric_limits<double>::infinity();
    double best_theta = theta;
    for (Index l = 0; l < N; ++l) {
      if (used[static_cast<std::size_t>(l)]) continue;
      double gain = 0.0;
      double next_theta = 0.0;
      if (use_rank1) {
        const Vector row = basis.phi.row(l).transpose();
        gain = std::log1p(row.dot(post * row) / var);
        next_theta = theta - gain;
      } else {
        next_theta = theta_d(basis, sel.with(l), prior, noise);
        gain = theta - next_theta;
      }
      if (gain > best_gain) {
        best_gain = gain;
        best = l;
        best_theta = next_theta;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    sel = sel.with(best);
    if (use_rank1) {
      const Vector row = basis.phi.row(best).transpose();
      const Vector pr = post * row;
      post -= pr * pr.transpose() / (var + row.dot(pr));
      post = 0.5 * (post + post.transpose());
    }
    theta = best_theta;
    out.objective_trace.push_back(theta);
  }
  out.selection = std::move(sel);
  out.elapsed = detail::Clock::now() - t0;
  return out;
}

/// C(n, k), saturating at UINT64_MAX.
inline std::uint64_t binomial(Index n, Index k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (Index i = 1; i <= k; ++i) {
    const auto num = static_cast<std::uint64_t>(n - k + i);
    if (r > UINT64_MAX / num) return UINT64_MAX;
    r = r * num / static_cast<std::uint64_t>(i);
  }
  return r;
}

/// Exhaustive D-optimal placement over all k-subsets.
///
/// Each subset is scored by J_D(S) = log det(I_k + S^T K S) with
/// K = Phi Gamma_prior Phi^T / sigma^2, which equals
/// log det Gamma_prior - log det Gamma_post(S). Subsets are enumerated in
/// lexicographic order, partitioned by first element across `jobs`
/// threads, and merged in partition order so exact ties keep the
/// lexicographically smallest subset.
inline PlacementResult place_brute_d(const ModalBasis& basis, const PriorCovariance& prior, const NoiseModel& noise,
                                     Index k, std::uint64_t budget, unsigned jobs = 1) {
  const auto t0 = detail::Clock::now();
  const Index N = basis.n_dims();
  detail::require(k >= 0 && k <= N, "place_brute_d: k must lie in [0, N]");
  const std::uint64_t count = binomial(N, k);
  if (count > budget) {
    throw ResourceError("brute-force placement needs C(" + std::to_string(N) + "," + std::to_string(k) +
                        ") = " + std::to_string(count) + " evaluations, budget is " + std::to_string(budget));
  }
  noise.validate();
  detail::require(noise.sigma > 0.0, "place_brute_d: sigma must be positive");
  require_spd_prior(prior);
  const Matrix kernel = basis.phi * prior.gamma * basis.phi.transpose() / noise.variance();

  PlacementResult out;
  out.method = PlacementMethod::kBruteD;
  if (k == 0) {
    out.selection = SensorSelection({}, N);
    out.elapsed = detail::Clock::now() - t0;
    return out;
  }

  struct Best {
    double gain = -std::numeric_limits<double>::infinity();
    std::vector<Index> subset;
  };
  const Index n_first = N - k + 1;
  std::vector<Best> partial(static_cast<std::size_t>(n_first));
  parallel_for(static_cast<std::size_t>(n_first), jobs, [&](std::size_t first_slot) {
    const auto first = static_cast<Index>(first_slot);
    std::vector<Index> idx(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = first + i;
    Best best;
    Matrix sub(k, k);
    Eigen::LLT<Matrix> llt(k);
    while (true) {
      for (Index i = 0; i < k; ++i) {
        for (Index j = 0; j <= i; ++j) {
          sub(i, j) = kernel(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]) + (i == j ? 1.0 : 0.0);
        }
      }
      llt.compute(sub);
      const double gain = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
      if (gain > best.gain) {
        best.gain = gain;
        best.subset = idx;
      }
      // Next combination with idx[0] fixed.
      Index pos = k - 1;
      while (pos >= 1 && idx[static_cast<std::size_t>(pos)] == N - k + pos) --pos;
      if (pos < 1) break;
      ++idx[static_cast<std::size_t>(pos)];
      for (Index i = pos + 1; i < k; ++i) idx[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(i - 1)] + 1;
    }
    partial[first_slot] = std::move(best);
  });

  Best best;
  for (auto& p : partial) {
    if (p.gain > best.gain) best = std::move(p);
  }
  out.selection = SensorSelection(best.subset, N);
  out.objective_trace.push_back(theta_d(basis, out.selection, prior, noise));
  out.elapsed = detail::Clock::now() - t0;
  return out;
}

/// q(N, k) = sqrt(N - k) 2^k, the CPQR bound on ||(S^T Phi)^+||_2 for k <= n.
inline double cpqr_growth_bound(Index N, Index k) {
  return std::sqrt(static_cast<double>(N - k)) * std::pow(2.0, static_cast<double>(k));
}

/// Lower bound log det(I + Sigma_k^2 / q(N,k)^2) on J_D of a Q-MAP
/// selection, Sigma_k the leading k singular values of F.
inline double qmap_gain_lower_bound(const ModalBasis& basis, const PriorCovariance& prior, const NoiseModel& noise,
                                    Index k) {
  const Vector s = econ_svd(regularized_basis(basis, prior, noise)).s;
  const double q = cpqr_growth_bound(basis.n_dims(), k);
  double acc = 0.0;
  for (Index i = 0; i < std::min<Index>(k, s.size()); ++i) acc += std::log1p(s(i) * s(i) / (q * q));
  return acc;
}

/// Upper bound log det(I + Sigma_k^2) on the optimal J_D.
inline double optimal_gain_upper_bound(const ModalBasis& basis, const PriorCovariance& prior,
                                       const NoiseModel& noise, Index k) {
  const Vector s = econ_svd(regularized_basis(basis, prior, noise)).s;
  double acc = 0.0;
  for (Index i = 0; i < std::min<Index>(k, s.size()); ++i) acc += std::log1p(s(i) * s(i));
  return acc;
}

/// Serialized as `method,k,N,seed,i0,i1,...`.
inline std::string selection_csv_line(const PlacementResult& r, std::uint64_t seed) {
  std::string line = std::string(to_string(r.method)) + "," + std::to_string(r.selection.size()) + "," +
                     std::to_string(r.selection.n_locations()) + "," + std::to_string(seed);
  for (const Index i : r.selection.indices()) line += "," + std::to_string(i);
  return line;
}

struct ParsedSelection {
  std::string method;
  std::uint64_t seed = 0;
  SensorSelection selection;
};

inline ParsedSelection parse_selection_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r' && c != '\n') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  detail::require(fields.size() >= 4, "selection line needs method,k,N,seed fields");
  ParsedSelection out;
  out.method = fields[0];
  try {
    const Index k = std::stoll(fields[1]);
    const Index N = std::stoll(fields[2]);
    out.seed = std::stoull(fields[3]);
    detail::require(static_cast<Index>(fields.size()) == 4 + k,
                    "selection line declares k=" + fields[1] + " but lists " + std::to_string(fields.size() - 4) +
                        " indices");
    std::vector<Index> idx;
    for (std::size_t i = 4; i < fields.size(); ++i) idx.push_back(std::stoll(fields[i]));
    out.selection = SensorSelection(std::move(idx), N);
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const InputError*>(&e)) throw;
    throw InputError(std::string("malformed selection line: ") + e.what());
  }
  return out;
}

}  // namespace modalest
