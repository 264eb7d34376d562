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

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <utility>

#include "modalest/errors.hpp"
#include "modalest/numerics.hpp"
#include "modalest/rng.hpp"

namespace modalest {

/// N x p matrix of states, one sample per column.
struct SnapshotMatrix {
  Matrix data;
  std::optional<Vector> mean;  // set once centered

  Index n_dims() const { return data.rows(); }
  Index n_samples() const { return data.cols(); }
};

enum class AmplitudeParam { kStd, kVariance };

/// Random harmonic benchmark
///   f_i(x_g) = sum_j a_ij sin(j x_g + phi_ij),  x_g = 2 pi g / N
/// with phi_ij ~ U[0, 2pi) and a_ij ~ N(0, s_j) where s_j = 1/j for
/// j <= spectral_break and 1/j^3 above it. `amplitude_param` says whether
/// s_j is the standard deviation (default) or the variance.
struct HarmonicConfig {
  Index n_grid = 40;
  Index n_terms = 20;
  Index n_samples = 1000;
  double train_fraction = 0.75;
  std::uint64_t seed = 0;
  AmplitudeParam amplitude_param = AmplitudeParam::kStd;
  Index spectral_break = 10;

  void validate() const {
    detail::require(n_grid >= 2, "harmonic: n_grid must be >= 2");
    detail::require(n_terms >= 1, "harmonic: n_terms must be >= 1");
    detail::require(n_samples >= 1, "harmonic: n_samples must be >= 1");
    detail::require(train_fraction > 0.0 && train_fraction < 1.0,
                    "harmonic: train_fraction must lie in (0, 1)");
  }
};

/// Raw draws for one (sample, term) pair; exposed for testing the amplitude law.
struct HarmonicDraw {
  double amplitude;
  double phase;
};

/// Scale parameter s_j of the amplitude law for term j (1-based).
inline double harmonic_amplitude_scale(const HarmonicConfig& config, Index j) {
  const double jj = static_cast<double>(j);
  return j <= config.spectral_break ? 1.0 / jj : 1.0 / (jj * jj * jj);
}

inline double harmonic_amplitude_std(const HarmonicConfig& config, Index j) {
  const double s = harmonic_amplitude_scale(config, j);
  return config.amplitude_param == AmplitudeParam::kStd ? s : std::sqrt(s);
}

/// Draws for sample `i`: one substream per sample, terms in order, each
/// term consuming a normal then a uniform.
inline std::vector<HarmonicDraw> harmonic_draws(const HarmonicConfig& config, Index i) {
  Stream rng(config.seed, streams::kHarmonic + static_cast<std::uint64_t>(i));
  std::vector<HarmonicDraw> out(static_cast<std::size_t>(config.n_terms));
  for (Index j = 1; j <= config.n_terms; ++j) {
    const double a = rng.normal() * harmonic_amplitude_std(config, j);
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    out[static_cast<std::size_t>(j - 1)] = {a, phi};
  }
  return out;
}

using HarmonicDrawHook = std::function<std::vector<HarmonicDraw>(Index sample)>;

/// Generate the harmonic dataset. `hook`, when set, replaces the random
/// draws (used by tests to force amplitudes and phases).
inline SnapshotMatrix generate_harmonic(const HarmonicConfig& config,
                                        const HarmonicDrawHook& hook = {}) {
  config.validate();
  const Index n = config.n_grid;
  SnapshotMatrix out{Matrix::Zero(n, config.n_samples), std::nullopt};
  for (Index i = 0; i < config.n_samples; ++i) {
    const auto draws = hook ? hook(i) : harmonic_draws(config, i);
    detail::require(static_cast<Index>(draws.size()) == config.n_terms,
                    "harmonic: draw hook returned wrong number of terms");
    for (Index g = 0; g < n; ++g) {
      const double x = static_cast<double>(g) * 2.0 * std::numbers::pi / static_cast<double>(n);
      double f = 0.0;
      for (Index j = 1; j <= config.n_terms; ++j) {
        const auto& d = draws[static_cast<std::size_t>(j - 1)];
        f += d.amplitude * std::sin(static_cast<double>(j) * x + d.phase);
      }
      out.data(g, i) = f;
    }
  }
  return out;
}

/// Isotropic Gaussian measurement noise, covariance sigma^2 I.
struct NoiseModel {
  double sigma = 0.0;

  void validate() const {
    detail::require(std::isfinite(sigma) && sigma >= 0.0, "noise: sigma must be finite and >= 0");
  }
  double variance() const { return sigma * sigma; }
};

/// Adds iid N(0, sigma^2) to every entry. Column c draws from its own
/// substream so results do not depend on matrix width.
inline SnapshotMatrix add_noise(const SnapshotMatrix& x, const NoiseModel& noise, std::uint64_t seed) {
  noise.validate();
  SnapshotMatrix out = x;
  if (noise.sigma == 0.0) return out;
  for (Index c = 0; c < x.data.cols(); ++c) {
    Stream rng(seed, streams::kNoise + static_cast<std::uint64_t>(c));
    for (Index r = 0; r < x.data.rows(); ++r) out.data(r, c) += noise.sigma * rng.normal();
  }
  return out;
}

/// Mean over columns of ||noisy - clean|| / ||clean||.
inline double mean_noise_ratio(const SnapshotMatrix& clean, const SnapshotMatrix& noisy) {
  detail::require(clean.data.rows() == noisy.data.rows() && clean.data.cols() == noisy.data.cols(),
                  "noise ratio: shape mismatch");
  double acc = 0.0;
  for (Index c = 0; c < clean.data.cols(); ++c) {
    acc += (noisy.data.col(c) - clean.data.col(c)).norm() / clean.data.col(c).norm();
  }
  return acc / static_cast<double>(clean.data.cols());
}

/// Order-preserving split: the first ceil(p * fraction) columns train.
inline std::pair<SnapshotMatrix, SnapshotMatrix> split(const SnapshotMatrix& x, double train_fraction) {
  detail::require(train_fraction > 0.0 && train_fraction < 1.0, "split: fraction must lie in (0, 1)");
  const Index p = x.n_samples();
  // Guard against 0.75 * 1000 landing a hair above 750.
  const double raw = static_cast<double>(p) * train_fraction;
  Index n_train = static_cast<Index>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  detail::require(n_train >= 1 && n_train < p,
                  "split: degenerate split (" + std::to_string(n_train) + " of " + std::to_string(p) + ")");
  SnapshotMatrix train{x.data.leftCols(n_train), x.mean};
  SnapshotMatrix test{x.data.rightCols(p - n_train), x.mean};
  return {std::move(train), std::move(test)};
}

}  // namespace modalest
