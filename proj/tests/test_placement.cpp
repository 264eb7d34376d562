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
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include "harmonic_fixture.hpp"
#include "modalest/placement.hpp"
#include "oracles.hpp"

namespace {

using modalest::Index;
using modalest::Matrix;
using modalest::ModalBasis;
using modalest::NoiseModel;
using modalest::PriorCovariance;
using modalest::SensorSelection;
using modalest::Vector;

constexpr double kGreedyFactor = 1.0 - 1.0 / std::numbers::e;

ModalBasis plain_basis(const Matrix& phi) {
  ModalBasis b;
  b.phi = phi;
  b.singular_values = Vector::Ones(phi.cols());
  b.mean = Vector::Zero(phi.rows());
  b.n_samples_used = 2;
  return b;
}

PriorCovariance identity_prior(Index n) { return {Matrix::Identity(n, n), true}; }

/// Harmonic data on a coarser grid, for brute-force-sized problems.
struct SmallHarmonic {
  ModalBasis basis;
  PriorCovariance prior;
};

SmallHarmonic small_harmonic(Index grid, Index modes, std::uint64_t seed = 0) {
  modalest::HarmonicConfig cfg;
  cfg.n_grid = grid;
  cfg.seed = seed;
  const auto x = modalest::generate_harmonic(cfg);
  const auto train = modalest::split(x, cfg.train_fraction).first;
  SmallHarmonic s;
  s.basis = modalest::pod_basis(modalest::center(train), modes);
  s.prior = modalest::prior_from_pod(s.basis);
  return s;
}

/// J_D by enumerating every k-subset with the posterior-based objective.
double exhaustive_best_gain(const ModalBasis& basis, const PriorCovariance& prior, const NoiseModel& noise, Index k) {
  const Index N = basis.n_dims();
  std::vector<bool> mask(static_cast<std::size_t>(N), false);
  std::fill(mask.begin(), mask.begin() + k, true);
  double best = -std::numeric_limits<double>::infinity();
  const Matrix inv_prior = prior.gamma.inverse();
  do {
    std::vector<Index> idx;
    for (Index i = 0; i < N; ++i)
      if (mask[static_cast<std::size_t>(i)]) idx.push_back(i);
    const Matrix a = SensorSelection(idx, N).rows_of(basis.phi);
    const Matrix post = (inv_prior + a.transpose() * a / noise.variance()).inverse();
    best = std::max(best, std::log(prior.gamma.determinant() / post.determinant()));
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return best;
}

TEST(Objectives, ThetaAndGainExamples) {
  const auto b = plain_basis(Matrix::Identity(2, 2));
  const auto prior = identity_prior(2);
  const NoiseModel noise{1.0};
  const SensorSelection none({}, 2), first({0}, 2);
  EXPECT_NEAR(modalest::theta_d(b, none, prior, noise), 0.0, 1e-15);
  EXPECT_NEAR(modalest::theta_d(b, first, prior, noise), std::log(0.5), 1e-15);
  EXPECT_EQ(modalest::info_gain(b, none, prior, noise), 0.0);
  EXPECT_NEAR(modalest::info_gain(b, first, prior, noise), std::log(2.0), 1e-15);
  EXPECT_NEAR(modalest::info_gain_regularized(b, first, prior, noise), std::log(2.0), 1e-15);
}

TEST(Objectives, DualFormulaAgreesOnRandomConfigs) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    const Index N = 6 + trial % 5, n = 1 + trial % 5, k = 1 + trial % 6;
    const auto b = plain_basis(oracle::random_orthonormal(rng, N, n));
    const Matrix g = oracle::random_matrix(rng, n, n);
    const PriorCovariance prior{g * g.transpose() + 0.1 * Matrix::Identity(n, n), false};
    const NoiseModel noise{0.05 + 0.2 * (trial % 4)};
    std::vector<Index> idx(static_cast<std::size_t>(N));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(std::min(k, N)));
    const SensorSelection sel(idx, N);
    const double a = modalest::info_gain(b, sel, prior, noise);
    const double c = modalest::info_gain_regularized(b, sel, prior, noise);
    EXPECT_NEAR(a, c, 1e-9 * std::max(1.0, std::abs(a))) << "trial " << trial;
  }
}

TEST(Objectives, ThetaNonIncreasingWhenAddingSensors) {
  const auto& h = test_support::default_harmonic();
  const auto basis = h.basis.truncated(15);
  const auto prior = modalest::prior_from_pod(basis);
  SensorSelection sel({}, 40);
  double prev = modalest::theta_d(basis, sel, prior, h.noise);
  for (Index l : {7, 30, 2, 19, 25, 11, 38, 0}) {
    sel = sel.with(l);
    const double t = modalest::theta_d(basis, sel, prior, h.noise);
    EXPECT_LE(t, prev + 1e-12);
    prev = t;
  }
}

TEST(Cpqr, IdentityLikeBasisPicksLeadingRows) {
  const auto b = plain_basis(Matrix::Identity(8, 4));
  for (Index k = 0; k <= 8; ++k) {
    std::vector<Index> want(static_cast<std::size_t>(k));
    std::iota(want.begin(), want.end(), Index{0});
    EXPECT_EQ(modalest::place_cpqr(b, k).selection.indices(), want) << "k = " << k;
  }
}

TEST(Cpqr, GrowthBoundOnHarmonicBases) {
  const auto& h = test_support::default_harmonic();
  for (Index k : {3, 5, 8, 12}) {
    const auto basis = h.basis.truncated(k);
    const auto sel = modalest::place_cpqr(basis, k).selection;
    const Vector s = oracle::singular_values_via_gram(sel.rows_of(basis.phi));
    EXPECT_LE(1.0 / s(k - 1), modalest::cpqr_growth_bound(40, k)) << "k = " << k;
  }
}

TEST(Cpqr, ToyAgainstExhaustiveSmallestSingularValue) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto b = plain_basis(oracle::random_orthonormal(rng, 6, 3));
    const auto sel = modalest::place_cpqr(b, 3).selection;
    const double got = oracle::singular_values_via_gram(sel.rows_of(b.phi))(2);
    double best = 0.0;
    for (Index i = 0; i < 6; ++i)
      for (Index j = i + 1; j < 6; ++j)
        for (Index l = j + 1; l < 6; ++l)
          best = std::max(best, oracle::singular_values_via_gram(SensorSelection({i, j, l}, 6).rows_of(b.phi))(2));
    EXPECT_LE(got, best + 1e-12);
    EXPECT_GE(got, best / modalest::cpqr_growth_bound(6, 3)) << "trial " << trial;
  }
}

TEST(Cpqr, InvariantUnderBasisRotation) {
  std::mt19937_64 rng(3);
  const auto& h = test_support::default_harmonic();
  for (Index n : {4, 9, 16}) {
    const auto basis = h.basis.truncated(n);
    const Matrix w = oracle::random_orthonormal(rng, n, n);
    const auto rotated = plain_basis(basis.phi * w);
    EXPECT_EQ(modalest::place_cpqr(basis, n).selection, modalest::place_cpqr(rotated, n).selection) << "n = " << n;
  }
}

TEST(Cpqr, KBeyondModesUsesFullPivotOrder) {
  const auto& h = test_support::default_harmonic();
  const auto basis = h.basis.truncated(5);
  const auto sel = modalest::place_cpqr(basis, 12).selection;
  EXPECT_EQ(sel.size(), 12);
  const auto prefix = modalest::place_cpqr(basis, 5).selection.indices();
  EXPECT_TRUE(std::equal(prefix.begin(), prefix.end(), sel.indices().begin()));
  EXPECT_TRUE(std::is_sorted(sel.indices().begin() + 5, sel.indices().end()));
}

TEST(Qmap, ScaledIdentityPriorMatchesCpqr) {
  const auto& h = test_support::default_harmonic();
  const auto basis = h.basis.truncated(10);
  for (double c : {0.3, 1.0, 7.0}) {
    const PriorCovariance prior{c * Matrix::Identity(10, 10), true};
    EXPECT_EQ(modalest::place_qmap(basis, prior, NoiseModel{0.2}, 10).selection,
              modalest::place_cpqr(basis, 10).selection);
  }
}

TEST(Qmap, MatchesGreedyAtSmallNoise) {
  const auto& h = test_support::default_harmonic();
  const NoiseModel noise{1e-4};
  for (Index n : {5, 10, 20, 30}) {
    const auto basis = h.basis.truncated(n);
    const auto prior = modalest::prior_from_pod(basis);
    const auto q = modalest::place_qmap(basis, prior, noise, 5).selection;
    const auto g = modalest::place_greedy_d(basis, prior, noise, 5).selection;
    EXPECT_EQ(modalest::dice(q, g), 1.0) << "n = " << n;
  }
}

TEST(Qmap, GainLowerBound) {
  for (Index k : {2, 3, 4, 5}) {
    const auto s = small_harmonic(20, 8);
    const NoiseModel noise{0.1};
    const auto sel = modalest::place_qmap(s.basis, s.prior, noise, k).selection;
    const double gain = modalest::info_gain(s.basis, sel, s.prior, noise);
    EXPECT_GE(gain, modalest::qmap_gain_lower_bound(s.basis, s.prior, noise, k)) << "k = " << k;
    EXPECT_LE(gain, modalest::optimal_gain_upper_bound(s.basis, s.prior, noise, k) + 1e-9);
  }
}

TEST(Greedy, TrivialProblem) {
  const auto b = plain_basis(Matrix::Identity(1, 1));
  const auto r = modalest::place_greedy_d(b, identity_prior(1), NoiseModel{1.0}, 1);
  EXPECT_EQ(r.selection.indices(), std::vector<Index>{0});
  EXPECT_THROW(modalest::place_greedy_d(b, identity_prior(1), NoiseModel{1.0}, 2), modalest::InputError);
}

TEST(Greedy, RankOneMatchesNaive) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 15; ++trial) {
    const Index N = 10 + trial % 7, n = 2 + trial % 6, k = 1 + trial % 9;
    const auto b = plain_basis(oracle::random_orthonormal(rng, N, n));
    const Matrix g = oracle::random_matrix(rng, n, n);
    const PriorCovariance prior{g * g.transpose() + 0.05 * Matrix::Identity(n, n), false};
    const NoiseModel noise{0.1 + 0.1 * (trial % 3)};
    const auto fast = modalest::place_greedy_d(b, prior, noise, k, true);
    const auto slow = modalest::place_greedy_d(b, prior, noise, k, false);
    ASSERT_EQ(fast.selection, slow.selection) << "trial " << trial;
    for (std::size_t i = 0; i < fast.objective_trace.size(); ++i) {
      EXPECT_NEAR(fast.objective_trace[i], slow.objective_trace[i],
                  1e-8 * std::max(1.0, std::abs(slow.objective_trace[i])));
    }
  }
}

TEST(Greedy, TraceNonIncreasingAndDistinct) {
  const auto& h = test_support::default_harmonic();
  const auto basis = h.basis.truncated(20);
  const auto r = modalest::place_greedy_d(basis, modalest::prior_from_pod(basis), h.noise, 25);
  const std::set<Index> uniq(r.selection.indices().begin(), r.selection.indices().end());
  EXPECT_EQ(uniq.size(), 25u);
  double prev = modalest::logdet_spd(modalest::prior_from_pod(basis).gamma);
  for (double t : r.objective_trace) {
    EXPECT_LE(t, prev + 1e-9 * std::max(1.0, std::abs(prev)));
    prev = t;
  }
  EXPECT_NEAR(r.objective_trace.back(), modalest::theta_d(basis, r.selection, modalest::prior_from_pod(basis), h.noise),
              1e-8 * std::abs(r.objective_trace.back()));
}

TEST(Greedy, SubmodularGains) {
  std::mt19937_64 rng(5);
  const auto& h = test_support::default_harmonic();
  const auto basis = h.basis.truncated(12);
  const auto prior = modalest::prior_from_pod(basis);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Index> perm(40);
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const Index s_size = static_cast<Index>(rng() % 6), t_size = s_size + 1 + static_cast<Index>(rng() % 6);
    const SensorSelection s(std::vector<Index>(perm.begin(), perm.begin() + s_size), 40);
    const SensorSelection t(std::vector<Index>(perm.begin(), perm.begin() + t_size), 40);
    const Index l = perm[static_cast<std::size_t>(t_size)];
    const double gs = modalest::theta_d(basis, s, prior, h.noise) - modalest::theta_d(basis, s.with(l), prior, h.noise);
    const double gt = modalest::theta_d(basis, t, prior, h.noise) - modalest::theta_d(basis, t.with(l), prior, h.noise);
    EXPECT_GE(gs, gt - 1e-9 * std::max(1.0, std::abs(gs))) << "trial " << trial;
  }
}

TEST(BruteForce, FullSetAndToy) {
  const auto s = small_harmonic(6, 3);
  EXPECT_EQ(modalest::place_brute_d(s.basis, s.prior, NoiseModel{0.1}, 6, 10).selection.indices(),
            (std::vector<Index>{0, 1, 2, 3, 4, 5}));

  Matrix phi = Matrix::Zero(4, 2);
  phi << 0.1, 0.0, 0.0, 0.1, 0.99, 0.0, 0.0, 0.2;
  const auto b = plain_basis(phi);
  EXPECT_EQ(modalest::place_brute_d(b, identity_prior(2), NoiseModel{1.0}, 1, 10).selection.indices(),
            std::vector<Index>{2});
}

TEST(BruteForce, MatchesIndependentEnumeration) {
  const auto s = small_harmonic(12, 5);
  const NoiseModel noise{0.1};
  for (Index k : {1, 2, 3, 4}) {
    const auto r = modalest::place_brute_d(s.basis, s.prior, noise, k, 1000000);
    const double got = modalest::info_gain(s.basis, r.selection, s.prior, noise);
    EXPECT_NEAR(got, exhaustive_best_gain(s.basis, s.prior, noise, k), 1e-8) << "k = " << k;
    EXPECT_TRUE(std::is_sorted(r.selection.indices().begin(), r.selection.indices().end()));
  }
}

TEST(BruteForce, ParallelMatchesSerial) {
  const auto s = small_harmonic(16, 6);
  const NoiseModel noise{0.1};
  const auto serial = modalest::place_brute_d(s.basis, s.prior, noise, 4, 1000000, 1);
  const auto parallel = modalest::place_brute_d(s.basis, s.prior, noise, 4, 1000000, 4);
  EXPECT_EQ(serial.selection, parallel.selection);
}

TEST(BruteForce, TiesResolveToLexicographicallySmallest) {
  // Every row identical in norm and orthogonal pairs give equal gains.
  const auto b = plain_basis(Matrix::Identity(4, 4) * 0.5);
  const auto r = modalest::place_brute_d(b, identity_prior(4), NoiseModel{1.0}, 2, 100);
  EXPECT_EQ(r.selection.indices(), (std::vector<Index>{0, 1}));
}

TEST(BruteForce, BudgetGuard) {
  const auto& h = test_support::default_harmonic();
  const auto basis = h.basis.truncated(5);
  try {
    modalest::place_brute_d(basis, modalest::prior_from_pod(basis), h.noise, 5, 1000);
    FAIL() << "expected ResourceError";
  } catch (const modalest::ResourceError& e) {
    EXPECT_NE(std::string(e.what()).find("658008"), std::string::npos) << e.what();
  }
  EXPECT_EQ(modalest::binomial(40, 5), 658008u);
  EXPECT_EQ(modalest::binomial(20, 5), 15504u);
  EXPECT_EQ(modalest::binomial(5, 6), 0u);
  EXPECT_EQ(modalest::binomial(1000, 500), UINT64_MAX);
}

TEST(GreedyGuarantee, HarmonicReducedGrid) {
  const auto s = small_harmonic(20, 10);
  const NoiseModel noise{0.1};
  for (Index k : {2, 3, 4, 5}) {
    const auto greedy = modalest::place_greedy_d(s.basis, s.prior, noise, k);
    const auto brute = modalest::place_brute_d(s.basis, s.prior, noise, k, 1000000);
    const double jg = modalest::info_gain(s.basis, greedy.selection, s.prior, noise);
    const double jb = modalest::info_gain(s.basis, brute.selection, s.prior, noise);
    EXPECT_GE(jg, kGreedyFactor * jb - 1e-9) << "k = " << k;
    EXPECT_LE(jg, jb + 1e-9) << "k = " << k;
  }
}

TEST(Dice, Examples) {
  const SensorSelection a({1, 2, 3}, 10), b({2, 3, 4}, 10), c({7, 8}, 10);
  EXPECT_EQ(modalest::dice(a, a), 1.0);
  EXPECT_EQ(modalest::dice(a, c), 0.0);
  EXPECT_DOUBLE_EQ(modalest::dice(a, b), 2.0 / 3.0);
  EXPECT_THROW(modalest::dice(a, SensorSelection({1}, 11)), modalest::InputError);
}

TEST(Selection, ValidatesIndices) {
  EXPECT_THROW(SensorSelection({1, 1}, 3), modalest::InputError);
  EXPECT_THROW(SensorSelection({3}, 3), modalest::InputError);
  EXPECT_THROW(SensorSelection({-1}, 3), modalest::InputError);
}

TEST(SelectionCsv, RoundTrip) {
  modalest::PlacementResult r;
  r.method = modalest::PlacementMethod::kGreedyD;
  r.selection = SensorSelection({4, 0, 9}, 40);
  const std::string line = modalest::selection_csv_line(r, 17);
  EXPECT_EQ(line, "greedy_d,3,40,17,4,0,9");
  const auto parsed = modalest::parse_selection_csv_line(line);
  EXPECT_EQ(parsed.method, "greedy_d");
  EXPECT_EQ(parsed.seed, 17u);
  EXPECT_EQ(parsed.selection, r.selection);
  EXPECT_THROW(modalest::parse_selection_csv_line("cpqr,2,40,0,1"), modalest::InputError);
  EXPECT_THROW(modalest::parse_selection_csv_line("cpqr,x,40,0"), modalest::InputError);
  EXPECT_THROW(modalest::parse_selection_csv_line("cpqr,1,40,0,40"), modalest::InputError);
}

TEST(PlacementMethod, ParseNames) {
  for (auto m : {modalest::PlacementMethod::kCpqr, modalest::PlacementMethod::kQmap,
                 modalest::PlacementMethod::kGreedyD, modalest::PlacementMethod::kBruteD}) {
    EXPECT_EQ(modalest::parse_placement_method(modalest::to_string(m)), m);
  }
  EXPECT_FALSE(modalest::parse_placement_method("bogus").has_value());
}

TEST(Determinism, RepeatedCallsIdentical) {
  const auto& h = test_support::default_harmonic();
  const auto basis = h.basis.truncated(20);
  const auto prior = modalest::prior_from_pod(basis);
  EXPECT_EQ(modalest::place_greedy_d(basis, prior, h.noise, 8).selection,
            modalest::place_greedy_d(basis, prior, h.noise, 8).selection);
  EXPECT_EQ(modalest::place_qmap(basis, prior, h.noise, 8).selection,
            modalest::place_qmap(basis, prior, h.noise, 8).selection);
}

}  // namespace
