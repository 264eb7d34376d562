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
// Dense kernels used throughout the library: column-pivoted QR, thin SVD,
// symmetric eigendecomposition, pseudoinverse solves and SPD log-determinants.
// Everything here is a pure function of its input and deterministic.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "modalest/errors.hpp"

namespace modalest {

using Matrix = Eigen::MatrixXd;  // column-major
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kEps = std::numeric_limits<double>::epsilon();

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// Numerical-rank cutoff: max(rows, cols) * eps * largest.
inline double rank_tolerance(Index rows, Index cols, double largest) {
  return static_cast<double>(std::max(rows, cols)) * kEps * largest;
}

struct CpqrFactorization {
  std::vector<Index> pivots;  // full permutation of input columns
  Matrix q;                   // rows x min(rows, cols), orthonormal columns
  Matrix r;                   // min(rows, cols) x cols, upper trapezoidal
  Index numerical_rank = 0;
};

/// Householder QR with greedy column pivoting.
///
/// Residual column norms are recomputed from the updated matrix at every
/// step. Norms within 1e-12 (relative) of the current maximum count as tied
/// and resolve to the smallest column index; once residuals fall below the
/// rank tolerance they are treated as exactly zero, so the tail of the
/// permutation is in increasing index order.
inline CpqrFactorization cpqr(const Matrix& m) {
  detail::require(m.cols() >= 1, "cpqr: matrix has no columns");
  detail::require(all_finite(m), "cpqr: non-finite entry in input");

  const Index rows = m.rows();
  const Index cols = m.cols();
  const Index steps = std::min(rows, cols);

  Matrix work = m;
  std::vector<Index> perm(static_cast<std::size_t>(cols));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::vector<Vector> reflectors;
  std::vector<double> taus;
  reflectors.reserve(static_cast<std::size_t>(steps));

  double largest_norm = 0.0;
  for (Index j = 0; j < cols; ++j) largest_norm = std::max(largest_norm, m.col(j).norm());
  const double tol = rank_tolerance(rows, cols, largest_norm);

  CpqrFactorization out;
  for (Index step = 0; step < steps; ++step) {
    // Residual norms of the trailing block.
    Index best = step;
    double best_norm = -1.0;
    std::vector<double> norms(static_cast<std::size_t>(cols - step));
    for (Index j = step; j < cols; ++j) {
      double v = work.col(j).tail(rows - step).norm();
      if (v <= tol) v = 0.0;
      norms[static_cast<std::size_t>(j - step)] = v;
      best_norm = std::max(best_norm, v);
    }
    const double tie_floor = best_norm * (1.0 - 1e-12);
    Index best_orig = cols;
    for (Index j = step; j < cols; ++j) {
      const double v = norms[static_cast<std::size_t>(j - step)];
      if (v >= tie_floor && perm[static_cast<std::size_t>(j)] < best_orig) {
        best = j;
        best_orig = perm[static_cast<std::size_t>(j)];
      }
    }
    if (best != step) {
      work.col(step).swap(work.col(best));
      std::swap(perm[static_cast<std::size_t>(step)], perm[static_cast<std::size_t>(best)]);
    }
    if (best_norm > 0.0) ++out.numerical_rank;

    // Householder reflector zeroing work(step+1:, step).
    Vector x = work.col(step).tail(rows - step);
    const double alpha = x.norm();
    double tau = 0.0;
    Vector v = Vector::Zero(x.size());
    if (alpha > 0.0) {
      const double beta = x(0) >= 0.0 ? -alpha : alpha;
      v = x;
      v(0) -= beta;
      const double vnorm2 = v.squaredNorm();
      if (vnorm2 > 0.0) {
        tau = 2.0 / vnorm2;
        auto block = work.bottomRightCorner(rows - step, cols - step);
        const Eigen::RowVectorXd w = v.transpose() * block;
        block.noalias() -= tau * v * w;
      }
      work(step, step) = beta;
      work.col(step).tail(rows - step - 1).setZero();
    }
    reflectors.push_back(std::move(v));
    taus.push_back(tau);
  }

  // Tail ordering past the last reflected row: residuals are zero in exact
  // arithmetic, so only the first-index rule applies.
  if (steps < cols) {
    std::vector<std::pair<Index, Index>> tail;  // (original index, work column)
    for (Index j = steps; j < cols; ++j) tail.emplace_back(perm[static_cast<std::size_t>(j)], j);
    std::sort(tail.begin(), tail.end());
    Matrix reordered = work;
    for (std::size_t t = 0; t < tail.size(); ++t) {
      reordered.col(steps + static_cast<Index>(t)) = work.col(tail[t].second);
      perm[static_cast<std::size_t>(steps) + t] = tail[t].first;
    }
    work = std::move(reordered);
  }

  out.r = work.topRows(steps).triangularView<Eigen::Upper>();
  out.q = Matrix::Identity(rows, steps);
  for (Index step = steps - 1; step >= 0; --step) {
    const Vector& v = reflectors[static_cast<std::size_t>(step)];
    const double tau = taus[static_cast<std::size_t>(step)];
    if (tau == 0.0) continue;
    auto block = out.q.bottomRows(rows - step);
    const Eigen::RowVectorXd w = v.transpose() * block;
    block.noalias() -= tau * v * w;
  }
  // Positive diagonal convention for R.
  for (Index i = 0; i < steps; ++i) {
    if (out.r(i, i) < 0.0) {
      out.r.row(i) *= -1.0;
      out.q.col(i) *= -1.0;
    }
  }
  out.pivots = std::move(perm);
  return out;
}

struct EconSvd {
  Matrix u;   // rows x r
  Vector s;   // non-increasing, r = min(rows, cols)
  Matrix vt;  // r x cols
};

/// Thin SVD. Each left singular vector is signed so its largest-magnitude
/// entry (first such on ties) is positive; the right vector follows.
inline EconSvd econ_svd(const Matrix& m) {
  detail::require(m.size() > 0, "econ_svd: empty matrix");
  detail::require(all_finite(m), "econ_svd: non-finite entry in input");
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw NumericalError("econ_svd: SVD did not converge for " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + " input");
  }
  EconSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV().transpose()};
  for (Index j = 0; j < out.u.cols(); ++j) {
    Index arg = 0;
    out.u.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.u(arg, j) < 0.0) {
      out.u.col(j) *= -1.0;
      out.vt.row(j) *= -1.0;
    }
  }
  return out;
}

struct SymEig {
  Vector values;   // non-increasing
  Matrix vectors;  // orthonormal columns matching values
};

/// Symmetric eigendecomposition with eigenvalues in decreasing order.
inline SymEig sym_eig(const Matrix& m) {
  detail::require(m.rows() == m.cols(), "sym_eig: matrix is not square");
  detail::require(all_finite(m), "sym_eig: non-finite entry in input");
  const double scale = m.cwiseAbs().maxCoeff();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 * scale) {
    throw InputError("sym_eig: asymmetry " + std::to_string(asym) + " exceeds tolerance");
  }
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw NumericalError("sym_eig: eigensolver did not converge");
  const Index n = m.rows();
  SymEig out{Vector(n), Matrix(n, n)};
  for (Index i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return out;
}

/// A^+ assembled from a truncated SVD.
inline Matrix pseudo_inverse(const Matrix& a) {
  if (a.size() == 0) return Matrix::Zero(a.cols(), a.rows());
  const EconSvd svd = econ_svd(a);
  const double tol = rank_tolerance(a.rows(), a.cols(), svd.s.size() ? svd.s(0) : 0.0);
  Matrix out = Matrix::Zero(a.cols(), a.rows());
  for (Index i = 0; i < svd.s.size(); ++i) {
    if (svd.s(i) > tol) out.noalias() += (svd.vt.row(i).transpose() / svd.s(i)) * svd.u.col(i).transpose();
  }
  return out;
}

/// Minimum-norm least-squares solution A^+ y.
inline Vector min_norm_solve(const Matrix& a, const Vector& y) {
  detail::require(a.rows() == y.size(), "min_norm_solve: rows(a) != len(y)");
  detail::require(all_finite(a) && y.allFinite(), "min_norm_solve: non-finite input");
  if (a.size() == 0) return Vector::Zero(a.cols());
  const EconSvd svd = econ_svd(a);
  const double tol = rank_tolerance(a.rows(), a.cols(), svd.s(0));
  Vector out = Vector::Zero(a.cols());
  for (Index i = 0; i < svd.s.size(); ++i) {
    if (svd.s(i) > tol) out += svd.vt.row(i).transpose() * (svd.u.col(i).dot(y) / svd.s(i));
  }
  return out;
}

/// Number of singular values above the rank tolerance.
inline Index numerical_rank(const Matrix& a) {
  if (a.size() == 0) return 0;
  const EconSvd svd = econ_svd(a);
  const double tol = rank_tolerance(a.rows(), a.cols(), svd.s(0));
  return static_cast<Index>((svd.s.array() > tol).count());
}

/// Lower Cholesky factor. Throws NumericalError naming the first leading
/// minor that is not positive definite.
inline Matrix cholesky_lower(const Matrix& m) {
  detail::require(m.rows() == m.cols(), "cholesky: matrix is not square");
  const Index n = m.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double d = m(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw NumericalError("cholesky: leading minor of order " + std::to_string(j + 1) +
                           " is not positive definite");
    }
    d = std::sqrt(d);
    l(j, j) = d;
    for (Index i = j + 1; i < n; ++i) {
      l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / d;
    }
  }
  return l;
}

/// log det of an SPD matrix via its Cholesky diagonal.
inline double logdet_spd(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const Matrix l = cholesky_lower(m);
  return 2.0 * l.diagonal().array().log().sum();
}

/// Solve (SPD) x = rhs using the Cholesky factor.
inline Matrix spd_solve(const Matrix& spd, const Matrix& rhs) {
  const Matrix l = cholesky_lower(spd);
  const Matrix z = l.triangularView<Eigen::Lower>().solve(rhs);
  return l.transpose().triangularView<Eigen::Upper>().solve(z);
}

/// Spectral norm via the largest singular value.
inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return econ_svd(m).s(0);
}

/// Symmetric PSD square root; eigenvalues below 1e-12 * lambda_max clamp to 0.
inline Matrix psd_sqrt(const Matrix& m) {
  const SymEig eig = sym_eig(m);
  const double lmax = eig.values.size() ? std::max(eig.values(0), 0.0) : 0.0;
  Vector root(eig.values.size());
  for (Index i = 0; i < root.size(); ++i) {
    const double v = eig.values(i);
    if (v < -1e-12 * lmax) throw InputError("psd_sqrt: matrix has a negative eigenvalue");
    root(i) = v > 0.0 ? std::sqrt(v) : 0.0;
  }
  return eig.vectors * root.asDiagonal() * eig.vectors.transpose();
}

}  // namespace modalest
