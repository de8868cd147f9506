// Copyright 2026 The KOVA Authors. All rights reserved.
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

// Dense symmetric-positive-definite helpers. Every covariance in the library
// goes through these; they are thin, checked wrappers around Eigen.

#pragma once

#include <algorithm>
#include <sstream>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "kova/errors.hpp"

namespace kova {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Relative jitter added to the diagonal when a Cholesky pivot fails.
inline constexpr double kJitterScale = 1e-8;

namespace detail {

inline std::string shape_string(Index rows, Index cols) {
  std::ostringstream os;
  os << rows << "x" << cols;
  return os.str();
}

}  // namespace detail

template <typename Derived>
void require_square(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw ShapeMismatch(std::string(what) + ": expected non-empty square matrix, got " +
                        detail::shape_string(m.rows(), m.cols()));
  }
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (!m.allFinite()) throw NonFiniteValue(std::string(what) + ": NaN or Inf entry");
}

/// Result of a checked Cholesky factorization. `jitter` is the diagonal shift
/// that was needed (0 when the first attempt succeeded).
template <typename Scalar>
struct CholeskyFactor {
  Eigen::LLT<MatrixX<Scalar>> llt;
  Scalar jitter = Scalar(0);

  MatrixX<Scalar> lower() const { return llt.matrixL(); }
};

/// Factor m = L Lᵀ. On pivot failure the diagonal is shifted once by
/// 1e-8 * trace/dim; a second failure throws NotPositiveDefinite.
template <typename Derived>
CholeskyFactor<typename Derived::Scalar> factorize_spd(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  require_square(m, "cholesky_factor");
  require_finite(m, "cholesky_factor");

  CholeskyFactor<Scalar> f;
  f.llt.compute(m);
  if (f.llt.info() == Eigen::Success) return f;

  const Index dim = m.rows();
  Scalar shift = Scalar(kJitterScale) * m.trace() / Scalar(dim);
  if (!(shift > Scalar(0))) shift = Scalar(kJitterScale);
  MatrixX<Scalar> shifted = m;
  shifted.diagonal().array() += shift;
  f.llt.compute(shifted);
  if (f.llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("cholesky_factor: non-positive pivot after jitter retry (dim " +
                              std::to_string(dim) + ")");
  }
  f.jitter = shift;
  return f;
}

/// Lower-triangular L with L Lᵀ == m.
template <typename Derived>
MatrixX<typename Derived::Scalar> cholesky_factor(const Eigen::MatrixBase<Derived>& m) {
  return factorize_spd(m).lower();
}

/// Solve m X = rhs for SPD m.
template <typename DerivedM, typename DerivedR>
MatrixX<typename DerivedM::Scalar> spd_solve(const Eigen::MatrixBase<DerivedM>& m,
                                             const Eigen::MatrixBase<DerivedR>& rhs) {
  if (m.rows() != rhs.rows()) {
    throw ShapeMismatch("spd_solve: matrix is " + detail::shape_string(m.rows(), m.cols()) +
                        ", rhs is " + detail::shape_string(rhs.rows(), rhs.cols()));
  }
  require_finite(rhs, "spd_solve");
  return factorize_spd(m).llt.solve(rhs);
}

/// (m + mᵀ) / 2.
template <typename Derived>
MatrixX<typename Derived::Scalar> symmetrize(const Eigen::MatrixBase<Derived>& m) {
  require_square(m, "symmetrize");
  using Scalar = typename Derived::Scalar;
  return (m + m.transpose()) * Scalar(0.5);
}

/// Lower triangle m(i, j), i >= j, becomes c · s_i · s_j · m(i, j) and is
/// copied to the upper triangle. Blocked so both triangles stay in cache.
template <typename Scalar>
void scale_lower_and_mirror(MatrixX<Scalar>& m, Scalar c, const VectorX<Scalar>& s) {
  require_square(m, "scale_lower_and_mirror");
  const Index n = m.rows();
  constexpr Index kBlock = 64;
  for (Index jb = 0; jb < n; jb += kBlock) {
    const Index jend = std::min(jb + kBlock, n);
    for (Index ib = jb; ib < n; ib += kBlock) {
      const Index iend = std::min(ib + kBlock, n);
      for (Index j = jb; j < jend; ++j) {
        const Scalar cj = c * s(j);
        for (Index i = std::max(ib, j); i < iend; ++i) m(i, j) *= cj * s(i);
      }
      for (Index i = ib; i < iend; ++i) {
        for (Index j = jb; j < std::min(jend, i); ++j) m(j, i) = m(i, j);
      }
    }
  }
}

/// In-place variant for large covariances; avoids a temporary of the full size.
template <typename Scalar>
void symmetrize_in_place(MatrixX<Scalar>& m) {
  require_square(m, "symmetrize");
  const Index n = m.rows();
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      const Scalar avg = (m(i, j) + m(j, i)) * Scalar(0.5);
      m(i, j) = avg;
      m(j, i) = avg;
    }
  }
}

template <typename Derived>
typename Derived::Scalar min_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  require_square(m, "min_eigenvalue");
  require_finite(m, "min_eigenvalue");
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NoConvergence("min_eigenvalue: tridiagonal QR iteration cap reached");
  }
  return solver.eigenvalues()(0);
}

/// Largest |m(i,j) - m(j,i)| relative to max|m|.
template <typename Derived>
typename Derived::Scalar relative_asymmetry(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const Scalar scale = m.cwiseAbs().maxCoeff();
  if (scale == Scalar(0)) return Scalar(0);
  return (m - m.transpose()).cwiseAbs().maxCoeff() / scale;
}

/// The covariance health check used throughout: symmetric to 1e-10 relative
/// and min eigenvalue >= -1e-8 * trace/dim.
template <typename Derived>
bool satisfies_psd_invariant(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (relative_asymmetry(m) > Scalar(1e-10)) return false;
  const Scalar floor = -Scalar(1e-8) * m.trace() / Scalar(m.rows());
  return min_eigenvalue(m) >= floor;
}

}  // namespace kova
