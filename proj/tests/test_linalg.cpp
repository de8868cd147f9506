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


#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "kova/linalg.hpp"
#include "oracles.hpp"

namespace kova {
namespace {

TEST(Cholesky, IdentityFactorsToIdentity) {
  const MatrixXd l = cholesky_factor(MatrixXd::Identity(3, 3));
  EXPECT_TRUE(l.isApprox(MatrixXd::Identity(3, 3)));
}

TEST(Cholesky, TwoByTwoByHand) {
  MatrixXd m(2, 2);
  m << 4, 2, 2, 3;
  MatrixXd expect(2, 2);
  expect << 2, 0, 1, std::sqrt(2.0);
  EXPECT_LT((cholesky_factor(m) - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Cholesky, RandomReconstruction) {
  std::mt19937_64 rng(11);
  const MatrixXd a = oracle::random_spd(20, rng);
  const MatrixXd l = cholesky_factor(a);
  EXPECT_LE(oracle::rel_frobenius(l * l.transpose(), a), 1e-9);
  EXPECT_TRUE(l.isLowerTriangular());
}

TEST(Cholesky, RecoversLowerFactor) {
  std::mt19937_64 rng(12);
  MatrixXd l = oracle::random_matrix(8, 8, rng).triangularView<Eigen::Lower>();
  l.diagonal() = l.diagonal().cwiseAbs().array() + 0.5;
  EXPECT_LT((cholesky_factor(MatrixXd(l * l.transpose())) - l).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Cholesky, JitterRescuesSemidefinite) {
  // rank one: the second pivot is exactly zero
  MatrixXd m(2, 2);
  m << 1, 1, 1, 1;
  const auto f = factorize_spd(m);
  EXPECT_DOUBLE_EQ(f.jitter, 1e-8);
  EXPECT_EQ(factorize_spd(MatrixXd::Identity(2, 2)).jitter, 0.0);
}

TEST(Cholesky, IndefiniteThrows) {
  MatrixXd m(2, 2);
  m << 1, 0, 0, -1;
  EXPECT_THROW(cholesky_factor(m), NotPositiveDefinite);
}

TEST(Cholesky, RejectsNonFiniteAndNonSquare) {
  MatrixXd m = MatrixXd::Identity(2, 2);
  m(0, 1) = std::nan("");
  EXPECT_THROW(cholesky_factor(m), NonFiniteValue);
  EXPECT_THROW(cholesky_factor(MatrixXd::Ones(2, 3)), ShapeMismatch);
}

TEST(SpdSolve, IdentityAndDiagonal) {
  MatrixXd rhs(2, 1);
  rhs << 3, 4;
  EXPECT_TRUE(spd_solve(MatrixXd::Identity(2, 2), rhs).isApprox(rhs));
  MatrixXd d(2, 2);
  d << 2, 0, 0, 4;
  MatrixXd r2(2, 1);
  r2 << 2, 8;
  MatrixXd x(2, 1);
  x << 1, 2;
  EXPECT_LT((spd_solve(d, r2) - x).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SpdSolve, RandomResidual) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd a = oracle::random_spd(10, rng);
    const MatrixXd rhs = oracle::random_matrix(10, 3, rng);
    const MatrixXd x = spd_solve(a, rhs);
    EXPECT_LE((a * x - rhs).norm(), 1e-8 * rhs.norm());
  }
}

TEST(SpdSolve, ShapeMismatch) {
  EXPECT_THROW(spd_solve(MatrixXd::Identity(3, 3), MatrixXd::Ones(2, 1)), ShapeMismatch);
}

TEST(Symmetrize, Averages) {
  MatrixXd m(2, 2);
  m << 1, 2, 0, 1;
  EXPECT_EQ(symmetrize(m), MatrixXd::Ones(2, 2));
}

TEST(Symmetrize, FixedPointAndIdempotent) {
  std::mt19937_64 rng(14);
  const MatrixXd s = oracle::random_spd(5, rng);
  EXPECT_EQ(symmetrize(s), s);
  const MatrixXd once = symmetrize(oracle::random_matrix(5, 5, rng));
  EXPECT_EQ(once, once.transpose());
  EXPECT_EQ(symmetrize(once), once);
}

TEST(Symmetrize, InPlaceMatches) {
  std::mt19937_64 rng(15);
  MatrixXd m = oracle::random_matrix(7, 7, rng);
  const MatrixXd expect = symmetrize(m);
  symmetrize_in_place(m);
  EXPECT_EQ(m, expect);
}

TEST(ScaleLowerAndMirror, MatchesDenseCongruence) {
  std::mt19937_64 rng(16);
  for (Index n : {1, 5, 64, 65, 130}) {
    const MatrixXd a = oracle::random_spd(n, rng);
    const VectorXd s = oracle::random_vector(n, rng);
    MatrixXd m = a;
    m.triangularView<Eigen::StrictlyUpper>().setConstant(-7.0);  // must be ignored
    scale_lower_and_mirror(m, 1.5, s);
    const MatrixXd expect = 1.5 * s.asDiagonal() * a * s.asDiagonal();
    EXPECT_LT((m - expect).cwiseAbs().maxCoeff(), 1e-12 * expect.cwiseAbs().maxCoeff()) << "n=" << n;
    EXPECT_EQ(m, m.transpose());
  }
}

TEST(MinEigenvalue, Examples) {
  EXPECT_NEAR(min_eigenvalue(MatrixXd::Identity(4, 4)), 1.0, 1e-12);
  VectorXd d(2);
  d << 3, 0.5;
  EXPECT_NEAR(min_eigenvalue(MatrixXd(d.asDiagonal())), 0.5, 1e-12);
}

TEST(MinEigenvalue, MatchesJacobiOracle) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const MatrixXd a = oracle::random_spd(12, rng, 0.1);
    EXPECT_NEAR(min_eigenvalue(a), oracle::jacobi_eigenvalues(a).front(), 1e-6);
  }
}

TEST(PsdInvariant, DetectsAsymmetryAndNegativity) {
  EXPECT_TRUE(satisfies_psd_invariant(MatrixXd::Identity(3, 3)));
  MatrixXd asym = MatrixXd::Identity(2, 2);
  asym(0, 1) = 1e-3;
  EXPECT_FALSE(satisfies_psd_invariant(asym));
  VectorXd d(2);
  d << 1, -0.1;
  EXPECT_FALSE(satisfies_psd_invariant(MatrixXd(d.asDiagonal())));
}

}  // namespace
}  // namespace kova
