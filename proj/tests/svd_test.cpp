// Copyright 2026 The cersa-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include <cersa/svd.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using cersa::Error;
using cersa::ErrorCode;
using cersa::Matrix;

namespace {

double rel_recon_error(const Matrix& a, const cersa::SvdFactors& f) {
    return cersa::frobenius_norm(a - cersa::reconstruct(f)) / std::max(cersa::frobenius_norm(a), 1e-300);
}

void expect_invariants(const Matrix& a, const cersa::SvdFactors& f) {
    const std::size_t p = std::min(a.rows(), a.cols());
    ASSERT_EQ(f.sigma.size(), p);
    ASSERT_EQ(f.u.rows(), a.rows());
    ASSERT_EQ(f.u.cols(), p);
    ASSERT_EQ(f.vt.rows(), p);
    ASSERT_EQ(f.vt.cols(), a.cols());
    for (std::size_t i = 0; i < p; ++i) {
        EXPECT_GE(f.sigma[i], 0.0);
        if (i > 0) {
            EXPECT_LE(f.sigma[i], f.sigma[i - 1]);
        }
    }
    EXPECT_LE(cersa::column_orthonormality_residual(f.u), 1e-10 * static_cast<double>(p));
    EXPECT_LE(cersa::row_orthonormality_residual(f.vt), 1e-10 * static_cast<double>(p));
    EXPECT_LE(rel_recon_error(a, f), 1e-9);
}

} // namespace

TEST(Svd, DiagonalInput) {
    const Matrix a{{3, 0, 0}, {0, 2, 0}, {0, 0, 1}};
    const auto f = cersa::svd(a);
    EXPECT_NEAR(f.sigma[0], 3.0, 1e-14);
    EXPECT_NEAR(f.sigma[1], 2.0, 1e-14);
    EXPECT_NEAR(f.sigma[2], 1.0, 1e-14);
    // Sign convention makes u = I exactly up to round-off, and then vt = I too.
    EXPECT_LT(oracle::max_abs_diff(f.u, Matrix::identity(3)), 1e-14);
    EXPECT_LT(oracle::max_abs_diff(f.vt, Matrix::identity(3)), 1e-14);
}

TEST(Svd, RankOneOuterProduct) {
    std::mt19937_64 rng(3);
    Matrix u = oracle::gaussian(6, 1, rng);
    Matrix v = oracle::gaussian(4, 1, rng);
    u = (1.0 / oracle::dense_fro(u)) * u;
    v = (1.0 / oracle::dense_fro(v)) * v;
    const Matrix a = 5.0 * oracle::naive_matmul(u, oracle::naive_transpose(v));
    const auto f = cersa::svd(a);
    EXPECT_NEAR(f.sigma[0], 5.0, 1e-12);
    for (std::size_t i = 1; i < f.sigma.size(); ++i) EXPECT_LT(f.sigma[i], 1e-12);
    expect_invariants(a, f);
}

TEST(Svd, ZeroMatrixGivesZeroSigmaAndOrthonormalBases) {
    const Matrix a(5, 3);
    const auto f = cersa::svd(a);
    for (double s : f.sigma) EXPECT_EQ(s, 0.0);
    expect_invariants(a, f);
}

TEST(Svd, RejectsEmptyInput) {
    EXPECT_THROW((void)cersa::svd(Matrix(0, 0)), Error);
}

TEST(Svd, SignConventionMakesLargestEntryPositive) {
    std::mt19937_64 rng(5);
    const Matrix a = oracle::gaussian(7, 5, rng);
    const auto f = cersa::svd(a);
    for (std::size_t j = 0; j < f.u.cols(); ++j) {
        double best = 0.0;
        for (std::size_t i = 0; i < f.u.rows(); ++i)
            if (std::abs(f.u(i, j)) > std::abs(best)) best = f.u(i, j);
        EXPECT_GT(best, 0.0);
    }
}

TEST(Svd, InvariantsOverRandomShapes) {
    std::mt19937_64 rng(2026);
    std::uniform_int_distribution<std::size_t> dim(1, 128);
    for (int seed = 0; seed < 100; ++seed) {
        const std::size_t m = dim(rng);
        const std::size_t n = std::min<std::size_t>(dim(rng), 96);
        const Matrix a = oracle::gaussian(m, n, rng);
        SCOPED_TRACE(a.shape_string());
        expect_invariants(a, cersa::svd(a));
    }
}

TEST(Svd, WideMatrixUsesTransposedPath) {
    std::mt19937_64 rng(9);
    const Matrix a = oracle::gaussian(4, 11, rng);
    expect_invariants(a, cersa::svd(a));
}

TEST(Svd, RankDeficientInput) {
    std::mt19937_64 rng(13);
    const Matrix a = oracle::naive_matmul(oracle::gaussian(20, 3, rng), oracle::gaussian(3, 15, rng));
    const auto f = cersa::svd(a);
    expect_invariants(a, f);
    for (std::size_t i = 3; i < f.sigma.size(); ++i) EXPECT_LT(f.sigma[i], 1e-12 * f.sigma[0]);
}

TEST(Svd, SingularValuesMatchEigenvaluesOfGram) {
    // Trace of A^T A and of (A^T A)^2 equal sum sigma^2 and sum sigma^4.
    std::mt19937_64 rng(17);
    const Matrix a = oracle::gaussian(12, 8, rng);
    const auto f = cersa::svd(a);
    const Matrix g = oracle::naive_matmul(oracle::naive_transpose(a), a);
    const Matrix g2 = oracle::naive_matmul(g, g);
    double t1 = 0, t2 = 0, s2 = 0, s4 = 0;
    for (std::size_t i = 0; i < g.rows(); ++i) {
        t1 += g(i, i);
        t2 += g2(i, i);
    }
    for (double s : f.sigma) {
        s2 += s * s;
        s4 += s * s * s * s;
    }
    EXPECT_NEAR(s2, t1, 1e-10 * t1);
    EXPECT_NEAR(s4, t2, 1e-10 * t2);
}

TEST(Truncate, FullRankHasZeroError) {
    std::mt19937_64 rng(19);
    const Matrix a = oracle::gaussian(6, 4, rng);
    const auto f = cersa::svd(a);
    EXPECT_LE(rel_recon_error(a, cersa::truncate(f, 4)), 1e-12);
}

TEST(Truncate, DiagonalDropsSmallestValue) {
    const Matrix a{{3, 0, 0}, {0, 2, 0}, {0, 0, 1}};
    const auto f = cersa::truncate(cersa::svd(a), 2);
    EXPECT_NEAR(cersa::frobenius_norm(a - cersa::reconstruct(f)), 1.0, 1e-14);
}

TEST(Truncate, RejectsRankOutOfRange) {
    const auto f = cersa::svd(Matrix::identity(3));
    for (std::size_t k : {std::size_t{0}, std::size_t{4}}) {
        try {
            (void)cersa::truncate(f, k);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::OutOfRange);
        }
    }
}

TEST(Truncate, EckartYoungEqualityForEveryRank) {
    std::mt19937_64 rng(23);
    const Matrix a = oracle::gaussian(64, 48, rng);
    const auto f = cersa::svd(a);
    for (std::size_t k = 1; k < f.sigma.size(); ++k) {
        const double err = cersa::frobenius_norm(a - cersa::reconstruct(cersa::truncate(f, k)));
        const double expect = oracle::tail_norm(f.sigma, k);
        EXPECT_NEAR(err, expect, 1e-10 * expect) << "k = " << k;
    }
}

TEST(Grassmann, IdenticalSubspacesGiveOne) {
    std::mt19937_64 rng(29);
    const Matrix q = cersa::random_orthonormal(8, 4, rng);
    for (std::size_t k = 1; k <= 4; ++k) EXPECT_NEAR(cersa::grassmann(q, q, k, k), 1.0, 1e-14);
}

TEST(Grassmann, DisjointCoordinateSubspacesGiveZero) {
    const Matrix i4 = Matrix::identity(4);
    const Matrix a = cersa::block(i4, 0, 0, 4, 2);
    const Matrix b = cersa::block(i4, 0, 2, 4, 2);
    EXPECT_EQ(cersa::grassmann(a, b, 2, 2), 0.0);
}

TEST(Grassmann, NestedSubspaceNormalisedByMinimum) {
    const Matrix i3 = Matrix::identity(3);
    EXPECT_NEAR(cersa::grassmann(cersa::leading_columns(i3, 1), cersa::leading_columns(i3, 2), 1, 2), 1.0, 1e-15);
}

TEST(Grassmann, SymmetricUnderSwap) {
    std::mt19937_64 rng(31);
    const Matrix a = cersa::random_orthonormal(10, 5, rng);
    const Matrix b = cersa::random_orthonormal(10, 6, rng);
    for (std::size_t i = 1; i <= 5; ++i)
        for (std::size_t j = 1; j <= 6; ++j)
            EXPECT_NEAR(cersa::grassmann(a, b, i, j), cersa::grassmann(b, a, j, i), 1e-14);
}

TEST(Grassmann, RotationWithinSubspacePreservesSpan) {
    std::mt19937_64 rng(37);
    for (std::size_t k = 1; k <= 6; ++k) {
        const Matrix q = cersa::random_orthonormal(12, k, rng);
        const Matrix r = oracle::random_orthogonal(k, rng);
        EXPECT_NEAR(cersa::grassmann(q, oracle::naive_matmul(q, r), k, k), 1.0, 1e-10);
    }
}

TEST(Grassmann, RejectsNonOrthonormalBasis) {
    Matrix a = Matrix::identity(3);
    a(0, 0) = 2.0;
    try {
        (void)cersa::grassmann(a, Matrix::identity(3), 2, 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotOrthonormal);
    }
}

TEST(Grassmann, RejectsMismatchedRowsAndWidths) {
    EXPECT_THROW((void)cersa::grassmann(Matrix::identity(3), Matrix::identity(4), 1, 1), Error);
    EXPECT_THROW((void)cersa::grassmann(Matrix::identity(3), Matrix::identity(3), 4, 1), Error);
}
