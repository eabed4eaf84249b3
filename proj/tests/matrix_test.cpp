// Copyright 2026 The cersa-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include <cersa/matrix.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using cersa::Error;
using cersa::ErrorCode;
using cersa::Matrix;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an error";
    return ErrorCode::InvalidArgument;
}

} // namespace

TEST(Matrix, RejectsNonFiniteEntries) {
    std::vector<double> data{1.0, std::numeric_limits<double>::quiet_NaN()};
    EXPECT_EQ(code_of([&] { Matrix(1, 2, data); }), ErrorCode::NonFinite);
    EXPECT_EQ(code_of([] { Matrix({{1.0, std::numeric_limits<double>::infinity()}}); }), ErrorCode::NonFinite);
}

TEST(Matrix, RejectsDataOfWrongLength) {
    EXPECT_EQ(code_of([] { Matrix(2, 2, std::vector<double>(3, 0.0)); }), ErrorCode::DimensionMismatch);
}

TEST(Matmul, IdentityLeavesOperandUnchanged) {
    const Matrix a{{1, 2, 3}, {4, 5, 6}, {7, 8, 10}};
    EXPECT_EQ(cersa::matmul(Matrix::identity(3), a), a);
}

TEST(Matmul, SmallHandProduct) {
    const Matrix a{{1, 2}, {3, 4}};
    const Matrix b{{0}, {1}};
    EXPECT_EQ(cersa::matmul(a, b), (Matrix{{2}, {4}}));
}

TEST(Matmul, MismatchNamesBothShapes) {
    try {
        (void)cersa::matmul(Matrix(2, 3), Matrix(2, 2));
        FAIL() << "expected a dimension error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
        const std::string msg = e.what();
        EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("2x2"), std::string::npos) << msg;
    }
}

TEST(Matmul, AgreesWithNaiveProductAndTransposedVariants) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = oracle::gaussian(5 + trial % 3, 4, rng);
        const Matrix b = oracle::gaussian(4, 6, rng);
        const Matrix c = oracle::gaussian(a.rows(), 3, rng);
        EXPECT_LT(oracle::max_abs_diff(cersa::matmul(a, b), oracle::naive_matmul(a, b)), 1e-12);
        EXPECT_LT(oracle::max_abs_diff(cersa::matmul_tn(a, c), oracle::naive_matmul(oracle::naive_transpose(a), c)),
                  1e-12);
        const Matrix bt = oracle::naive_transpose(b);
        EXPECT_LT(oracle::max_abs_diff(cersa::matmul_nt(a, bt), oracle::naive_matmul(a, b)), 1e-12);
        EXPECT_EQ(cersa::transpose(a), oracle::naive_transpose(a));
    }
}

TEST(Matrix, BlockExtractionChecksBounds) {
    const Matrix a{{1, 2, 3}, {4, 5, 6}};
    EXPECT_EQ(cersa::block(a, 0, 1, 2, 2), (Matrix{{2, 3}, {5, 6}}));
    EXPECT_EQ(code_of([&] { (void)cersa::block(a, 1, 1, 2, 2); }), ErrorCode::OutOfRange);
}

TEST(Orthonormalize, ProducesOrthonormalColumnsSpanningTheInput) {
    std::mt19937_64 rng(11);
    const Matrix a = oracle::gaussian(9, 4, rng);
    const Matrix q = cersa::orthonormalize_columns(a);
    EXPECT_LT(cersa::column_orthonormality_residual(q), 1e-12);
    // Projection of a onto span(q) is a itself.
    const Matrix proj = cersa::matmul(q, cersa::matmul_tn(q, a));
    EXPECT_LT(oracle::max_abs_diff(proj, a), 1e-10);
}

TEST(Orthonormalize, CompletesDependentColumns) {
    Matrix a(4, 3);
    a(0, 0) = 1.0;
    a(0, 1) = 2.0; // parallel to the first column
    const Matrix q = cersa::orthonormalize_columns(a);
    EXPECT_LT(cersa::column_orthonormality_residual(q), 1e-12);
}
