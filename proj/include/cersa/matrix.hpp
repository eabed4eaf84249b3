// Copyright 2026 The cersa-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cersa/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace cersa {

/// Dense row-major double matrix. Constructors reject non-finite entries.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw Error(ErrorCode::DimensionMismatch,
                        "matrix data length " + std::to_string(data_.size()) + " does not match " + shape_string());
        }
        check_finite();
    }

    Matrix(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& row : rows) {
            if (row.size() != cols_) {
                throw Error(ErrorCode::DimensionMismatch, "ragged matrix literal");
            }
            data_.insert(data_.end(), row.begin(), row.end());
        }
        check_finite();
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    /// Rectangular identity block: ones on the leading diagonal.
    static Matrix eye(std::size_t rows, std::size_t cols) {
        Matrix m(rows, cols);
        for (std::size_t i = 0; i < std::min(rows, cols); ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix diagonal(std::span<const double> values) {
        Matrix m(values.size(), values.size());
        for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
        m.check_finite();
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::string shape_string() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

    bool operator==(const Matrix&) const = default;

    void check_finite() const {
        for (double v : data_) {
            if (!std::isfinite(v)) {
                throw Error(ErrorCode::NonFinite, "non-finite entry in " + shape_string() + " matrix");
            }
        }
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "matmul: cannot multiply " + a.shape_string() + " by " + b.shape_string());
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto dst = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            auto src = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aik * src[j];
        }
    }
    return out;
}

/// a^T * b without materializing the transpose.
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "matmul_tn: cannot multiply transpose of " + a.shape_string() + " by " + b.shape_string());
    }
    Matrix out(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        auto arow = a.row(k);
        auto brow = b.row(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            auto dst = out.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aki * brow[j];
        }
    }
    return out;
}

/// a * b^T without materializing the transpose.
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "matmul_nt: cannot multiply " + a.shape_string() + " by transpose of " + b.shape_string());
    }
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto arow = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            auto brow = b.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += arow[k] * brow[k];
            out(i, j) = acc;
        }
    }
    return out;
}

inline Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw Error(ErrorCode::DimensionMismatch,
                    std::string(what) + ": shapes " + a.shape_string() + " and " + b.shape_string() + " differ");
    }
}

inline Matrix operator+(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    Matrix out = a;
    auto dst = out.values();
    auto src = b.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    return out;
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "subtract");
    Matrix out = a;
    auto dst = out.values();
    auto src = b.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= src[i];
    return out;
}

inline Matrix operator*(double s, const Matrix& a) {
    Matrix out = a;
    for (double& v : out.values()) v *= s;
    return out;
}

inline double frobenius_norm(const Matrix& a) {
    double acc = 0.0;
    for (double v : a.values()) acc += v * v;
    return std::sqrt(acc);
}

/// Sub-block [r0, r0+rows) x [c0, c0+cols).
inline Matrix block(const Matrix& a, std::size_t r0, std::size_t c0, std::size_t rows, std::size_t cols) {
    if (r0 + rows > a.rows() || c0 + cols > a.cols()) {
        throw Error(ErrorCode::OutOfRange, "block exceeds bounds of " + a.shape_string());
    }
    Matrix out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) out(i, j) = a(r0 + i, c0 + j);
    return out;
}

inline Matrix leading_columns(const Matrix& a, std::size_t k) { return block(a, 0, 0, a.rows(), k); }
inline Matrix leading_rows(const Matrix& a, std::size_t k) { return block(a, 0, 0, k, a.cols()); }

/// ||a^T a - I||_F, the orthonormality defect of a's columns.
inline double column_orthonormality_residual(const Matrix& a) {
    const Matrix gram = matmul_tn(a, a);
    double acc = 0.0;
    for (std::size_t i = 0; i < gram.rows(); ++i)
        for (std::size_t j = 0; j < gram.cols(); ++j) {
            const double d = gram(i, j) - (i == j ? 1.0 : 0.0);
            acc += d * d;
        }
    return std::sqrt(acc);
}

inline double row_orthonormality_residual(const Matrix& a) {
    const Matrix gram = matmul_nt(a, a);
    double acc = 0.0;
    for (std::size_t i = 0; i < gram.rows(); ++i)
        for (std::size_t j = 0; j < gram.cols(); ++j) {
            const double d = gram(i, j) - (i == j ? 1.0 : 0.0);
            acc += d * d;
        }
    return std::sqrt(acc);
}

/// Orthonormalizes the columns in place with twice-iterated modified Gram-Schmidt.
/// Columns that collapse numerically are replaced by the first coordinate vector
/// that still has a component outside the current span.
inline Matrix orthonormalize_columns(Matrix a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (n > m) {
        throw Error(ErrorCode::DimensionMismatch, "cannot orthonormalize " + a.shape_string() + " columns");
    }
    std::vector<double> col(m);
    auto project_out = [&](std::size_t j) {
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t q = 0; q < j; ++q) {
                double dot = 0.0;
                for (std::size_t i = 0; i < m; ++i) dot += a(i, q) * col[i];
                for (std::size_t i = 0; i < m; ++i) col[i] -= dot * a(i, q);
            }
        }
    };
    auto norm = [&] {
        double acc = 0.0;
        for (double v : col) acc += v * v;
        return std::sqrt(acc);
    };
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) col[i] = a(i, j);
        const double original = norm();
        project_out(j);
        double len = norm();
        if (len <= 1e-10 * std::max(original, 1e-300) || len == 0.0) {
            for (std::size_t e = 0; e < m; ++e) {
                std::fill(col.begin(), col.end(), 0.0);
                col[e] = 1.0;
                project_out(j);
                len = norm();
                if (len > 0.5) break;
            }
        }
        for (std::size_t i = 0; i < m; ++i) a(i, j) = col[i] / len;
    }
    return a;
}

template <class Rng>
Matrix random_gaussian(std::size_t rows, std::size_t cols, Rng& rng, double stddev = 1.0) {
    std::normal_distribution<double> dist(0.0, stddev);
    Matrix m(rows, cols);
    for (double& v : m.values()) v = dist(rng);
    return m;
}

/// Random matrix with orthonormal columns (Gram-Schmidt of a Gaussian draw).
template <class Rng>
Matrix random_orthonormal(std::size_t rows, std::size_t cols, Rng& rng) {
    return orthonormalize_columns(random_gaussian(rows, cols, rng));
}

} // namespace cersa
