// Copyright 2026 The cersa-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cersa/matrix.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace cersa {

/// Thin SVD: a = u * diag(sigma) * vt with u (m x p), vt (p x n), p = min(m, n).
struct SvdFactors {
    Matrix u;
    std::vector<double> sigma;
    Matrix vt;

    std::size_t rank_capacity() const noexcept { return sigma.size(); }
};

namespace detail {

inline constexpr int kJacobiMaxSweeps = 30;
inline constexpr double kJacobiRotationTol = 1e-15;
inline constexpr double kJacobiAcceptTol = 1e-12;

// Hestenes one-sided Jacobi on the rows of `cols` (each row holds one column of
// the tall input). `v_rows` accumulates the right rotations the same way.
inline void one_sided_jacobi(Matrix& cols, Matrix& v_rows, double norm_a) {
    const std::size_t n = cols.rows();
    const std::size_t m = cols.cols();
    const double null_norm_sq = (1e-14 * norm_a) * (1e-14 * norm_a);

    auto dot_rows = [](std::span<const double> x, std::span<const double> y) {
        double acc = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
        return acc;
    };

    for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                auto gi = cols.row(i);
                auto gj = cols.row(j);
                const double alpha = dot_rows(gi, gi);
                const double beta = dot_rows(gj, gj);
                if (alpha <= null_norm_sq || beta <= null_norm_sq) continue;
                const double gamma = dot_rows(gi, gj);
                if (std::abs(gamma) <= kJacobiRotationTol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t k = 0; k < m; ++k) {
                    const double x = gi[k];
                    const double y = gj[k];
                    gi[k] = c * x - s * y;
                    gj[k] = s * x + c * y;
                }
                auto vi = v_rows.row(i);
                auto vj = v_rows.row(j);
                for (std::size_t k = 0; k < v_rows.cols(); ++k) {
                    const double x = vi[k];
                    const double y = vj[k];
                    vi[k] = c * x - s * y;
                    vj[k] = s * x + c * y;
                }
            }
        }
        if (!rotated) return;
    }

    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double alpha = dot_rows(cols.row(i), cols.row(i));
            const double beta = dot_rows(cols.row(j), cols.row(j));
            if (alpha <= null_norm_sq || beta <= null_norm_sq) continue;
            worst = std::max(worst, std::abs(dot_rows(cols.row(i), cols.row(j))) / std::sqrt(alpha * beta));
        }
    }
    if (worst > kJacobiAcceptTol) {
        throw Error(ErrorCode::Convergence, "svd: Jacobi did not converge after " +
                                                std::to_string(kJacobiMaxSweeps) +
                                                " sweeps, residual off-diagonal cosine " + std::to_string(worst));
    }
}

// SVD of a matrix with rows >= cols.
inline SvdFactors svd_tall(const Matrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    const double norm_a = frobenius_norm(a);
    Matrix cols = transpose(a);
    Matrix v_rows = Matrix::identity(n);
    one_sided_jacobi(cols, v_rows, norm_a);

    std::vector<double> norms(n);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (double x : cols.row(j)) acc += x * x;
        norms[j] = std::sqrt(acc);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

    const double null_norm = 1e-14 * norm_a;
    SvdFactors f{Matrix(m, n), std::vector<double>(n), Matrix(n, n)};
    for (std::size_t out = 0; out < n; ++out) {
        const std::size_t src = order[out];
        f.sigma[out] = norms[src];
        if (norms[src] > null_norm && norms[src] > 0.0) {
            for (std::size_t i = 0; i < m; ++i) f.u(i, out) = cols(src, i) / norms[src];
        }
        for (std::size_t k = 0; k < n; ++k) f.vt(out, k) = v_rows(src, k);
    }
    // Null columns are zero here; completion fills them with an orthonormal complement.
    bool has_null = std::any_of(f.sigma.begin(), f.sigma.end(), [&](double s) { return !(s > null_norm && s > 0.0); });
    if (has_null) f.u = orthonormalize_columns(std::move(f.u));
    return f;
}

inline void apply_sign_convention(SvdFactors& f) {
    for (std::size_t j = 0; j < f.u.cols(); ++j) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < f.u.rows(); ++i) {
            if (std::abs(f.u(i, j)) > best) {
                best = std::abs(f.u(i, j));
                arg = i;
            }
        }
        if (f.u(arg, j) < 0.0) {
            for (std::size_t i = 0; i < f.u.rows(); ++i) f.u(i, j) = -f.u(i, j);
            for (double& x : f.vt.row(j)) x = -x;
        }
    }
}

} // namespace detail

/// Thin SVD by one-sided Jacobi. Singular values come back descending and each
/// left singular vector is signed so its largest-magnitude entry is positive.
inline SvdFactors svd(const Matrix& a) {
    if (a.empty()) throw Error(ErrorCode::InvalidArgument, "svd: empty matrix");
    a.check_finite();
    SvdFactors f;
    if (a.rows() >= a.cols()) {
        f = detail::svd_tall(a);
    } else {
        SvdFactors t = detail::svd_tall(transpose(a));
        f.u = transpose(t.vt);
        f.sigma = std::move(t.sigma);
        f.vt = transpose(t.u);
    }
    detail::apply_sign_convention(f);
    return f;
}

inline SvdFactors truncate(const SvdFactors& f, std::size_t k) {
    if (k < 1 || k > f.sigma.size()) {
        throw Error(ErrorCode::OutOfRange, "truncate: rank " + std::to_string(k) + " outside [1, " +
                                               std::to_string(f.sigma.size()) + "]");
    }
    return SvdFactors{leading_columns(f.u, k), std::vector<double>(f.sigma.begin(), f.sigma.begin() + k),
                      leading_rows(f.vt, k)};
}

inline Matrix reconstruct(const SvdFactors& f) {
    Matrix scaled = f.u;
    for (std::size_t i = 0; i < scaled.rows(); ++i)
        for (std::size_t j = 0; j < scaled.cols(); ++j) scaled(i, j) *= f.sigma[j];
    return matmul(scaled, f.vt);
}

/// sqrt of the squared singular values beyond index k: the Eckart-Young error.
inline double tail_energy_norm(std::span<const double> sigma, std::size_t k) {
    double acc = 0.0;
    for (std::size_t i = k; i < sigma.size(); ++i) acc += sigma[i] * sigma[i];
    return std::sqrt(acc);
}

inline constexpr double kOrthonormalTolerance = 1e-8;

namespace detail {

inline double grassmann_unchecked(const Matrix& ua, const Matrix& ub, std::size_t i, std::size_t j) {
    const double f = frobenius_norm(matmul_tn(leading_columns(ua, i), leading_columns(ub, j)));
    const double psi = f * f / static_cast<double>(std::min(i, j));
    if (psi > 1.0 + 1e-12 || psi < 0.0) {
        throw Error(ErrorCode::NotOrthonormal, "grassmann: similarity " + std::to_string(psi) + " outside [0, 1]");
    }
    return std::clamp(psi, 0.0, 1.0);
}

inline void check_grassmann_args(const Matrix& ua, const Matrix& ub, std::size_t i, std::size_t j) {
    if (ua.rows() != ub.rows()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "grassmann: bases " + ua.shape_string() + " and " + ub.shape_string() + " have different rows");
    }
    if (i < 1 || j < 1 || i > ua.cols() || j > ub.cols()) {
        throw Error(ErrorCode::OutOfRange, "grassmann: top-" + std::to_string(i) + "/top-" + std::to_string(j) +
                                               " exceeds basis widths " + std::to_string(ua.cols()) + "/" +
                                               std::to_string(ub.cols()));
    }
    const double ra = column_orthonormality_residual(leading_columns(ua, i));
    const double rb = column_orthonormality_residual(leading_columns(ub, j));
    if (ra > kOrthonormalTolerance || rb > kOrthonormalTolerance) {
        throw Error(ErrorCode::NotOrthonormal, "grassmann: basis columns are not orthonormal (residuals " +
                                                   std::to_string(ra) + ", " + std::to_string(rb) + ")");
    }
}

} // namespace detail

/// Grassmann similarity of the spans of the top-i columns of ua and top-j
/// columns of ub: ||ua_i^T ub_j||_F^2 / min(i, j), in [0, 1].
inline double grassmann(const Matrix& ua, const Matrix& ub, std::size_t i, std::size_t j) {
    detail::check_grassmann_args(ua, ub, i, j);
    return detail::grassmann_unchecked(ua, ub, i, j);
}

} // namespace cersa
