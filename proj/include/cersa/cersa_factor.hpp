// Copyright 2026 The cersa-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cersa/matrix.hpp>
#include <cersa/spectrum.hpp>
#include <cersa/svd.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace cersa {

/// Three-region factorization W ~ U_p * blockdiag(S_core, diag(sigma_frozen)) * V_p^T.
///
/// The trainable core occupies retained indices [core_offset, core_offset + k_beta);
/// the frozen singular values fill the remaining retained indices in order.
/// Components past k_alpha are dropped.
struct CersaFactors {
    Matrix u_p;
    Matrix v_pt;
    Matrix s_core;
    std::vector<double> sigma_frozen;
    RankSelection selection;
    std::size_t core_offset = 0;

    std::size_t out_dim() const noexcept { return u_p.rows(); }
    std::size_t in_dim() const noexcept { return v_pt.cols(); }
    std::size_t retained() const noexcept { return u_p.cols(); }
    std::size_t core_size() const noexcept { return s_core.rows(); }

    void check_shapes() const {
        const std::size_t k = retained();
        const bool ok = v_pt.rows() == k && s_core.rows() == s_core.cols() &&
                        s_core.rows() + sigma_frozen.size() == k && core_offset + s_core.rows() <= k;
        if (!ok) {
            throw Error(ErrorCode::DimensionMismatch,
                        "inconsistent CERSA factors: u_p " + u_p.shape_string() + ", v_pt " + v_pt.shape_string() +
                            ", s_core " + s_core.shape_string() + ", " + std::to_string(sigma_frozen.size()) +
                            " frozen values, core offset " + std::to_string(core_offset));
        }
    }

    /// Dense k_alpha x k_alpha middle factor.
    Matrix core_block() const {
        check_shapes();
        const std::size_t k = retained();
        const std::size_t c = core_size();
        Matrix mid(k, k);
        for (std::size_t i = 0; i < c; ++i)
            for (std::size_t j = 0; j < c; ++j) mid(core_offset + i, core_offset + j) = s_core(i, j);
        std::size_t next = 0;
        for (std::size_t d = 0; d < k; ++d) {
            if (d >= core_offset && d < core_offset + c) continue;
            mid(d, d) = sigma_frozen[next++];
        }
        return mid;
    }
};

namespace detail {

inline CersaFactors assemble_factors(const SvdFactors& full, const RankSelection& sel, std::size_t core_offset) {
    const std::size_t k = sel.k_alpha;
    const std::size_t c = sel.k_beta;
    CersaFactors f;
    f.u_p = leading_columns(full.u, k);
    f.v_pt = leading_rows(full.vt, k);
    f.s_core = Matrix(c, c);
    for (std::size_t i = 0; i < c; ++i) f.s_core(i, i) = full.sigma[core_offset + i];
    for (std::size_t d = 0; d < k; ++d) {
        if (d >= core_offset && d < core_offset + c) continue;
        f.sigma_frozen.push_back(full.sigma[d]);
    }
    f.selection = sel;
    f.core_offset = core_offset;
    return f;
}

} // namespace detail

/// SVD, energy-based rank selection and truncation of a weight matrix.
inline CersaFactors factorize(const Matrix& w, double alpha, double beta) {
    check_threshold(alpha, "alpha");
    check_threshold(beta, "beta");
    if (beta > alpha) {
        throw Error(ErrorCode::ThresholdOrder, "trainable threshold exceeds retention threshold (beta " +
                                                   std::to_string(beta) + " > alpha " + std::to_string(alpha) + ")");
    }
    const SvdFactors full = svd(w);
    const RankSelection sel = make_selection(energy_profile(full.sigma), alpha, beta);
    return detail::assemble_factors(full, sel, 0);
}

inline Matrix effective_weight(const CersaFactors& f) {
    return matmul(matmul(f.u_p, f.core_block()), f.v_pt);
}

/// Top-r or bottom-r trainable block inside the alpha-retained subspace.
/// The bottom variant trains singular indices [k_alpha - r, k_alpha) and freezes the rest.
inline CersaFactors split_variant(const Matrix& w, double alpha, bool take_top, std::size_t r) {
    check_threshold(alpha, "alpha");
    const SvdFactors full = svd(w);
    const EnergyProfile profile = energy_profile(full.sigma);
    const std::size_t k = select_rank(profile, alpha);
    if (r < 1 || 2 * r > k) {
        throw Error(ErrorCode::InsufficientRank, "split_variant: block size " + std::to_string(r) +
                                                     " needs two disjoint blocks inside retained rank " +
                                                     std::to_string(k));
    }
    RankSelection sel;
    sel.alpha = alpha;
    sel.beta = profile.retained_fraction(r);
    sel.n_total = profile.size();
    sel.k_alpha = k;
    sel.k_beta = r;
    sel.r1 = r;
    sel.r2 = k - r;
    sel.r3 = profile.size() - k;
    return detail::assemble_factors(full, sel, take_top ? 0 : k - r);
}

/// Equal-size split with r = floor(k_alpha / 2).
inline CersaFactors split_variant(const Matrix& w, double alpha, bool take_top) {
    const SvdFactors full = svd(w);
    const std::size_t k = select_rank(energy_profile(full.sigma), alpha);
    return split_variant(w, alpha, take_top, k / 2);
}

inline constexpr double kSpanMismatchTolerance = 1e-6;

/// Core S with m_mat = q * S * q_prime^T, given orthonormal q, q_prime spanning the
/// rank-k left and right singular subspaces of m_mat (k = q.cols()).
/// Built as S = R diag(sigma) R'^T with R = q^T U_k, R' = q_prime^T V_k.
inline Matrix core_in_bases(const Matrix& m_mat, const Matrix& q, const Matrix& q_prime) {
    const std::size_t k = q.cols();
    if (q_prime.cols() != k || q.rows() != m_mat.rows() || q_prime.rows() != m_mat.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "core_in_bases: bases " + q.shape_string() + " and " +
                                                      q_prime.shape_string() + " do not fit " +
                                                      m_mat.shape_string());
    }
    const SvdFactors full = svd(m_mat);
    if (k < 1 || k > full.sigma.size()) {
        throw Error(ErrorCode::OutOfRange, "core_in_bases: basis width " + std::to_string(k) + " invalid");
    }
    const SvdFactors top = truncate(full, k);
    const Matrix v_k = transpose(top.vt);
    const double psi_u = grassmann(q, top.u, k, k);
    const double psi_v = grassmann(q_prime, v_k, k, k);
    if (psi_u < 1.0 - kSpanMismatchTolerance || psi_v < 1.0 - kSpanMismatchTolerance) {
        throw Error(ErrorCode::SpanMismatch, "bases do not span the singular subspaces (psi_u " +
                                                 std::to_string(psi_u) + ", psi_v " + std::to_string(psi_v) + ")");
    }
    Matrix r_left = matmul_tn(q, top.u);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) r_left(i, j) *= top.sigma[j];
    const Matrix r_right = matmul_tn(q_prime, v_k);
    return matmul_nt(r_left, r_right);
}

} // namespace cersa
