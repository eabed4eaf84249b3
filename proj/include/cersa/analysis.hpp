// Copyright 2026 The cersa-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cersa/matrix.hpp>
#include <cersa/spectrum.hpp>
#include <cersa/svd.hpp>

#include <string>
#include <vector>

namespace cersa {

struct SubspaceSimilarity {
    std::size_t k = 0;
    double psi_u = 0.0;
    double psi_v = 0.0;
};

/// Similarity of the top-k left and right singular subspaces of two weights.
/// k comes from `retention` applied to the before-spectrum.
inline SubspaceSimilarity subspace_similarity(const Matrix& w_before, const Matrix& w_after, double retention) {
    require_same_shape(w_before, w_after, "subspace_similarity");
    const SvdFactors a = svd(w_before);
    const SvdFactors b = svd(w_after);
    const std::size_t k = select_rank(energy_profile(a.sigma), retention);
    // The after matrix only has to be non-zero; its spectrum is not used for k.
    (void)energy_profile(b.sigma);
    return {k, grassmann(a.u, b.u, k, k), grassmann(transpose(a.vt), transpose(b.vt), k, k)};
}

enum class SubspaceSide { Left, Right };

/// psi(i, j) for i in 1..max_i, j in 1..max_j, stored row-major by i.
struct SimilarityGrid {
    std::string label_a;
    std::string label_b;
    SubspaceSide side = SubspaceSide::Left;
    std::size_t max_i = 0;
    std::size_t max_j = 0;
    std::vector<double> values;

    double at(std::size_t i, std::size_t j) const { return values[(i - 1) * max_j + (j - 1)]; }
};

inline SimilarityGrid similarity_grid(const Matrix& w_before, const Matrix& w_after, std::size_t max_i,
                                      std::size_t max_j, SubspaceSide side = SubspaceSide::Left,
                                      std::string label_a = "before", std::string label_b = "after") {
    require_same_shape(w_before, w_after, "similarity_grid");
    const std::size_t p = std::min(w_before.rows(), w_before.cols());
    if (max_i < 1 || max_j < 1 || max_i > p || max_j > p) {
        throw Error(ErrorCode::OutOfRange, "similarity_grid: grid " + std::to_string(max_i) + "x" +
                                               std::to_string(max_j) + " exceeds rank capacity " + std::to_string(p));
    }
    const SvdFactors a = svd(w_before);
    const SvdFactors b = svd(w_after);
    const Matrix ua = side == SubspaceSide::Left ? a.u : transpose(a.vt);
    const Matrix ub = side == SubspaceSide::Left ? b.u : transpose(b.vt);
    detail::check_grassmann_args(ua, ub, max_i, max_j);
    SimilarityGrid grid{std::move(label_a), std::move(label_b), side, max_i, max_j, {}};
    grid.values.reserve(max_i * max_j);
    for (std::size_t i = 1; i <= max_i; ++i)
        for (std::size_t j = 1; j <= max_j; ++j) grid.values.push_back(detail::grassmann_unchecked(ua, ub, i, j));
    return grid;
}

} // namespace cersa
