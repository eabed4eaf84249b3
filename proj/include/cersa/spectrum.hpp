// Copyright 2026 The cersa-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cersa/error.hpp>

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cersa {

/// Squared singular values with their prefix sums.
struct EnergyProfile {
    std::vector<double> sigma_sq;
    std::vector<double> cumulative;
    double total = 0.0;

    std::size_t size() const noexcept { return sigma_sq.size(); }
    /// Fraction of total energy held by the first k values (k is 1-based).
    double retained_fraction(std::size_t k) const { return k == 0 ? 0.0 : cumulative[k - 1] / total; }
};

/// Rank thresholds splitting a spectrum into trainable, frozen and discarded regions.
struct RankSelection {
    double alpha = 1.0;
    double beta = 1.0;
    std::size_t k_alpha = 0;
    std::size_t k_beta = 0;
    std::size_t r1 = 0;
    std::size_t r2 = 0;
    std::size_t r3 = 0;
    std::size_t n_total = 0;

    bool operator==(const RankSelection&) const = default;
};

inline EnergyProfile energy_profile(std::span<const double> sigma) {
    if (sigma.empty()) throw Error(ErrorCode::InvalidArgument, "energy_profile: empty spectrum");
    EnergyProfile p;
    p.sigma_sq.reserve(sigma.size());
    p.cumulative.reserve(sigma.size());
    double running = 0.0;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        if (sigma[i] < 0.0) {
            throw Error(ErrorCode::Unsorted, "energy_profile: negative singular value at index " + std::to_string(i));
        }
        if (i > 0 && sigma[i] > sigma[i - 1]) {
            throw Error(ErrorCode::Unsorted, "energy_profile: spectrum not descending at index " + std::to_string(i));
        }
        const double sq = sigma[i] * sigma[i];
        running += sq;
        p.sigma_sq.push_back(sq);
        p.cumulative.push_back(running);
    }
    p.total = running;
    if (!(p.total > 0.0)) throw Error(ErrorCode::ZeroEnergy, "energy_profile: spectrum has zero total energy");
    return p;
}

inline void check_threshold(double threshold, const char* name) {
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw Error(ErrorCode::InvalidThreshold,
                    std::string(name) + " threshold " + std::to_string(threshold) + " outside (0, 1]");
    }
}

/// Smallest k with cumulative[k] / total >= threshold. Exact ties select that index.
inline std::size_t select_rank(const EnergyProfile& profile, double threshold) {
    check_threshold(threshold, "retention");
    for (std::size_t k = 1; k <= profile.size(); ++k) {
        if (profile.cumulative[k - 1] / profile.total >= threshold) return k;
    }
    // cumulative.back() == total, so threshold <= 1 always terminates above.
    return profile.size();
}

inline RankSelection make_selection(const EnergyProfile& profile, double alpha, double beta) {
    check_threshold(alpha, "alpha");
    check_threshold(beta, "beta");
    if (beta > alpha) {
        throw Error(ErrorCode::ThresholdOrder, "trainable threshold exceeds retention threshold (beta " +
                                                   std::to_string(beta) + " > alpha " + std::to_string(alpha) + ")");
    }
    RankSelection s;
    s.alpha = alpha;
    s.beta = beta;
    s.n_total = profile.size();
    s.k_alpha = select_rank(profile, alpha);
    s.k_beta = select_rank(profile, beta);
    s.r1 = s.k_beta;
    s.r2 = s.k_alpha - s.k_beta;
    s.r3 = s.n_total - s.k_alpha;
    return s;
}

struct LayerRankRow {
    std::string layer_label;
    double threshold = 0.0;
    std::size_t k = 0;
    std::size_t n_total = 0;
};

struct LayerSpectrum {
    std::string label;
    std::vector<double> sigma;
};

/// Per-layer, per-threshold cutoff indices. Layer errors are rethrown with the label attached.
inline std::vector<LayerRankRow> layer_rank_report(std::span<const LayerSpectrum> layers,
                                                   std::span<const double> thresholds) {
    std::vector<LayerRankRow> rows;
    if (thresholds.empty()) return rows;
    for (const auto& layer : layers) {
        try {
            const EnergyProfile profile = energy_profile(layer.sigma);
            for (double t : thresholds) {
                rows.push_back({layer.label, t, select_rank(profile, t), profile.size()});
            }
        } catch (const Error& e) {
            throw Error(e.code(), "layer '" + layer.label + "': " + e.what());
        }
    }
    return rows;
}

} // namespace cersa
