// Copyright 2026 The cersa-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cersa/error.hpp>
#include <cersa/spectrum.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cersa {

enum class MemoryMethod { FT, Cersa, SVFit, SVFT, LoRA };

inline std::string memory_method_name(MemoryMethod m) {
    switch (m) {
    case MemoryMethod::FT: return "ft";
    case MemoryMethod::Cersa: return "cersa";
    case MemoryMethod::SVFit: return "svfit";
    case MemoryMethod::SVFT: return "svft";
    case MemoryMethod::LoRA: return "lora";
    }
    return "unknown";
}

inline std::optional<MemoryMethod> parse_memory_method(const std::string& s) {
    if (s == "ft") return MemoryMethod::FT;
    if (s == "cersa") return MemoryMethod::Cersa;
    if (s == "svfit") return MemoryMethod::SVFit;
    if (s == "svft") return MemoryMethod::SVFT;
    if (s == "lora") return MemoryMethod::LoRA;
    return std::nullopt;
}

struct MatrixDims {
    std::uint64_t m = 0;
    std::uint64_t n = 0;
};

/// What to account for. `ranks` holds one uniform rank or one rank per matrix
/// (k_alpha for CERSA). `trainable_ranks` gives CERSA's k_beta and defaults to
/// `ranks`. `svft_e` is SVFT's sparse trainable count per matrix.
struct MemorySpec {
    MemoryMethod method = MemoryMethod::FT;
    std::vector<std::uint64_t> ranks;
    std::vector<std::uint64_t> trainable_ranks;
    std::optional<std::uint64_t> svft_e;
};

inline constexpr std::uint64_t kBytesPerParam = 4;
inline constexpr double kBytesPerMB = 1024.0 * 1024.0;

/// Parameter and byte accounting for one fine-tuning method. Optimizer state is
/// two moment buffers per trainable parameter.
struct MemoryReport {
    std::string method;
    std::uint64_t weight_params = 0;
    std::uint64_t gradient_params = 0;
    std::uint64_t optimizer_params = 0;
    std::uint64_t frozen_params = 0;
    std::uint64_t trainable_params = 0;

    std::uint64_t total_params() const noexcept { return weight_params + gradient_params + optimizer_params; }
    std::uint64_t weights_bytes() const noexcept { return weight_params * kBytesPerParam; }
    std::uint64_t gradient_bytes() const noexcept { return gradient_params * kBytesPerParam; }
    std::uint64_t optimizer_bytes() const noexcept { return optimizer_params * kBytesPerParam; }
    std::uint64_t total_bytes() const noexcept { return total_params() * kBytesPerParam; }
    static double to_mb(std::uint64_t bytes) { return static_cast<double>(bytes) / kBytesPerMB; }

    void add_trainable(std::uint64_t frozen, std::uint64_t trainable) {
        frozen_params += frozen;
        trainable_params += trainable;
        weight_params += frozen + trainable;
        gradient_params += trainable;
        optimizer_params += 2 * trainable;
    }
};

namespace detail {

inline std::uint64_t rank_for(const std::vector<std::uint64_t>& ranks, std::size_t i, std::size_t count,
                              const char* what) {
    if (ranks.empty()) {
        throw Error(ErrorCode::MissingRank, std::string("memory_report: ") + what + " requires a rank");
    }
    if (ranks.size() != 1 && ranks.size() != count) {
        throw Error(ErrorCode::DimensionMismatch, std::string("memory_report: ") + what + " got " +
                                                      std::to_string(ranks.size()) + " ranks for " +
                                                      std::to_string(count) + " matrices");
    }
    const std::uint64_t r = ranks.size() == 1 ? ranks[0] : ranks[i];
    if (r == 0) {
        throw Error(ErrorCode::MissingRank, std::string("memory_report: ") + what + " rank 0 leaves no trainable subspace");
    }
    return r;
}

} // namespace detail

/// Closed-form memory of fine-tuning the given matrices.
///
/// Per m x n matrix with p = min(m, n), in parameters:
///   FT     weights mn,                   trainable mn
///   CERSA  weights (m+n)k_a + (k_a-k_b) + k_b^2,  trainable k_b^2
///   SVFit  weights p(m+n) + p,           trainable r
///   SVFT   weights p(m+n) + e,           trainable e
///   LoRA   weights mn + (m+n)r,          trainable (m+n)r
/// For square matrices and k_a = k_b these are the usual mn, mr+nr+r^2,
/// 2mn+m, 2mn+e and mn+mr+nr.
inline MemoryReport memory_report(const MemorySpec& spec, std::span<const MatrixDims> dims) {
    MemoryReport rep;
    rep.method = memory_method_name(spec.method);
    const std::size_t count = dims.size();
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t m = dims[i].m;
        const std::uint64_t n = dims[i].n;
        if (m == 0 || n == 0) throw Error(ErrorCode::InvalidArgument, "memory_report: matrix dimensions must be positive");
        const std::uint64_t p = std::min(m, n);
        switch (spec.method) {
        case MemoryMethod::FT: rep.add_trainable(0, m * n); break;
        case MemoryMethod::Cersa: {
            const std::uint64_t ka = detail::rank_for(spec.ranks, i, count, "cersa");
            const std::uint64_t kb = spec.trainable_ranks.empty()
                                         ? ka
                                         : detail::rank_for(spec.trainable_ranks, i, count, "cersa trainable");
            if (kb > ka || ka > p) {
                throw Error(ErrorCode::OutOfRange, "memory_report: cersa ranks k_alpha=" + std::to_string(ka) +
                                                       ", k_beta=" + std::to_string(kb) + " invalid for " +
                                                       std::to_string(m) + "x" + std::to_string(n));
            }
            rep.add_trainable((m + n) * ka + (ka - kb), kb * kb);
            break;
        }
        case MemoryMethod::SVFit: {
            const std::uint64_t r = detail::rank_for(spec.ranks, i, count, "svfit");
            if (r > p) throw Error(ErrorCode::OutOfRange, "memory_report: svfit rank exceeds min(m, n)");
            rep.add_trainable(p * (m + n) + p - r, r);
            break;
        }
        case MemoryMethod::SVFT: {
            if (!spec.svft_e || *spec.svft_e == 0) {
                throw Error(ErrorCode::MissingRank, "memory_report: svft requires a positive sparse count e");
            }
            rep.add_trainable(p * (m + n), *spec.svft_e);
            break;
        }
        case MemoryMethod::LoRA: {
            const std::uint64_t r = detail::rank_for(spec.ranks, i, count, "lora");
            rep.add_trainable(m * n, (m + n) * r);
            break;
        }
        }
    }
    return rep;
}

/// Full fine-tuning of a model with `params` parameters.
inline MemoryReport full_ft_report(std::uint64_t params) {
    MemoryReport rep;
    rep.method = memory_method_name(MemoryMethod::FT);
    rep.add_trainable(0, params);
    return rep;
}

/// c = (mr + nr + 4r^2) / (mn).
inline double compression_rate(std::uint64_t m, std::uint64_t n, std::uint64_t r) {
    const double md = static_cast<double>(m);
    const double nd = static_cast<double>(n);
    const double rd = static_cast<double>(r);
    return (md * rd + nd * rd + 4.0 * rd * rd) / (md * nd);
}

/// LoRA total over pretrained weights, (mn + 4r(m+n)) / (mn).
inline double lora_reference_rate(std::uint64_t m, std::uint64_t n, std::uint64_t r = 32) {
    const double md = static_cast<double>(m);
    const double nd = static_cast<double>(n);
    return (md * nd + 4.0 * static_cast<double>(r) * (md + nd)) / (md * nd);
}

struct CompressionPoint {
    double alpha = std::numeric_limits<double>::quiet_NaN(); // NaN for explicit ranks
    std::uint64_t r = 0;
    double c = 0.0;
};

inline void check_dims(std::uint64_t m, std::uint64_t n) {
    if (m == 0 || n == 0) throw Error(ErrorCode::InvalidArgument, "matrix dimensions must be positive");
}

inline std::vector<CompressionPoint> compression_curve(std::uint64_t m, std::uint64_t n,
                                                       std::span<const std::uint64_t> ranks) {
    check_dims(m, n);
    std::vector<CompressionPoint> out;
    for (std::uint64_t r : ranks) out.push_back({std::numeric_limits<double>::quiet_NaN(), r, compression_rate(m, n, r)});
    return out;
}

/// Ranks chosen by energy retention on a spectrum, one point per alpha.
inline std::vector<CompressionPoint> compression_curve(std::uint64_t m, std::uint64_t n,
                                                       std::span<const double> sigma,
                                                       std::span<const double> alphas) {
    check_dims(m, n);
    const EnergyProfile profile = energy_profile(sigma);
    std::vector<CompressionPoint> out;
    for (double a : alphas) {
        const std::uint64_t r = select_rank(profile, a);
        out.push_back({a, r, compression_rate(m, n, r)});
    }
    return out;
}

/// Largest r with (m+n)r + 4r^2 < mn: the positive root of 4r^2 + (m+n)r - mn,
/// taken strictly below and corrected in integer arithmetic.
inline std::uint64_t break_even_rank(std::uint64_t m, std::uint64_t n) {
    check_dims(m, n);
    const double s = static_cast<double>(m + n);
    const double root = (-s + std::sqrt(s * s + 16.0 * static_cast<double>(m) * static_cast<double>(n))) / 8.0;
    auto below = [&](std::uint64_t r) { return (m + n) * r + 4 * r * r < m * n; };
    std::uint64_t r = root > 0.0 ? static_cast<std::uint64_t>(std::floor(root)) : 0;
    while (r > 0 && !below(r)) --r;
    while (below(r + 1)) ++r;
    return r;
}

} // namespace cersa
