// Copyright 2026 The cersa-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cersa {

enum class ErrorCode {
    DimensionMismatch,
    NonFinite,
    Convergence,
    OutOfRange,
    ZeroEnergy,
    Unsorted,
    InvalidThreshold,
    ThresholdOrder,
    SpanMismatch,
    NotOrthonormal,
    InsufficientRank,
    Divergence,
    Io,
    Format,
    Config,
    MissingRank,
    InvalidArgument,
};

/// Stable machine-readable name, used as the first token of CLI diagnostics.
constexpr std::string_view code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::NonFinite: return "non_finite";
    case ErrorCode::Convergence: return "convergence";
    case ErrorCode::OutOfRange: return "out_of_range";
    case ErrorCode::ZeroEnergy: return "zero_energy";
    case ErrorCode::Unsorted: return "unsorted";
    case ErrorCode::InvalidThreshold: return "invalid_threshold";
    case ErrorCode::ThresholdOrder: return "threshold_order";
    case ErrorCode::SpanMismatch: return "span_mismatch";
    case ErrorCode::NotOrthonormal: return "not_orthonormal";
    case ErrorCode::InsufficientRank: return "insufficient_rank";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::Io: return "io";
    case ErrorCode::Format: return "format";
    case ErrorCode::Config: return "config";
    case ErrorCode::MissingRank: return "missing_rank";
    case ErrorCode::InvalidArgument: return "invalid_argument";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace cersa
