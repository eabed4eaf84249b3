// Copyright 2026 The cersa-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cersa/cersa_factor.hpp>
#include <cersa/matrix.hpp>
#include <cersa/svd.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace cersa {

enum class AdapterType { FullFT, LoRA, SvfitArray, FrozenUV, Cersa };

/// Fine-tuning parameterization of one linear layer.
///
/// `split_top` turns a Cersa kind into the equal-size top/bottom block ablation;
/// its block size is `rank`, or floor(k_alpha / 2) when `rank` is zero.
struct AdapterKind {
    AdapterType type = AdapterType::FullFT;
    std::size_t rank = 0;
    double alpha = 1.0;
    double beta = 1.0;
    std::optional<bool> split_top;

    static AdapterKind full_ft() { return {}; }
    static AdapterKind lora(std::size_t r) { return {AdapterType::LoRA, r, 1.0, 1.0, std::nullopt}; }
    static AdapterKind svfit_array(std::size_t r) { return {AdapterType::SvfitArray, r, 1.0, 1.0, std::nullopt}; }
    static AdapterKind frozen_uv(std::size_t r) { return {AdapterType::FrozenUV, r, 1.0, 1.0, std::nullopt}; }
    static AdapterKind cersa(double alpha, double beta) { return {AdapterType::Cersa, 0, alpha, beta, std::nullopt}; }
    static AdapterKind cersa_split(double alpha, bool top, std::size_t r = 0) {
        return {AdapterType::Cersa, r, alpha, alpha, top};
    }

    bool operator==(const AdapterKind&) const = default;

    void validate() const {
        switch (type) {
        case AdapterType::FullFT: return;
        case AdapterType::LoRA:
        case AdapterType::SvfitArray:
        case AdapterType::FrozenUV:
            if (rank < 1) throw Error(ErrorCode::InvalidArgument, label() + ": rank must be at least 1");
            return;
        case AdapterType::Cersa:
            check_threshold(alpha, "alpha");
            check_threshold(beta, "beta");
            if (beta > alpha) {
                throw Error(ErrorCode::ThresholdOrder, "trainable threshold exceeds retention threshold");
            }
            return;
        }
    }

    std::string type_name() const {
        switch (type) {
        case AdapterType::FullFT: return "full_ft";
        case AdapterType::LoRA: return "lora";
        case AdapterType::SvfitArray: return "svfit_array";
        case AdapterType::FrozenUV: return "frozen_uv";
        case AdapterType::Cersa: return "cersa";
        }
        return "unknown";
    }

    std::string label() const {
        std::ostringstream os;
        os << type_name();
        switch (type) {
        case AdapterType::FullFT: break;
        case AdapterType::LoRA:
        case AdapterType::SvfitArray:
        case AdapterType::FrozenUV: os << "(r=" << rank << ")"; break;
        case AdapterType::Cersa:
            if (split_top) {
                os << (*split_top ? "-top" : "-bottom") << "(alpha=" << alpha;
                if (rank > 0) os << ",r=" << rank;
                os << ")";
            } else {
                os << "(alpha=" << alpha << ",beta=" << beta << ")";
            }
            break;
        }
        return os.str();
    }
};

struct FullState {
    Matrix weight;
};

/// W0 + B * A with W0 frozen.
struct LoraState {
    Matrix base;
    Matrix b;
    Matrix a;
};

/// Full thin SVD with the top `sigma_train.size()` singular values trainable.
struct SvfitState {
    Matrix u;
    Matrix vt;
    std::vector<double> sigma_train;
    std::vector<double> sigma_rest;
};

/// Frozen bases around a trainable core (FrozenUV and Cersa).
struct CoreState {
    CersaFactors factors;
};

struct ParamView {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::span<double> values;
};

struct ConstParamView {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::span<const double> values;
};

struct AdapterLayer {
    AdapterKind kind;
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    std::variant<FullState, LoraState, SvfitState, CoreState> state;
    std::vector<double> bias;
};

/// Parameter gradients (aligned with `trainable_params`) and the input gradient.
struct LayerGrads {
    std::vector<Matrix> params;
    Matrix input;
};

namespace detail {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline ParamView view(const std::string& name, Matrix& m) { return {name, m.rows(), m.cols(), m.values()}; }
inline ParamView view(const std::string& name, std::vector<double>& v) { return {name, 1, v.size(), v}; }
inline ConstParamView cview(const std::string& name, const Matrix& m) {
    return {name, m.rows(), m.cols(), m.values()};
}
inline ConstParamView cview(const std::string& name, const std::vector<double>& v) { return {name, 1, v.size(), v}; }

inline Matrix add_bias(Matrix y, std::span<const double> bias) {
    for (std::size_t i = 0; i < y.rows(); ++i) {
        auto row = y.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] += bias[j];
    }
    return y;
}

inline Matrix column_sums(const Matrix& g) {
    Matrix out(1, g.cols());
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) out(0, j) += g(i, j);
    return out;
}

inline void scale_columns(Matrix& m, std::span<const double> s) {
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) *= s[j];
}

inline std::vector<double> svfit_sigma(const SvfitState& s) {
    std::vector<double> all = s.sigma_train;
    all.insert(all.end(), s.sigma_rest.begin(), s.sigma_rest.end());
    return all;
}

inline CersaFactors frozen_uv_factors(const Matrix& w0, std::size_t r) {
    const SvdFactors full = svd(w0);
    if (r > full.sigma.size()) {
        throw Error(ErrorCode::InsufficientRank, "frozen_uv: rank " + std::to_string(r) + " exceeds " +
                                                     std::to_string(full.sigma.size()));
    }
    const EnergyProfile profile = energy_profile(full.sigma);
    RankSelection sel;
    sel.alpha = profile.retained_fraction(r);
    sel.beta = sel.alpha;
    sel.k_alpha = r;
    sel.k_beta = r;
    sel.r1 = r;
    sel.r3 = profile.size() - r;
    sel.n_total = profile.size();
    return assemble_factors(full, sel, 0);
}

} // namespace detail

inline AdapterLayer build(const AdapterKind& kind, const Matrix& w0, std::span<const double> bias0,
                          std::uint64_t seed) {
    kind.validate();
    if (bias0.size() != w0.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "build: bias length " + std::to_string(bias0.size()) +
                                                      " does not match weight " + w0.shape_string());
    }
    AdapterLayer layer;
    layer.kind = kind;
    layer.out_dim = w0.rows();
    layer.in_dim = w0.cols();
    layer.bias.assign(bias0.begin(), bias0.end());
    switch (kind.type) {
    case AdapterType::FullFT:
        layer.state = FullState{w0};
        break;
    case AdapterType::LoRA: {
        std::mt19937_64 rng(seed);
        Matrix a = random_gaussian(kind.rank, w0.cols(), rng, 1.0 / std::sqrt(static_cast<double>(kind.rank)));
        layer.state = LoraState{w0, Matrix(w0.rows(), kind.rank), std::move(a)};
        break;
    }
    case AdapterType::SvfitArray: {
        SvdFactors full = svd(w0);
        if (kind.rank > full.sigma.size()) {
            throw Error(ErrorCode::InsufficientRank, "svfit_array: rank " + std::to_string(kind.rank) +
                                                         " exceeds " + std::to_string(full.sigma.size()));
        }
        SvfitState s{std::move(full.u), std::move(full.vt), {}, {}};
        s.sigma_train.assign(full.sigma.begin(), full.sigma.begin() + static_cast<std::ptrdiff_t>(kind.rank));
        s.sigma_rest.assign(full.sigma.begin() + static_cast<std::ptrdiff_t>(kind.rank), full.sigma.end());
        layer.state = std::move(s);
        break;
    }
    case AdapterType::FrozenUV:
        layer.state = CoreState{detail::frozen_uv_factors(w0, kind.rank)};
        break;
    case AdapterType::Cersa:
        if (kind.split_top) {
            layer.state = CoreState{kind.rank > 0 ? split_variant(w0, kind.alpha, *kind.split_top, kind.rank)
                                                  : split_variant(w0, kind.alpha, *kind.split_top)};
        } else {
            layer.state = CoreState{factorize(w0, kind.alpha, kind.beta)};
        }
        break;
    }
    return layer;
}

namespace detail {

template <class Layer, class F>
void for_each_trainable(Layer& layer, F&& f) {
    std::visit(overloaded{
                   [&](auto& s) {
                       using S = std::remove_cvref_t<decltype(s)>;
                       if constexpr (std::is_same_v<S, FullState>) {
                           f("weight", s.weight);
                       } else if constexpr (std::is_same_v<S, LoraState>) {
                           f("lora_b", s.b);
                           f("lora_a", s.a);
                       } else if constexpr (std::is_same_v<S, SvfitState>) {
                           f("sigma_train", s.sigma_train);
                       } else {
                           f("s_core", s.factors.s_core);
                       }
                   },
               },
               layer.state);
    f("bias", layer.bias);
}

} // namespace detail

/// Trainable tensors; the bias is always last.
inline std::vector<ParamView> trainable_params(AdapterLayer& layer) {
    std::vector<ParamView> out;
    detail::for_each_trainable(layer, [&](const char* name, auto& t) { out.push_back(detail::view(name, t)); });
    return out;
}

inline std::vector<ConstParamView> trainable_params(const AdapterLayer& layer) {
    std::vector<ConstParamView> out;
    detail::for_each_trainable(layer, [&](const char* name, const auto& t) { out.push_back(detail::cview(name, t)); });
    return out;
}

inline std::vector<ConstParamView> frozen_params(const AdapterLayer& layer) {
    std::vector<ConstParamView> out;
    std::visit(detail::overloaded{
                   [&](const FullState&) {},
                   [&](const LoraState& s) { out.push_back(detail::cview("base", s.base)); },
                   [&](const SvfitState& s) {
                       out.push_back(detail::cview("u", s.u));
                       out.push_back(detail::cview("vt", s.vt));
                       out.push_back(detail::cview("sigma_rest", s.sigma_rest));
                   },
                   [&](const CoreState& s) {
                       out.push_back(detail::cview("u_p", s.factors.u_p));
                       out.push_back(detail::cview("v_pt", s.factors.v_pt));
                       out.push_back(detail::cview("sigma_frozen", s.factors.sigma_frozen));
                   },
               },
               layer.state);
    return out;
}

/// Trainable parameter count including the bias.
inline std::size_t trainable_count(const AdapterLayer& layer) {
    std::size_t n = 0;
    for (const auto& p : trainable_params(layer)) n += p.values.size();
    return n;
}

inline std::size_t frozen_count(const AdapterLayer& layer) {
    std::size_t n = 0;
    for (const auto& p : frozen_params(layer)) n += p.values.size();
    return n;
}

inline Matrix effective_weight(const AdapterLayer& layer) {
    return std::visit(detail::overloaded{
                          [](const FullState& s) { return s.weight; },
                          [](const LoraState& s) { return s.base + matmul(s.b, s.a); },
                          [](const SvfitState& s) {
                              Matrix us = s.u;
                              detail::scale_columns(us, detail::svfit_sigma(s));
                              return matmul(us, s.vt);
                          },
                          [](const CoreState& s) { return effective_weight(s.factors); },
                      },
                      layer.state);
}

inline void check_input(const AdapterLayer& layer, const Matrix& x) {
    if (x.cols() != layer.in_dim) {
        throw Error(ErrorCode::DimensionMismatch, "forward: input " + x.shape_string() + " does not match in_dim " +
                                                      std::to_string(layer.in_dim));
    }
}

/// x * W_eff^T + bias for a batch of row vectors. Factored kinds never form W_eff.
inline Matrix forward(const AdapterLayer& layer, const Matrix& x) {
    check_input(layer, x);
    Matrix y = std::visit(detail::overloaded{
                              [&](const FullState& s) { return matmul_nt(x, s.weight); },
                              [&](const LoraState& s) {
                                  return matmul_nt(x, s.base) + matmul_nt(matmul_nt(x, s.a), s.b);
                              },
                              [&](const SvfitState& s) {
                                  Matrix z = matmul_nt(x, s.vt);
                                  detail::scale_columns(z, detail::svfit_sigma(s));
                                  return matmul_nt(z, s.u);
                              },
                              [&](const CoreState& s) {
                                  const Matrix z = matmul_nt(x, s.factors.v_pt);
                                  return matmul_nt(matmul_nt(z, s.factors.core_block()), s.factors.u_p);
                              },
                          },
                          layer.state);
    return detail::add_bias(std::move(y), layer.bias);
}

inline LayerGrads grad(const AdapterLayer& layer, const Matrix& x, const Matrix& upstream) {
    check_input(layer, x);
    if (upstream.rows() != x.rows() || upstream.cols() != layer.out_dim) {
        throw Error(ErrorCode::DimensionMismatch, "grad: upstream " + upstream.shape_string() +
                                                      " does not match forward output " +
                                                      std::to_string(x.rows()) + "x" + std::to_string(layer.out_dim));
    }
    const Matrix& g = upstream;
    LayerGrads out;
    std::visit(detail::overloaded{
                   [&](const FullState& s) {
                       out.params.push_back(matmul_tn(g, x));
                       out.input = matmul(g, s.weight);
                   },
                   [&](const LoraState& s) {
                       const Matrix h = matmul_nt(x, s.a);
                       const Matrix gb = matmul(g, s.b);
                       out.params.push_back(matmul_tn(g, h));
                       out.params.push_back(matmul_tn(gb, x));
                       out.input = matmul(g, s.base) + matmul(gb, s.a);
                   },
                   [&](const SvfitState& s) {
                       const Matrix z = matmul_nt(x, s.vt);
                       Matrix gu = matmul(g, s.u);
                       Matrix ds(1, s.sigma_train.size());
                       for (std::size_t b = 0; b < gu.rows(); ++b)
                           for (std::size_t i = 0; i < s.sigma_train.size(); ++i) ds(0, i) += gu(b, i) * z(b, i);
                       out.params.push_back(std::move(ds));
                       detail::scale_columns(gu, detail::svfit_sigma(s));
                       out.input = matmul(gu, s.vt);
                   },
                   [&](const CoreState& s) {
                       const CersaFactors& f = s.factors;
                       const Matrix z = matmul_nt(x, f.v_pt);
                       const Matrix gu = matmul(g, f.u_p);
                       const Matrix d_mid = matmul_tn(gu, z);
                       out.params.push_back(block(d_mid, f.core_offset, f.core_offset, f.core_size(), f.core_size()));
                       out.input = matmul(matmul(gu, f.core_block()), f.v_pt);
                   },
               },
               layer.state);
    out.params.push_back(detail::column_sums(g));
    return out;
}

} // namespace cersa
