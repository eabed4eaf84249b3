// Copyright 2026 The cersa-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cersa/adapters.hpp>
#include <cersa/cersa_factor.hpp>
#include <cersa/error.hpp>
#include <cersa/matrix.hpp>

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace cersa {

// Container layout:
//   bytes 0..7    magic "CERSACK1"
//   bytes 8..15   manifest length L, little-endian u64
//   bytes 16..    L bytes of UTF-8 JSON manifest
//   then          blob of little-endian IEEE-754 tensor data
// Manifest: {"format_version": 1, "metadata": {...},
//            "tensors": [{"name", "shape", "dtype", "offset", "length"}]}
// Offsets are relative to the start of the blob.

inline constexpr std::string_view kCheckpointMagic = "CERSACK1";
inline constexpr int kCheckpointFormatVersion = 1;

enum class DType { F64, F32 };

inline std::size_t dtype_size(DType t) { return t == DType::F64 ? 8 : 4; }
inline std::string dtype_name(DType t) { return t == DType::F64 ? "f64" : "f32"; }

struct Tensor {
    std::string name;
    std::vector<std::size_t> shape;
    DType dtype = DType::F64;
    std::vector<double> values;

    std::size_t element_count() const {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return n;
    }
    bool is_matrix() const { return shape.size() == 2; }
    bool operator==(const Tensor&) const = default;
};

struct Checkpoint {
    std::vector<Tensor> tensors;
    nlohmann::json metadata = nlohmann::json::object();

    const Tensor* find(std::string_view name) const {
        auto it = std::find_if(tensors.begin(), tensors.end(), [&](const Tensor& t) { return t.name == name; });
        return it == tensors.end() ? nullptr : &*it;
    }
    const Tensor& at(std::string_view name) const {
        if (const Tensor* t = find(name)) return *t;
        throw Error(ErrorCode::Format, "checkpoint has no tensor '" + std::string(name) + "'");
    }
};

inline Tensor tensor_from_matrix(std::string name, const Matrix& m, DType dtype = DType::F64) {
    return Tensor{std::move(name), {m.rows(), m.cols()}, dtype, {m.values().begin(), m.values().end()}};
}

inline Tensor tensor_from_vector(std::string name, std::span<const double> v, DType dtype = DType::F64) {
    return Tensor{std::move(name), {v.size()}, dtype, {v.begin(), v.end()}};
}

inline Matrix to_matrix(const Tensor& t) {
    if (!t.is_matrix()) {
        throw Error(ErrorCode::Format, "tensor '" + t.name + "' is not 2-D");
    }
    try {
        return Matrix(t.shape[0], t.shape[1], t.values);
    } catch (const Error& e) {
        throw Error(e.code(), "tensor '" + t.name + "': " + e.what());
    }
}

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint64_t get_u64(std::string_view in, std::size_t pos) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    return v;
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32(std::string_view in, std::size_t pos) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    return v;
}

} // namespace detail

inline std::string serialize(const Checkpoint& ck) {
    nlohmann::json entries = nlohmann::json::array();
    std::string blob;
    for (const Tensor& t : ck.tensors) {
        if (t.values.size() != t.element_count()) {
            throw Error(ErrorCode::Format, "tensor '" + t.name + "' holds " + std::to_string(t.values.size()) +
                                               " values for its shape");
        }
        const std::size_t offset = blob.size();
        for (double v : t.values) {
            if (t.dtype == DType::F64) {
                detail::put_u64(blob, std::bit_cast<std::uint64_t>(v));
            } else {
                detail::put_u32(blob, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
            }
        }
        entries.push_back({{"name", t.name},
                           {"shape", t.shape},
                           {"dtype", dtype_name(t.dtype)},
                           {"offset", offset},
                           {"length", blob.size() - offset}});
    }
    const nlohmann::json manifest = {
        {"format_version", kCheckpointFormatVersion}, {"metadata", ck.metadata}, {"tensors", entries}};
    const std::string text = manifest.dump();
    std::string out(kCheckpointMagic);
    detail::put_u64(out, text.size());
    out += text;
    out += blob;
    return out;
}

inline Checkpoint deserialize(std::string_view bytes) {
    const std::size_t header = kCheckpointMagic.size() + 8;
    if (bytes.size() < header || bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) {
        throw Error(ErrorCode::Format, "not a checkpoint container (bad magic)");
    }
    const std::uint64_t manifest_len = detail::get_u64(bytes, kCheckpointMagic.size());
    if (manifest_len > bytes.size() - header) {
        throw Error(ErrorCode::Format, "manifest length " + std::to_string(manifest_len) + " exceeds file size");
    }
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(bytes.substr(header, manifest_len));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::Format, "malformed manifest JSON at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    const std::string_view blob = bytes.substr(header + manifest_len);

    Checkpoint ck;
    try {
        if (manifest.at("format_version").get<int>() != kCheckpointFormatVersion) {
            throw Error(ErrorCode::Format, "unsupported format_version " + manifest.at("format_version").dump());
        }
        if (manifest.contains("metadata")) ck.metadata = manifest.at("metadata");
        std::vector<std::pair<std::size_t, std::size_t>> spans;
        for (const auto& e : manifest.at("tensors")) {
            Tensor t;
            t.name = e.at("name").get<std::string>();
            t.shape = e.at("shape").get<std::vector<std::size_t>>();
            const std::string dt = e.at("dtype").get<std::string>();
            if (dt == "f64") {
                t.dtype = DType::F64;
            } else if (dt == "f32") {
                t.dtype = DType::F32;
            } else {
                throw Error(ErrorCode::Format, "tensor '" + t.name + "' has unknown dtype '" + dt + "'");
            }
            const auto offset = e.at("offset").get<std::size_t>();
            const auto length = e.at("length").get<std::size_t>();
            const std::size_t width = dtype_size(t.dtype);
            if (length != t.element_count() * width) {
                throw Error(ErrorCode::Format, "tensor '" + t.name + "' length " + std::to_string(length) +
                                                   " does not match its shape");
            }
            if (offset > blob.size() || length > blob.size() - offset) {
                throw Error(ErrorCode::Format, "tensor '" + t.name + "' lies outside the blob");
            }
            if (ck.find(t.name)) throw Error(ErrorCode::Format, "duplicate tensor name '" + t.name + "'");
            spans.emplace_back(offset, length);
            t.values.reserve(t.element_count());
            for (std::size_t i = 0; i < t.element_count(); ++i) {
                const std::size_t pos = offset + i * width;
                if (t.dtype == DType::F64) {
                    t.values.push_back(std::bit_cast<double>(detail::get_u64(blob, pos)));
                } else {
                    t.values.push_back(static_cast<double>(std::bit_cast<float>(detail::get_u32(blob, pos))));
                }
            }
            ck.tensors.push_back(std::move(t));
        }
        std::sort(spans.begin(), spans.end());
        for (std::size_t i = 1; i < spans.size(); ++i) {
            if (spans[i].first < spans[i - 1].first + spans[i - 1].second) {
                throw Error(ErrorCode::Format, "tensor data ranges overlap");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Format, std::string("invalid manifest: ") + e.what());
    }
    return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
    const std::string bytes = serialize(ck);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize(ss.str());
}

// ---------------------------------------------------------------------------
// Domain records

inline nlohmann::json selection_to_json(const RankSelection& s) {
    return {{"alpha", s.alpha}, {"beta", s.beta}, {"k_alpha", s.k_alpha}, {"k_beta", s.k_beta},
            {"r1", s.r1},       {"r2", s.r2},     {"r3", s.r3},           {"n_total", s.n_total}};
}

inline RankSelection selection_from_json(const nlohmann::json& j) {
    RankSelection s;
    s.alpha = j.at("alpha").get<double>();
    s.beta = j.at("beta").get<double>();
    s.k_alpha = j.at("k_alpha").get<std::size_t>();
    s.k_beta = j.at("k_beta").get<std::size_t>();
    s.r1 = j.at("r1").get<std::size_t>();
    s.r2 = j.at("r2").get<std::size_t>();
    s.r3 = j.at("r3").get<std::size_t>();
    s.n_total = j.at("n_total").get<std::size_t>();
    return s;
}

inline nlohmann::json kind_to_json(const AdapterKind& k) {
    nlohmann::json j = {{"kind", k.type_name()}};
    switch (k.type) {
    case AdapterType::FullFT: break;
    case AdapterType::LoRA:
    case AdapterType::SvfitArray:
    case AdapterType::FrozenUV: j["rank"] = k.rank; break;
    case AdapterType::Cersa:
        j["alpha"] = k.alpha;
        j["beta"] = k.beta;
        if (k.split_top) {
            j["split"] = *k.split_top ? "top" : "bottom";
            if (k.rank > 0) j["rank"] = k.rank;
        }
        break;
    }
    return j;
}

/// Appends `<layer>/u_p`, `/v_pt`, `/s_core`, `/sigma_frozen` and the selection record.
inline void add_factors(Checkpoint& ck, const std::string& layer, const CersaFactors& f) {
    ck.tensors.push_back(tensor_from_matrix(layer + "/u_p", f.u_p));
    ck.tensors.push_back(tensor_from_matrix(layer + "/v_pt", f.v_pt));
    ck.tensors.push_back(tensor_from_matrix(layer + "/s_core", f.s_core));
    ck.tensors.push_back(tensor_from_vector(layer + "/sigma_frozen", f.sigma_frozen));
    nlohmann::json sel = selection_to_json(f.selection);
    sel["core_offset"] = f.core_offset;
    ck.metadata["selections"][layer] = sel;
}

inline CersaFactors read_factors(const Checkpoint& ck, const std::string& layer) {
    CersaFactors f;
    f.u_p = to_matrix(ck.at(layer + "/u_p"));
    f.v_pt = to_matrix(ck.at(layer + "/v_pt"));
    f.s_core = to_matrix(ck.at(layer + "/s_core"));
    f.sigma_frozen = ck.at(layer + "/sigma_frozen").values;
    try {
        const auto& sel = ck.metadata.at("selections").at(layer);
        f.selection = selection_from_json(sel);
        f.core_offset = sel.value("core_offset", std::size_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Format, "missing selection record for '" + layer + "': " + e.what());
    }
    f.check_shapes();
    return f;
}

/// Every trainable and frozen tensor of an adapter layer, named `<layer>/<tensor>`,
/// with the kind and (for core kinds) the selection in the metadata.
inline void add_adapter(Checkpoint& ck, const std::string& layer, const AdapterLayer& a) {
    for (const auto& p : frozen_params(a)) {
        ck.tensors.push_back(Tensor{layer + "/" + p.name, {p.rows, p.cols}, DType::F64, {p.values.begin(), p.values.end()}});
    }
    for (const auto& p : trainable_params(a)) {
        ck.tensors.push_back(Tensor{layer + "/" + p.name, {p.rows, p.cols}, DType::F64, {p.values.begin(), p.values.end()}});
    }
    ck.metadata["adapters"][layer] = kind_to_json(a.kind);
    if (const auto* core = std::get_if<CoreState>(&a.state)) {
        nlohmann::json sel = selection_to_json(core->factors.selection);
        sel["core_offset"] = core->factors.core_offset;
        ck.metadata["selections"][layer] = sel;
    }
}

} // namespace cersa
