// Copyright 2026 The cersa-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cersa/analysis.hpp>
#include <cersa/checkpoint.hpp>
#include <cersa/memory_model.hpp>
#include <cersa/spectrum.hpp>
#include <cersa/train.hpp>

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace cersa {

/// Shortest-stable text for a real: 17 significant digits, "nan" for NaN.
inline std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

// -- spectrum ---------------------------------------------------------------

inline std::string layer_rank_csv(const std::vector<LayerRankRow>& rows) {
    std::ostringstream os;
    os << "layer_label,threshold,k,n_total\n";
    for (const auto& r : rows) {
        os << csv_field(r.layer_label) << ',' << format_real(r.threshold) << ',' << r.k << ',' << r.n_total << '\n';
    }
    return os.str();
}

inline nlohmann::json layer_rank_json(const std::vector<LayerRankRow>& rows) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows) {
        j.push_back({{"layer_label", r.layer_label}, {"threshold", r.threshold}, {"k", r.k}, {"n_total", r.n_total}});
    }
    return j;
}

// -- training ---------------------------------------------------------------

inline std::string loss_csv(const RunRecord& rec) {
    std::ostringstream os;
    os << "step,loss\n";
    for (std::size_t i = 0; i < rec.loss.size(); ++i) os << i << ',' << format_real(rec.loss[i]) << '\n';
    return os.str();
}

inline std::string timing_csv(const RunRecord& rec) {
    std::ostringstream os;
    os << "step,seconds\n";
    for (std::size_t i = 0; i < rec.step_seconds.size(); ++i) {
        os << i + 1 << ',' << format_real(rec.step_seconds[i]) << '\n';
    }
    return os.str();
}

inline nlohmann::json config_to_json(const TrainConfig& c) {
    return {{"learning_rate", c.learning_rate}, {"weight_decay", c.weight_decay}, {"steps", c.steps},
            {"batch_size", c.batch_size},       {"seed", c.seed},                 {"beta1", c.beta1},
            {"beta2", c.beta2},                 {"epsilon", c.epsilon},           {"log_every", c.log_every}};
}

/// RunRecord as JSON. Wall-clock fields are included only when `with_timing`
/// so that default output is reproducible byte for byte.
inline nlohmann::json run_record_json(const RunRecord& r, bool with_timing = false) {
    nlohmann::json j = {{"label", r.label},
                        {"loss", r.loss},
                        {"final_train_loss", r.final_train_loss},
                        {"final_test_loss", r.final_test_loss},
                        {"trainable_count", r.trainable_count},
                        {"threads", r.threads},
                        {"config", config_to_json(r.config)}};
    j["final_test_accuracy"] = r.final_test_accuracy ? nlohmann::json(*r.final_test_accuracy) : nlohmann::json(nullptr);
    if (!r.error.empty()) j["error"] = r.error;
    if (with_timing) j["wall_seconds"] = r.wall_seconds;
    return j;
}

inline std::string compare_csv(const CompareTable& t) {
    std::ostringstream os;
    os << "rank,label,final_test_loss,final_train_loss,final_test_accuracy,trainable_count,error\n";
    std::size_t place = 1;
    for (std::size_t idx : t.ranking) {
        const auto& r = t.runs[idx];
        os << place++ << ',' << csv_field(r.label) << ',' << format_real(r.final_test_loss) << ','
           << format_real(r.final_train_loss) << ','
           << (r.final_test_accuracy ? format_real(*r.final_test_accuracy) : std::string()) << ','
           << r.trainable_count << ",\n";
    }
    for (const auto& r : t.runs) {
        if (r.error.empty()) continue;
        os << ',' << csv_field(r.label) << ",,,,," << csv_field(r.error) << '\n';
    }
    return os.str();
}

// -- memory -----------------------------------------------------------------

inline std::string memory_csv(const std::vector<MemoryReport>& reps) {
    std::ostringstream os;
    os << "method,frozen_params,trainable_params,weights_bytes,gradient_bytes,optimizer_bytes,total_bytes,"
          "weights_mb,gradient_mb,optimizer_mb,total_mb\n";
    for (const auto& r : reps) {
        os << csv_field(r.method) << ',' << r.frozen_params << ',' << r.trainable_params << ',' << r.weights_bytes()
           << ',' << r.gradient_bytes() << ',' << r.optimizer_bytes() << ',' << r.total_bytes() << ','
           << format_real(MemoryReport::to_mb(r.weights_bytes())) << ','
           << format_real(MemoryReport::to_mb(r.gradient_bytes())) << ','
           << format_real(MemoryReport::to_mb(r.optimizer_bytes())) << ','
           << format_real(MemoryReport::to_mb(r.total_bytes())) << '\n';
    }
    return os.str();
}

inline nlohmann::json memory_json(const std::vector<MemoryReport>& reps) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : reps) {
        j.push_back({{"method", r.method},
                     {"frozen_params", r.frozen_params},
                     {"trainable_params", r.trainable_params},
                     {"weights_bytes", r.weights_bytes()},
                     {"gradient_bytes", r.gradient_bytes()},
                     {"optimizer_bytes", r.optimizer_bytes()},
                     {"total_bytes", r.total_bytes()},
                     {"bytes_per_param", kBytesPerParam}});
    }
    return j;
}

inline std::string compression_csv(const std::vector<CompressionPoint>& pts) {
    std::ostringstream os;
    os << "alpha_or_rank,r,c\n";
    for (const auto& p : pts) {
        os << (std::isnan(p.alpha) ? std::to_string(p.r) : format_real(p.alpha)) << ',' << p.r << ','
           << format_real(p.c) << '\n';
    }
    return os.str();
}

// -- similarity -------------------------------------------------------------

struct SimilarityRow {
    std::string tensor;
    SubspaceSimilarity sim;
};

inline std::string similarity_csv(const std::vector<SimilarityRow>& rows) {
    std::ostringstream os;
    os << "tensor,k,psi_u,psi_v\n";
    for (const auto& r : rows) {
        os << csv_field(r.tensor) << ',' << r.sim.k << ',' << format_real(r.sim.psi_u) << ','
           << format_real(r.sim.psi_v) << '\n';
    }
    return os.str();
}

inline std::string grid_csv(const SimilarityGrid& g) {
    std::ostringstream os;
    os << "i,j,psi\n";
    for (std::size_t i = 1; i <= g.max_i; ++i)
        for (std::size_t j = 1; j <= g.max_j; ++j) os << i << ',' << j << ',' << format_real(g.at(i, j)) << '\n';
    return os.str();
}

// -- SVG --------------------------------------------------------------------

/// Heat map of a grid. Color uses -log10(1 - psi) so values near one stay
/// distinguishable; the stored values are untouched.
inline std::string grid_svg(const SimilarityGrid& g) {
    const int cell = 16;
    const int margin = 40;
    const int w = margin * 2 + cell * static_cast<int>(g.max_j);
    const int h = margin * 2 + cell * static_cast<int>(g.max_i);
    double hi = 1e-300;
    std::vector<double> shade(g.values.size());
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        shade[i] = -std::log10(std::max(1.0 - g.values[i], 1e-16));
        hi = std::max(hi, shade[i]);
    }
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    os << "<text x=\"" << margin << "\" y=\"20\" font-size=\"12\">" << g.label_a << " top-i (rows) vs " << g.label_b
       << " top-j (cols), " << (g.side == SubspaceSide::Left ? "U" : "V") << "</text>\n";
    for (std::size_t i = 0; i < g.max_i; ++i) {
        for (std::size_t j = 0; j < g.max_j; ++j) {
            const double t = hi > 0 ? shade[i * g.max_j + j] / hi : 0.0;
            const int level = static_cast<int>(std::lround(255.0 * (1.0 - t)));
            os << "<rect x=\"" << margin + cell * static_cast<int>(j) << "\" y=\"" << margin + cell * static_cast<int>(i)
               << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb(" << level << ',' << level
               << ",255)\"><title>" << i + 1 << ',' << j + 1 << ": " << format_real(g.values[i * g.max_j + j])
               << "</title></rect>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

/// Compression rate against rank, with the LoRA reference as a dashed line.
inline std::string compression_svg(const std::vector<CompressionPoint>& pts, double lora_reference) {
    const double w = 480, h = 320, pad = 40;
    double max_r = 1, max_c = std::max(lora_reference, 1.0);
    for (const auto& p : pts) {
        max_r = std::max(max_r, static_cast<double>(p.r));
        max_c = std::max(max_c, p.c);
    }
    auto sx = [&](double r) { return pad + (w - 2 * pad) * r / max_r; };
    auto sy = [&](double c) { return h - pad - (h - 2 * pad) * c / max_c; };
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    os << "<line x1=\"" << pad << "\" y1=\"" << sy(0) << "\" x2=\"" << w - pad << "\" y2=\"" << sy(0)
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << pad << "\" y1=\"" << sy(0) << "\" x2=\"" << pad << "\" y2=\"" << pad
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << pad << "\" y1=\"" << sy(lora_reference) << "\" x2=\"" << w - pad << "\" y2=\""
       << sy(lora_reference) << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
    os << "<polyline fill=\"none\" stroke=\"steelblue\" points=\"";
    for (const auto& p : pts) os << sx(static_cast<double>(p.r)) << ',' << sy(p.c) << ' ';
    os << "\"/>\n";
    os << "<text x=\"" << pad << "\" y=\"" << h - 8 << "\" font-size=\"12\">rank r</text>\n";
    os << "<text x=\"4\" y=\"" << pad - 8 << "\" font-size=\"12\">compression rate c</text>\n";
    os << "</svg>\n";
    return os.str();
}

} // namespace cersa
