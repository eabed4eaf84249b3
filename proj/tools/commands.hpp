// Copyright 2026 The cersa-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cersa/analysis.hpp>
#include <cersa/cersa_factor.hpp>
#include <cersa/checkpoint.hpp>
#include <cersa/config.hpp>
#include <cersa/memory_model.hpp>
#include <cersa/report.hpp>
#include <cersa/spectrum.hpp>
#include <cersa/train.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace cersa::cli {

namespace fs = std::filesystem;

inline void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << text;
}

/// One-line machine-parsable code followed by the human diagnostic.
inline int report_error(std::ostream& err, const Error& e) {
    err << "error[" << code_name(e.code()) << "]: " << e.what() << '\n';
    return 1;
}

inline std::string sanitize(const std::string& name) {
    std::string out;
    for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out;
}

// ---------------------------------------------------------------------------

struct AnalyzeOptions {
    fs::path checkpoint;
    std::vector<double> thresholds{0.8, 0.85, 0.9, 0.92, 0.95};
    fs::path out = "cersa_out";
};

inline int cmd_analyze(const AnalyzeOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        for (double t : opt.thresholds) check_threshold(t, "analysis");
        const Checkpoint ck = load_checkpoint(opt.checkpoint);
        std::vector<LayerSpectrum> layers;
        for (const Tensor& t : ck.tensors) {
            if (!t.is_matrix()) continue;
            layers.push_back({t.name, svd(to_matrix(t)).sigma});
        }
        if (layers.empty()) throw Error(ErrorCode::Format, "container holds no 2-D tensors to analyze");
        const auto rows = layer_rank_report(layers, opt.thresholds);
        const std::string csv = layer_rank_csv(rows);
        write_text(opt.out / "rank_report.csv", csv);
        write_text(opt.out / "rank_report.json", layer_rank_json(rows).dump(2) + "\n");
        out << csv;
        return 0;
    } catch (const Error& e) {
        return report_error(err, e);
    }
}

// ---------------------------------------------------------------------------

struct FactorizeOptions {
    fs::path input;
    double alpha = 0.95;
    std::optional<double> beta;
    fs::path output;
};

inline double cersa_compression(std::size_t m, std::size_t n, const RankSelection& s) {
    const MatrixDims d{m, n};
    const MemoryReport rep = memory_report({MemoryMethod::Cersa, {s.k_alpha}, {s.k_beta}, std::nullopt}, {&d, 1});
    return static_cast<double>(rep.total_params()) / (static_cast<double>(m) * static_cast<double>(n));
}

inline int cmd_factorize(const FactorizeOptions& opt, std::ostream& out, std::ostream& err) {
    const double beta = opt.beta.value_or(opt.alpha);
    try {
        check_threshold(opt.alpha, "alpha");
        check_threshold(beta, "beta");
        if (beta > opt.alpha) {
            throw Error(ErrorCode::ThresholdOrder, "trainable threshold exceeds retention threshold (beta " +
                                                       format_real(beta) + " > alpha " + format_real(opt.alpha) + ")");
        }
    } catch (const Error& e) {
        return report_error(err, e);
    }
    try {
        const Checkpoint in = load_checkpoint(opt.input);
        Checkpoint result;
        result.metadata = in.metadata;
        result.metadata["factorization"] = {{"alpha", opt.alpha}, {"beta", beta}};
        std::vector<std::string> failures;
        out << "tensor,k_alpha,k_beta,reconstruction_error,relative_error,compression\n";
        for (const Tensor& t : in.tensors) {
            if (!t.is_matrix()) {
                result.tensors.push_back(t);
                continue;
            }
            try {
                const Matrix w = to_matrix(t);
                const CersaFactors f = factorize(w, opt.alpha, beta);
                const double e = frobenius_norm(w - effective_weight(f));
                add_factors(result, t.name, f);
                out << csv_field(t.name) << ',' << f.selection.k_alpha << ',' << f.selection.k_beta << ','
                    << format_real(e) << ',' << format_real(e / frobenius_norm(w)) << ','
                    << format_real(cersa_compression(w.rows(), w.cols(), f.selection)) << '\n';
            } catch (const Error& e) {
                failures.push_back(t.name);
                err << "error[" << code_name(e.code()) << "]: tensor '" << t.name << "': " << e.what() << '\n';
                result.tensors.push_back(t);
            }
        }
        save_checkpoint(result, opt.output);
        return failures.empty() ? 0 : 1;
    } catch (const Error& e) {
        return report_error(err, e);
    }
}

// ---------------------------------------------------------------------------

struct TrainOptions {
    fs::path config;
    bool compare = false;
    bool timing = false;
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> out;
    std::size_t threads = 1;
};

inline Checkpoint weights_checkpoint(const Model& model, const std::string& tag) {
    Checkpoint ck;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const std::string name = "layer" + std::to_string(l);
        ck.tensors.push_back(tensor_from_matrix(name + "/weight", effective_weight(model.layers[l])));
        ck.tensors.push_back(tensor_from_vector(name + "/bias", model.layers[l].bias));
        ck.metadata["adapters"][name] = kind_to_json(model.layers[l].kind);
    }
    ck.metadata["stage"] = tag;
    return ck;
}

inline Checkpoint adapter_checkpoint(const Model& model) {
    Checkpoint ck;
    for (std::size_t l = 0; l < model.layers.size(); ++l) add_adapter(ck, "layer" + std::to_string(l), model.layers[l]);
    ck.metadata["activation"] = activation_name(model.activation);
    ck.metadata["head"] = head_name(model.head);
    return ck;
}

inline int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        ExperimentConfig cfg = load_experiment_config(opt.config);
        if (opt.seed) cfg.seed = *opt.seed;
        if (opt.out) cfg.output_dir = *opt.out;
        cfg.task.seed = derive_seed(cfg.seed, 10);
        cfg.train.seed = derive_seed(cfg.seed, 20);
        const TaskData data = gen_task(cfg.task);
        const fs::path dir = cfg.output_dir;

        if (opt.compare) {
            const CompareTable table = compare_methods(cfg.adapters, data, cfg.train, cfg.activation, opt.threads);
            nlohmann::json runs = nlohmann::json::array();
            for (std::size_t i = 0; i < table.runs.size(); ++i) {
                const RunRecord& r = table.runs[i];
                runs.push_back(run_record_json(r, opt.timing));
                if (!r.error.empty()) continue;
                const std::string stem = "run" + std::to_string(i) + "_" + cfg.adapters[i].type_name();
                write_text(dir / (stem + "_loss.csv"), loss_csv(r));
                if (opt.timing) write_text(dir / (stem + "_timing.csv"), timing_csv(r));
            }
            const std::string csv = compare_csv(table);
            write_text(dir / "compare.csv", csv);
            nlohmann::json ranking = nlohmann::json::array();
            for (std::size_t idx : table.ranking) ranking.push_back(table.runs[idx].label);
            write_text(dir / "compare.json",
                       nlohmann::json{{"task", task_kind_name(cfg.task.kind)}, {"runs", runs}, {"ranking", ranking}}
                               .dump(2) +
                           "\n");
            out << csv;
            for (const auto& r : table.runs) {
                if (!r.error.empty()) err << "run '" << r.label << "' failed: " << r.error << '\n';
            }
            return 0;
        }

        Model model = build_model(model_spec_for(data, cfg.adapters.front(), cfg.activation), data, cfg.train.seed);
        save_checkpoint(weights_checkpoint(model, "init"), dir / "weights_init.ckpt");
        RunRecord rec = train_run(model, cfg.train, data);
        rec.threads = opt.threads;
        write_text(dir / "loss.csv", loss_csv(rec));
        write_text(dir / "run.json", run_record_json(rec, opt.timing).dump(2) + "\n");
        if (opt.timing) write_text(dir / "timing.csv", timing_csv(rec));
        save_checkpoint(weights_checkpoint(model, "final"), dir / "weights_final.ckpt");
        save_checkpoint(adapter_checkpoint(model), dir / "adapter_final.ckpt");
        out << rec.label << ": final train loss " << format_real(rec.final_train_loss) << ", test loss "
            << format_real(rec.final_test_loss) << ", trainable " << rec.trainable_count << '\n';
        if (opt.timing) out << "wall seconds " << format_real(rec.wall_seconds) << '\n';
        return 0;
    } catch (const Error& e) {
        return report_error(err, e);
    }
}

// ---------------------------------------------------------------------------

struct SimilarityOptions {
    fs::path a;
    fs::path b;
    double retention = 0.95;
    bool grid = false;
    std::size_t grid_size = 0; // 0 = k from retention
    fs::path out = "cersa_out";
};

inline int cmd_similarity(const SimilarityOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        check_threshold(opt.retention, "retention");
        const Checkpoint ca = load_checkpoint(opt.a);
        const Checkpoint cb = load_checkpoint(opt.b);
        std::vector<std::string> offenders;
        std::vector<std::pair<const Tensor*, const Tensor*>> pairs;
        for (const Tensor& t : ca.tensors) {
            if (!t.is_matrix()) continue;
            const Tensor* u = cb.find(t.name);
            if (!u) {
                offenders.push_back(t.name + " (missing in second container)");
            } else if (u->shape != t.shape) {
                offenders.push_back(t.name + " (shape mismatch)");
            } else {
                pairs.emplace_back(&t, u);
            }
        }
        for (const Tensor& t : cb.tensors) {
            if (t.is_matrix() && !ca.find(t.name)) offenders.push_back(t.name + " (missing in first container)");
        }
        if (!offenders.empty()) {
            std::string msg = "tensor mismatch:";
            for (const auto& o : offenders) msg += " " + o + ";";
            throw Error(ErrorCode::DimensionMismatch, msg);
        }
        if (pairs.empty()) throw Error(ErrorCode::Format, "no 2-D tensors to compare");
        std::vector<SimilarityRow> rows;
        for (const auto& [ta, tb] : pairs) {
            const Matrix wa = to_matrix(*ta);
            const Matrix wb = to_matrix(*tb);
            try {
                rows.push_back({ta->name, subspace_similarity(wa, wb, opt.retention)});
            } catch (const Error& e) {
                throw Error(e.code(), "tensor '" + ta->name + "': " + e.what());
            }
            if (opt.grid) {
                const std::size_t p = std::min(wa.rows(), wa.cols());
                const std::size_t size = std::min(opt.grid_size > 0 ? opt.grid_size : rows.back().sim.k, p);
                for (SubspaceSide side : {SubspaceSide::Left, SubspaceSide::Right}) {
                    const SimilarityGrid g =
                        similarity_grid(wa, wb, size, size, side, opt.a.filename().string(), opt.b.filename().string());
                    const std::string stem =
                        "grid_" + sanitize(ta->name) + (side == SubspaceSide::Left ? "_u" : "_v");
                    write_text(opt.out / (stem + ".csv"), grid_csv(g));
                    write_text(opt.out / (stem + ".svg"), grid_svg(g));
                }
            }
        }
        const std::string csv = similarity_csv(rows);
        write_text(opt.out / "similarity.csv", csv);
        out << csv;
        return 0;
    } catch (const Error& e) {
        return report_error(err, e);
    }
}

// ---------------------------------------------------------------------------

struct MemoryOptions {
    std::vector<std::string> methods{"ft", "lora", "svfit", "svft", "cersa"};
    std::vector<std::string> dims;          // "MxN" or "MxN*count"
    std::optional<std::uint64_t> params;    // FT-only total parameter count
    std::vector<std::uint64_t> ranks;       // uniform (one) or per matrix
    std::vector<std::uint64_t> beta_ranks;  // CERSA trainable ranks
    std::optional<std::uint64_t> svft_e;
    std::optional<fs::path> checkpoint;     // CERSA ranks from layer spectra
    std::optional<double> alpha;
    std::optional<double> beta;
    bool curve = false;
    std::vector<double> curve_alphas{0.8, 0.85, 0.9, 0.92, 0.95, 0.99};
    fs::path out = "cersa_out";
};

inline std::vector<MatrixDims> parse_dims(const std::vector<std::string>& specs) {
    std::vector<MatrixDims> out;
    for (const std::string& s : specs) {
        std::uint64_t m = 0, n = 0, count = 1;
        char x = 0, star = 0;
        std::istringstream is(s);
        is >> m >> x >> n;
        if (!is || (x != 'x' && x != 'X') || m == 0 || n == 0) {
            throw Error(ErrorCode::InvalidArgument, "bad --dims value '" + s + "' (expected MxN or MxN*count)");
        }
        if (is >> star) {
            if (star != '*' || !(is >> count) || count == 0) {
                throw Error(ErrorCode::InvalidArgument, "bad --dims value '" + s + "' (expected MxN*count)");
            }
        }
        for (std::uint64_t i = 0; i < count; ++i) out.push_back({m, n});
    }
    return out;
}

inline int cmd_memory(const MemoryOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        std::vector<MatrixDims> dims = parse_dims(opt.dims);
        std::vector<std::uint64_t> cersa_ranks = opt.ranks;
        std::vector<std::uint64_t> cersa_beta = opt.beta_ranks;
        std::vector<std::pair<MatrixDims, std::vector<double>>> spectra;
        if (opt.checkpoint) {
            if (!opt.alpha) throw Error(ErrorCode::MissingRank, "--checkpoint needs --alpha to select CERSA ranks");
            const double beta = opt.beta.value_or(*opt.alpha);
            const Checkpoint ck = load_checkpoint(*opt.checkpoint);
            dims.clear();
            cersa_ranks.clear();
            cersa_beta.clear();
            for (const Tensor& t : ck.tensors) {
                if (!t.is_matrix()) continue;
                const SvdFactors f = svd(to_matrix(t));
                const RankSelection s = make_selection(energy_profile(f.sigma), *opt.alpha, beta);
                dims.push_back({t.shape[0], t.shape[1]});
                cersa_ranks.push_back(s.k_alpha);
                cersa_beta.push_back(s.k_beta);
                spectra.emplace_back(dims.back(), f.sigma);
            }
            if (dims.empty()) throw Error(ErrorCode::Format, "checkpoint holds no 2-D tensors");
        }
        std::vector<MemoryReport> reps;
        for (const std::string& name : opt.methods) {
            const auto method = parse_memory_method(name);
            if (!method) throw Error(ErrorCode::InvalidArgument, "unknown method '" + name + "'");
            if (*method == MemoryMethod::FT && opt.params) {
                reps.push_back(full_ft_report(*opt.params));
                continue;
            }
            if (dims.empty()) throw Error(ErrorCode::InvalidArgument, "method '" + name + "' needs --dims or --checkpoint");
            MemorySpec spec{*method, {}, {}, opt.svft_e};
            if (*method == MemoryMethod::Cersa) {
                spec.ranks = cersa_ranks;
                spec.trainable_ranks = cersa_beta;
            } else if (*method != MemoryMethod::FT && *method != MemoryMethod::SVFT) {
                if (opt.ranks.size() > 1) {
                    throw Error(ErrorCode::InvalidArgument, "method '" + name + "' takes a single uniform rank");
                }
                spec.ranks = opt.ranks;
            }
            reps.push_back(memory_report(spec, dims));
        }
        const std::string csv = memory_csv(reps);
        write_text(opt.out / "memory.csv", csv);
        write_text(opt.out / "memory.json", memory_json(reps).dump(2) + "\n");
        out << csv;

        if (opt.curve) {
            if (dims.empty()) throw Error(ErrorCode::InvalidArgument, "--curve needs --dims or --checkpoint");
            const MatrixDims d = dims.front();
            std::vector<CompressionPoint> pts;
            if (!spectra.empty()) {
                pts = compression_curve(d.m, d.n, spectra.front().second, opt.curve_alphas);
            } else if (!opt.ranks.empty()) {
                pts = compression_curve(d.m, d.n, opt.ranks);
            } else {
                std::vector<std::uint64_t> all(std::min(d.m, d.n));
                for (std::size_t i = 0; i < all.size(); ++i) all[i] = i + 1;
                pts = compression_curve(d.m, d.n, all);
            }
            const double lora_ref = lora_reference_rate(d.m, d.n, 32);
            write_text(opt.out / "compression.csv", compression_csv(pts));
            write_text(opt.out / "compression.svg", compression_svg(pts, lora_ref));
            out << "break_even_rank," << break_even_rank(d.m, d.n) << '\n';
            out << "lora_r32_reference," << format_real(lora_ref) << '\n';
        }
        return 0;
    } catch (const Error& e) {
        return report_error(err, e);
    }
}

} // namespace cersa::cli
