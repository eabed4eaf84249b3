// Copyright 2026 The cersa-forge Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <cersa/adapters.hpp>
#include <cersa/analysis.hpp>
#include <cersa/checkpoint.hpp>
#include <cersa/memory_model.hpp>
#include <cersa/report.hpp>

#include "commands.hpp"
#include "oracles.hpp"
#include "scenarios.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using cersa::AdapterKind;
using cersa::Matrix;
using cersa::TaskKind;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double rel(const Matrix& a, const Matrix& b) {
    return oracle::dense_fro(a - b) / std::max(oracle::dense_fro(b), 1e-300);
}

// -- 1 ---------------------------------------------------------------------

/// Truncation error against the tail norm. The residual is peeled one rank-1
/// term at a time, so every k costs one m x n update.
Outcome truncation_error() {
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<std::size_t> rows(1, 128), cols(1, 96);
    double worst = 0.0;
    std::size_t checks = 0;
    for (int i = 0; i < 100; ++i) {
        const Matrix a = oracle::gaussian(rows(rng), cols(rng), rng);
        const auto f = cersa::svd(a);
        Matrix residual = a;
        for (std::size_t k = 1; k < f.sigma.size(); ++k) {
            for (std::size_t r = 0; r < a.rows(); ++r)
                for (std::size_t c = 0; c < a.cols(); ++c)
                    residual(r, c) -= f.u(r, k - 1) * f.sigma[k - 1] * f.vt(k - 1, c);
            const double expect = oracle::tail_norm(f.sigma, k);
            worst = std::max(worst, std::abs(oracle::dense_fro(residual) - expect) / expect);
            ++checks;
        }
        // The library truncation must agree with the peeled residual at a middle rank.
        const std::size_t mid = (f.sigma.size() + 1) / 2;
        if (mid < f.sigma.size()) {
            const double lib = cersa::frobenius_norm(a - cersa::reconstruct(cersa::truncate(f, mid)));
            const double expect = oracle::tail_norm(f.sigma, mid);
            worst = std::max(worst, std::abs(lib - expect) / expect);
        }
    }
    return {worst <= 1e-10, "max relative deviation " + num(worst) + " over " + std::to_string(checks) + " ranks"};
}

// -- 2 ---------------------------------------------------------------------

Outcome change_of_basis_round_trip() {
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<std::size_t> dim(2, 24);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const std::size_t m = dim(rng), n = dim(rng);
        const std::size_t k = 1 + static_cast<std::size_t>(i) % std::min(m, n);
        const Matrix w = oracle::naive_matmul(oracle::gaussian(m, k, rng), oracle::gaussian(k, n, rng));
        const auto t = cersa::truncate(cersa::svd(w), k);
        const Matrix q = oracle::naive_matmul(t.u, oracle::random_orthogonal(k, rng));
        const Matrix qp = oracle::naive_matmul(cersa::transpose(t.vt), oracle::random_orthogonal(k, rng));
        const Matrix s = cersa::core_in_bases(w, q, qp);
        worst = std::max(worst, rel(oracle::naive_matmul(oracle::naive_matmul(q, s), oracle::naive_transpose(qp)), w));
    }
    return {worst <= 1e-9, "max relative residual " + num(worst) + " over 100 pairs"};
}

// -- 3 ---------------------------------------------------------------------

Outcome rank_selection_oracle() {
    std::mt19937_64 rng(303);
    std::uniform_int_distribution<std::size_t> len(1, 40);
    std::uniform_real_distribution<double> val(0.0, 10.0), thr(1e-9, 1.0);
    std::bernoulli_distribution zero(0.1), repeat(0.3);
    std::size_t mismatches = 0, scale_breaks = 0, cases = 0, ties = 0;
    const double scales[] = {0x1p-20, 0.125, 8.0, 0x1p20};
    auto check = [&](const std::vector<double>& s, double t) {
        ++cases;
        const auto p = cersa::energy_profile(s);
        const std::size_t k = cersa::select_rank(p, t);
        if (k != oracle::scan_rank(s, t)) ++mismatches;
        for (double c : scales) {
            auto scaled = s;
            for (double& v : scaled) v *= c;
            if (cersa::select_rank(cersa::energy_profile(scaled), t) != k) ++scale_breaks;
        }
    };
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> s(len(rng));
        for (std::size_t j = 0; j < s.size(); ++j) {
            s[j] = zero(rng) ? 0.0 : (j > 0 && repeat(rng) ? s[j - 1] : val(rng));
        }
        std::sort(s.rbegin(), s.rend());
        if (s.front() == 0.0) s.front() = 1.0;
        check(s, thr(rng));
        // Exact tie: the threshold is a prefix fraction computed the way the scan does.
        double total = 0.0;
        for (double v : s) total += v * v;
        const std::size_t cut = 1 + static_cast<std::size_t>(i) % s.size();
        double prefix = 0.0;
        for (std::size_t j = 0; j < cut; ++j) prefix += s[j] * s[j];
        if (prefix > 0.0) {
            check(s, prefix / total);
            ++ties;
        }
    }
    // Equal values give ties at every j / n.
    for (std::size_t n = 1; n <= 32; ++n)
        for (std::size_t j = 1; j <= n; ++j) {
            check(std::vector<double>(n, 3.0), static_cast<double>(j) / static_cast<double>(n));
            ++ties;
        }
    return {mismatches == 0 && scale_breaks == 0,
            std::to_string(cases) + " spectra (" + std::to_string(ties) + " at exact ties), " +
                std::to_string(mismatches) + " scan mismatches, " + std::to_string(scale_breaks) + " scale breaks"};
}

// -- 4 ---------------------------------------------------------------------

Matrix decaying_weight(std::size_t out, std::size_t in, std::mt19937_64& rng) {
    Matrix left = cersa::random_orthonormal(out, in, rng);
    const Matrix right = cersa::random_orthonormal(in, in, rng);
    for (std::size_t i = 0; i < out; ++i)
        for (std::size_t j = 0; j < in; ++j) left(i, j) *= 2.0 * std::exp(-0.3 * static_cast<double>(j));
    return cersa::matmul_nt(left, right);
}

Outcome gradients() {
    const std::vector<AdapterKind> kinds{AdapterKind::full_ft(),      AdapterKind::lora(3),
                                         AdapterKind::svfit_array(4), AdapterKind::frozen_uv(4),
                                         AdapterKind::cersa(1.0, 1.0), AdapterKind::cersa(0.9, 0.6),
                                         AdapterKind::cersa_split(0.99, true, 2),
                                         AdapterKind::cersa_split(0.99, false, 2)};
    double worst = 0.0;
    std::string where;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(4000 + seed);
        const Matrix w = decaying_weight(8, 6, rng);
        for (const auto& kind : kinds) {
            auto layer = cersa::build(kind, w, std::vector<double>(8, 0.1), seed);
            std::normal_distribution<double> nd(0.0, 0.5);
            for (auto& p : cersa::trainable_params(layer))
                for (double& v : p.values) v += nd(rng);
            Matrix x = oracle::gaussian(4, 6, rng);
            const Matrix up = oracle::gaussian(4, 8, rng);
            auto loss = [&] {
                const Matrix y = cersa::forward(layer, x);
                double acc = 0.0;
                for (std::size_t i = 0; i < y.size(); ++i) acc += y.values()[i] * up.values()[i];
                return acc;
            };
            const auto g = cersa::grad(layer, x, up);
            auto params = cersa::trainable_params(layer);
            auto compare = [&](std::span<const double> an, std::span<const double> fd, const std::string& name) {
                double scale = 1e-3, dev = 0.0;
                for (std::size_t i = 0; i < an.size(); ++i) {
                    scale = std::max({scale, std::abs(an[i]), std::abs(fd[i])});
                    dev = std::max(dev, std::abs(an[i] - fd[i]));
                }
                if (dev / scale > worst) {
                    worst = dev / scale;
                    where = kind.label() + " " + name;
                }
            };
            if (g.params.size() != params.size()) return {false, kind.label() + ": gradient count mismatch"};
            for (std::size_t t = 0; t < params.size(); ++t)
                compare(g.params[t].values(), oracle::central_difference(params[t].values, loss), params[t].name);
            compare(g.input.values(), oracle::central_difference(x.values(), loss), "input");
        }
    }
    return {worst <= 1e-6, "max relative deviation " + num(worst) + " (" + where + "), 8 kinds x 20 seeds"};
}

// -- 5 ---------------------------------------------------------------------

Outcome span_preservation() {
    std::size_t checkpoints = 0, runs = 0;
    double worst = 1.0;
    bool frozen_ok = true;
    const std::vector<AdapterKind> kinds{AdapterKind::cersa(0.95, 0.95), AdapterKind::cersa(0.95, 0.7),
                                         AdapterKind::cersa_split(0.95, true),
                                         AdapterKind::cersa_split(0.95, false)};
    for (TaskKind task : {TaskKind::LowRankTeacher, TaskKind::RotatedTeacher, TaskKind::Blobs}) {
        for (std::uint64_t seed = 0; seed < 2; ++seed) {
            auto t = scenario::teacher_task(task, seed, 0.3, 0.2);
            if (task == TaskKind::Blobs) {
                t.hidden = {10};
                t.out_dim = 4;
                t.noise = 1.0;
            }
            const auto data = cersa::gen_task(t);
            for (const auto& kind : kinds) {
                auto model = cersa::build_model(cersa::model_spec_for(data, kind), data, seed);
                const auto before = cersa::frozen_digest(model);
                auto cfg = scenario::ablation_config(seed);
                cfg.steps = 200;
                cfg.log_every = 20;
                (void)cersa::train_run(model, cfg, data, [&](std::size_t, const cersa::Model& m) {
                    ++checkpoints;
                    for (const auto& layer : m.layers) {
                        const auto& f = std::get<cersa::CoreState>(layer.state).factors;
                        const std::size_t k = f.retained();
                        const auto s = cersa::svd(cersa::effective_weight(f));
                        worst = std::min({worst, cersa::grassmann(s.u, f.u_p, k, k),
                                          cersa::grassmann(cersa::transpose(s.vt), cersa::transpose(f.v_pt), k, k)});
                    }
                });
                frozen_ok = frozen_ok && cersa::frozen_digest(model) == before;
                ++runs;
            }
        }
    }
    return {worst >= 1.0 - 1e-8 && frozen_ok,
            "min psi " + std::string(worst >= 1.0 - 1e-8 ? "1 - " + num(1.0 - worst) : num(worst)) + " over " +
                std::to_string(checkpoints) + " checkpoints in " + std::to_string(runs) + " runs, frozen digests " +
                (frozen_ok ? "unchanged" : "CHANGED")};
}

// -- 6 ---------------------------------------------------------------------

Outcome memory_model() {
    const double ft_mb = cersa::MemoryReport::to_mb(cersa::full_ft_report(303'300'000).total_bytes());
    const std::vector<cersa::MatrixDims> qv(48, cersa::MatrixDims{1024, 1024});
    const auto lora = cersa::memory_report({cersa::MemoryMethod::LoRA, {32}, {}, std::nullopt}, qv);
    const double lora_m = static_cast<double>(lora.trainable_params) / 1e6;
    std::vector<std::uint64_t> sizes;
    for (std::uint64_t s = 1; s <= 64; ++s) sizes.push_back(s);
    for (std::uint64_t s = 128; s <= 4096; s += 64) sizes.push_back(s);
    std::size_t grid_breaks = 0;
    for (std::uint64_t m : sizes)
        for (std::uint64_t n : sizes)
            if (cersa::break_even_rank(m, n) != oracle::scan_break_even(m, n)) ++grid_breaks;
    const bool ft_ok = std::abs(ft_mb - 4629.8) <= 0.01 * 4629.8;
    const bool lora_ok = std::abs(lora_m - 3.2) <= 0.02 * 3.2;
    return {ft_ok && lora_ok && grid_breaks == 0,
            "FT " + num(ft_mb) + " MB, LoRA trainable " + num(lora_m) + " M, break-even mismatches " +
                std::to_string(grid_breaks) + " of " + std::to_string(sizes.size() * sizes.size())};
}

// -- 7 ---------------------------------------------------------------------

Outcome ablations(double& seconds) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto tb = scenario::top_vs_bottom();
    const auto ma = scenario::matrix_vs_array();
    const auto lf = scenario::lossless_vs_full();
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool a = tb.median_first() <= tb.median_second();
    const bool b = ma.median_first() < ma.median_second();
    const bool c = std::abs(lf.median_first() - lf.median_second()) <= 0.1 * lf.median_second();
    return {a && b && c && seconds < 120.0,
            std::string("(a) top ") + num(tb.median_first()) + " vs bottom " + num(tb.median_second()) +
                (a ? " ok" : " WRONG") + "; (b) matrix " + num(ma.median_first()) + " vs array " +
                num(ma.median_second()) + (b ? " ok" : " WRONG") + "; (c) lossless " + num(lf.median_first()) +
                " vs full " + num(lf.median_second()) + (c ? " ok" : " WRONG")};
}

// -- 8 ---------------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism_and_formats() {
    namespace fs = std::filesystem;
    std::vector<std::string> problems;
    const fs::path root = fs::temp_directory_path() / "cersa_acceptance";
    fs::remove_all(root);

    // Identical configs, separate processes' worth of state: compare every artifact byte for byte.
    const nlohmann::json adapters = nlohmann::json::array(
        {{{"kind", "cersa"}, {"alpha", 0.95}, {"beta", 0.8}}, {{"kind", "lora"}, {"rank", 2}}, {{"kind", "full_ft"}}});
    for (bool compare : {false, true}) {
        std::array<fs::path, 2> dirs;
        for (int i = 0; i < 2; ++i) {
            dirs[i] = root / ((compare ? "compare" : "single") + std::to_string(i));
            const nlohmann::json doc{
                {"seed", 11},
                {"task", {{"kind", "blobs"}, {"in_dim", 10}, {"out_dim", 3}, {"hidden", {8}}, {"noise", 1.0}}},
                {"adapters", adapters},
                {"train", {{"learning_rate", 0.01}, {"steps", 120}, {"batch_size", 16}}},
                {"output", {{"dir", dirs[i].string()}}}};
            cersa::cli::write_text(dirs[i] / "config.json", doc.dump());
            std::ostringstream out, err;
            if (cersa::cli::cmd_train({dirs[i] / "config.json", compare, false, std::nullopt, std::nullopt,
                                       compare ? std::size_t{2} : std::size_t{1}},
                                      out, err) != 0)
                problems.push_back("train failed: " + err.str());
        }
        std::size_t files = 0;
        for (const auto& e : fs::directory_iterator(dirs[0])) {
            const std::string name = e.path().filename().string();
            if (name == "config.json") continue;
            ++files;
            if (slurp(e.path()) != slurp(dirs[1] / name)) problems.push_back(name + " differs between runs");
        }
        if (files < 3) problems.push_back("too few artifacts in " + dirs[0].string());
    }

    // Container round trip over random f64 and f32 tensors, compared as raw bits.
    std::mt19937_64 rng(808);
    for (int i = 0; i < 50; ++i) {
        cersa::Checkpoint ck;
        const Matrix m = oracle::gaussian(1 + i % 9, 1 + i % 7, rng, 1e3);
        ck.tensors.push_back(cersa::tensor_from_matrix("m", m));
        std::vector<double> f32;
        for (double v : m.values()) f32.push_back(static_cast<float>(v));
        ck.tensors.push_back(cersa::tensor_from_vector("f", f32, cersa::DType::F32));
        const auto back = cersa::deserialize(cersa::serialize(ck));
        for (std::size_t t = 0; t < ck.tensors.size(); ++t) {
            const auto& a = ck.tensors[t].values;
            const auto& b = back.tensors[t].values;
            if (a.size() != b.size() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) != 0)
                problems.push_back("round trip changed tensor " + ck.tensors[t].name);
        }
    }

    // Closed-form reports against fixed goldens, rendered twice.
    const std::vector<cersa::MatrixDims> d{{1024, 1024}};
    const std::vector<std::uint64_t> ranks{1, 64};
    const std::vector<cersa::LayerSpectrum> layers{{"q", {3, 2, 1}}};
    const std::vector<double> thresholds{0.6, 0.9};
    const std::pair<std::function<std::string()>, std::string> goldens[] = {
        {[&] {
             return cersa::memory_csv({cersa::memory_report({cersa::MemoryMethod::Cersa, {64}, {}, std::nullopt}, d)});
         },
         "method,frozen_params,trainable_params,weights_bytes,gradient_bytes,optimizer_bytes,total_bytes,weights_mb,"
         "gradient_mb,optimizer_mb,total_mb\n"
         "cersa,131072,4096,540672,16384,32768,589824,0.515625,0.015625,0.03125,0.5625\n"},
        {[&] { return cersa::compression_csv(cersa::compression_curve(1024, 1024, ranks)); },
         "alpha_or_rank,r,c\n1,1,0.001956939697265625\n64,64,0.140625\n"},
        {[&] { return cersa::layer_rank_csv(cersa::layer_rank_report(layers, thresholds)); },
         "layer_label,threshold,k,n_total\nq,0.59999999999999998,1,3\nq,0.90000000000000002,2,3\n"},
    };
    for (const auto& [render, golden] : goldens) {
        if (render() != golden || render() != golden) problems.push_back("golden mismatch: " + render());
    }

    std::string detail = problems.empty() ? "artifacts identical, 100 tensors bitwise, 3 goldens stable" : "";
    for (const auto& p : problems) detail += (detail.empty() ? "" : "; ") + p;
    return {problems.empty(), detail};
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        double budget_seconds; // 0 = no runtime bound
        std::function<Outcome(double&)> run;
    };
    auto timed = [](Outcome (*f)()) { return [f](double&) { return f(); }; };
    const Criterion criteria[] = {
        {"truncation error equals spectral tail", 10.0, timed(truncation_error)},
        {"change-of-basis core round trip", 5.0, timed(change_of_basis_round_trip)},
        {"rank selection matches prefix scan", 0.0, timed(rank_selection_oracle)},
        {"analytic gradients match finite differences", 0.0, timed(gradients)},
        {"retained span preserved during training", 0.0, timed(span_preservation)},
        {"memory model reference values", 0.0, timed(memory_model)},
        {"ablation directions", 120.0, ablations},
        {"determinism and formats", 0.0, timed(determinism_and_formats)},
    };
    int failed = 0;
    int index = 0;
    for (const auto& c : criteria) {
        ++index;
        const auto t0 = std::chrono::steady_clock::now();
        double inner = 0.0;
        Outcome o;
        try {
            o = c.run(inner);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_seconds > 0.0 && seconds >= c.budget_seconds) {
            o.pass = false;
            o.detail += "; runtime " + num(seconds) + " s exceeds " + num(c.budget_seconds) + " s";
        }
        std::printf("%s %d %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str(), seconds);
        if (!o.pass) ++failed;
    }
    std::printf("%d of %d criteria passed\n", index - failed, index);
    return failed == 0 ? 0 : 1;
}
