// Copyright 2026 The cersa-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

std::size_t default_threads() {
    if (const char* env = std::getenv("CERSA_FORGE_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
        std::cerr << "warning: ignoring CERSA_FORGE_THREADS='" << env << "'\n";
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    using namespace cersa::cli;
    CLI::App app{"cersa-forge: spectral factorization and adapter experiments"};
    app.require_subcommand(1);
    std::size_t threads = default_threads();
    app.add_option("--threads", threads, "Worker threads for independent runs (env CERSA_FORGE_THREADS)")
        ->check(CLI::PositiveNumber);

    AnalyzeOptions an;
    auto* analyze = app.add_subcommand("analyze", "Per-tensor rank needed to reach each energy threshold");
    analyze->add_option("checkpoint", an.checkpoint, "Weight container")->required()->check(CLI::ExistingFile);
    analyze->add_option("--thresholds", an.thresholds, "Energy thresholds in (0, 1]")->delimiter(',');
    analyze->add_option("--out", an.out, "Output directory");

    FactorizeOptions fa;
    double fa_beta = -1.0;
    auto* factorize = app.add_subcommand("factorize", "Split every 2-D tensor into frozen and trainable parts");
    factorize->add_option("input", fa.input, "Weight container")->required();
    factorize->add_option("--alpha", fa.alpha, "Retention threshold")->required();
    factorize->add_option("--beta", fa_beta, "Trainable threshold (default: alpha)");
    factorize->add_option("--out", fa.output, "Output container")->required();

    TrainOptions tr;
    std::uint64_t tr_seed = 0;
    std::string tr_out;
    auto* train = app.add_subcommand("train", "Train adapters on a synthetic task");
    train->add_option("config", tr.config, "Experiment JSON")->required();
    train->add_flag("--compare", tr.compare, "Run every adapter in the config and rank them");
    train->add_flag("--timing", tr.timing, "Record wall-clock timings");
    auto* seed_opt = train->add_option("--seed", tr_seed, "Override the experiment seed");
    auto* out_opt = train->add_option("--out", tr_out, "Override the output directory");

    SimilarityOptions si;
    auto* similarity = app.add_subcommand("similarity", "Singular-subspace similarity of two containers");
    similarity->add_option("before", si.a, "First container")->required();
    similarity->add_option("after", si.b, "Second container")->required();
    similarity->add_option("--retention", si.retention, "Energy threshold that fixes k");
    similarity->add_flag("--grid", si.grid, "Also write psi(i, j) grids and heat maps");
    similarity->add_option("--grid-size", si.grid_size, "Grid extent (default: k)");
    similarity->add_option("--out", si.out, "Output directory");

    MemoryOptions me;
    double me_alpha = -1.0, me_beta = -1.0;
    std::uint64_t me_params = 0, me_svft_e = 0;
    std::string me_ckpt;
    auto* memory = app.add_subcommand("memory", "Analytic training-memory estimates");
    memory->add_option("--methods", me.methods, "ft,lora,svfit,svft,cersa")->delimiter(',');
    memory->add_option("--dims", me.dims, "Matrix shapes, MxN or MxN*count")->delimiter(',');
    auto* params_opt = memory->add_option("--params", me_params, "Total parameters for full fine-tuning");
    memory->add_option("--rank,--ranks", me.ranks, "Uniform rank, or one CERSA rank per matrix")->delimiter(',');
    memory->add_option("--beta-ranks", me.beta_ranks, "CERSA trainable ranks")->delimiter(',');
    auto* svft_opt = memory->add_option("--svft-e", me_svft_e, "SVFT off-diagonal count");
    memory->add_option("--checkpoint", me_ckpt, "Derive CERSA ranks from a container");
    memory->add_option("--alpha", me_alpha, "Retention threshold with --checkpoint");
    memory->add_option("--beta", me_beta, "Trainable threshold with --checkpoint");
    memory->add_flag("--curve", me.curve, "Write the compression curve");
    memory->add_option("--curve-alphas", me.curve_alphas, "Thresholds for the curve")->delimiter(',');
    memory->add_option("--out", me.out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*analyze) return cmd_analyze(an, std::cout, std::cerr);
        if (*factorize) {
            if (fa_beta >= 0.0) fa.beta = fa_beta;
            return cmd_factorize(fa, std::cout, std::cerr);
        }
        if (*train) {
            tr.threads = threads;
            if (seed_opt->count() > 0) tr.seed = tr_seed;
            if (out_opt->count() > 0) tr.out = tr_out;
            return cmd_train(tr, std::cout, std::cerr);
        }
        if (*similarity) return cmd_similarity(si, std::cout, std::cerr);
        if (*memory) {
            if (params_opt->count() > 0) me.params = me_params;
            if (svft_opt->count() > 0) me.svft_e = me_svft_e;
            if (!me_ckpt.empty()) me.checkpoint = me_ckpt;
            if (me_alpha >= 0.0) me.alpha = me_alpha;
            if (me_beta >= 0.0) me.beta = me_beta;
            return cmd_memory(me, std::cout, std::cerr);
        }
    } catch (const cersa::Error& e) {
        return report_error(std::cerr, e);
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
