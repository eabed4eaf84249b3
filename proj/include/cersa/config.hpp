// Copyright 2026 The cersa-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cersa/adapters.hpp>
#include <cersa/error.hpp>
#include <cersa/train.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace cersa {

/// Declarative experiment: one task, one or more adapter kinds, one train config.
/// Every seed in the run is derived from `seed`.
struct ExperimentConfig {
    std::uint64_t seed = 0;
    SynthTask task;
    Activation activation = Activation::Tanh;
    std::vector<AdapterKind> adapters;
    TrainConfig train;
    std::filesystem::path output_dir;
};

/// Thrown with every schema violation found, one per line, each prefixed by its field path.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : Error(ErrorCode::Config, join(problems)), problems_(std::move(problems)) {}

    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out;
        for (const auto& s : v) {
            if (!out.empty()) out += '\n';
            out += s;
        }
        return out;
    }
    std::vector<std::string> problems_;
};

namespace detail {

class SchemaReader {
public:
    std::vector<std::string> problems;

    const nlohmann::json* object(const nlohmann::json& parent, const std::string& key, const std::string& path,
                                 bool required) {
        if (!parent.contains(key)) {
            if (required) problems.push_back(path + ": missing required field");
            return nullptr;
        }
        const auto& v = parent.at(key);
        if (!v.is_object()) {
            problems.push_back(path + ": expected an object");
            return nullptr;
        }
        return &v;
    }

    template <class T>
    void number(const nlohmann::json* parent, const std::string& key, const std::string& path, T& out, bool required,
                bool positive = false) {
        if (!parent) return;
        if (!parent->contains(key)) {
            if (required) problems.push_back(path + ": missing required field");
            return;
        }
        const auto& v = parent->at(key);
        if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer() || v.get<long long>() < 0) {
                problems.push_back(path + ": expected a non-negative integer");
                return;
            }
        } else {
            if (!v.is_number()) {
                problems.push_back(path + ": expected a number");
                return;
            }
        }
        out = v.get<T>();
        if (positive && !(out > T{0})) problems.push_back(path + ": must be positive");
        if constexpr (!std::is_integral_v<T>) {
            if (!positive && out < T{0}) problems.push_back(path + ": must be non-negative");
        }
    }

    bool string(const nlohmann::json* parent, const std::string& key, const std::string& path, std::string& out,
                bool required) {
        if (!parent) return false;
        if (!parent->contains(key)) {
            if (required) problems.push_back(path + ": missing required field");
            return false;
        }
        const auto& v = parent->at(key);
        if (!v.is_string()) {
            problems.push_back(path + ": expected a string");
            return false;
        }
        out = v.get<std::string>();
        return true;
    }
};

inline void read_adapter(SchemaReader& rd, const nlohmann::json& j, const std::string& path,
                         std::vector<AdapterKind>& out) {
    if (!j.is_object()) {
        rd.problems.push_back(path + ": expected an object");
        return;
    }
    std::string kind;
    if (!rd.string(&j, "kind", path + ".kind", kind, true)) return;
    AdapterKind k;
    if (kind == "full_ft") {
        k = AdapterKind::full_ft();
    } else if (kind == "lora" || kind == "svfit_array" || kind == "frozen_uv") {
        std::size_t rank = 0;
        rd.number(&j, "rank", path + ".rank", rank, true, true);
        k = kind == "lora" ? AdapterKind::lora(rank)
                           : kind == "svfit_array" ? AdapterKind::svfit_array(rank) : AdapterKind::frozen_uv(rank);
    } else if (kind == "cersa") {
        double alpha = 1.0;
        double beta = -1.0;
        rd.number(&j, "alpha", path + ".alpha", alpha, true, true);
        rd.number(&j, "beta", path + ".beta", beta, false, true);
        if (beta < 0.0) beta = alpha;
        if (!(alpha > 0.0 && alpha <= 1.0)) rd.problems.push_back(path + ".alpha: must lie in (0, 1]");
        if (!(beta > 0.0 && beta <= 1.0)) rd.problems.push_back(path + ".beta: must lie in (0, 1]");
        if (beta > alpha) rd.problems.push_back(path + ".beta: trainable threshold exceeds retention threshold");
        k = AdapterKind::cersa(alpha, beta);
        std::string split;
        if (rd.string(&j, "split", path + ".split", split, false)) {
            if (split != "top" && split != "bottom") {
                rd.problems.push_back(path + ".split: expected \"top\" or \"bottom\"");
            } else {
                std::size_t rank = 0;
                rd.number(&j, "rank", path + ".rank", rank, false);
                k = AdapterKind::cersa_split(alpha, split == "top", rank);
            }
        }
    } else {
        rd.problems.push_back(path + ".kind: unknown adapter kind '" + kind + "'");
        return;
    }
    out.push_back(k);
}

} // namespace detail

/// Validates the whole document before returning; all violations are reported together.
inline ExperimentConfig parse_experiment_config(const nlohmann::json& doc) {
    detail::SchemaReader rd;
    ExperimentConfig cfg;
    if (!doc.is_object()) throw ConfigError({"$: expected a JSON object"});

    rd.number(&doc, "seed", "seed", cfg.seed, false);

    const nlohmann::json* task = rd.object(doc, "task", "task", true);
    if (task) {
        std::string kind;
        if (rd.string(task, "kind", "task.kind", kind, true)) {
            if (auto k = parse_task_kind(kind)) {
                cfg.task.kind = *k;
            } else {
                rd.problems.push_back("task.kind: unknown task '" + kind + "'");
            }
        }
        rd.number(task, "in_dim", "task.in_dim", cfg.task.in_dim, true, true);
        rd.number(task, "out_dim", "task.out_dim", cfg.task.out_dim, true, true);
        rd.number(task, "train_size", "task.train_size", cfg.task.train_size, false, true);
        rd.number(task, "test_size", "task.test_size", cfg.task.test_size, false, true);
        rd.number(task, "noise", "task.noise", cfg.task.noise, false);
        rd.number(task, "spectrum_decay", "task.spectrum_decay", cfg.task.spectrum_decay, false);
        rd.number(task, "perturbation", "task.perturbation", cfg.task.perturbation, false);
        rd.number(task, "retention", "task.retention", cfg.task.retention, false, true);
        rd.number(task, "center_spread", "task.center_spread", cfg.task.center_spread, false, true);
        if (cfg.task.retention > 1.0) rd.problems.push_back("task.retention: must lie in (0, 1]");
        if (task->contains("hidden")) {
            const auto& h = task->at("hidden");
            if (!h.is_array()) {
                rd.problems.push_back("task.hidden: expected an array of widths");
            } else {
                for (std::size_t i = 0; i < h.size(); ++i) {
                    if (!h[i].is_number_integer() || h[i].get<long long>() <= 0) {
                        rd.problems.push_back("task.hidden[" + std::to_string(i) + "]: expected a positive integer");
                    } else {
                        cfg.task.hidden.push_back(h[i].get<std::size_t>());
                    }
                }
            }
        }
    }

    if (const nlohmann::json* model = rd.object(doc, "model", "model", false)) {
        std::string act;
        if (rd.string(model, "activation", "model.activation", act, false)) {
            if (act == "tanh") {
                cfg.activation = Activation::Tanh;
            } else if (act == "relu") {
                cfg.activation = Activation::Relu;
            } else {
                rd.problems.push_back("model.activation: expected \"tanh\" or \"relu\"");
            }
        }
    }

    if (!doc.contains("adapters")) {
        rd.problems.push_back("adapters: missing required field");
    } else if (!doc.at("adapters").is_array() || doc.at("adapters").empty()) {
        rd.problems.push_back("adapters: expected a non-empty array");
    } else {
        const auto& arr = doc.at("adapters");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            detail::read_adapter(rd, arr[i], "adapters[" + std::to_string(i) + "]", cfg.adapters);
        }
    }

    const nlohmann::json* train = rd.object(doc, "train", "train", true);
    rd.number(train, "learning_rate", "train.learning_rate", cfg.train.learning_rate, true);
    rd.number(train, "weight_decay", "train.weight_decay", cfg.train.weight_decay, false);
    rd.number(train, "steps", "train.steps", cfg.train.steps, true, true);
    rd.number(train, "batch_size", "train.batch_size", cfg.train.batch_size, true, true);
    rd.number(train, "log_every", "train.log_every", cfg.train.log_every, false);

    const nlohmann::json* output = rd.object(doc, "output", "output", true);
    std::string dir;
    if (rd.string(output, "dir", "output.dir", dir, true)) cfg.output_dir = dir;

    if (!rd.problems.empty()) throw ConfigError(std::move(rd.problems));
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot read config " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError({"$: malformed JSON at byte " + std::to_string(e.byte)});
    }
    return parse_experiment_config(doc);
}

} // namespace cersa
