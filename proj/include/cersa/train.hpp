// Copyright 2026 The cersa-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cersa/adapters.hpp>
#include <cersa/matrix.hpp>
#include <cersa/spectrum.hpp>
#include <cersa/svd.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace cersa {

// ---------------------------------------------------------------------------
// Synthetic tasks

enum class TaskKind { Blobs, LowRankTeacher, RotatedTeacher };

inline std::string task_kind_name(TaskKind k) {
    switch (k) {
    case TaskKind::Blobs: return "blobs-classification";
    case TaskKind::LowRankTeacher: return "lowrank-teacher-regression";
    case TaskKind::RotatedTeacher: return "rotated-teacher-regression";
    }
    return "unknown";
}

inline std::optional<TaskKind> parse_task_kind(const std::string& s) {
    if (s == "blobs-classification" || s == "blobs") return TaskKind::Blobs;
    if (s == "lowrank-teacher-regression" || s == "lowrank-teacher") return TaskKind::LowRankTeacher;
    if (s == "rotated-teacher-regression" || s == "rotated-teacher") return TaskKind::RotatedTeacher;
    return std::nullopt;
}

/// Desk-scale stand-in for a downstream dataset plus the "pretrained" weights it
/// is fine-tuned from.
///
/// Base weights have singular values exp(-spectrum_decay * i). Teacher tasks use a
/// single out_dim x in_dim layer whose principal subspace (rank chosen by
/// `retention`) carries the target:
///   lowrank-teacher  W* = U_p (diag(s) + perturbation * D^1/2 G D^1/2) V_p^T
///   rotated-teacher  W* = U_p R diag(s) V_p^T, R a rotation of size `perturbation`
/// Blobs draws `out_dim` Gaussian class centers with `center_spread` and unit noise
/// scaled by `noise`; its model is in_dim -> hidden... -> out_dim.
struct SynthTask {
    TaskKind kind = TaskKind::LowRankTeacher;
    std::size_t in_dim = 16;
    std::size_t out_dim = 12;
    std::vector<std::size_t> hidden;
    std::size_t train_size = 256;
    std::size_t test_size = 256;
    double noise = 0.0;
    double spectrum_decay = 0.35;
    double perturbation = 0.3;
    double retention = 0.95;
    double center_spread = 2.0;
    std::uint64_t seed = 0;
};

struct Dataset {
    Matrix x;
    Matrix y;                        // targets, or one-hot rows for classification
    std::vector<std::size_t> labels; // classification only
};

struct TaskData {
    Dataset train;
    Dataset test;
    std::vector<Matrix> base_weights;
    std::vector<std::vector<double>> base_biases;
    std::optional<Matrix> teacher;
};

/// splitmix64 step, used to derive independent stream seeds from one run seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Random out x in matrix with singular values exp(-decay * i).
template <class Rng>
Matrix make_base_weight(std::size_t out, std::size_t in, double decay, Rng& rng) {
    const std::size_t p = std::min(out, in);
    Matrix left = random_orthonormal(out, p, rng);
    const Matrix right = random_orthonormal(in, p, rng);
    for (std::size_t i = 0; i < out; ++i)
        for (std::size_t j = 0; j < p; ++j) left(i, j) *= std::exp(-decay * static_cast<double>(j));
    return matmul_nt(left, right);
}

/// Rotation close to the identity: Gram-Schmidt of I + angle * G.
template <class Rng>
Matrix small_rotation(std::size_t k, double angle, Rng& rng) {
    if (angle == 0.0) return Matrix::identity(k);
    return orthonormalize_columns(Matrix::identity(k) + angle * random_gaussian(k, k, rng));
}

inline void check_task(const SynthTask& t) {
    if (t.in_dim == 0 || t.out_dim == 0 || t.train_size == 0 || t.test_size == 0) {
        throw Error(ErrorCode::InvalidArgument, "gen_task: dimensions and sizes must be positive");
    }
    for (std::size_t h : t.hidden) {
        if (h == 0) throw Error(ErrorCode::InvalidArgument, "gen_task: hidden widths must be positive");
    }
    if (t.kind == TaskKind::Blobs && t.out_dim < 2) {
        throw Error(ErrorCode::InvalidArgument, "gen_task: classification needs at least two classes");
    }
    if (t.noise < 0.0 || t.spectrum_decay < 0.0 || t.perturbation < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "gen_task: noise, decay and perturbation must be non-negative");
    }
    check_threshold(t.retention, "task retention");
}

inline TaskData gen_task(const SynthTask& task) {
    check_task(task);
    std::mt19937_64 weight_rng(derive_seed(task.seed, 1));
    std::mt19937_64 data_rng(derive_seed(task.seed, 2));
    const std::size_t total = task.train_size + task.test_size;
    TaskData out;
    Dataset all;

    if (task.kind == TaskKind::Blobs) {
        std::vector<std::size_t> widths{task.in_dim};
        widths.insert(widths.end(), task.hidden.begin(), task.hidden.end());
        widths.push_back(task.out_dim);
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            out.base_weights.push_back(make_base_weight(widths[l + 1], widths[l], task.spectrum_decay, weight_rng));
            out.base_biases.emplace_back(widths[l + 1], 0.0);
        }
        const Matrix centers = random_gaussian(task.out_dim, task.in_dim, data_rng, task.center_spread);
        std::uniform_int_distribution<std::size_t> pick(0, task.out_dim - 1);
        std::normal_distribution<double> gauss(0.0, 1.0);
        all.x = Matrix(total, task.in_dim);
        all.y = Matrix(total, task.out_dim);
        for (std::size_t s = 0; s < total; ++s) {
            const std::size_t c = pick(data_rng);
            all.labels.push_back(c);
            all.y(s, c) = 1.0;
            for (std::size_t j = 0; j < task.in_dim; ++j) all.x(s, j) = centers(c, j) + task.noise * gauss(data_rng);
        }
    } else {
        const Matrix base = make_base_weight(task.out_dim, task.in_dim, task.spectrum_decay, weight_rng);
        const SvdFactors f = svd(base);
        const std::size_t k = select_rank(energy_profile(f.sigma), task.retention);
        const SvdFactors top = truncate(f, k);
        Matrix core(k, k);
        if (task.kind == TaskKind::LowRankTeacher) {
            const Matrix g = random_gaussian(k, k, weight_rng);
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = 0; j < k; ++j)
                    core(i, j) = (i == j ? top.sigma[i] : 0.0) +
                                 task.perturbation * std::sqrt(top.sigma[i] * top.sigma[j]) * g(i, j);
        } else {
            core = small_rotation(k, task.perturbation, weight_rng);
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = 0; j < k; ++j) core(i, j) *= top.sigma[j];
        }
        Matrix teacher = matmul(matmul(top.u, core), top.vt);
        all.x = random_gaussian(total, task.in_dim, data_rng);
        all.y = matmul_nt(all.x, teacher);
        if (task.noise > 0.0) all.y = all.y + random_gaussian(total, task.out_dim, data_rng, task.noise);
        out.base_weights.push_back(base);
        out.base_biases.emplace_back(task.out_dim, 0.0);
        out.teacher = std::move(teacher);
    }

    out.train.x = block(all.x, 0, 0, task.train_size, all.x.cols());
    out.train.y = block(all.y, 0, 0, task.train_size, all.y.cols());
    out.test.x = block(all.x, task.train_size, 0, task.test_size, all.x.cols());
    out.test.y = block(all.y, task.train_size, 0, task.test_size, all.y.cols());
    if (!all.labels.empty()) {
        out.train.labels.assign(all.labels.begin(), all.labels.begin() + static_cast<std::ptrdiff_t>(task.train_size));
        out.test.labels.assign(all.labels.begin() + static_cast<std::ptrdiff_t>(task.train_size), all.labels.end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Model

enum class Activation { Tanh, Relu };
enum class Head { SoftmaxCrossEntropy, MeanSquaredError };

inline std::string activation_name(Activation a) { return a == Activation::Tanh ? "tanh" : "relu"; }
inline std::string head_name(Head h) { return h == Head::SoftmaxCrossEntropy ? "softmax-cross-entropy" : "mean-squared-error"; }

/// Layer shapes as (in, out) pairs; `kinds` has one entry per layer.
struct ModelSpec {
    std::vector<std::pair<std::size_t, std::size_t>> dims;
    Activation activation = Activation::Tanh;
    Head head = Head::MeanSquaredError;
    std::vector<AdapterKind> kinds;

    void validate() const {
        if (dims.empty()) throw Error(ErrorCode::InvalidArgument, "model needs at least one layer");
        if (kinds.size() != dims.size()) {
            throw Error(ErrorCode::DimensionMismatch, "model has " + std::to_string(dims.size()) + " layers but " +
                                                          std::to_string(kinds.size()) + " adapter kinds");
        }
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            if (dims[l].second != dims[l + 1].first) {
                throw Error(ErrorCode::DimensionMismatch, "layer " + std::to_string(l) + " output " +
                                                              std::to_string(dims[l].second) +
                                                              " does not feed layer input " +
                                                              std::to_string(dims[l + 1].first));
            }
        }
    }
};

/// Spec matching the task's base model, with one adapter kind on every layer.
inline ModelSpec model_spec_for(const TaskData& data, const AdapterKind& kind,
                                Activation activation = Activation::Tanh) {
    ModelSpec spec;
    for (const Matrix& w : data.base_weights) spec.dims.emplace_back(w.cols(), w.rows());
    spec.activation = activation;
    spec.head = data.train.labels.empty() ? Head::MeanSquaredError : Head::SoftmaxCrossEntropy;
    spec.kinds.assign(spec.dims.size(), kind);
    return spec;
}

struct Model {
    std::vector<AdapterLayer> layers;
    Activation activation = Activation::Tanh;
    Head head = Head::MeanSquaredError;
};

inline Model build_model(const ModelSpec& spec, const TaskData& data, std::uint64_t seed) {
    spec.validate();
    if (data.base_weights.size() != spec.dims.size()) {
        throw Error(ErrorCode::DimensionMismatch, "task provides " + std::to_string(data.base_weights.size()) +
                                                      " base layers, model has " + std::to_string(spec.dims.size()));
    }
    Model model;
    model.activation = spec.activation;
    model.head = spec.head;
    for (std::size_t l = 0; l < spec.dims.size(); ++l) {
        const Matrix& w = data.base_weights[l];
        if (w.cols() != spec.dims[l].first || w.rows() != spec.dims[l].second) {
            throw Error(ErrorCode::DimensionMismatch, "base weight " + std::to_string(l) + " is " + w.shape_string());
        }
        model.layers.push_back(build(spec.kinds[l], w, data.base_biases[l], derive_seed(seed, 100 + l)));
    }
    return model;
}

struct ForwardCache {
    std::vector<Matrix> inputs; // input to each layer
    std::vector<Matrix> pre;    // pre-activation output of each layer
};

inline double activate(Activation a, double v) { return a == Activation::Tanh ? std::tanh(v) : std::max(v, 0.0); }
inline double activate_slope(Activation a, double pre) {
    if (a == Activation::Tanh) {
        const double t = std::tanh(pre);
        return 1.0 - t * t;
    }
    return pre > 0.0 ? 1.0 : 0.0;
}

inline Matrix model_forward(const Model& model, const Matrix& x, ForwardCache* cache = nullptr) {
    Matrix h = x;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        Matrix z = forward(model.layers[l], h);
        if (cache) {
            cache->inputs.push_back(h);
            cache->pre.push_back(z);
        }
        if (l + 1 < model.layers.size()) {
            for (double& v : z.values()) v = activate(model.activation, v);
        }
        h = std::move(z);
    }
    return h;
}

/// Loss value and d loss / d output.
struct LossEval {
    double loss = 0.0;
    Matrix grad;
};

inline LossEval evaluate_loss(Head head, const Matrix& out, const Dataset& batch, bool want_grad) {
    LossEval ev;
    const double b = static_cast<double>(out.rows());
    if (want_grad) ev.grad = Matrix(out.rows(), out.cols());
    if (head == Head::MeanSquaredError) {
        const double denom = b * static_cast<double>(out.cols());
        for (std::size_t i = 0; i < out.rows(); ++i)
            for (std::size_t j = 0; j < out.cols(); ++j) {
                const double d = out(i, j) - batch.y(i, j);
                ev.loss += d * d;
                if (want_grad) ev.grad(i, j) = 2.0 * d / denom;
            }
        ev.loss /= denom;
        return ev;
    }
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto row = out.row(i);
        const double mx = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (double v : row) z += std::exp(v - mx);
        const std::size_t label = batch.labels[i];
        ev.loss += -(row[label] - mx - std::log(z));
        if (want_grad) {
            for (std::size_t j = 0; j < row.size(); ++j) {
                ev.grad(i, j) = (std::exp(row[j] - mx) / z - (j == label ? 1.0 : 0.0)) / b;
            }
        }
    }
    ev.loss /= b;
    return ev;
}

struct Metrics {
    double loss = 0.0;
    std::optional<double> accuracy;
};

inline Metrics evaluate(const Model& model, const Dataset& data) {
    const Matrix out = model_forward(model, data.x);
    Metrics m;
    m.loss = evaluate_loss(model.head, out, data, false).loss;
    if (model.head == Head::SoftmaxCrossEntropy) {
        std::size_t hits = 0;
        for (std::size_t i = 0; i < out.rows(); ++i) {
            auto row = out.row(i);
            const auto arg = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
            if (arg == data.labels[i]) ++hits;
        }
        m.accuracy = static_cast<double>(hits) / static_cast<double>(out.rows());
    }
    return m;
}

/// Per-layer gradients for one batch, aligned with trainable_params of each layer.
inline std::pair<double, std::vector<std::vector<Matrix>>> model_gradients(const Model& model, const Dataset& batch) {
    ForwardCache cache;
    const Matrix out = model_forward(model, batch.x, &cache);
    LossEval ev = evaluate_loss(model.head, out, batch, true);
    std::vector<std::vector<Matrix>> grads(model.layers.size());
    Matrix upstream = std::move(ev.grad);
    for (std::size_t l = model.layers.size(); l-- > 0;) {
        if (l + 1 < model.layers.size()) {
            const Matrix& pre = cache.pre[l];
            for (std::size_t i = 0; i < upstream.rows(); ++i)
                for (std::size_t j = 0; j < upstream.cols(); ++j)
                    upstream(i, j) *= activate_slope(model.activation, pre(i, j));
        }
        LayerGrads lg = grad(model.layers[l], cache.inputs[l], upstream);
        grads[l] = std::move(lg.params);
        upstream = std::move(lg.input);
    }
    return {ev.loss, std::move(grads)};
}

// ---------------------------------------------------------------------------
// Optimizer

struct TrainConfig {
    double learning_rate = 1e-2;
    double weight_decay = 0.0;
    std::size_t steps = 200;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t log_every = 0; // observer cadence; 0 = only at the end

    void validate() const {
        if (!(learning_rate >= 0.0) || !(weight_decay >= 0.0) || steps < 1 || batch_size < 1) {
            throw Error(ErrorCode::InvalidArgument,
                        "train config: learning rate and weight decay must be non-negative, steps and batch size positive");
        }
    }
};

/// Adam with decoupled weight decay over a fixed list of parameter tensors.
class AdamW {
public:
    explicit AdamW(const TrainConfig& cfg) : cfg_(cfg) {}

    void step(std::vector<ParamView>& params, const std::vector<const Matrix*>& grads) {
        if (m_.empty()) {
            for (const auto& p : params) {
                m_.emplace_back(p.values.size(), 0.0);
                v_.emplace_back(p.values.size(), 0.0);
            }
        }
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t k = 0; k < params.size(); ++k) {
            auto values = params[k].values;
            auto g = grads[k]->values();
            auto& m = m_[k];
            auto& v = v_[k];
            for (std::size_t i = 0; i < values.size(); ++i) {
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
                const double mhat = m[i] / c1;
                const double vhat = v[i] / c2;
                values[i] -= cfg_.learning_rate * cfg_.weight_decay * values[i];
                values[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
            }
        }
    }

private:
    TrainConfig cfg_;
    std::size_t t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

// ---------------------------------------------------------------------------
// Runs

struct RunRecord {
    std::string label;
    std::vector<double> loss; // full training-set loss, index 0 before the first step
    double final_train_loss = 0.0;
    double final_test_loss = 0.0;
    std::optional<double> final_test_accuracy;
    std::size_t trainable_count = 0;
    double wall_seconds = 0.0;
    std::vector<double> step_seconds;
    std::size_t threads = 1;
    TrainConfig config;
    std::string error; // non-empty when the run failed inside compare_methods
};

using StepObserver = std::function<void(std::size_t step, const Model& model)>;

inline Dataset gather_rows(const Dataset& data, std::span<const std::size_t> idx) {
    Dataset b;
    b.x = Matrix(idx.size(), data.x.cols());
    b.y = Matrix(idx.size(), data.y.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        std::copy_n(data.x.row(idx[r]).begin(), data.x.cols(), b.x.row(r).begin());
        std::copy_n(data.y.row(idx[r]).begin(), data.y.cols(), b.y.row(r).begin());
        if (!data.labels.empty()) b.labels.push_back(data.labels[idx[r]]);
    }
    return b;
}

/// Deterministic AdamW fine-tuning of the trainable tensors of `model`.
/// Batches walk a per-epoch shuffle derived from cfg.seed; a partial tail batch
/// is skipped. The observer sees the model every cfg.log_every steps and after
/// the last step.
inline RunRecord train_run(Model& model, const TrainConfig& cfg, const TaskData& data,
                           const StepObserver& observer = {}) {
    cfg.validate();
    const std::size_t n = data.train.x.rows();
    const std::size_t batch = std::min(cfg.batch_size, n);
    RunRecord rec;
    rec.config = cfg;
    for (const auto& layer : model.layers) rec.trainable_count += trainable_count(layer);
    if (!model.layers.empty()) rec.label = model.layers.front().kind.label();

    std::vector<ParamView> params;
    for (auto& layer : model.layers) {
        for (auto& p : trainable_params(layer)) params.push_back(p);
    }
    AdamW opt(cfg);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t cursor = n;
    std::uint64_t epoch = 0;

    auto check = [](double loss, std::size_t step) {
        if (!std::isfinite(loss)) {
            throw Error(ErrorCode::Divergence, "training diverged at step " + std::to_string(step));
        }
    };
    rec.loss.push_back(evaluate(model, data.train).loss);
    check(rec.loss.back(), 0);

    const auto run_start = std::chrono::steady_clock::now();
    for (std::size_t step = 1; step <= cfg.steps; ++step) {
        const auto step_start = std::chrono::steady_clock::now();
        if (cursor + batch > n) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 1000 + epoch++));
            std::shuffle(order.begin(), order.end(), shuffle_rng);
            cursor = 0;
        }
        const Dataset mb = gather_rows(data.train, std::span<const std::size_t>(order).subspan(cursor, batch));
        cursor += batch;

        auto [batch_loss, grads] = model_gradients(model, mb);
        check(batch_loss, step);
        std::vector<const Matrix*> flat;
        for (const auto& layer_grads : grads)
            for (const auto& g : layer_grads) flat.push_back(&g);
        opt.step(params, flat);

        rec.loss.push_back(evaluate(model, data.train).loss);
        check(rec.loss.back(), step);
        rec.step_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - step_start).count());
        if (observer && ((cfg.log_every > 0 && step % cfg.log_every == 0) || step == cfg.steps)) {
            observer(step, model);
        }
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - run_start).count();
    rec.final_train_loss = rec.loss.back();
    const Metrics test = evaluate(model, data.test);
    rec.final_test_loss = test.loss;
    rec.final_test_accuracy = test.accuracy;
    return rec;
}

struct CompareTable {
    std::vector<RunRecord> runs;
    std::vector<std::size_t> ranking; // successful run indices, best final test loss first
};

/// One run per adapter kind on shared data and seeds. Failed runs keep their
/// error text and are left out of the ranking. Runs are spread over `threads`
/// workers; each run is independent so results do not depend on the count.
inline CompareTable compare_methods(const std::vector<AdapterKind>& kinds, const TaskData& data,
                                    const TrainConfig& cfg, Activation activation = Activation::Tanh,
                                    std::size_t threads = 1) {
    CompareTable table;
    table.runs.resize(kinds.size());
    auto run_one = [&](std::size_t i) {
        RunRecord& rec = table.runs[i];
        try {
            Model model = build_model(model_spec_for(data, kinds[i], activation), data, cfg.seed);
            rec = train_run(model, cfg, data);
        } catch (const std::exception& e) {
            rec = RunRecord{};
            rec.config = cfg;
            rec.error = e.what();
        }
        rec.label = kinds[i].label();
        rec.threads = std::max<std::size_t>(threads, 1);
    };
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(kinds.size(), 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < kinds.size(); ++i) run_one(i);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < kinds.size(); i += workers) run_one(i);
            });
        }
        for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < table.runs.size(); ++i) {
        if (table.runs[i].error.empty()) table.ranking.push_back(i);
    }
    std::stable_sort(table.ranking.begin(), table.ranking.end(), [&](std::size_t a, std::size_t b) {
        const auto& ra = table.runs[a];
        const auto& rb = table.runs[b];
        if (ra.final_test_loss != rb.final_test_loss) return ra.final_test_loss < rb.final_test_loss;
        return ra.trainable_count < rb.trainable_count;
    });
    return table;
}

/// Mean relative accuracy drop, (baseline - post) / baseline averaged over tasks.
inline double forgetting_rate(std::span<const double> baseline_acc, std::span<const double> post_acc) {
    if (baseline_acc.size() != post_acc.size() || baseline_acc.empty()) {
        throw Error(ErrorCode::DimensionMismatch, "forgetting_rate: " + std::to_string(baseline_acc.size()) +
                                                      " baseline vs " + std::to_string(post_acc.size()) +
                                                      " post accuracies");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < baseline_acc.size(); ++i) {
        if (!(baseline_acc[i] > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "forgetting_rate: baseline accuracy must be positive");
        }
        acc += (baseline_acc[i] - post_acc[i]) / baseline_acc[i];
    }
    return acc / static_cast<double>(baseline_acc.size());
}

/// FNV-1a over the bytes of every frozen tensor, for immutability checks.
inline std::uint64_t frozen_digest(const Model& model) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& layer : model.layers) {
        for (const auto& p : frozen_params(layer)) {
            const auto* bytes = reinterpret_cast<const unsigned char*>(p.values.data());
            for (std::size_t i = 0; i < p.values.size_bytes(); ++i) {
                h ^= bytes[i];
                h *= 1099511628211ULL;
            }
        }
    }
    return h;
}

} // namespace cersa
