#include "cloudsched/n2tc.hpp"

#include "cloudsched/error.hpp"
#include "cloudsched/scg.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace cloudsched::n2tc {

using nlohmann::json;

void ParamWeights::validate() const
{
    if (!(et >= 0.0 && c >= 0.0 && se >= 0.0))
        throw InvalidArgument("parameter weights must be >= 0");
    if (!(et + c + se > 0.0))
        throw InvalidArgument("parameter weights must not all be zero");
}

namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

void require_normalized(const Task& t)
{
    if (!in_unit(t.exec_time) || !in_unit(t.cost) || !in_unit(t.sys_eff))
        throw InvalidArgument("task " + std::to_string(t.id) +
                              " is not normalized (attributes outside [0,1])");
}

} // namespace

double task_weight(const Task& t, const ParamWeights& wp)
{
    wp.validate();
    require_normalized(t);
    return wp.et * t.exec_time + wp.c * t.cost + wp.se * t.sys_eff;
}

Centroids kmeans_centroids(std::span<const double> weights, std::uint64_t seed, int iterations)
{
    if (weights.empty())
        throw InvalidArgument("kmeans_centroids: no weights");

    std::vector<double> distinct(weights.begin(), weights.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    const double lo = distinct.front();
    const double hi = distinct.back();
    auto spread = [&]() -> Centroids {
        if (hi > lo)
            return {hi, 0.5 * (hi + lo), lo};
        return {lo + 0.5, lo, lo - 0.5};
    };
    if (distinct.size() < 3)
        return spread();

    std::mt19937_64 rng(seed);
    std::vector<double> init;
    std::sample(distinct.begin(), distinct.end(), std::back_inserter(init), 3, rng);
    std::array<double, 3> c{init[0], init[1], init[2]};
    std::sort(c.begin(), c.end());

    for (int it = 0; it < iterations; ++it) {
        std::array<double, 3> sum{0, 0, 0};
        std::array<std::size_t, 3> count{0, 0, 0};
        for (double w : weights) {
            std::size_t best = 0;
            for (std::size_t k = 1; k < 3; ++k) {
                if (std::abs(w - c[k]) < std::abs(w - c[best]))
                    best = k;
            }
            sum[best] += w;
            ++count[best];
        }
        bool moved = false;
        for (std::size_t k = 0; k < 3; ++k) {
            if (count[k] == 0)
                continue;
            const double next = sum[k] / static_cast<double>(count[k]);
            moved = moved || next != c[k];
            c[k] = next;
        }
        if (!moved)
            break;
    }
    std::sort(c.begin(), c.end(), std::greater<>());
    if (!(c[0] > c[1] && c[1] > c[2]))
        return spread();
    return {c[0], c[1], c[2]};
}

double default_epsilon(const Centroids& cw, double fraction)
{
    return fraction * (cw[0] - cw[2]) / 2.0;
}

namespace {
constexpr double kTieTolerance = 1e-12;
}

std::vector<TaskClassAssignment> assign_classes(std::span<const WeightedTask> weights,
                                                const Centroids& cw, double epsilon)
{
    if (!(cw[0] > cw[1] && cw[1] > cw[2]))
        throw InvalidArgument("assign_classes: centroids must be strictly descending");

    std::vector<TaskClassAssignment> out;
    out.reserve(weights.size());
    for (const auto& w : weights) {
        int best = 0;
        double best_d = std::abs(w.weight - cw[0]);
        for (int r = 1; r < 3; ++r) {
            const double d = std::abs(w.weight - cw[r]);
            // decimal midpoints rarely tie exactly in binary; absorb the rounding
            if (d < best_d - kTieTolerance) {
                best = r;
                best_d = d;
            }
        }
        out.push_back({w.task_id, best + 1, w.weight, best_d, !(best_d < epsilon)});
    }
    return out;
}

double sigmoid(double net)
{
    if (net >= 0.0)
        return 1.0 / (1.0 + std::exp(-net));
    const double e = std::exp(net);
    return e / (1.0 + e);
}

std::string to_string(StopReason r)
{
    switch (r) {
    case StopReason::None: return "none";
    case StopReason::MaxEpochs: return "max epochs";
    case StopReason::WallTime: return "wall time";
    case StopReason::PerformanceGoal: return "performance goal";
    case StopReason::MinGradient: return "minimum gradient";
    case StopReason::ValidationWorsened: return "validation worsened";
    }
    return "none";
}

StopReason stop_reason_from_string(std::string_view s)
{
    for (auto r : {StopReason::None, StopReason::MaxEpochs, StopReason::WallTime,
                   StopReason::PerformanceGoal, StopReason::MinGradient,
                   StopReason::ValidationWorsened}) {
        if (to_string(r) == s)
            return r;
    }
    throw ParseError("unknown stop reason '" + std::string(s) + "'");
}

namespace {

void check_sizes(std::span<const int> sizes)
{
    if (sizes.size() < 2)
        throw InvalidArgument("a network needs at least an input and an output layer");
    for (int s : sizes) {
        if (s < 1)
            throw InvalidArgument("layer sizes must be >= 1");
    }
}

} // namespace

NeuralModel NeuralModel::zeros(std::span<const int> sizes)
{
    check_sizes(sizes);
    NeuralModel m;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        Layer layer;
        layer.inputs = sizes[l];
        layer.outputs = sizes[l + 1];
        layer.weights.assign(static_cast<std::size_t>(layer.inputs * layer.outputs), 0.0);
        layer.bias.assign(static_cast<std::size_t>(layer.outputs), 0.0);
        m.layers.push_back(std::move(layer));
    }
    return m;
}

NeuralModel NeuralModel::create(std::span<const int> sizes, std::uint64_t seed)
{
    auto m = zeros(sizes);
    std::mt19937_64 rng(seed);
    for (auto& layer : m.layers) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.inputs));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (auto& w : layer.weights)
            w = dist(rng);
        for (auto& b : layer.bias)
            b = dist(rng);
    }
    return m;
}

std::vector<int> NeuralModel::sizes() const
{
    std::vector<int> s;
    if (layers.empty())
        return s;
    s.push_back(layers.front().inputs);
    for (const auto& l : layers)
        s.push_back(l.outputs);
    return s;
}

std::size_t NeuralModel::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& l : layers)
        n += l.weights.size() + l.bias.size();
    return n;
}

std::vector<double> NeuralModel::parameters() const
{
    std::vector<double> p;
    p.reserve(parameter_count());
    for (const auto& l : layers) {
        p.insert(p.end(), l.weights.begin(), l.weights.end());
        p.insert(p.end(), l.bias.begin(), l.bias.end());
    }
    return p;
}

void NeuralModel::set_parameters(std::span<const double> params)
{
    if (params.size() != parameter_count())
        throw InvalidArgument("parameter vector has the wrong length");
    auto it = params.begin();
    for (auto& l : layers) {
        std::copy_n(it, l.weights.size(), l.weights.begin());
        it += static_cast<std::ptrdiff_t>(l.weights.size());
        std::copy_n(it, l.bias.size(), l.bias.begin());
        it += static_cast<std::ptrdiff_t>(l.bias.size());
    }
}

namespace {

void layer_forward(const Layer& l, std::span<const double> in, std::vector<double>& out)
{
    out.resize(static_cast<std::size_t>(l.outputs));
    for (int o = 0; o < l.outputs; ++o) {
        double net = l.bias[static_cast<std::size_t>(o)];
        const double* row = l.weights.data() + static_cast<std::size_t>(o) * l.inputs;
        for (int i = 0; i < l.inputs; ++i)
            net += row[i] * in[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(o)] = sigmoid(net);
    }
}

} // namespace

std::vector<double> forward(const NeuralModel& m, std::span<const double> features)
{
    if (m.layers.empty())
        throw InvalidArgument("forward: model has no layers");
    if (features.size() != static_cast<std::size_t>(m.layers.front().inputs))
        throw InvalidArgument("forward: expected " + std::to_string(m.layers.front().inputs) +
                              " features, got " + std::to_string(features.size()));
    std::vector<double> cur(features.begin(), features.end());
    std::vector<double> next;
    for (const auto& l : m.layers) {
        layer_forward(l, cur, next);
        cur.swap(next);
    }
    return cur;
}

double performance(std::span<const std::vector<double>> outputs,
                   std::span<const std::vector<double>> targets)
{
    if (outputs.size() != targets.size())
        throw InvalidArgument("performance: outputs and targets differ in length");
    if (outputs.empty())
        throw InvalidArgument("performance: no samples");
    double sum = 0.0;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        if (outputs[i].size() != targets[i].size())
            throw InvalidArgument("performance: sample width mismatch");
        for (std::size_t k = 0; k < outputs[i].size(); ++k) {
            const double e = outputs[i][k] - targets[i][k];
            sum += e * e;
        }
    }
    return sum / static_cast<double>(outputs.size());
}

Sample make_sample(std::span<const double> features, int class_id)
{
    if (class_id < 1 || class_id > 3)
        throw InvalidArgument("class id must be 1, 2 or 3");
    Sample s;
    s.features.assign(features.begin(), features.end());
    s.target.assign(3, 0.0);
    s.target[static_cast<std::size_t>(class_id - 1)] = 1.0;
    return s;
}

double loss_and_gradient(const NeuralModel& m, std::span<const Sample> samples,
                         std::span<double> grad)
{
    if (samples.empty())
        throw InvalidArgument("loss_and_gradient: no samples");
    if (grad.size() != m.parameter_count())
        throw InvalidArgument("loss_and_gradient: gradient buffer has the wrong length");
    std::fill(grad.begin(), grad.end(), 0.0);

    const std::size_t depth = m.layers.size();
    std::vector<std::size_t> offset(depth);
    for (std::size_t l = 0, off = 0; l < depth; ++l) {
        offset[l] = off;
        off += m.layers[l].weights.size() + m.layers[l].bias.size();
    }

    const double scale = 2.0 / static_cast<double>(samples.size());
    std::vector<std::vector<double>> act(depth + 1);
    std::vector<double> delta;
    std::vector<double> prev_delta;
    double sum = 0.0;

    for (const auto& s : samples) {
        if (s.features.size() != static_cast<std::size_t>(m.layers.front().inputs) ||
            s.target.size() != static_cast<std::size_t>(m.layers.back().outputs))
            throw InvalidArgument("loss_and_gradient: sample dimension mismatch");
        act[0] = s.features;
        for (std::size_t l = 0; l < depth; ++l)
            layer_forward(m.layers[l], act[l], act[l + 1]);

        const auto& y = act[depth];
        delta.assign(y.size(), 0.0);
        for (std::size_t k = 0; k < y.size(); ++k) {
            const double e = y[k] - s.target[k];
            sum += e * e;
            delta[k] = scale * e * y[k] * (1.0 - y[k]);
        }

        for (std::size_t l = depth; l-- > 0;) {
            const auto& layer = m.layers[l];
            const auto& in = act[l];
            double* gw = grad.data() + offset[l];
            double* gb = gw + layer.weights.size();
            for (int o = 0; o < layer.outputs; ++o) {
                const double d = delta[static_cast<std::size_t>(o)];
                for (int i = 0; i < layer.inputs; ++i)
                    gw[static_cast<std::size_t>(o) * layer.inputs + i] += d * in[static_cast<std::size_t>(i)];
                gb[o] += d;
            }
            if (l == 0)
                break;
            prev_delta.assign(static_cast<std::size_t>(layer.inputs), 0.0);
            for (int o = 0; o < layer.outputs; ++o) {
                const double d = delta[static_cast<std::size_t>(o)];
                const double* row = layer.weights.data() + static_cast<std::size_t>(o) * layer.inputs;
                for (int i = 0; i < layer.inputs; ++i)
                    prev_delta[static_cast<std::size_t>(i)] += row[i] * d;
            }
            for (std::size_t i = 0; i < prev_delta.size(); ++i)
                prev_delta[i] *= in[i] * (1.0 - in[i]);
            delta.swap(prev_delta);
        }
    }
    return sum / static_cast<double>(samples.size());
}

double loss(const NeuralModel& m, std::span<const Sample> samples)
{
    if (samples.empty())
        throw InvalidArgument("loss: no samples");
    double sum = 0.0;
    for (const auto& s : samples) {
        const auto y = forward(m, s.features);
        if (y.size() != s.target.size())
            throw InvalidArgument("loss: target width mismatch");
        for (std::size_t k = 0; k < y.size(); ++k) {
            const double e = y[k] - s.target[k];
            sum += e * e;
        }
    }
    return sum / static_cast<double>(samples.size());
}

void TrainConfig::validate() const
{
    check_sizes(layer_sizes);
    if (max_epochs < 0)
        throw InvalidArgument("max_epochs must be >= 0");
    if (!(max_wall_time > 0.0))
        throw InvalidArgument("max_wall_time must be > 0");
    if (!(performance_goal >= 0.0))
        throw InvalidArgument("performance_goal must be >= 0");
    if (!(min_gradient > 0.0))
        throw InvalidArgument("min_gradient must be > 0");
    if (val_fail_limit < 1)
        throw InvalidArgument("val_fail_limit must be >= 1");
    if (!(train_ratio > 0.0 && val_ratio > 0.0 && test_ratio > 0.0) ||
        std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9)
        throw InvalidArgument("split ratios must be positive and sum to 1");
}

DataSplit split_data(std::span<const Sample> data, const TrainConfig& cfg)
{
    cfg.validate();
    const std::size_t n = data.size();
    // small epsilon keeps 0.15 * 100 from flooring to 14
    const auto n_val = static_cast<std::size_t>(std::floor(cfg.val_ratio * static_cast<double>(n) + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(cfg.test_ratio * static_cast<double>(n) + 1e-9));
    if (n_val == 0 || n_test == 0 || n_val + n_test >= n)
        throw InvalidArgument("split_data: " + std::to_string(n) +
                              " samples are too few to give every split at least one sample");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(cfg.seed);
    std::shuffle(order.begin(), order.end(), rng);

    DataSplit out;
    const std::size_t n_train = n - n_val - n_test;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = data[order[i]];
        if (i < n_train)
            out.train.push_back(s);
        else if (i < n_train + n_val)
            out.val.push_back(s);
        else
            out.test.push_back(s);
    }
    return out;
}

StopReason StopMonitor::observe(EpochRecord& rec)
{
    improved_ = false;
    if (first_ || rec.val_perf < best_val_) {
        best_val_ = rec.val_perf;
        fails_ = 0;
        improved_ = true;
        first_ = false;
    }
    else if (rec.val_perf > best_val_) {
        ++fails_;
    }
    rec.best_val_perf = best_val_;
    rec.val_fails = fails_;

    if (rec.epoch >= cfg_.max_epochs)
        return StopReason::MaxEpochs;
    if (rec.train_perf <= cfg_.performance_goal)
        return StopReason::PerformanceGoal;
    if (rec.gradient_norm < cfg_.min_gradient)
        return StopReason::MinGradient;
    if (fails_ >= cfg_.val_fail_limit)
        return StopReason::ValidationWorsened;
    return StopReason::None;
}

NeuralModel train(const DataSplit& split, const TrainConfig& cfg)
{
    cfg.validate();
    if (split.train.empty())
        throw InvalidArgument("train: empty training set");
    if (split.val.empty())
        throw InvalidArgument("train: empty validation set");

    auto model = NeuralModel::create(cfg.layer_sizes, cfg.seed);
    NeuralModel scratch = model;
    auto objective = [&](std::span<const double> x, std::span<double> g) {
        scratch.set_parameters(x);
        return loss_and_gradient(scratch, split.train, g);
    };
    ScaledConjugateGradient scg(objective, model.parameters(), cfg.scg_sigma, cfg.scg_lambda);

    const auto start = std::chrono::steady_clock::now();
    StopMonitor monitor(cfg);
    std::vector<double> best = scg.x();
    TrainingLog log;

    for (int epoch = 0;; ++epoch) {
        if (epoch > 0)
            scg.step();
        model.set_parameters(scg.x());

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_perf = scg.value();
        rec.val_perf = loss(model, split.val);
        rec.test_perf = split.test.empty() ? 0.0 : loss(model, split.test);
        rec.gradient_norm = scg.gradient_norm();
        if (!std::isfinite(rec.train_perf) || !std::isfinite(rec.val_perf) ||
            !std::isfinite(rec.test_perf))
            throw StateError("train: non-finite loss at epoch " + std::to_string(epoch));

        auto reason = monitor.observe(rec);
        if (monitor.improved()) {
            best = scg.x();
            log.best_epoch = epoch;
        }
        log.epochs.push_back(rec);

        if (reason == StopReason::None) {
            const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
            if (elapsed.count() > cfg.max_wall_time)
                reason = StopReason::WallTime;
        }
        if (reason != StopReason::None) {
            log.stop_reason = reason;
            break;
        }
    }

    model.set_parameters(best);
    model.log = std::move(log);
    return model;
}

NeuralModel train(std::span<const Sample> data, const TrainConfig& cfg)
{
    if (data.empty())
        throw InvalidArgument("train: empty dataset");
    return train(split_data(data, cfg), cfg);
}

StopReason replay_stop_reason(const TrainingLog& log, const TrainConfig& cfg)
{
    StopMonitor monitor(cfg);
    for (auto rec : log.epochs) {
        const auto reason = monitor.observe(rec);
        if (reason != StopReason::None)
            return reason;
    }
    // the only rule that depends on something outside the log
    return log.stop_reason == StopReason::WallTime ? StopReason::WallTime : StopReason::None;
}

int argmax_class(std::span<const double> scores)
{
    if (scores.empty())
        throw InvalidArgument("argmax_class: empty score vector");
    std::size_t best = 0;
    for (std::size_t k = 1; k < scores.size(); ++k) {
        if (scores[k] > scores[best])
            best = k;
    }
    return static_cast<int>(best) + 1;
}

std::vector<TaskClassAssignment> classify(const NeuralModel& m, const TaskSet& normalized)
{
    if (!normalized.normalized)
        throw InvalidArgument("classify: task set is not normalized");
    std::vector<TaskClassAssignment> out;
    out.reserve(normalized.size());
    for (const auto& t : normalized.tasks) {
        require_normalized(t);
        const double features[3] = {t.exec_time, t.cost, t.sys_eff};
        const auto scores = forward(m, features);
        TaskClassAssignment a;
        a.task_id = t.id;
        a.class_id = argmax_class(scores);
        out.push_back(a);
    }
    return out;
}

LabeledData label_tasks(const TaskSet& normalized, const ParamWeights& wp, std::uint64_t seed,
                        double epsilon_fraction)
{
    if (!normalized.normalized)
        throw InvalidArgument("label_tasks: task set is not normalized");
    if (normalized.empty())
        throw InvalidArgument("label_tasks: empty task set");

    std::vector<WeightedTask> weighted;
    std::vector<double> raw;
    weighted.reserve(normalized.size());
    for (const auto& t : normalized.tasks) {
        const double w = task_weight(t, wp);
        weighted.push_back({t.id, w});
        raw.push_back(w);
    }

    LabeledData out;
    out.centroids = kmeans_centroids(raw, seed);
    out.epsilon = default_epsilon(out.centroids, epsilon_fraction);
    out.labels = assign_classes(weighted, out.centroids, out.epsilon);
    for (std::size_t i = 0; i < normalized.size(); ++i) {
        const auto& t = normalized.tasks[i];
        const double features[3] = {t.exec_time, t.cost, t.sys_eff};
        out.samples.push_back(make_sample(features, out.labels[i].class_id));
    }
    return out;
}

std::string model_to_json(const NeuralModel& m)
{
    json layers = json::array();
    for (const auto& l : m.layers) {
        layers.push_back({{"inputs", l.inputs},
                          {"outputs", l.outputs},
                          {"weights", l.weights},
                          {"bias", l.bias}});
    }
    json epochs = json::array();
    for (const auto& e : m.log.epochs) {
        epochs.push_back({{"epoch", e.epoch},
                          {"train", e.train_perf},
                          {"val", e.val_perf},
                          {"test", e.test_perf},
                          {"gradient", e.gradient_norm},
                          {"best_val", e.best_val_perf},
                          {"val_fails", e.val_fails}});
    }
    json doc = {{"format", "cloudsched-n2tc-model"},
                {"version", 1},
                {"layer_sizes", m.sizes()},
                {"layers", layers},
                {"training",
                 {{"stop_reason", to_string(m.log.stop_reason)},
                  {"best_epoch", m.log.best_epoch},
                  {"epochs", epochs}}}};
    return doc.dump(1);
}

NeuralModel model_from_json(std::string_view text)
{
    try {
        const auto doc = json::parse(text);
        if (doc.at("format") != "cloudsched-n2tc-model")
            throw ParseError("model: unexpected format tag");
        if (doc.at("version").get<int>() != 1)
            throw ParseError("model: unsupported version " + doc.at("version").dump());

        NeuralModel m;
        for (const auto& jl : doc.at("layers")) {
            Layer l;
            l.inputs = jl.at("inputs").get<int>();
            l.outputs = jl.at("outputs").get<int>();
            l.weights = jl.at("weights").get<std::vector<double>>();
            l.bias = jl.at("bias").get<std::vector<double>>();
            if (l.inputs < 1 || l.outputs < 1 ||
                l.weights.size() != static_cast<std::size_t>(l.inputs * l.outputs) ||
                l.bias.size() != static_cast<std::size_t>(l.outputs))
                throw ParseError("model: layer dimensions are inconsistent");
            if (!m.layers.empty() && m.layers.back().outputs != l.inputs)
                throw ParseError("model: adjacent layers do not connect");
            m.layers.push_back(std::move(l));
        }
        if (m.layers.empty())
            throw ParseError("model: no layers");
        if (doc.at("layer_sizes").get<std::vector<int>>() != m.sizes())
            throw ParseError("model: layer_sizes disagrees with layers");

        const auto& tr = doc.at("training");
        m.log.stop_reason = stop_reason_from_string(tr.at("stop_reason").get<std::string>());
        m.log.best_epoch = tr.at("best_epoch").get<int>();
        for (const auto& je : tr.at("epochs")) {
            EpochRecord e;
            e.epoch = je.at("epoch").get<int>();
            e.train_perf = je.at("train").get<double>();
            e.val_perf = je.at("val").get<double>();
            e.test_perf = je.at("test").get<double>();
            e.gradient_norm = je.at("gradient").get<double>();
            e.best_val_perf = je.at("best_val").get<double>();
            e.val_fails = je.at("val_fails").get<int>();
            m.log.epochs.push_back(e);
        }
        return m;
    }
    catch (const json::exception& e) {
        throw ParseError(std::string("model: ") + e.what());
    }
}

} // namespace cloudsched::n2tc
