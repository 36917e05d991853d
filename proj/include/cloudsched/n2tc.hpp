#pragma once

#include "cloudsched/workload.hpp"

#include <array>
#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cloudsched::n2tc {

/// Per-attribute weights applied to normalized execution time, cost and
/// system efficiency.
struct ParamWeights {
    double et = 0.4;
    double c = 0.3;
    double se = 0.3;

    void validate() const;
};

/// Linear task weight over the normalized attributes.
double task_weight(const Task& t, const ParamWeights& wp);

/// Class weights, index 0 holds class 1. Must be strictly descending.
using Centroids = std::array<double, 3>;

struct TaskClassAssignment {
    TaskId task_id = 0;
    int class_id = 1; // 1 = highest priority
    double weight = 0.0;
    double distance = 0.0;   // |weight - centroid|
    bool out_of_band = false; // no centroid within epsilon; nearest used anyway

    bool operator==(const TaskClassAssignment&) const = default;
};

struct WeightedTask {
    TaskId task_id;
    double weight;
};

/// Seeded 1-D k-means (k = 3) over task weights, returned in descending order.
Centroids kmeans_centroids(std::span<const double> weights, std::uint64_t seed, int iterations = 25);

/// `fraction` of the mean spacing between adjacent centroids.
double default_epsilon(const Centroids& cw, double fraction = 0.25);

/// Nearest-centroid grouping. Ties go to the higher-priority class.
std::vector<TaskClassAssignment> assign_classes(std::span<const WeightedTask> weights,
                                                const Centroids& cw, double epsilon);

double sigmoid(double net);

struct Layer {
    int inputs = 0;
    int outputs = 0;
    std::vector<double> weights; // outputs x inputs, row-major
    std::vector<double> bias;    // outputs

    bool operator==(const Layer&) const = default;
};

enum class StopReason {
    None,
    MaxEpochs,
    WallTime,
    PerformanceGoal,
    MinGradient,
    ValidationWorsened,
};

std::string to_string(StopReason r);
StopReason stop_reason_from_string(std::string_view s);

struct EpochRecord {
    int epoch = 0;
    double train_perf = 0.0;
    double val_perf = 0.0;
    double test_perf = 0.0;
    double gradient_norm = 0.0;
    double best_val_perf = 0.0;
    int val_fails = 0;

    bool operator==(const EpochRecord&) const = default;
};

struct TrainingLog {
    std::vector<EpochRecord> epochs;
    StopReason stop_reason = StopReason::None;
    int best_epoch = 0;

    bool operator==(const TrainingLog&) const = default;
};

/// Feedforward network with sigmoid units in every non-input layer.
struct NeuralModel {
    std::vector<Layer> layers;
    TrainingLog log;

    /// Random initialization, uniform in +-1/sqrt(fan_in).
    static NeuralModel create(std::span<const int> sizes, std::uint64_t seed);
    static NeuralModel zeros(std::span<const int> sizes);

    std::vector<int> sizes() const;
    std::size_t parameter_count() const;
    /// Weights then biases, layer by layer.
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> params);
    bool trained() const { return !log.epochs.empty(); }

    bool operator==(const NeuralModel&) const = default;
};

std::vector<double> forward(const NeuralModel& m, std::span<const double> features);

/// Mean over samples of the squared error norm.
double performance(std::span<const std::vector<double>> outputs,
                   std::span<const std::vector<double>> targets);

struct Sample {
    std::vector<double> features;
    std::vector<double> target;
};

/// One-hot sample for class label in {1,2,3}.
Sample make_sample(std::span<const double> features, int class_id);

/// Performance of `m` on `samples` and its gradient with respect to
/// parameters() (same ordering).
double loss_and_gradient(const NeuralModel& m, std::span<const Sample> samples,
                         std::span<double> grad);
double loss(const NeuralModel& m, std::span<const Sample> samples);

struct TrainConfig {
    std::vector<int> layer_sizes{3, 20, 3};
    int max_epochs = 1000;
    double max_wall_time = 60.0; // seconds
    double performance_goal = 0.0;
    double min_gradient = 1e-6;
    int val_fail_limit = 6;
    double train_ratio = 0.70;
    double val_ratio = 0.15;
    double test_ratio = 0.15;
    std::uint64_t seed = 1;
    double scg_sigma = 5e-5;
    double scg_lambda = 5e-7;

    void validate() const;
};

struct DataSplit {
    std::vector<Sample> train;
    std::vector<Sample> val;
    std::vector<Sample> test;
};

/// Random disjoint partition; validation and test sizes are floored and the
/// residue goes to training.
DataSplit split_data(std::span<const Sample> data, const TrainConfig& cfg);

/// Shared stopping-rule state so a recorded log can be replayed.
class StopMonitor {
public:
    explicit StopMonitor(const TrainConfig& cfg) : cfg_(cfg) {}

    /// Feeds one epoch; fills in best_val_perf / val_fails and returns the
    /// reason to stop, if any. Wall time is checked separately.
    StopReason observe(EpochRecord& rec);
    bool improved() const { return improved_; }

private:
    const TrainConfig& cfg_;
    double best_val_ = 0.0;
    int fails_ = 0;
    bool first_ = true;
    bool improved_ = false;
};

NeuralModel train(std::span<const Sample> data, const TrainConfig& cfg);
NeuralModel train(const DataSplit& split, const TrainConfig& cfg);

/// Re-runs the deterministic stopping rules over a recorded log.
StopReason replay_stop_reason(const TrainingLog& log, const TrainConfig& cfg);

/// argmax mapped to {1,2,3}; ties resolve to the lower class.
int argmax_class(std::span<const double> scores);

std::vector<TaskClassAssignment> classify(const NeuralModel& m, const TaskSet& normalized);

/// Labels normalized tasks with the weighting rule and returns the one-hot
/// training set alongside the centroids used.
struct LabeledData {
    std::vector<Sample> samples;
    std::vector<TaskClassAssignment> labels;
    Centroids centroids{};
    double epsilon = 0.0;
};
LabeledData label_tasks(const TaskSet& normalized, const ParamWeights& wp, std::uint64_t seed,
                        double epsilon_fraction = 0.25);

std::string model_to_json(const NeuralModel& m);
NeuralModel model_from_json(std::string_view text);

} // namespace cloudsched::n2tc
