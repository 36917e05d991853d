#pragma once

#include "cloudsched/config.hpp"
#include "cloudsched/gata.hpp"
#include "cloudsched/n2tc.hpp"
#include "cloudsched/report.hpp"
#include "cloudsched/simenv.hpp"
#include "cloudsched/workload.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cloudsched {

/// Offsets added to the master seed for each consumer.
namespace seed_offset {
inline constexpr std::uint64_t kWorkload = 101;
inline constexpr std::uint64_t kClassifier = 202;
inline constexpr std::uint64_t kGata = 303;
inline constexpr std::uint64_t kRoulette = 404;
} // namespace seed_offset

struct ExperimentConfig {
    std::uint64_t seed = 42;
    std::vector<sim::PolicyId> policies{sim::PolicyId::Proposed, sim::PolicyId::Fifo,
                                        sim::PolicyId::Sjf, sim::PolicyId::RouletteGa};
    std::filesystem::path out_dir = "out";
    std::optional<std::filesystem::path> cache_dir;

    std::optional<std::filesystem::path> trace;
    std::optional<std::size_t> trace_limit;
    std::size_t synth_tasks = 200;
    std::optional<std::uint64_t> workload_seed;
    workload::SynthRanges ranges;

    sim::EnvConfig env;
    n2tc::ParamWeights wp;
    double epsilon_fraction = 0.25;
    n2tc::TrainConfig train;
    std::optional<std::uint64_t> classifier_seed;
    gata::GaConfig ga;
    std::optional<std::uint64_t> ga_seed;

    std::vector<report::Row> external; // user-supplied aggregates for other methods

    std::uint64_t workload_seed_value() const { return workload_seed.value_or(seed + seed_offset::kWorkload); }
    std::uint64_t classifier_seed_value() const { return classifier_seed.value_or(seed + seed_offset::kClassifier); }
    std::uint64_t ga_seed_value() const { return ga_seed.value_or(seed + seed_offset::kGata); }
    std::uint64_t roulette_seed_value() const { return seed + seed_offset::kRoulette; }

    /// Canonical `key = value` rendering; reloading it yields the same config.
    std::string to_text() const;
};

/// Throws ConfigError for unknown keys, bad values or a missing trace file.
ExperimentConfig experiment_config_from(const KeyValueConfig& kv);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

TaskSet build_workload(const ExperimentConfig& cfg);

/// Trains the classifier on the workload labelled by the weighting rule.
/// Uses the cache directory when configured.
n2tc::NeuralModel train_classifier(const TaskSet& workload, const ExperimentConfig& cfg);

struct ExperimentResult {
    TaskSet workload;
    std::optional<n2tc::NeuralModel> model;
    std::map<sim::PolicyId, sim::SimReport> reports;
    std::optional<report::ComparisonTable> table;
};

/// Runs every configured policy on the same workload. Artifacts are written
/// under cfg.out_dir unless `write` is false.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write = true);

/// Reads reports/<policy>.json from `dir` and writes comparison.csv there.
report::ComparisonTable report_directory(const std::filesystem::path& dir,
                                         const std::vector<report::Row>& external = {});

struct OracleInstance {
    std::size_t chrom_len = 1;
    double fairness_factor = 0.9;
    gata::FairnessMode mode = gata::FairnessMode::PerGene;
    std::vector<TaskId> candidates;
    gata::GeneTable genes;
    gata::Queue queue;
};

/// JSON: {"chrom_len": L, "fairness_factor": f, "tasks": [{"id", "rt", "mr", "queued"}]}
OracleInstance oracle_instance_from_json(std::string_view text);
gata::Optimum cmd_oracle(const OracleInstance& inst);
std::string oracle_result_json(const gata::Optimum& opt);

} // namespace cloudsched
