#pragma once

#include "cloudsched/gata.hpp"
#include "cloudsched/n2tc.hpp"
#include "cloudsched/simenv.hpp"
#include "cloudsched/workload.hpp"

#include <span>
#include <vector>

namespace cloudsched::baselines {

/// Arrival order (ties by id) with head-of-line blocking: the first task that
/// does not fit ends the batch.
std::vector<TaskId> fifo_select(std::span<const Task> pending, sim::SlotPool slots);
std::vector<TaskId> fifo_select(std::span<const Task> pending, int idle_slots);

/// Shortest execution time first (ties by id); tasks that do not fit are skipped.
std::vector<TaskId> sjf_select(std::span<const Task> pending, sim::SlotPool slots);
std::vector<TaskId> sjf_select(std::span<const Task> pending, int idle_slots);

/// Roulette-wheel GA: 1/fitness proportional parent selection, single-best
/// elitism, at most 20 generations, no fairness discount.
std::vector<TaskId> roulette_select(std::span<const TaskId> candidates, const gata::GeneTable& tasks,
                                    gata::GaConfig cfg);

inline constexpr int kRouletteGenerations = 20;

class FifoPolicy final : public sim::Policy {
public:
    sim::PolicyId id() const override { return sim::PolicyId::Fifo; }
    std::vector<TaskId> select(std::span<const Task> pending, const sim::ResourceTable& table,
                               double now) override;
};

class SjfPolicy final : public sim::Policy {
public:
    sim::PolicyId id() const override { return sim::PolicyId::Sjf; }
    std::vector<TaskId> select(std::span<const Task> pending, const sim::ResourceTable& table,
                               double now) override;
};

/// Offers every pending task to the roulette GA, sized like the proposed
/// scheduler (chromosome length capped by idle slots).
class RouletteGaPolicy final : public sim::Policy {
public:
    RouletteGaPolicy(workload::FeatureScaler scaler, n2tc::ParamWeights wp, gata::GaConfig cfg)
        : scaler_(scaler), wp_(wp), cfg_(cfg)
    {
    }

    sim::PolicyId id() const override { return sim::PolicyId::RouletteGa; }
    std::vector<TaskId> select(std::span<const Task> pending, const sim::ResourceTable& table,
                               double now) override;

private:
    workload::FeatureScaler scaler_;
    n2tc::ParamWeights wp_;
    gata::GaConfig cfg_;
    std::size_t round_ = 0;
};

} // namespace cloudsched::baselines
