#pragma once

#include "cloudsched/n2tc.hpp"
#include "cloudsched/simenv.hpp"
#include "cloudsched/workload.hpp"

#include <random>

namespace testkit {

using namespace cloudsched;

// Direct 3 -> 3 net that classifies on normalized exec time alone:
// above 2/3 is class 1, below 1/3 class 3, class 2 in between.
inline n2tc::NeuralModel exec_threshold_model()
{
    const int sizes[] = {3, 3};
    auto m = n2tc::NeuralModel::zeros(sizes);
    m.layers[0].weights = {30, 0, 0, 0, 0, 0, -30, 0, 0};
    m.layers[0].bias = {-20, 0, 10};
    m.log.epochs.push_back({});
    m.log.stop_reason = n2tc::StopReason::MaxEpochs;
    return m;
}

inline Task make_task(TaskId id, double exec, double arrival = 0.0, int demand = 1, double cost = 1.0,
                      double eff = 0.5)
{
    return Task{id, exec, cost, eff, demand, arrival, {}};
}

inline TaskSet random_workload(std::mt19937_64& rng, std::size_t max_tasks, int max_demand,
                               double horizon)
{
    std::uniform_int_distribution<std::size_t> count(1, max_tasks);
    std::uniform_real_distribution<double> exec(0.5, 20.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> demand(1, max_demand);
    std::uniform_real_distribution<double> arrival(0.0, horizon);
    TaskSet ts;
    const auto n = count(rng);
    for (std::size_t i = 0; i < n; ++i) {
        Task t;
        t.id = static_cast<TaskId>(i);
        t.exec_time = exec(rng);
        t.cost = 10.0 * unit(rng);
        t.sys_eff = unit(rng);
        t.resource_demand = demand(rng);
        // a few exact ties exercise the arrival/id ordering
        t.arrival = i % 5 == 0 ? 0.0 : std::floor(arrival(rng));
        ts.tasks.push_back(t);
    }
    return ts;
}

} // namespace testkit
