#include "cloudsched/baselines.hpp"
#include "cloudsched/error.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <functional>
#include <numeric>

using namespace cloudsched;
using namespace cloudsched::baselines;
using testkit::make_task;

namespace {

double demand_of(std::span<const Task> ts, std::span<const TaskId> ids)
{
    double d = 0;
    for (TaskId id : ids)
        d += std::find_if(ts.begin(), ts.end(), [&](const Task& t) { return t.id == id; })->resource_demand;
    return d;
}

double exec_sum(std::span<const Task> ts, std::span<const TaskId> ids)
{
    double s = 0;
    for (TaskId id : ids)
        s += std::find_if(ts.begin(), ts.end(), [&](const Task& t) { return t.id == id; })->exec_time;
    return s;
}

} // namespace

TEST_CASE("fifo selection")
{
    const std::vector<Task> ts{make_task(0, 1, 3.0), make_task(1, 1, 1.0), make_task(2, 1, 2.0)};
    CHECK(fifo_select(ts, 2) == std::vector<TaskId>{1, 2});
    const std::vector<Task> big{make_task(0, 1, 0.0, 3), make_task(1, 1, 1.0, 1)};
    CHECK(fifo_select(big, 2).empty());
    const std::vector<Task> tie{make_task(5, 1, 0.0), make_task(2, 1, 0.0), make_task(9, 1, 0.0)};
    CHECK(fifo_select(tie, 3) == std::vector<TaskId>{2, 5, 9});
    CHECK(fifo_select(tie, 0).empty());
}

TEST_CASE("fifo is prefix closed for unit demand")
{
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        auto ts = testkit::random_workload(rng, 12, 1, 10.0).tasks;
        const int idle = static_cast<int>(rng() % 8);
        const auto chosen = fifo_select(ts, idle);
        CHECK(demand_of(ts, chosen) <= idle);
        for (TaskId j : chosen) {
            const auto& tj = ts[j];
            for (const auto& ti : ts) {
                const bool earlier = ti.arrival < tj.arrival || (ti.arrival == tj.arrival && ti.id < tj.id);
                if (earlier)
                    CHECK(std::find(chosen.begin(), chosen.end(), ti.id) != chosen.end());
            }
        }
    }
}

TEST_CASE("sjf selection")
{
    const std::vector<Task> ts{make_task(0, 5), make_task(1, 1), make_task(2, 3)};
    auto got = sjf_select(ts, 2);
    std::sort(got.begin(), got.end());
    CHECK(got == std::vector<TaskId>{1, 2});
    const std::vector<Task> eq{make_task(3, 2), make_task(1, 2), make_task(2, 2)};
    CHECK(sjf_select(eq, 2) == std::vector<TaskId>{1, 2});
    const std::vector<Task> skip{make_task(0, 1, 0, 3), make_task(1, 2, 0, 1), make_task(2, 3, 0, 1)};
    CHECK(sjf_select(skip, 2) == std::vector<TaskId>{1, 2});
}

TEST_CASE("sjf picks the cheapest set of its size (exhaustive, unit demand)")
{
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 150; ++trial) {
        const auto ts = testkit::random_workload(rng, 10, 1, 5.0).tasks;
        const int idle = 1 + static_cast<int>(rng() % 6);
        const auto chosen = sjf_select(ts, idle);
        const std::size_t k = chosen.size();
        CHECK(k == std::min<std::size_t>(ts.size(), static_cast<std::size_t>(idle)));
        double best = 1e300;
        const auto n = ts.size();
        for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
            if (static_cast<std::size_t>(std::popcount(mask)) != k)
                continue;
            double s = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (1u << i))
                    s += ts[i].exec_time;
            best = std::min(best, s);
        }
        CHECK(exec_sum(ts, chosen) == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("sjf never skips a shorter feasible task of equal demand")
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const auto ts = testkit::random_workload(rng, 10, 3, 5.0).tasks;
        const auto chosen = sjf_select(ts, sim::SlotPool({4, 3}));
        for (TaskId c : chosen) {
            for (const auto& t : ts) {
                const bool unselected = std::find(chosen.begin(), chosen.end(), t.id) == chosen.end();
                if (unselected && t.resource_demand == ts[c].resource_demand)
                    CHECK_FALSE(t.exec_time < ts[c].exec_time);
            }
        }
        sim::SlotPool pool({4, 3});
        for (TaskId c : chosen)
            CHECK(pool.try_take(ts[c].resource_demand));
    }
}

TEST_CASE("roulette GA")
{
    gata::GeneTable t;
    for (TaskId i = 0; i < 4; ++i)
        t[i] = {1.0 + i, 1.0, 0.0};
    gata::GaConfig cfg;
    cfg.chrom_len = 4;
    const std::vector<TaskId> four{0, 1, 2, 3};
    auto forced = roulette_select(four, t, cfg);
    std::sort(forced.begin(), forced.end());
    CHECK(forced == four);

    cfg.chrom_len = 2;
    cfg.pop_size = 30;
    CHECK(roulette_select(four, t, cfg) == roulette_select(four, t, cfg));
}

TEST_CASE("roulette GA stays close to the exhaustive optimum")
{
    int close = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        gata::Rng rng(seed * 31);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        gata::GeneTable t;
        std::vector<TaskId> cand;
        for (TaskId i = 0; i < 8; ++i) {
            t[i] = {u(rng), u(rng), u(rng)};
            cand.push_back(i);
        }
        gata::GaConfig cfg;
        cfg.pop_size = 50;
        cfg.chrom_len = 5;
        cfg.seed = seed;
        const auto picked = roulette_select(cand, t, cfg);
        const double got = gata::fitness(picked, t, {}, 1.0);
        const double opt = gata::enumerate_optimum(cand, t, {}, 5, 1.0).fitness;
        close += got <= 1.1 * opt;
    }
    CHECK(close >= 15);
}

TEST_CASE("roulette policy respects capacity")
{
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const auto ts = testkit::random_workload(rng, 30, 3, 10.0);
        const auto scaler = workload::FeatureScaler::fit(ts.tasks);
        gata::GaConfig cfg;
        cfg.pop_size = 20;
        RouletteGaPolicy p(scaler, {}, cfg);
        sim::EnvConfig env;
        env.resources = 2;
        env.vm_slots = 3;
        auto table = sim::ResourceTable::from_config(env);
        const auto chosen = p.select(ts.tasks, table, 10.0);
        CHECK(demand_of(ts.tasks, chosen) <= 6);
        CHECK(chosen.size() <= 6);
        CHECK_FALSE(chosen.empty());
    }
}
