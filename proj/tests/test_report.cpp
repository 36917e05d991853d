#include "cloudsched/baselines.hpp"
#include "cloudsched/error.hpp"
#include "cloudsched/report.hpp"
#include "cloudsched/scheduler.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace cloudsched;
using namespace cloudsched::report;
using testkit::make_task;

namespace {

sim::SimReport fake(sim::PolicyId id, double util, double resp, double cost, double exec,
                    std::vector<TaskId> ids = {0, 1})
{
    sim::SimReport r;
    r.policy = id;
    for (TaskId t : ids) {
        sim::TaskRecord rec;
        rec.task_id = t;
        r.records.push_back(rec);
    }
    r.aggregates.utilization = util;
    r.aggregates.mean_response = resp;
    r.aggregates.mean_cost = cost;
    r.aggregates.mean_exec = exec;
    return r;
}

int rank_in(const ComparisonTable& t, double Row::*col, const std::string& name)
{
    const Row* me = nullptr;
    for (const auto& r : t.rows)
        if (r.algorithm == name)
            me = &r;
    int rank = 1;
    for (const auto& r : t.rows)
        rank += r.*col < me->*col;
    return rank;
}

} // namespace

TEST_CASE("min-max endpoints")
{
    std::map<sim::PolicyId, sim::SimReport> reps{
        {sim::PolicyId::Fifo, fake(sim::PolicyId::Fifo, 0.5, 3, 10, 2)},
        {sim::PolicyId::Sjf, fake(sim::PolicyId::Sjf, 0.7, 1, 20, 2)}};
    const auto t = compare(reps);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0].algorithm == "fifo");
    CHECK(t.rows[0].cost == 0.0);
    CHECK(t.rows[1].cost == 1.0);
    CHECK(t.rows[0].response == 1.0);
    CHECK(t.rows[1].response == 0.0);
    CHECK(t.rows[0].utility == 0.0);
    CHECK(t.rows[0].exec == 0.0); // constant column
    CHECK(t.rows[1].exec == 0.0);
    CHECK(t.normalization == kNormalization);
}

TEST_CASE("identical reports give zero columns")
{
    std::map<sim::PolicyId, sim::SimReport> reps{
        {sim::PolicyId::Fifo, fake(sim::PolicyId::Fifo, 0.5, 3, 10, 2)},
        {sim::PolicyId::Sjf, fake(sim::PolicyId::Sjf, 0.5, 3, 10, 2)}};
    for (const auto& r : compare(reps).rows) {
        CHECK(r.utility == 0.0);
        CHECK(r.response == 0.0);
        CHECK(r.cost == 0.0);
        CHECK(r.exec == 0.0);
    }
}

TEST_CASE("rounding-level spread counts as constant")
{
    std::map<sim::PolicyId, sim::SimReport> reps{
        {sim::PolicyId::Fifo, fake(sim::PolicyId::Fifo, 0.5, 3, 25.3113, 2)},
        {sim::PolicyId::Sjf, fake(sim::PolicyId::Sjf, 0.5, 3, std::nextafter(25.3113, 30.0), 2)},
        {sim::PolicyId::Proposed, fake(sim::PolicyId::Proposed, 0.5, 3, 25.3113 + 1e-6, 2)}};
    const auto t = compare(reps);
    CHECK(t.rows[0].cost == 1.0); // proposed, the only real outlier
    CHECK(t.rows[1].cost == 0.0);
    CHECK(t.rows[2].cost == doctest::Approx(0.0).epsilon(1e-6));
    reps.erase(sim::PolicyId::Proposed);
    for (const auto& r : compare(reps).rows)
        CHECK(r.cost == 0.0);
}

TEST_CASE("aggregates do not depend on record order")
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.1, 30.0);
    std::vector<sim::TaskRecord> recs(200);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        auto& r = recs[i];
        r.task_id = static_cast<TaskId>(i);
        r.arrival = u(rng);
        r.dispatch = r.first_response = r.arrival + u(rng);
        r.exec_duration = u(rng);
        r.completion = r.dispatch + r.exec_duration;
        r.cost = u(rng) / 3.0;
        r.demand = 1;
    }
    const auto base = sim::aggregate(recs, 8);
    for (int k = 0; k < 10; ++k) {
        std::shuffle(recs.begin(), recs.end(), rng);
        const auto again = sim::aggregate(recs, 8);
        CHECK(again.mean_cost == base.mean_cost);
        CHECK(again.mean_exec == base.mean_exec);
        CHECK(again.mean_response == base.mean_response);
    }
}

TEST_CASE("compare errors")
{
    std::map<sim::PolicyId, sim::SimReport> one{{sim::PolicyId::Fifo, fake(sim::PolicyId::Fifo, 1, 1, 1, 1)}};
    CHECK_THROWS_AS(compare(one), InvalidArgument);
    auto two = one;
    two[sim::PolicyId::Sjf] = fake(sim::PolicyId::Sjf, 1, 1, 1, 1, {0, 2});
    CHECK_THROWS_AS(compare(two), InvalidArgument);
    const std::vector<Row> ext{{"island_ga", 0.9, 1, 1, 1}};
    CHECK(compare(one, ext).rows.size() == 2);
}

TEST_CASE("rank preserved under column scaling")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::map<sim::PolicyId, sim::SimReport> reps;
        for (auto id : {sim::PolicyId::Proposed, sim::PolicyId::Fifo, sim::PolicyId::Sjf, sim::PolicyId::RouletteGa})
            reps[id] = fake(id, u(rng) / 10, u(rng), u(rng), u(rng));
        const double k = u(rng);
        auto scaled = reps;
        for (auto& [id, r] : scaled)
            r.aggregates.mean_cost *= k;
        const auto a = compare(reps), b = compare(scaled);
        for (const auto& row : a.rows)
            CHECK(rank_in(a, &Row::cost, row.algorithm) == rank_in(b, &Row::cost, row.algorithm));
        for (const auto& row : a.rows) {
            for (double v : {row.utility, row.response, row.cost, row.exec}) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
        }
    }
}

TEST_CASE("table csv round trip")
{
    ComparisonTable t;
    t.rows = {{"proposed", 0.1, 0.25, 1.0 / 3.0, 0}, {"fifo", 1, 0.7, 0.2, 1}};
    const auto csv = table_csv(t);
    CHECK(csv.starts_with("# normalization: "));
    CHECK(csv.find("Algorithm,Utility,Response Time,Cost,Execution Time\n") != std::string::npos);
    CHECK(table_from_csv(csv) == t);
    CHECK_THROWS_AS(table_from_csv("a,b\n"), ParseError);
    CHECK_THROWS_AS(table_from_csv("Algorithm,Utility,Response Time,Cost,Execution Time\nx,1,2\n"), ParseError);
}

TEST_CASE("per task series")
{
    baselines::FifoPolicy fifo;
    sim::EnvConfig env;
    env.resources = 1;
    env.vm_slots = 1;
    env.speed_factors = {1.5};
    TaskSet one;
    one.tasks = {make_task(3, 2.0, 1.0)};
    const auto rep = sim::run(one, fifo, env);
    const auto s = per_task_series(rep, Metric::Exec);
    REQUIRE(s.size() == 1);
    CHECK(s[0] == std::pair<TaskId, double>{3, 3.0});
    CHECK(series_csv(s) == "task_id,value\n3,3\n");

    std::mt19937_64 rng(8);
    const auto ts = testkit::random_workload(rng, 40, 2, 20.0);
    sim::EnvConfig small;
    small.resources = 2;
    small.vm_slots = 2;
    const auto r = sim::run(ts, fifo, small);
    double sums[3] = {0, 0, 0};
    int k = 0;
    for (auto m : {Metric::Exec, Metric::Cost, Metric::Response}) {
        const auto series = per_task_series(r, m);
        CHECK(series.size() == r.records.size());
        for (std::size_t i = 0; i < series.size(); ++i) {
            CHECK(series[i].first == r.records[i].task_id);
            sums[k] += series[i].second;
            if (m == Metric::Response)
                CHECK(series[i].second >= 0.0);
        }
        ++k;
    }
    CHECK(sums[0] == doctest::Approx(r.aggregates.total_exec));
    CHECK(sums[1] == doctest::Approx(r.aggregates.total_cost));
    CHECK(sums[2] == doctest::Approx(r.aggregates.total_response));
    CHECK(metric_from_string("cost") == Metric::Cost);
    CHECK_THROWS_AS(metric_from_string("energy"), InvalidArgument);
}

TEST_CASE("five-row table from a desk run")
{
    const auto ts = workload::synth_workload(42, 60);
    const auto scaler = workload::FeatureScaler::fit(ts.tasks);
    baselines::FifoPolicy fifo;
    baselines::SjfPolicy sjf;
    gata::GaConfig ga;
    ga.pop_size = 40;
    baselines::RouletteGaPolicy roulette(scaler, {}, ga);
    sched::SchedulerConfig sc;
    sc.ga.pop_size = 40;
    sched::ProposedPolicy proposed(testkit::exec_threshold_model(), scaler, sc);
    sim::EnvConfig env;
    std::map<sim::PolicyId, sim::SimReport> reps;
    reps[sim::PolicyId::Fifo] = sim::run(ts, fifo, env);
    reps[sim::PolicyId::Sjf] = sim::run(ts, sjf, env);
    reps[sim::PolicyId::RouletteGa] = sim::run(ts, roulette, env);
    reps[sim::PolicyId::Proposed] = sim::run(ts, proposed, env);
    const std::vector<Row> ext{{"island_ga", 0.5, 50.0, 30.0, 10.0}};
    const auto t = compare(reps, ext);
    REQUIRE(t.rows.size() == 5);
    CHECK(t.rows.back().algorithm == "island_ga");
    CHECK(table_from_csv(table_csv(t)) == t);
}
