#include "cloudsched/baselines.hpp"
#include "cloudsched/error.hpp"
#include "cloudsched/scheduler.hpp"
#include "cloudsched/simenv.hpp"
#include "support.hpp"

#include <doctest.h>

#include <map>
#include <sstream>

using namespace cloudsched;
using namespace cloudsched::sim;
using testkit::make_task;

namespace {

EnvConfig env_of(int resources, int slots)
{
    EnvConfig env;
    env.resources = resources;
    env.vm_slots = slots;
    return env;
}

TaskSet set_of(std::vector<Task> tasks)
{
    TaskSet ts;
    ts.tasks = std::move(tasks);
    return ts;
}

double response_of(const SimReport& r, TaskId id)
{
    for (const auto& rec : r.records)
        if (rec.task_id == id)
            return rec.response();
    FAIL("task missing from report");
    return -1;
}

// Re-derives utilization from the CSV event log alone: busy slot-seconds by
// stepping through events, demands taken from the workload.
double integrate_event_log(const std::string& csv, const TaskSet& ts, int total_slots)
{
    std::map<TaskId, int> demand;
    for (const auto& t : ts.tasks)
        demand[t.id] = t.resource_demand;
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line); // header
    double first_arrival = 1e300, last = 0.0, prev = 0.0, busy = 0.0, area = 0.0;
    bool started = false;
    while (std::getline(in, line)) {
        std::istringstream f(line);
        std::string time, kind, id;
        std::getline(f, time, ',');
        std::getline(f, kind, ',');
        std::getline(f, id, ',');
        const double t = std::stod(time);
        if (started)
            area += busy * (t - prev);
        started = true;
        prev = t;
        const auto task = static_cast<TaskId>(std::stoul(id));
        if (kind == "arrival")
            first_arrival = std::min(first_arrival, t);
        else if (kind == "dispatch")
            busy += demand.at(task);
        else
            busy -= demand.at(task), last = std::max(last, t);
    }
    return area / (total_slots * (last - first_arrival));
}

} // namespace

TEST_CASE("idle count")
{
    auto rt = ResourceTable::from_config(env_of(3, 4));
    CHECK(idle_count(rt) == 12);
    CHECK(rt.capacity() == 12);
    rt.place(1, 4);
    CHECK(idle_count(rt) == 8);
    CHECK(rt.resources()[0].busy_slots == 4);

    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        auto t = ResourceTable::from_config(env_of(4, 5));
        for (TaskId id = 0; id < 10; ++id) {
            const int d = 1 + static_cast<int>(rng() % 3);
            if (t.free_slots().fits(d))
                t.place(id, d);
        }
        int free = 0;
        for (const auto& r : t.resources())
            free += r.vm_slots - r.busy_slots;
        int running = 0;
        for (const auto& [id, p] : t.running())
            running += p.demand;
        CHECK(idle_count(t) == free);
        CHECK(idle_count(t) == 20 - running);
        CHECK(t.free_slots().total() == free);
    }
}

TEST_CASE("dispatch placement")
{
    auto rt = ResourceTable::from_config(env_of(1, 2));
    const Task a = make_task(0, 3.0, 0.0, 2);
    const auto ev = dispatch(std::span<const Task>(&a, 1), rt, 1.0);
    REQUIRE(ev.size() == 2);
    CHECK(ev[0] == SimEvent{1.0, EventKind::Dispatch, 0, 0});
    CHECK(ev[1] == SimEvent{4.0, EventKind::Completion, 0, 0});
    CHECK(rt.resources()[0].busy_slots == 2);

    auto two = ResourceTable::from_config(env_of(2, 4));
    two.place(99, 2); // free (2, 4)
    const Task b = make_task(1, 1.0, 0.0, 3);
    const auto ev2 = dispatch(std::span<const Task>(&b, 1), two, 0.0);
    CHECK(ev2[0].resource_id == 1);

    const std::vector<Task> too_many{make_task(2, 1, 0, 2), make_task(3, 1, 0, 2)};
    CHECK_THROWS_AS(dispatch(too_many, two, 0.0), StateError);

    EnvConfig slow = env_of(2, 1);
    slow.speed_factors = {2.0, 0.5};
    auto rs = ResourceTable::from_config(slow);
    const std::vector<Task> pair{make_task(4, 3.0), make_task(5, 3.0)};
    const auto ev3 = dispatch(pair, rs, 10.0);
    CHECK(ev3[2].time == 16.0);
    CHECK(ev3[3].time == 11.5);
}

TEST_CASE("random feasible batches keep the table consistent")
{
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        auto rt = ResourceTable::from_config(env_of(3, 4));
        std::vector<Task> batch;
        auto pool = rt.free_slots();
        for (TaskId id = 0; id < 8; ++id) {
            const int d = 1 + static_cast<int>(rng() % 4);
            if (pool.try_take(d))
                batch.push_back(make_task(id, 1.0, 0.0, d));
        }
        dispatch(batch, rt, 0.0);
        CHECK_NOTHROW(rt.check_consistency());
        CHECK(rt.running().size() == batch.size());
    }
}

TEST_CASE("release and misuse")
{
    auto rt = ResourceTable::from_config(env_of(1, 3));
    rt.place(1, 2);
    CHECK_THROWS_AS(rt.place(1, 1), StateError);
    CHECK_THROWS_AS(rt.place(2, 2), StateError);
    rt.release(1);
    CHECK(idle_count(rt) == 3);
    CHECK_THROWS_AS(rt.release(1), StateError);
    CHECK_THROWS_AS(rt.place(3, 0), InvalidArgument);
    CHECK_THROWS_AS(ResourceTable::from_config(env_of(0, 3)), InvalidArgument);
    EnvConfig bad = env_of(2, 3);
    bad.cost_rates = {1.0};
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("single task runs without contention")
{
    baselines::FifoPolicy fifo;
    const auto rep = run(set_of({make_task(0, 4.5, 2.0)}), fifo, env_of(1, 1));
    REQUIRE(rep.records.size() == 1);
    CHECK(rep.records[0].completion == 6.5);
    CHECK(rep.records[0].response() == 0.0);
    CHECK(rep.records[0].cost == 4.5);
    CHECK(rep.aggregates.utilization == 1.0);
}

TEST_CASE("ten identical tasks dispatch at once under every policy")
{
    std::vector<Task> ts;
    for (TaskId i = 0; i < 10; ++i)
        ts.push_back(make_task(i, 2.0));
    const auto set = set_of(ts);
    const auto scaler = workload::FeatureScaler::fit(set.tasks);
    baselines::FifoPolicy fifo;
    baselines::SjfPolicy sjf;
    baselines::RouletteGaPolicy roulette(scaler, {}, {});
    sched::ProposedPolicy proposed(testkit::exec_threshold_model(), scaler, {});
    for (Policy* p : std::initializer_list<Policy*>{&fifo, &sjf, &roulette, &proposed}) {
        const auto rep = run(set, *p, env_of(2, 5));
        CHECK(rep.records.size() == 10);
        for (const auto& r : rep.records)
            CHECK(r.dispatch == 0.0);
    }
}

TEST_CASE("fifo response times follow the two-server queue recurrence")
{
    // 1 resource x 2 slots, arrivals every second, service 3 s:
    // dispatch_i = 3 * floor(i / 2) + i mod 2
    std::vector<Task> ts;
    for (TaskId i = 0; i < 20; ++i)
        ts.push_back(make_task(i, 3.0, static_cast<double>(i)));
    baselines::FifoPolicy fifo;
    const auto rep = run(set_of(ts), fifo, env_of(1, 2));
    for (TaskId i = 0; i < 20; ++i) {
        const double d = 3.0 * (i / 2) + (i % 2);
        CHECK(response_of(rep, i) == d - i);
    }
    CHECK(rep.aggregates.mean_response == doctest::Approx(4.5));
}

TEST_CASE("head-of-line blocking versus skipping")
{
    const auto ts = set_of({make_task(0, 4.0, 0.0, 2), make_task(1, 1.0, 0.0, 2), make_task(2, 1.0, 0.0, 1)});
    baselines::FifoPolicy fifo;
    const auto f = run(ts, fifo, env_of(1, 3));
    CHECK(response_of(f, 0) == 0.0);
    CHECK(response_of(f, 1) == 4.0);
    CHECK(response_of(f, 2) == 4.0);
    baselines::SjfPolicy sjf;
    const auto s = run(ts, sjf, env_of(1, 3));
    CHECK(response_of(s, 1) == 0.0);
    CHECK(response_of(s, 2) == 0.0);
    CHECK(response_of(s, 0) == 1.0);
}

TEST_CASE("utilization")
{
    baselines::FifoPolicy fifo;
    const auto full = run(set_of({make_task(0, 2.0), make_task(1, 3.0)}), fifo, env_of(1, 1));
    CHECK(utilization(full, env_of(1, 1)) == 1.0);
    const auto half = run(set_of({make_task(0, 10.0)}), fifo, env_of(1, 2));
    CHECK(utilization(half, env_of(1, 2)) == 0.5);
    const auto gap = run(set_of({make_task(0, 5.0, 0.0), make_task(1, 5.0, 15.0)}), fifo, env_of(1, 1));
    CHECK(gap.aggregates.utilization == doctest::Approx(0.5));
    CHECK_THROWS_AS(utilization(std::vector<TaskRecord>{}, 4), InvalidArgument);
    TaskRecord instant;
    CHECK_THROWS_AS(utilization(std::vector<TaskRecord>{instant}, 4), InvalidArgument);
}

TEST_CASE("random runs: conservation, causality, utilization oracle")
{
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        const auto ts = testkit::random_workload(rng, 60, 4, 80.0);
        const auto env = env_of(1 + static_cast<int>(rng() % 4), 4 + static_cast<int>(rng() % 3));
        const auto scaler = workload::FeatureScaler::fit(ts.tasks);
        baselines::FifoPolicy fifo;
        baselines::SjfPolicy sjf;
        gata::GaConfig small;
        small.pop_size = 20;
        baselines::RouletteGaPolicy roulette(scaler, {}, small);
        Policy* policies[] = {&fifo, &sjf, &roulette};
        Policy& p = *policies[trial % 3];

        std::map<TaskId, double> dispatched;
        double last_time = 0.0;
        std::size_t violations = 0;
        const auto rep = run(ts, p, env, [&](const SimEvent& e, const ResourceTable& t) {
            int running = 0;
            for (const auto& [id, pl] : t.running())
                running += pl.demand;
            int busy = 0;
            for (const auto& r : t.resources()) {
                busy += r.busy_slots;
                violations += r.busy_slots < 0 || r.busy_slots > r.vm_slots;
            }
            violations += busy != running;
            violations += e.time < last_time;
            last_time = e.time;
            if (e.kind == EventKind::Dispatch)
                dispatched[e.task_id] = e.time;
            if (e.kind == EventKind::Completion)
                violations += !dispatched.contains(e.task_id) || e.time < dispatched[e.task_id];
        });
        CHECK(violations == 0);
        CHECK(rep.records.size() == ts.size());
        for (const auto& r : rep.records) {
            CHECK(r.arrival <= r.dispatch);
            CHECK(r.dispatch <= r.first_response);
            CHECK(r.first_response <= r.completion);
        }
        for (std::size_t i = 1; i < rep.events.size(); ++i)
            CHECK(rep.events[i - 1].time <= rep.events[i].time);
        const double oracle = integrate_event_log(events_csv(rep.events), ts, env.total_slots());
        CHECK(std::abs(rep.aggregates.utilization - oracle) <= 1e-9);
        CHECK(rep.aggregates == aggregate(rep.records, env.total_slots()));
    }
}

TEST_CASE("runs are reproducible")
{
    std::mt19937_64 rng(5);
    const auto ts = testkit::random_workload(rng, 40, 3, 30.0);
    const auto scaler = workload::FeatureScaler::fit(ts.tasks);
    gata::GaConfig cfg;
    cfg.pop_size = 30;
    baselines::RouletteGaPolicy a(scaler, {}, cfg), b(scaler, {}, cfg);
    const auto ra = run(ts, a, env_of(2, 3));
    const auto rb = run(ts, b, env_of(2, 3));
    CHECK(ra == rb);
    CHECK(events_csv(ra.events) == events_csv(rb.events));
}

TEST_CASE("run preconditions")
{
    baselines::FifoPolicy fifo;
    CHECK_THROWS_AS(run(TaskSet{}, fifo, env_of(1, 1)), InvalidArgument);
    CHECK_THROWS_AS(run(set_of({make_task(0, 1.0, 0.0, 3)}), fifo, env_of(2, 2)), InvalidArgument);
    auto norm = set_of({make_task(0, 1.0)});
    norm.normalized = true;
    CHECK_THROWS_AS(run(norm, fifo, env_of(1, 1)), InvalidArgument);
}

TEST_CASE("policies that misbehave are reported")
{
    struct Greedy final : Policy {
        PolicyId id() const override { return PolicyId::Fifo; }
        std::vector<TaskId> select(std::span<const Task> pending, const ResourceTable&, double) override
        {
            std::vector<TaskId> all;
            for (const auto& t : pending)
                all.push_back(t.id);
            return all;
        }
    } greedy;
    CHECK_THROWS_AS(run(set_of({make_task(0, 1.0), make_task(1, 1.0)}), greedy, env_of(1, 1)), StateError);

    struct Stubborn final : Policy {
        PolicyId id() const override { return PolicyId::Fifo; }
        std::vector<TaskId> select(std::span<const Task>, const ResourceTable&, double) override { return {}; }
    } stubborn;
    CHECK_THROWS_AS(run(set_of({make_task(0, 1.0)}), stubborn, env_of(1, 1)), StateError);
}

TEST_CASE("cost model")
{
    EnvConfig env = env_of(2, 2);
    env.speed_factors = {1.0, 2.0};
    env.cost_rates = {3.0, 0.5};
    baselines::FifoPolicy fifo;
    const auto rep = run(set_of({make_task(0, 4.0, 0.0, 2), make_task(1, 4.0, 0.0, 2)}), fifo, env);
    CHECK(rep.records[0].cost == 4.0 * 1.0 * 3.0 * 2);
    CHECK(rep.records[1].cost == 4.0 * 2.0 * 0.5 * 2);
    CHECK(rep.records[1].exec_duration == 8.0);
}

TEST_CASE("event csv and report json")
{
    baselines::FifoPolicy fifo;
    const auto rep = run(set_of({make_task(0, 1.5, 0.25), make_task(1, 2.0, 0.25)}), fifo, env_of(1, 1));
    const auto csv = events_csv(rep.events);
    CHECK(csv ==
          "time,kind,task_id,resource_id\n"
          "0.25,arrival,0,\n"
          "0.25,arrival,1,\n"
          "0.25,dispatch,0,0\n"
          "1.75,completion,0,0\n"
          "1.75,dispatch,1,0\n"
          "3.75,completion,1,0\n");
    const auto text = report_to_json(rep);
    const auto back = report_from_json(text);
    CHECK(back.records == rep.records);
    CHECK(back.aggregates == rep.aggregates);
    CHECK(back.policy == rep.policy);
    CHECK(report_to_json(back) == text);
    CHECK_THROWS_AS(report_from_json("{\"format\": 1}"), ParseError);
    CHECK(policy_from_string("roulette_ga") == PolicyId::RouletteGa);
    CHECK_THROWS_AS(policy_from_string("lifo"), InvalidArgument);
}
