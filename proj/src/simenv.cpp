#include "cloudsched/simenv.hpp"

#include "cloudsched/error.hpp"
#include "cloudsched/format.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <unordered_map>
#include <unordered_set>

namespace cloudsched::sim {

using nlohmann::json;

void EnvConfig::validate() const
{
    if (resources < 1)
        throw InvalidArgument("env: resources must be >= 1");
    if (vm_slots < 1)
        throw InvalidArgument("env: vm_slots must be >= 1");
    if (!speed_factors.empty() && speed_factors.size() != static_cast<std::size_t>(resources))
        throw InvalidArgument("env: speed_factors needs one entry per resource");
    if (!cost_rates.empty() && cost_rates.size() != static_cast<std::size_t>(resources))
        throw InvalidArgument("env: cost_rates needs one entry per resource");
    for (double s : speed_factors) {
        if (!(s > 0.0))
            throw InvalidArgument("env: speed factors must be > 0");
    }
    for (double c : cost_rates) {
        if (!(c >= 0.0))
            throw InvalidArgument("env: cost rates must be >= 0");
    }
}

bool SlotPool::fits(int demand) const
{
    return std::any_of(free_.begin(), free_.end(), [&](int f) { return f >= demand; });
}

bool SlotPool::try_take(int demand)
{
    for (auto& f : free_) {
        if (f >= demand) {
            f -= demand;
            return true;
        }
    }
    return false;
}

int SlotPool::total() const
{
    return std::accumulate(free_.begin(), free_.end(), 0);
}

ResourceTable::ResourceTable(std::vector<Resource> resources) : resources_(std::move(resources))
{
    for (const auto& r : resources_) {
        if (r.vm_slots < 1 || r.busy_slots != 0 || !(r.speed_factor > 0.0) || !(r.cost_rate >= 0.0))
            throw InvalidArgument("resource " + std::to_string(r.id) + " is misconfigured");
    }
}

ResourceTable ResourceTable::from_config(const EnvConfig& env)
{
    env.validate();
    std::vector<Resource> rs;
    for (int i = 0; i < env.resources; ++i) {
        Resource r;
        r.id = i;
        r.vm_slots = env.vm_slots;
        r.speed_factor = env.speed_factors.empty() ? 1.0 : env.speed_factors[static_cast<std::size_t>(i)];
        r.cost_rate = env.cost_rates.empty() ? 1.0 : env.cost_rates[static_cast<std::size_t>(i)];
        rs.push_back(r);
    }
    return ResourceTable(std::move(rs));
}

void ResourceTable::check_consistency() const
{
    std::vector<int> busy(resources_.size(), 0);
    for (const auto& [id, p] : running_) {
        if (p.resource_index < 0 || static_cast<std::size_t>(p.resource_index) >= resources_.size())
            throw StateError("resource table: task " + std::to_string(id) + " on unknown resource");
        busy[static_cast<std::size_t>(p.resource_index)] += p.demand;
    }
    for (std::size_t i = 0; i < resources_.size(); ++i) {
        const auto& r = resources_[i];
        if (r.busy_slots != busy[i] || r.busy_slots < 0 || r.busy_slots > r.vm_slots)
            throw StateError("resource table: resource " + std::to_string(r.id) +
                             " busy counter disagrees with running tasks");
    }
}

int ResourceTable::capacity() const
{
    int c = 0;
    for (const auto& r : resources_)
        c += r.vm_slots;
    return c;
}

int ResourceTable::max_vm_slots() const
{
    int m = 0;
    for (const auto& r : resources_)
        m = std::max(m, r.vm_slots);
    return m;
}

SlotPool ResourceTable::free_slots() const
{
    std::vector<int> free;
    free.reserve(resources_.size());
    for (const auto& r : resources_)
        free.push_back(r.vm_slots - r.busy_slots);
    return SlotPool(std::move(free));
}

int ResourceTable::place(TaskId task, int demand)
{
    if (demand < 1)
        throw InvalidArgument("place: demand must be >= 1");
    if (running_.contains(task))
        throw StateError("place: task " + std::to_string(task) + " is already running");
    for (std::size_t i = 0; i < resources_.size(); ++i) {
        auto& r = resources_[i];
        if (r.vm_slots - r.busy_slots >= demand) {
            r.busy_slots += demand;
            running_.emplace(task, Placement{static_cast<int>(i), demand});
            return static_cast<int>(i);
        }
    }
    throw StateError("dispatch: insufficient capacity for task " + std::to_string(task) +
                     " (demand " + std::to_string(demand) + ")");
}

void ResourceTable::release(TaskId task)
{
    const auto it = running_.find(task);
    if (it == running_.end())
        throw StateError("release: task " + std::to_string(task) + " is not running");
    resources_[static_cast<std::size_t>(it->second.resource_index)].busy_slots -= it->second.demand;
    running_.erase(it);
}

int idle_count(const ResourceTable& rt)
{
    rt.check_consistency();
    int idle = 0;
    for (const auto& r : rt.resources())
        idle += r.vm_slots - r.busy_slots;
    return idle;
}

std::string to_string(EventKind k)
{
    switch (k) {
    case EventKind::Arrival: return "arrival";
    case EventKind::Dispatch: return "dispatch";
    case EventKind::Completion: return "completion";
    }
    return "arrival";
}

std::vector<SimEvent> dispatch(std::span<const Task> chosen, ResourceTable& rt, double now)
{
    int demand = 0;
    for (const auto& t : chosen)
        demand += t.resource_demand;
    if (demand > idle_count(rt))
        throw StateError("dispatch: batch demand " + std::to_string(demand) + " exceeds " +
                         std::to_string(idle_count(rt)) + " idle slots");

    std::vector<SimEvent> events;
    events.reserve(chosen.size() * 2);
    std::vector<SimEvent> completions;
    for (const auto& t : chosen) {
        const int idx = rt.place(t.id, t.resource_demand);
        const auto& r = rt.resources()[static_cast<std::size_t>(idx)];
        events.push_back({now, EventKind::Dispatch, t.id, r.id});
        completions.push_back({now + t.exec_time * r.speed_factor, EventKind::Completion, t.id, r.id});
    }
    events.insert(events.end(), completions.begin(), completions.end());
    return events;
}

std::string to_string(PolicyId p)
{
    switch (p) {
    case PolicyId::Proposed: return "proposed";
    case PolicyId::Fifo: return "fifo";
    case PolicyId::Sjf: return "sjf";
    case PolicyId::RouletteGa: return "roulette_ga";
    }
    return "fifo";
}

PolicyId policy_from_string(std::string_view s)
{
    for (auto p : {PolicyId::Proposed, PolicyId::Fifo, PolicyId::Sjf, PolicyId::RouletteGa}) {
        if (to_string(p) == s)
            return p;
    }
    throw InvalidArgument("unknown policy '" + std::string(s) +
                          "' (expected proposed, fifo, sjf or roulette_ga)");
}

double utilization(std::span<const TaskRecord> records, int total_slots)
{
    if (records.empty() || total_slots < 1)
        throw InvalidArgument("utilization: empty run");
    double start = std::numeric_limits<double>::infinity();
    double end = -std::numeric_limits<double>::infinity();
    double busy = 0.0;
    for (const auto& r : records) {
        start = std::min(start, r.arrival);
        end = std::max(end, r.completion);
        busy += r.demand * (r.completion - r.dispatch);
    }
    const double horizon = end - start;
    if (!(horizon > 0.0))
        throw InvalidArgument("utilization: zero-duration run");
    return busy / (static_cast<double>(total_slots) * horizon);
}

double utilization(const SimReport& report, const EnvConfig& env)
{
    return utilization(report.records, env.total_slots());
}

Aggregates aggregate(std::span<const TaskRecord> records, int total_slots)
{
    Aggregates a;
    a.tasks = records.size();
    if (records.empty())
        return a;
    a.horizon_start = std::numeric_limits<double>::infinity();
    a.horizon_end = -std::numeric_limits<double>::infinity();
    // sum in task-id order so policies that complete the same tasks agree bit for bit
    std::vector<const TaskRecord*> by_id;
    by_id.reserve(records.size());
    for (const auto& r : records)
        by_id.push_back(&r);
    std::sort(by_id.begin(), by_id.end(), [](auto* x, auto* y) { return x->task_id < y->task_id; });
    for (const auto* rp : by_id) {
        const auto& r = *rp;
        a.total_exec += r.exec_duration;
        a.total_cost += r.cost;
        a.total_response += r.response();
        a.horizon_start = std::min(a.horizon_start, r.arrival);
        a.horizon_end = std::max(a.horizon_end, r.completion);
    }
    const auto n = static_cast<double>(records.size());
    a.mean_exec = a.total_exec / n;
    a.mean_cost = a.total_cost / n;
    a.mean_response = a.total_response / n;
    a.utilization = a.horizon_end > a.horizon_start ? utilization(records, total_slots) : 0.0;
    return a;
}

namespace {

struct PendingCompletion {
    double time;
    std::size_t seq;
    TaskId task;
    int resource_id;

    bool operator>(const PendingCompletion& o) const
    {
        return time != o.time ? time > o.time : seq > o.seq;
    }
};

} // namespace

SimReport run(const TaskSet& workload, Policy& policy, const EnvConfig& env, const Observer& observer)
{
    if (workload.normalized)
        throw InvalidArgument("run: the simulator needs raw (un-normalized) task attributes");
    if (workload.empty())
        throw InvalidArgument("run: empty workload");
    workload::validate(workload);

    ResourceTable table = ResourceTable::from_config(env);
    for (const auto& t : workload.tasks) {
        if (t.resource_demand > table.max_vm_slots())
            throw InvalidArgument("run: task " + std::to_string(t.id) + " demands " +
                                  std::to_string(t.resource_demand) +
                                  " slots but no resource has that many");
    }

    std::vector<Task> arrivals = workload.tasks;
    std::sort(arrivals.begin(), arrivals.end(), [](const Task& a, const Task& b) {
        return a.arrival != b.arrival ? a.arrival < b.arrival : a.id < b.id;
    });

    SimReport report;
    report.policy = policy.id();
    report.total_slots = table.capacity();

    std::priority_queue<PendingCompletion, std::vector<PendingCompletion>, std::greater<>> running;
    std::vector<Task> pending;
    std::size_t next_arrival = 0;
    std::size_t completed = 0;
    std::size_t seq = 0;

    auto emit = [&](const SimEvent& e) {
        report.events.push_back(e);
        if (observer)
            observer(e, table);
    };

    while (completed < arrivals.size()) {
        const double t_arr = next_arrival < arrivals.size() ? arrivals[next_arrival].arrival
                                                            : std::numeric_limits<double>::infinity();
        const double t_done = running.empty() ? std::numeric_limits<double>::infinity()
                                              : running.top().time;
        const double now = std::min(t_arr, t_done);
        if (!std::isfinite(now))
            throw StateError("run: " + std::to_string(pending.size()) +
                             " pending tasks can never be dispatched by policy " +
                             to_string(policy.id()));

        while (!running.empty() && running.top().time <= now) {
            const auto c = running.top();
            running.pop();
            table.release(c.task);
            ++completed;
            emit({c.time, EventKind::Completion, c.task, c.resource_id});
        }
        while (next_arrival < arrivals.size() && arrivals[next_arrival].arrival <= now) {
            const auto& t = arrivals[next_arrival++];
            pending.push_back(t);
            emit({t.arrival, EventKind::Arrival, t.id, std::nullopt});
        }

        while (!pending.empty() && idle_count(table) > 0) {
            std::vector<TaskId> chosen;
            try {
                chosen = policy.select(pending, table, now);
            }
            catch (const Error& e) {
                throw StateError("policy " + to_string(policy.id()) + ", round " +
                                 std::to_string(report.rounds) + " at t=" + format_double(now) +
                                 ": " + e.what());
            }
            ++report.rounds;
            if (chosen.empty())
                break;

            std::unordered_set<TaskId> picked;
            for (TaskId id : chosen) {
                if (!picked.insert(id).second)
                    throw StateError("policy " + to_string(policy.id()) + " chose task " +
                                     std::to_string(id) + " twice");
                const auto it = std::find_if(pending.begin(), pending.end(),
                                             [&](const Task& t) { return t.id == id; });
                if (it == pending.end())
                    throw StateError("policy " + to_string(policy.id()) + " chose task " +
                                     std::to_string(id) + " which is not pending");
                const Task task = *it;
                pending.erase(it);

                // one task at a time so observers see every intermediate state
                const auto evs = dispatch(std::span<const Task>(&task, 1), table, now);
                const auto& d = evs[0];
                const auto& c = evs[1];
                const auto& res = table.resources()[static_cast<std::size_t>(
                    table.running().at(task.id).resource_index)];

                TaskRecord rec;
                rec.task_id = task.id;
                rec.arrival = task.arrival;
                rec.dispatch = now;
                rec.first_response = now;
                rec.completion = c.time;
                rec.exec_duration = c.time - now;
                rec.cost = task.exec_time * res.speed_factor * res.cost_rate * task.resource_demand;
                rec.resource_id = res.id;
                rec.demand = task.resource_demand;
                report.records.push_back(rec);

                running.push({c.time, seq++, task.id, *c.resource_id});
                emit(d);
            }
        }
    }

    report.aggregates = aggregate(report.records, report.total_slots);
    return report;
}

std::string events_csv(std::span<const SimEvent> events)
{
    std::string out = "time,kind,task_id,resource_id\n";
    for (const auto& e : events) {
        out += format_double(e.time);
        out += ',';
        out += to_string(e.kind);
        out += ',';
        out += std::to_string(e.task_id);
        out += ',';
        if (e.resource_id)
            out += std::to_string(*e.resource_id);
        out += '\n';
    }
    return out;
}

std::string report_to_json(const SimReport& r)
{
    json records = json::array();
    for (const auto& t : r.records) {
        records.push_back({{"task_id", t.task_id},
                           {"arrival", t.arrival},
                           {"dispatch", t.dispatch},
                           {"first_response", t.first_response},
                           {"completion", t.completion},
                           {"exec", t.exec_duration},
                           {"cost", t.cost},
                           {"resource_id", t.resource_id},
                           {"demand", t.demand}});
    }
    const auto& a = r.aggregates;
    json doc = {{"format", "cloudsched-sim-report"},
                {"version", 1},
                {"policy", to_string(r.policy)},
                {"total_slots", r.total_slots},
                {"rounds", r.rounds},
                {"aggregates",
                 {{"tasks", a.tasks},
                  {"total_exec", a.total_exec},
                  {"mean_exec", a.mean_exec},
                  {"total_cost", a.total_cost},
                  {"mean_cost", a.mean_cost},
                  {"total_response", a.total_response},
                  {"mean_response", a.mean_response},
                  {"horizon_start", a.horizon_start},
                  {"horizon_end", a.horizon_end},
                  {"utilization", a.utilization}}},
                {"records", records}};
    return doc.dump(1);
}

SimReport report_from_json(std::string_view text)
{
    try {
        const auto doc = json::parse(text);
        if (doc.at("format") != "cloudsched-sim-report" || doc.at("version").get<int>() != 1)
            throw ParseError("sim report: unexpected format or version");
        SimReport r;
        r.policy = policy_from_string(doc.at("policy").get<std::string>());
        r.total_slots = doc.at("total_slots").get<int>();
        r.rounds = doc.at("rounds").get<std::size_t>();
        for (const auto& j : doc.at("records")) {
            TaskRecord t;
            t.task_id = j.at("task_id").get<TaskId>();
            t.arrival = j.at("arrival").get<double>();
            t.dispatch = j.at("dispatch").get<double>();
            t.first_response = j.at("first_response").get<double>();
            t.completion = j.at("completion").get<double>();
            t.exec_duration = j.at("exec").get<double>();
            t.cost = j.at("cost").get<double>();
            t.resource_id = j.at("resource_id").get<int>();
            t.demand = j.at("demand").get<int>();
            r.records.push_back(t);
        }
        const auto& ja = doc.at("aggregates");
        auto& a = r.aggregates;
        a.tasks = ja.at("tasks").get<std::size_t>();
        a.total_exec = ja.at("total_exec").get<double>();
        a.mean_exec = ja.at("mean_exec").get<double>();
        a.total_cost = ja.at("total_cost").get<double>();
        a.mean_cost = ja.at("mean_cost").get<double>();
        a.total_response = ja.at("total_response").get<double>();
        a.mean_response = ja.at("mean_response").get<double>();
        a.horizon_start = ja.at("horizon_start").get<double>();
        a.horizon_end = ja.at("horizon_end").get<double>();
        a.utilization = ja.at("utilization").get<double>();
        return r;
    }
    catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("sim report: ") + e.what());
    }
}

} // namespace cloudsched::sim
