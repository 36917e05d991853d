#pragma once

#include "cloudsched/workload.hpp"

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cloudsched::sim {

struct Resource {
    int id = 0;
    int vm_slots = 1;
    int busy_slots = 0;
    double speed_factor = 1.0; // multiplies execution time
    double cost_rate = 1.0;    // currency per slot-second
};

/// Homogeneous by default; per-resource vectors override when non-empty.
struct EnvConfig {
    int resources = 4;
    int vm_slots = 5;
    std::vector<double> speed_factors;
    std::vector<double> cost_rates;

    void validate() const;
    int total_slots() const { return resources * vm_slots; }
};

/// Free slots per resource, consumed first-fit in ascending resource order.
/// Policies use it to size a round before anything is dispatched.
class SlotPool {
public:
    explicit SlotPool(std::vector<int> free) : free_(std::move(free)) {}
    /// A single bin holding `slots`.
    static SlotPool single(int slots) { return SlotPool({slots}); }

    bool try_take(int demand);
    bool fits(int demand) const;
    int total() const;

private:
    std::vector<int> free_;
};

struct Placement {
    int resource_index = 0;
    int demand = 1;
};

class ResourceTable {
public:
    ResourceTable() = default;
    explicit ResourceTable(std::vector<Resource> resources);
    static ResourceTable from_config(const EnvConfig& env);

    const std::vector<Resource>& resources() const { return resources_; }
    const std::map<TaskId, Placement>& running() const { return running_; }

    /// Throws StateError when busy counters disagree with running tasks.
    void check_consistency() const;

    int capacity() const;
    int max_vm_slots() const;
    SlotPool free_slots() const;

    /// First resource (ascending id) with enough free slots; returns its index.
    int place(TaskId task, int demand);
    void release(TaskId task);

private:
    std::vector<Resource> resources_;
    std::map<TaskId, Placement> running_;
};

/// Sum over resources of free slots.
int idle_count(const ResourceTable& rt);

enum class EventKind { Arrival, Dispatch, Completion };

std::string to_string(EventKind k);

struct SimEvent {
    double time = 0.0;
    EventKind kind = EventKind::Arrival;
    TaskId task_id = 0;
    std::optional<int> resource_id;

    bool operator==(const SimEvent&) const = default;
};

/// Places every task first-fit and returns a dispatch event at `now` plus a
/// completion event at now + exec_time * speed_factor for each task.
/// Throws StateError if the batch does not fit.
std::vector<SimEvent> dispatch(std::span<const Task> chosen, ResourceTable& rt, double now);

enum class PolicyId { Proposed, Fifo, Sjf, RouletteGa };

std::string to_string(PolicyId p);
PolicyId policy_from_string(std::string_view s);

/// A scheduling policy is asked for a batch whenever tasks are pending and
/// slots are idle. `pending` is ordered by (arrival, id).
class Policy {
public:
    virtual ~Policy() = default;
    virtual PolicyId id() const = 0;
    virtual std::vector<TaskId> select(std::span<const Task> pending, const ResourceTable& table,
                                       double now) = 0;
};

struct TaskRecord {
    TaskId task_id = 0;
    double arrival = 0.0;
    double dispatch = 0.0;
    double first_response = 0.0;
    double completion = 0.0;
    double exec_duration = 0.0;
    double cost = 0.0;
    int resource_id = 0;
    int demand = 1;

    double response() const { return first_response - arrival; }
    bool operator==(const TaskRecord&) const = default;
};

struct Aggregates {
    std::size_t tasks = 0;
    double total_exec = 0.0;
    double mean_exec = 0.0;
    double total_cost = 0.0;
    double mean_cost = 0.0;
    double total_response = 0.0;
    double mean_response = 0.0;
    double horizon_start = 0.0;
    double horizon_end = 0.0;
    double utilization = 0.0;

    bool operator==(const Aggregates&) const = default;
};

struct SimReport {
    PolicyId policy = PolicyId::Fifo;
    int total_slots = 0;
    std::size_t rounds = 0;
    std::vector<TaskRecord> records; // dispatch order
    Aggregates aggregates;
    std::vector<SimEvent> events;

    bool operator==(const SimReport&) const = default;
};

/// Busy slot-seconds over total slot-seconds from first arrival to last completion.
double utilization(std::span<const TaskRecord> records, int total_slots);
double utilization(const SimReport& report, const EnvConfig& env);

Aggregates aggregate(std::span<const TaskRecord> records, int total_slots);

/// Called after every event is applied to the table.
using Observer = std::function<void(const SimEvent&, const ResourceTable&)>;

SimReport run(const TaskSet& workload, Policy& policy, const EnvConfig& env,
              const Observer& observer = {});

std::string events_csv(std::span<const SimEvent> events);
std::string report_to_json(const SimReport& r);
SimReport report_from_json(std::string_view text);

} // namespace cloudsched::sim
