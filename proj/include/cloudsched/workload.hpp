#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cloudsched {

using TaskId = std::uint32_t;

/// One unit of work. Attribute units are seconds for times and an abstract
/// currency for cost; resource_demand counts VM slots.
struct Task {
    TaskId id = 0;
    double exec_time = 1.0;
    double cost = 0.0;
    double sys_eff = 0.0;
    int resource_demand = 1;
    double arrival = 0.0;
    std::optional<double> waiting_since;

    bool operator==(const Task&) const = default;
};

struct TaskSet {
    std::vector<Task> tasks;
    bool normalized = false;

    bool operator==(const TaskSet&) const = default;

    std::size_t size() const { return tasks.size(); }
    bool empty() const { return tasks.empty(); }
    const Task* find(TaskId id) const;
};

namespace workload {

/// Throws InvalidArgument when a raw task breaks exec_time > 0,
/// resource_demand >= 1, 0 <= sys_eff <= 1, cost >= 0 or arrival >= 0.
void validate(const Task& t);

/// Checks id uniqueness and, for normalized sets, that the scored
/// attributes lie in [0,1].
void validate(const TaskSet& ts);

/// Reads the six-column CSV trace format. `limit` caps the number of rows read.
TaskSet load_trace(const std::filesystem::path& path, std::optional<std::size_t> limit = {});

/// Parses trace text directly; `source` only labels error messages.
TaskSet parse_trace(std::string_view text, std::optional<std::size_t> limit = {},
                    std::string_view source = "<memory>");

/// Writes `ts` in the trace format with shortest round-trip decimal output.
std::string format_trace(const TaskSet& ts);
void save_trace(const TaskSet& ts, const std::filesystem::path& path);

struct RealRange {
    double min;
    double max;
};

struct IntRange {
    int min;
    int max; // inclusive
};

struct SynthRanges {
    RealRange exec_time{1.0, 20.0};
    RealRange cost{0.0, 10.0};
    RealRange sys_eff{0.0, 1.0};
    IntRange resource_demand{1, 4};
    RealRange arrival{0.0, 100.0};
};

/// Deterministic uniform workload with ids 0..n-1.
TaskSet synth_workload(std::uint64_t seed, std::size_t n, const SynthRanges& ranges = {});

/// Per-attribute min-max bounds for the three scored attributes
/// (exec_time, cost, sys_eff).
class FeatureScaler {
public:
    FeatureScaler() = default;

    static FeatureScaler fit(std::span<const Task> tasks);

    /// Maps the scored attributes into [0,1]; values outside the fitted
    /// bounds are clamped. Arrival and resource_demand pass through.
    Task apply(const Task& t) const;

    double min(int attr) const { return min_[attr]; }
    double max(int attr) const { return max_[attr]; }

private:
    double min_[3] = {0, 0, 0};
    double max_[3] = {0, 0, 0};
};

/// Min-max normalization per scored attribute over the set. Constant
/// attributes map to 0.
TaskSet normalize(const TaskSet& ts);

} // namespace workload
} // namespace cloudsched
