#pragma once

#include "cloudsched/simenv.hpp"

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cloudsched::report {

struct Row {
    std::string algorithm;
    double utility = 0.0;
    double response = 0.0;
    double cost = 0.0;
    double exec = 0.0;

    bool operator==(const Row&) const = default;
};

inline constexpr const char* kNormalization =
    "min-max across policies per column over aggregate means; utility = utilization";

struct ComparisonTable {
    std::vector<Row> rows;
    std::string normalization = kNormalization;

    bool operator==(const ComparisonTable&) const = default;
};

/// Raw (un-normalized) aggregate row for each report, in policy order.
std::vector<Row> raw_rows(const std::map<sim::PolicyId, sim::SimReport>& reports);

/// Min-max normalizes every column across rows. Constant columns become 0.
/// `external` rows carry user-supplied aggregates for methods not simulated here.
ComparisonTable compare(const std::map<sim::PolicyId, sim::SimReport>& reports,
                        std::span<const Row> external = {});

std::string table_csv(const ComparisonTable& t);
ComparisonTable table_from_csv(std::string_view text);

enum class Metric { Exec, Cost, Response };

Metric metric_from_string(std::string_view s);
std::string to_string(Metric m);

using Series = std::vector<std::pair<TaskId, double>>;

/// One value per dispatched task, in dispatch order.
Series per_task_series(const sim::SimReport& report, Metric metric);
std::string series_csv(const Series& s);

} // namespace cloudsched::report
