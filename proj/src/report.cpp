#include "cloudsched/report.hpp"

#include "cloudsched/error.hpp"
#include "cloudsched/format.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

namespace cloudsched::report {

std::vector<Row> raw_rows(const std::map<sim::PolicyId, sim::SimReport>& reports)
{
    std::vector<Row> rows;
    for (const auto& [id, r] : reports) {
        const auto& a = r.aggregates;
        rows.push_back({sim::to_string(id), a.utilization, a.mean_response, a.mean_cost, a.mean_exec});
    }
    return rows;
}

namespace {

std::vector<TaskId> task_ids(const sim::SimReport& r)
{
    std::vector<TaskId> ids;
    ids.reserve(r.records.size());
    for (const auto& t : r.records)
        ids.push_back(t.task_id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

void minmax_column(std::vector<Row>& rows, double Row::*field)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
        lo = std::min(lo, r.*field);
        hi = std::max(hi, r.*field);
    }
    // a spread at rounding level is a constant column, not a ranking
    const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
    const bool flat = !(hi - lo > 1e-12 * scale);
    for (auto& r : rows)
        r.*field = flat ? 0.0 : (r.*field - lo) / (hi - lo);
}

} // namespace

ComparisonTable compare(const std::map<sim::PolicyId, sim::SimReport>& reports,
                        std::span<const Row> external)
{
    if (reports.empty() || reports.size() + external.size() < 2)
        throw InvalidArgument("compare: need at least two runs to compare");

    const auto reference = task_ids(reports.begin()->second);
    for (const auto& [id, r] : reports) {
        if (task_ids(r) != reference)
            throw InvalidArgument("compare: report for " + sim::to_string(id) +
                                  " covers a different workload");
    }

    ComparisonTable table;
    table.rows = raw_rows(reports);
    table.rows.insert(table.rows.end(), external.begin(), external.end());
    for (auto field : {&Row::utility, &Row::response, &Row::cost, &Row::exec})
        minmax_column(table.rows, field);
    return table;
}

std::string table_csv(const ComparisonTable& t)
{
    std::string out = "# normalization: " + t.normalization + "\n";
    out += "Algorithm,Utility,Response Time,Cost,Execution Time\n";
    for (const auto& r : t.rows) {
        out += r.algorithm;
        for (double v : {r.utility, r.response, r.cost, r.exec}) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

namespace {

double parse_cell(std::string_view s)
{
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError("comparison table: bad number '" + std::string(s) + "'");
    return v;
}

} // namespace

ComparisonTable table_from_csv(std::string_view text)
{
    ComparisonTable t;
    t.normalization.clear();
    bool header = false;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (line.empty())
            continue;
        constexpr std::string_view meta = "# normalization: ";
        if (line.starts_with(meta)) {
            t.normalization = std::string(line.substr(meta.size()));
            continue;
        }
        if (line.front() == '#')
            continue;
        if (!header) {
            if (line != "Algorithm,Utility,Response Time,Cost,Execution Time")
                throw ParseError("comparison table: unexpected header");
            header = true;
            continue;
        }
        std::vector<std::string_view> cells;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            cells.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
            if (comma == std::string_view::npos)
                break;
            start = comma + 1;
        }
        if (cells.size() != 5)
            throw ParseError("comparison table: expected 5 cells per row");
        t.rows.push_back({std::string(cells[0]), parse_cell(cells[1]), parse_cell(cells[2]),
                          parse_cell(cells[3]), parse_cell(cells[4])});
    }
    if (!header)
        throw ParseError("comparison table: missing header");
    return t;
}

Metric metric_from_string(std::string_view s)
{
    if (s == "exec")
        return Metric::Exec;
    if (s == "cost")
        return Metric::Cost;
    if (s == "response")
        return Metric::Response;
    throw InvalidArgument("unknown metric '" + std::string(s) + "' (expected exec, cost or response)");
}

std::string to_string(Metric m)
{
    switch (m) {
    case Metric::Exec: return "exec";
    case Metric::Cost: return "cost";
    case Metric::Response: return "response";
    }
    return "exec";
}

Series per_task_series(const sim::SimReport& report, Metric metric)
{
    Series s;
    s.reserve(report.records.size());
    for (const auto& r : report.records) {
        double v = 0.0;
        switch (metric) {
        case Metric::Exec: v = r.exec_duration; break;
        case Metric::Cost: v = r.cost; break;
        case Metric::Response: v = r.response(); break;
        }
        s.emplace_back(r.task_id, v);
    }
    return s;
}

std::string series_csv(const Series& s)
{
    std::string out = "task_id,value\n";
    for (const auto& [id, v] : s) {
        out += std::to_string(id);
        out += ',';
        out += format_double(v);
        out += '\n';
    }
    return out;
}

} // namespace cloudsched::report
