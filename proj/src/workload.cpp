#include "cloudsched/workload.hpp"

#include "cloudsched/error.hpp"
#include "cloudsched/format.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <unordered_set>

namespace cloudsched {

std::string format_double(double v)
{
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    (void)ec;
    return std::string(buf.data(), ptr);
}

const Task* TaskSet::find(TaskId id) const
{
    for (const auto& t : tasks) {
        if (t.id == id)
            return &t;
    }
    return nullptr;
}

namespace workload {

namespace {

constexpr std::array<std::string_view, 6> kColumns = {
    "id", "exec_time", "cost", "sys_eff", "resource_demand", "arrival"};

std::string_view trim(std::string_view s)
{
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

[[noreturn]] void row_error(std::string_view source, std::size_t line, std::string_view column,
                            const std::string& what)
{
    std::ostringstream os;
    os << source << ": malformed row at line " << line << ", column " << column << ": " << what;
    throw ParseError(os.str());
}

template <typename T>
T parse_number(std::string_view field, std::string_view source, std::size_t line,
               std::string_view column)
{
    T value{};
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (field.empty() || ec != std::errc{} || ptr != last)
        row_error(source, line, column, "cannot parse '" + std::string(field) + "'");
    return value;
}

} // namespace

void validate(const Task& t)
{
    auto fail = [&](const std::string& what) {
        throw InvalidArgument("task " + std::to_string(t.id) + ": " + what);
    };
    if (!(t.exec_time > 0.0))
        fail("exec_time must be > 0");
    if (!(t.cost >= 0.0))
        fail("cost must be >= 0");
    if (!(t.sys_eff >= 0.0 && t.sys_eff <= 1.0))
        fail("sys_eff must lie in [0,1]");
    if (t.resource_demand < 1)
        fail("resource_demand must be >= 1");
    if (!(t.arrival >= 0.0))
        fail("arrival must be >= 0");
}

void validate(const TaskSet& ts)
{
    std::unordered_set<TaskId> seen;
    for (const auto& t : ts.tasks) {
        if (!seen.insert(t.id).second)
            throw InvalidArgument("duplicate task id " + std::to_string(t.id));
        if (ts.normalized) {
            for (double v : {t.exec_time, t.cost, t.sys_eff}) {
                if (!(v >= 0.0 && v <= 1.0))
                    throw InvalidArgument("task " + std::to_string(t.id) +
                                          ": normalized attribute outside [0,1]");
            }
        }
        else {
            validate(t);
        }
    }
}

TaskSet parse_trace(std::string_view text, std::optional<std::size_t> limit, std::string_view source)
{
    if (limit && *limit == 0)
        throw InvalidArgument("zero valid rows requested");

    TaskSet ts;
    std::unordered_set<TaskId> seen;
    bool header_seen = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        const auto line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;

        if (line.empty() || line.front() == '#')
            continue;

        const auto fields = split(line, ',');
        if (!header_seen) {
            if (fields.size() != kColumns.size() ||
                !std::equal(fields.begin(), fields.end(), kColumns.begin()))
                throw ParseError(std::string(source) + ": line " + std::to_string(line_no) +
                                 ": expected header id,exec_time,cost,sys_eff,resource_demand,arrival");
            header_seen = true;
            continue;
        }
        if (fields.size() != kColumns.size())
            row_error(source, line_no, "*",
                      "expected 6 fields, found " + std::to_string(fields.size()));

        Task t;
        t.id = parse_number<TaskId>(fields[0], source, line_no, kColumns[0]);
        t.exec_time = parse_number<double>(fields[1], source, line_no, kColumns[1]);
        t.cost = parse_number<double>(fields[2], source, line_no, kColumns[2]);
        t.sys_eff = parse_number<double>(fields[3], source, line_no, kColumns[3]);
        t.resource_demand = parse_number<int>(fields[4], source, line_no, kColumns[4]);
        t.arrival = parse_number<double>(fields[5], source, line_no, kColumns[5]);

        if (!(t.exec_time > 0.0))
            row_error(source, line_no, kColumns[1], "must be > 0");
        if (!(t.cost >= 0.0))
            row_error(source, line_no, kColumns[2], "must be >= 0");
        if (!(t.sys_eff >= 0.0 && t.sys_eff <= 1.0))
            row_error(source, line_no, kColumns[3], "must lie in [0,1]");
        if (t.resource_demand < 1)
            row_error(source, line_no, kColumns[4], "must be >= 1");
        if (!(t.arrival >= 0.0))
            row_error(source, line_no, kColumns[5], "must be >= 0");
        if (!seen.insert(t.id).second)
            row_error(source, line_no, kColumns[0], "duplicate id " + std::to_string(t.id));

        ts.tasks.push_back(t);
        if (limit && ts.tasks.size() >= *limit)
            break;
    }
    if (!header_seen)
        throw ParseError(std::string(source) + ": missing header row");
    if (ts.tasks.empty())
        throw ParseError(std::string(source) + ": zero valid rows");
    return ts;
}

TaskSet load_trace(const std::filesystem::path& path, std::optional<std::size_t> limit)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open trace file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_trace(buf.str(), limit, path.string());
}

std::string format_trace(const TaskSet& ts)
{
    std::string out = "id,exec_time,cost,sys_eff,resource_demand,arrival\n";
    for (const auto& t : ts.tasks) {
        out += std::to_string(t.id);
        for (double v : {t.exec_time, t.cost, t.sys_eff}) {
            out += ',';
            out += format_double(v);
        }
        out += ',';
        out += std::to_string(t.resource_demand);
        out += ',';
        out += format_double(t.arrival);
        out += '\n';
    }
    return out;
}

void save_trace(const TaskSet& ts, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write trace file: " + path.string());
    out << format_trace(ts);
}

TaskSet synth_workload(std::uint64_t seed, std::size_t n, const SynthRanges& r)
{
    if (n == 0)
        throw InvalidArgument("synth_workload: n must be >= 1");
    auto check = [](const RealRange& range, const char* name, double lo, double hi) {
        if (!(range.min < range.max))
            throw InvalidArgument(std::string("synth_workload: ") + name + " range needs min < max");
        if (range.min < lo || range.max > hi)
            throw InvalidArgument(std::string("synth_workload: ") + name +
                                  " range violates task invariants");
    };
    check(r.exec_time, "exec_time", 0.0, std::numeric_limits<double>::infinity());
    if (r.exec_time.min <= 0.0)
        throw InvalidArgument("synth_workload: exec_time range must be > 0");
    check(r.cost, "cost", 0.0, std::numeric_limits<double>::infinity());
    check(r.sys_eff, "sys_eff", 0.0, 1.0);
    check(r.arrival, "arrival", 0.0, std::numeric_limits<double>::infinity());
    if (r.resource_demand.min < 1 || r.resource_demand.min > r.resource_demand.max)
        throw InvalidArgument("synth_workload: resource_demand range needs 1 <= min <= max");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> exec(r.exec_time.min, r.exec_time.max);
    std::uniform_real_distribution<double> cost(r.cost.min, r.cost.max);
    std::uniform_real_distribution<double> eff(r.sys_eff.min, r.sys_eff.max);
    std::uniform_int_distribution<int> demand(r.resource_demand.min, r.resource_demand.max);
    std::uniform_real_distribution<double> arrival(r.arrival.min, r.arrival.max);

    TaskSet ts;
    ts.tasks.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Task t;
        t.id = static_cast<TaskId>(i);
        t.exec_time = exec(rng);
        t.cost = cost(rng);
        t.sys_eff = eff(rng);
        t.resource_demand = demand(rng);
        t.arrival = arrival(rng);
        ts.tasks.push_back(t);
    }
    return ts;
}

FeatureScaler FeatureScaler::fit(std::span<const Task> tasks)
{
    if (tasks.empty())
        throw InvalidArgument("cannot fit a scaler on an empty task set");
    FeatureScaler s;
    for (int a = 0; a < 3; ++a) {
        s.min_[a] = std::numeric_limits<double>::infinity();
        s.max_[a] = -std::numeric_limits<double>::infinity();
    }
    for (const auto& t : tasks) {
        const double v[3] = {t.exec_time, t.cost, t.sys_eff};
        for (int a = 0; a < 3; ++a) {
            s.min_[a] = std::min(s.min_[a], v[a]);
            s.max_[a] = std::max(s.max_[a], v[a]);
        }
    }
    return s;
}

Task FeatureScaler::apply(const Task& t) const
{
    auto scale = [&](double x, int a) {
        const double span = max_[a] - min_[a];
        if (!(span > 0.0))
            return 0.0;
        return std::clamp((x - min_[a]) / span, 0.0, 1.0);
    };
    Task out = t;
    out.exec_time = scale(t.exec_time, 0);
    out.cost = scale(t.cost, 1);
    out.sys_eff = scale(t.sys_eff, 2);
    return out;
}

TaskSet normalize(const TaskSet& ts)
{
    if (ts.empty())
        throw InvalidArgument("normalize: empty task set");
    const auto scaler = FeatureScaler::fit(ts.tasks);
    TaskSet out;
    out.normalized = true;
    out.tasks.reserve(ts.size());
    for (const auto& t : ts.tasks)
        out.tasks.push_back(scaler.apply(t));
    return out;
}

} // namespace workload
} // namespace cloudsched
