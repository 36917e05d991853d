#include "cloudsched/experiment.hpp"

#include "cloudsched/baselines.hpp"
#include "cloudsched/format.hpp"
#include "cloudsched/scheduler.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

namespace cloudsched {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::set<std::string> kKnownKeys = {
    "seed", "out", "policies", "cache_dir",
    "workload.trace", "workload.limit", "workload.n", "workload.seed",
    "workload.exec_min", "workload.exec_max", "workload.cost_min", "workload.cost_max",
    "workload.sys_eff_min", "workload.sys_eff_max", "workload.demand_min", "workload.demand_max",
    "workload.arrival_min", "workload.arrival_max",
    "env.resources", "env.vm_slots", "env.speed_factors", "env.cost_rates",
    "wp.et", "wp.c", "wp.se",
    "n2tc.epsilon", "n2tc.hidden", "n2tc.max_epochs", "n2tc.seed", "n2tc.max_wall_time",
    "n2tc.performance_goal", "n2tc.min_gradient", "n2tc.val_fail_limit",
    "n2tc.train_ratio", "n2tc.val_ratio", "n2tc.test_ratio",
    "ga.pop_size", "ga.chrom_len", "ga.mutation_rate", "ga.elite_fraction", "ga.max_iterations",
    "ga.patience", "ga.seed", "ga.fairness_factor", "ga.fairness_mode", "ga.local_search_k",
};

std::string fairness_mode_name(gata::FairnessMode m)
{
    return m == gata::FairnessMode::PerGene ? "per_gene" : "whole_chromosome";
}

gata::FairnessMode fairness_mode_from(const std::string& s)
{
    if (s == "per_gene")
        return gata::FairnessMode::PerGene;
    if (s == "whole_chromosome")
        return gata::FairnessMode::WholeChromosome;
    throw ConfigError("unknown fairness mode '" + s + "' (expected per_gene or whole_chromosome)");
}

std::uint64_t non_negative(const KeyValueConfig& kv, const std::string& key, std::uint64_t fallback)
{
    const auto v = kv.get_int(key, static_cast<long long>(fallback));
    if (v < 0)
        throw ConfigError("key '" + key + "' must be non-negative");
    return static_cast<std::uint64_t>(v);
}

std::optional<std::uint64_t> optional_seed(const KeyValueConfig& kv, const std::string& key)
{
    if (!kv.has(key))
        return std::nullopt;
    return non_negative(kv, key, 0);
}

std::string list_text(const std::vector<double>& v)
{
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            out += ", ";
        out += format_double(v[i]);
    }
    return out + "]";
}

void write_file(const fs::path& path, std::string_view text)
{
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out)
        throw Error("write failed: " + path.string());
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL)
{
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string training_key(const n2tc::LabeledData& data, const ExperimentConfig& cfg)
{
    std::string text;
    for (const auto& s : data.samples) {
        for (double v : s.features)
            text += format_double(v) + ",";
        for (double v : s.target)
            text += format_double(v) + ",";
        text += '\n';
    }
    const auto& t = cfg.train;
    text += "sizes";
    for (int n : t.layer_sizes)
        text += " " + std::to_string(n);
    text += "\nmax_epochs " + std::to_string(t.max_epochs);
    text += "\nwall " + format_double(t.max_wall_time);
    text += "\ngoal " + format_double(t.performance_goal);
    text += "\nmin_grad " + format_double(t.min_gradient);
    text += "\nval_fail " + std::to_string(t.val_fail_limit);
    text += "\nratios " + format_double(t.train_ratio) + " " + format_double(t.val_ratio) + " " +
            format_double(t.test_ratio);
    text += "\nseed " + std::to_string(cfg.classifier_seed_value());
    text += "\nscg " + format_double(t.scg_sigma) + " " + format_double(t.scg_lambda);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(text)));
    return buf;
}

n2tc::TrainConfig resolved_train(const ExperimentConfig& cfg)
{
    auto t = cfg.train;
    t.seed = cfg.classifier_seed_value();
    return t;
}

} // namespace

std::string ExperimentConfig::to_text() const
{
    std::ostringstream o;
    o << "seed = " << seed << '\n';
    o << "policies = [";
    for (std::size_t i = 0; i < policies.size(); ++i)
        o << (i ? ", " : "") << '"' << sim::to_string(policies[i]) << '"';
    o << "]\n\n[workload]\n";
    if (trace) {
        o << "trace = \"" << trace->generic_string() << "\"\n";
        if (trace_limit)
            o << "limit = " << *trace_limit << '\n';
    }
    else {
        o << "n = " << synth_tasks << '\n';
        o << "seed = " << workload_seed_value() << '\n';
        o << "exec_min = " << format_double(ranges.exec_time.min) << '\n';
        o << "exec_max = " << format_double(ranges.exec_time.max) << '\n';
        o << "cost_min = " << format_double(ranges.cost.min) << '\n';
        o << "cost_max = " << format_double(ranges.cost.max) << '\n';
        o << "sys_eff_min = " << format_double(ranges.sys_eff.min) << '\n';
        o << "sys_eff_max = " << format_double(ranges.sys_eff.max) << '\n';
        o << "demand_min = " << ranges.resource_demand.min << '\n';
        o << "demand_max = " << ranges.resource_demand.max << '\n';
        o << "arrival_min = " << format_double(ranges.arrival.min) << '\n';
        o << "arrival_max = " << format_double(ranges.arrival.max) << '\n';
    }
    o << "\n[env]\n";
    o << "resources = " << env.resources << '\n';
    o << "vm_slots = " << env.vm_slots << '\n';
    if (!env.speed_factors.empty())
        o << "speed_factors = " << list_text(env.speed_factors) << '\n';
    if (!env.cost_rates.empty())
        o << "cost_rates = " << list_text(env.cost_rates) << '\n';
    o << "\n[wp]\n";
    o << "et = " << format_double(wp.et) << '\n';
    o << "c = " << format_double(wp.c) << '\n';
    o << "se = " << format_double(wp.se) << '\n';
    o << "\n[n2tc]\n";
    o << "epsilon = " << format_double(epsilon_fraction) << '\n';
    o << "hidden = " << train.layer_sizes.at(1) << '\n';
    o << "max_epochs = " << train.max_epochs << '\n';
    o << "seed = " << classifier_seed_value() << '\n';
    o << "max_wall_time = " << format_double(train.max_wall_time) << '\n';
    o << "performance_goal = " << format_double(train.performance_goal) << '\n';
    o << "min_gradient = " << format_double(train.min_gradient) << '\n';
    o << "val_fail_limit = " << train.val_fail_limit << '\n';
    o << "train_ratio = " << format_double(train.train_ratio) << '\n';
    o << "val_ratio = " << format_double(train.val_ratio) << '\n';
    o << "test_ratio = " << format_double(train.test_ratio) << '\n';
    o << "\n[ga]\n";
    o << "pop_size = " << ga.pop_size << '\n';
    o << "chrom_len = " << ga.chrom_len << '\n';
    o << "mutation_rate = " << format_double(ga.mutation_rate) << '\n';
    o << "elite_fraction = " << format_double(ga.elite_fraction) << '\n';
    o << "max_iterations = " << ga.max_iterations << '\n';
    o << "patience = " << ga.patience << '\n';
    o << "seed = " << ga_seed_value() << '\n';
    o << "fairness_factor = " << format_double(ga.fairness_factor) << '\n';
    o << "fairness_mode = \"" << fairness_mode_name(ga.fairness_mode) << "\"\n";
    o << "local_search_k = " << ga.local_search_k << '\n';
    if (!external.empty()) {
        o << "\n[external]\n";
        for (const auto& r : external)
            o << r.algorithm << " = "
              << list_text({r.utility, r.response, r.cost, r.exec}) << '\n';
    }
    return o.str();
}

ExperimentConfig experiment_config_from(const KeyValueConfig& kv)
{
    for (const auto& [key, _] : kv.values())
        if (!kKnownKeys.contains(key) && !key.starts_with("external."))
            throw ConfigError("unknown config key '" + key + "'");

    ExperimentConfig cfg;
    cfg.seed = non_negative(kv, "seed", cfg.seed);
    if (kv.has("policies")) {
        cfg.policies.clear();
        for (const auto& name : kv.get_list("policies")) {
            try {
                cfg.policies.push_back(sim::policy_from_string(name));
            }
            catch (const InvalidArgument& e) {
                throw ConfigError(e.what());
            }
        }
        if (cfg.policies.empty())
            throw ConfigError("policies list is empty");
    }
    cfg.out_dir = kv.get_string("out", cfg.out_dir.string());
    if (kv.has("cache_dir"))
        cfg.cache_dir = kv.get_string("cache_dir", "");

    if (kv.has("workload.trace")) {
        cfg.trace = kv.get_string("workload.trace", "");
        if (!fs::exists(*cfg.trace))
            throw ConfigError("trace file not found: " + cfg.trace->string());
        if (kv.has("workload.limit"))
            cfg.trace_limit = non_negative(kv, "workload.limit", 0);
    }
    cfg.synth_tasks = non_negative(kv, "workload.n", cfg.synth_tasks);
    cfg.workload_seed = optional_seed(kv, "workload.seed");
    auto& r = cfg.ranges;
    r.exec_time.min = kv.get_double("workload.exec_min", r.exec_time.min);
    r.exec_time.max = kv.get_double("workload.exec_max", r.exec_time.max);
    r.cost.min = kv.get_double("workload.cost_min", r.cost.min);
    r.cost.max = kv.get_double("workload.cost_max", r.cost.max);
    r.sys_eff.min = kv.get_double("workload.sys_eff_min", r.sys_eff.min);
    r.sys_eff.max = kv.get_double("workload.sys_eff_max", r.sys_eff.max);
    r.resource_demand.min = static_cast<int>(kv.get_int("workload.demand_min", r.resource_demand.min));
    r.resource_demand.max = static_cast<int>(kv.get_int("workload.demand_max", r.resource_demand.max));
    r.arrival.min = kv.get_double("workload.arrival_min", r.arrival.min);
    r.arrival.max = kv.get_double("workload.arrival_max", r.arrival.max);

    cfg.env.resources = static_cast<int>(kv.get_int("env.resources", cfg.env.resources));
    cfg.env.vm_slots = static_cast<int>(kv.get_int("env.vm_slots", cfg.env.vm_slots));
    cfg.env.speed_factors = kv.get_double_list("env.speed_factors");
    cfg.env.cost_rates = kv.get_double_list("env.cost_rates");

    cfg.wp.et = kv.get_double("wp.et", cfg.wp.et);
    cfg.wp.c = kv.get_double("wp.c", cfg.wp.c);
    cfg.wp.se = kv.get_double("wp.se", cfg.wp.se);

    cfg.epsilon_fraction = kv.get_double("n2tc.epsilon", cfg.epsilon_fraction);
    cfg.train.layer_sizes[1] = static_cast<int>(kv.get_int("n2tc.hidden", cfg.train.layer_sizes[1]));
    cfg.train.max_epochs = static_cast<int>(kv.get_int("n2tc.max_epochs", cfg.train.max_epochs));
    cfg.classifier_seed = optional_seed(kv, "n2tc.seed");
    cfg.train.max_wall_time = kv.get_double("n2tc.max_wall_time", cfg.train.max_wall_time);
    cfg.train.performance_goal = kv.get_double("n2tc.performance_goal", cfg.train.performance_goal);
    cfg.train.min_gradient = kv.get_double("n2tc.min_gradient", cfg.train.min_gradient);
    cfg.train.val_fail_limit = static_cast<int>(kv.get_int("n2tc.val_fail_limit", cfg.train.val_fail_limit));
    cfg.train.train_ratio = kv.get_double("n2tc.train_ratio", cfg.train.train_ratio);
    cfg.train.val_ratio = kv.get_double("n2tc.val_ratio", cfg.train.val_ratio);
    cfg.train.test_ratio = kv.get_double("n2tc.test_ratio", cfg.train.test_ratio);

    cfg.ga.pop_size = non_negative(kv, "ga.pop_size", cfg.ga.pop_size);
    cfg.ga.chrom_len = non_negative(kv, "ga.chrom_len", cfg.ga.chrom_len);
    cfg.ga.mutation_rate = kv.get_double("ga.mutation_rate", cfg.ga.mutation_rate);
    cfg.ga.elite_fraction = kv.get_double("ga.elite_fraction", cfg.ga.elite_fraction);
    cfg.ga.max_iterations = static_cast<int>(kv.get_int("ga.max_iterations", cfg.ga.max_iterations));
    cfg.ga.patience = static_cast<int>(kv.get_int("ga.patience", cfg.ga.patience));
    cfg.ga_seed = optional_seed(kv, "ga.seed");
    cfg.ga.fairness_factor = kv.get_double("ga.fairness_factor", cfg.ga.fairness_factor);
    if (kv.has("ga.fairness_mode"))
        cfg.ga.fairness_mode = fairness_mode_from(kv.get_string("ga.fairness_mode", ""));
    cfg.ga.local_search_k = non_negative(kv, "ga.local_search_k", cfg.ga.local_search_k);

    for (const auto& [key, _] : kv.values()) {
        if (!key.starts_with("external."))
            continue;
        const auto v = kv.get_double_list(key);
        if (v.size() != 4)
            throw ConfigError("key '" + key + "' needs [utility, response, cost, exec]");
        cfg.external.push_back({key.substr(9), v[0], v[1], v[2], v[3]});
    }

    // Value checks live with each module; surface them as config problems.
    try {
        cfg.env.validate();
        cfg.wp.validate();
        cfg.train.validate();
        cfg.ga.validate(cfg.ga.chrom_len);
    }
    catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    if (cfg.train.layer_sizes[1] < 1)
        throw ConfigError("n2tc.hidden must be at least 1");
    if (!(cfg.epsilon_fraction > 0.0))
        throw ConfigError("n2tc.epsilon must be positive");
    if (!cfg.trace && cfg.synth_tasks == 0)
        throw ConfigError("workload.n must be positive");
    return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path)
{
    auto kv = KeyValueConfig::load(path);
    // relative trace paths are taken from the config file's directory
    if (const auto trace = kv.get("workload.trace"); trace && fs::path(*trace).is_relative())
        kv.set("workload.trace", (path.parent_path() / *trace).lexically_normal().string());
    return experiment_config_from(kv);
}

TaskSet build_workload(const ExperimentConfig& cfg)
{
    if (cfg.trace)
        return workload::load_trace(*cfg.trace, cfg.trace_limit);
    return workload::synth_workload(cfg.workload_seed_value(), cfg.synth_tasks, cfg.ranges);
}

n2tc::NeuralModel train_classifier(const TaskSet& tasks, const ExperimentConfig& cfg)
{
    const auto normalized = workload::normalize(tasks);
    const auto data = n2tc::label_tasks(normalized, cfg.wp, cfg.classifier_seed_value(), cfg.epsilon_fraction);

    std::optional<fs::path> cached;
    if (cfg.cache_dir) {
        cached = *cfg.cache_dir / ("model_" + training_key(data, cfg) + ".json");
        if (fs::exists(*cached))
            return n2tc::model_from_json(read_file(*cached));
    }
    auto model = n2tc::train(data.samples, resolved_train(cfg));
    if (cached)
        write_file(*cached, n2tc::model_to_json(model));
    return model;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write)
{
    ExperimentResult result;
    result.workload = build_workload(cfg);
    const auto scaler = workload::FeatureScaler::fit(result.workload.tasks);
    const bool wants_model = std::find(cfg.policies.begin(), cfg.policies.end(),
                                       sim::PolicyId::Proposed) != cfg.policies.end();
    if (wants_model)
        result.model = train_classifier(result.workload, cfg);

    const fs::path& out = cfg.out_dir;
    std::vector<sched::RoundPlan> plans;
    for (const auto policy_id : cfg.policies) {
        if (result.reports.contains(policy_id))
            continue;
        std::unique_ptr<sim::Policy> policy;
        sched::ProposedPolicy* proposed = nullptr;
        switch (policy_id) {
        case sim::PolicyId::Proposed: {
            auto ga = cfg.ga;
            ga.seed = cfg.ga_seed_value();
            auto p = std::make_unique<sched::ProposedPolicy>(*result.model, scaler,
                                                             sched::SchedulerConfig{cfg.wp, ga});
            proposed = p.get();
            policy = std::move(p);
            break;
        }
        case sim::PolicyId::Fifo:
            policy = std::make_unique<baselines::FifoPolicy>();
            break;
        case sim::PolicyId::Sjf:
            policy = std::make_unique<baselines::SjfPolicy>();
            break;
        case sim::PolicyId::RouletteGa: {
            auto ga = cfg.ga;
            ga.seed = cfg.roulette_seed_value();
            policy = std::make_unique<baselines::RouletteGaPolicy>(scaler, cfg.wp, ga);
            break;
        }
        }
        try {
            result.reports[policy_id] = sim::run(result.workload, *policy, cfg.env);
        }
        catch (const Error& e) {
            throw Error("simulation (" + sim::to_string(policy_id) + "): " + e.what());
        }
        if (proposed)
            plans = proposed->plans();
    }

    if (result.reports.size() + cfg.external.size() >= 2)
        result.table = report::compare(result.reports, cfg.external);

    if (!write)
        return result;

    write_file(out / "config.resolved", cfg.to_text());
    write_file(out / "workload.csv", workload::format_trace(result.workload));
    if (result.model)
        write_file(out / "model.json", n2tc::model_to_json(*result.model));
    for (const auto& [id, rep] : result.reports) {
        const auto name = sim::to_string(id);
        write_file(out / "reports" / (name + ".json"), sim::report_to_json(rep));
        write_file(out / "events" / (name + ".csv"), sim::events_csv(rep.events));
        for (const auto m : {report::Metric::Exec, report::Metric::Cost, report::Metric::Response})
            write_file(out / "series" / (name + "_" + report::to_string(m) + ".csv"),
                       report::series_csv(report::per_task_series(rep, m)));
    }
    if (!plans.empty()) {
        std::string lines;
        for (const auto& p : plans) {
            lines += sched::round_log_line(p);
            lines += '\n';
            if (p.ga) {
                char name[32];
                std::snprintf(name, sizeof name, "round_%04zu.csv", p.round);
                write_file(out / "fitness" / "proposed" / name, gata::fitness_trace_csv(*p.ga));
            }
        }
        write_file(out / "rounds" / "proposed.jsonl", lines);
    }
    if (result.table)
        write_file(out / "comparison.csv", report::table_csv(*result.table));
    return result;
}

report::ComparisonTable report_directory(const fs::path& dir, const std::vector<report::Row>& external)
{
    const auto reports_dir = dir / "reports";
    if (!fs::is_directory(reports_dir))
        throw Error("no reports directory under " + dir.string());
    std::map<sim::PolicyId, sim::SimReport> reports;
    for (const auto& entry : fs::directory_iterator(reports_dir)) {
        if (entry.path().extension() != ".json")
            continue;
        auto rep = sim::report_from_json(read_file(entry.path()));
        reports[rep.policy] = std::move(rep);
    }
    auto table = report::compare(reports, external);
    write_file(dir / "comparison.csv", report::table_csv(table));
    return table;
}

OracleInstance oracle_instance_from_json(std::string_view text)
{
    json j;
    try {
        j = json::parse(text);
    }
    catch (const json::exception& e) {
        throw ParseError(std::string("oracle instance: ") + e.what());
    }
    OracleInstance inst;
    try {
        inst.chrom_len = j.at("chrom_len").get<std::size_t>();
        inst.fairness_factor = j.value("fairness_factor", inst.fairness_factor);
        if (j.contains("fairness_mode"))
            inst.mode = fairness_mode_from(j.at("fairness_mode").get<std::string>());
        for (const auto& t : j.at("tasks")) {
            const auto id = t.at("id").get<TaskId>();
            if (inst.genes.contains(id))
                throw ParseError("oracle instance: duplicate task id " + std::to_string(id));
            inst.candidates.push_back(id);
            inst.genes[id] = {t.at("rt").get<double>(), t.at("mr").get<double>(), 0.0};
            if (t.value("queued", false))
                inst.queue.insert(id);
        }
    }
    catch (const json::exception& e) {
        throw ParseError(std::string("oracle instance: ") + e.what());
    }
    catch (const ConfigError& e) {
        throw ParseError(e.what());
    }
    return inst;
}

gata::Optimum cmd_oracle(const OracleInstance& inst)
{
    return gata::enumerate_optimum(inst.candidates, inst.genes, inst.queue, inst.chrom_len,
                                   inst.fairness_factor, inst.mode);
}

std::string oracle_result_json(const gata::Optimum& opt)
{
    json j;
    j["fitness"] = opt.fitness;
    j["subset"] = opt.subset;
    return j.dump() + "\n";
}

} // namespace cloudsched
