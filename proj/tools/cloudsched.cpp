#include "cloudsched/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <iterator>

using namespace cloudsched;

namespace {

struct Options {
    std::string config;
    std::vector<std::string> policies;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string instance;
};

ExperimentConfig resolve(const Options& opt)
{
    auto cfg = load_experiment_config(opt.config);
    if (opt.seed)
        cfg.seed = *opt.seed;
    if (!opt.out.empty())
        cfg.out_dir = opt.out;
    if (!opt.policies.empty()) {
        cfg.policies.clear();
        for (const auto& name : opt.policies) {
            try {
                cfg.policies.push_back(sim::policy_from_string(name));
            }
            catch (const InvalidArgument& e) {
                throw ConfigError(e.what());
            }
        }
    }
    return cfg;
}

int run(const Options& opt)
{
    const auto cfg = resolve(opt);
    const auto result = run_experiment(cfg);
    for (const auto& [id, rep] : result.reports) {
        const auto& a = rep.aggregates;
        std::cout << sim::to_string(id) << ": tasks=" << a.tasks << " mean_response=" << a.mean_response
                  << " mean_cost=" << a.mean_cost << " mean_exec=" << a.mean_exec
                  << " utilization=" << a.utilization << '\n';
    }
    std::cout << "artifacts in " << cfg.out_dir.string() << '\n';
    return 0;
}

int train(const Options& opt)
{
    const auto cfg = resolve(opt);
    const auto tasks = build_workload(cfg);
    const auto model = train_classifier(tasks, cfg);
    const auto path = cfg.out_dir / "model.json";
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream(path, std::ios::binary) << n2tc::model_to_json(model);
    const auto& log = model.log;
    std::cout << "stopped: " << n2tc::to_string(log.stop_reason) << " after "
              << log.epochs.back().epoch << " epochs, best epoch " << log.best_epoch << '\n'
              << "model written to " << path.string() << '\n';
    return 0;
}

int report_cmd(const Options& opt)
{
    std::vector<report::Row> external;
    std::filesystem::path dir = opt.out;
    if (!opt.config.empty()) {
        const auto cfg = resolve(opt);
        external = cfg.external;
        dir = cfg.out_dir;
    }
    if (dir.empty())
        throw ConfigError("report needs --out DIR or --config PATH");
    const auto table = report_directory(dir, external);
    std::cout << report::table_csv(table);
    return 0;
}

int oracle(const Options& opt)
{
    std::string text;
    if (opt.instance == "-") {
        text.assign(std::istreambuf_iterator<char>(std::cin), {});
    }
    else {
        std::ifstream in(opt.instance, std::ios::binary);
        if (!in)
            throw ConfigError("cannot open instance file: " + opt.instance);
        text.assign(std::istreambuf_iterator<char>(in), {});
    }
    std::cout << oracle_result_json(cmd_oracle(oracle_instance_from_json(text)));
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Task classification and GA-based scheduling experiments"};
    app.require_subcommand(1);
    Options opt;

    auto* run_cmd = app.add_subcommand("run", "simulate the configured policies and write artifacts");
    auto* train_cmd = app.add_subcommand("train", "train the task classifier only");
    auto* rep_cmd = app.add_subcommand("report", "rebuild comparison.csv from saved reports");
    auto* oracle_cmd = app.add_subcommand("oracle", "brute-force optimum for a small instance");

    for (auto* sub : {run_cmd, train_cmd}) {
        sub->add_option("--config", opt.config, "experiment config file")->required();
        sub->add_option("--policy", opt.policies, "proposed, fifo, sjf or roulette_ga (repeatable)");
        sub->add_option("--seed", opt.seed, "master seed");
        sub->add_option("--out", opt.out, "output directory");
    }
    rep_cmd->add_option("--config", opt.config, "experiment config file (for out dir and external rows)");
    rep_cmd->add_option("--out", opt.out, "directory holding reports/");
    oracle_cmd->add_option("--instance", opt.instance, "instance JSON file, or - for stdin")->required();

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run_cmd)
            return run(opt);
        if (*train_cmd)
            return train(opt);
        if (*rep_cmd)
            return report_cmd(opt);
        return oracle(opt);
    }
    catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
