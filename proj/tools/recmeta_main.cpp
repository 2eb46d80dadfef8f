#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "recmeta/study.hpp"
#include "recmeta/version.hpp"

namespace {

struct GlobalArgs {
    std::string config_path;
    int jobs = 1;
    std::optional<std::uint64_t> seed;
    std::optional<double> budget;
    bool filter_significant = false;
};

void add_common(CLI::App* cmd, GlobalArgs& args) {
    cmd->add_option("--config", args.config_path, "study configuration file (JSON)")
        ->required();
    cmd->add_option("--jobs", args.jobs, "worker threads (output is independent of this)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--budget", args.budget, "override fit_budget_seconds");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"meta-learning study pipeline for implicit-feedback recommender selection"};
    app.set_version_flag("--version", recmeta::kToolVersion);
    app.require_subcommand(1);

    GlobalArgs args;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic planted-rule corpus");
    CLI::App* prepare = app.add_subcommand("prepare", "prune datasets and write CV splits");
    CLI::App* build = app.add_subcommand("build-meta", "train the zoo and build the performance table");
    CLI::App* select = app.add_subcommand("select", "run the leave-one-out meta-learning study");
    CLI::App* report = app.add_subcommand("report", "print the aggregate selection results");
    for (CLI::App* cmd : {synth, prepare, build, select, report}) add_common(cmd, args);
    select->add_flag("--filter-significant", args.filter_significant,
                     "drop records with p >= 0.05 before aggregating");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        recmeta::StudyConfig config = recmeta::load_config(args.config_path);
        recmeta::StageOptions options;
        options.jobs = args.jobs;
        options.seed_override = args.seed;
        options.budget_override = args.budget;
        options.filter_significant = args.filter_significant;

        if (synth->parsed()) recmeta::run_synth(config, options);
        if (prepare->parsed()) recmeta::run_prepare(config, options);
        if (build->parsed()) recmeta::run_build_meta(config, options);
        if (select->parsed()) recmeta::run_select(config, options);
        if (report->parsed()) recmeta::run_report(config, options);
        return 0;
    } catch (const recmeta::ConfigError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 1;
    } catch (const recmeta::Error& e) {
        std::cerr << "error: data: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 3;
    }
}
