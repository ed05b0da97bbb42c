#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fbas/errors.hpp"
#include "fbas/pipeline.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    int jobs = 1;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool config_required = true) {
    auto* config = cmd->add_option("--config", opts.config_path, "experiment config file");
    if (config_required) config->required();
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "master seed (overrides the config file)");
    cmd->add_option("--jobs", opts.jobs, "worker threads")->check(CLI::PositiveNumber);
}

fbas::pipeline::PipelineConfig resolve_config(const CommonOptions& opts) {
    fbas::pipeline::PipelineConfig config;
    if (!opts.config_path.empty()) {
        try {
            config = fbas::pipeline::load_config(opts.config_path);
        } catch (const fbas::ParseError&) {
            throw;
        } catch (const fbas::ValidationError&) {
            throw;
        } catch (const fbas::Error& e) {
            // unreadable config is a usage problem, not a runtime failure
            throw fbas::ValidationError(e.what());
        }
    }
    if (opts.seed) config.seed = *opts.seed;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fixed-budget benchmarking, landscape features and algorithm selection"};
    app.require_subcommand(1);

    CommonOptions run_opts, select_opts, features_opts, train_opts, tune_opts, figures_opts;
    bool report_normalized = false;

    auto* run_cmd = app.add_subcommand("run-portfolio",
                                       "run the configured portfolio and write performance CSVs");
    add_common(run_cmd, run_opts);

    auto* select_cmd = app.add_subcommand(
        "select-portfolio", "pick per-function winners from performance_runs.csv");
    add_common(select_cmd, select_opts);

    auto* features_cmd =
        app.add_subcommand("extract-features", "compute landscape features per instance");
    add_common(features_cmd, features_opts);
    features_cmd->add_flag("--report-normalized", report_normalized,
                           "also write a min-max normalized companion file");

    auto* train_cmd = app.add_subcommand(
        "train-eval", "cross-validate the regression models and evaluate all selectors");
    add_common(train_cmd, train_opts);

    auto* tune_cmd = app.add_subcommand(
        "tune-threshold", "re-tune the combined selector threshold from predictions.csv");
    add_common(tune_cmd, tune_opts);

    auto* figures_cmd =
        app.add_subcommand("report-figures", "emit plot-ready CSV bundles from the artifacts");
    add_common(figures_cmd, figures_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (run_cmd->parsed())
            fbas::pipeline::cmd_run_portfolio(resolve_config(run_opts), run_opts.out_dir,
                                              run_opts.jobs);
        else if (select_cmd->parsed())
            fbas::pipeline::cmd_select_portfolio(resolve_config(select_opts),
                                                 select_opts.out_dir);
        else if (features_cmd->parsed())
            fbas::pipeline::cmd_extract_features(resolve_config(features_opts),
                                                 features_opts.out_dir, features_opts.jobs,
                                                 report_normalized);
        else if (train_cmd->parsed())
            fbas::pipeline::cmd_train_eval(resolve_config(train_opts), train_opts.out_dir,
                                           train_opts.jobs);
        else if (tune_cmd->parsed())
            fbas::pipeline::cmd_tune_threshold(resolve_config(tune_opts), tune_opts.out_dir);
        else if (figures_cmd->parsed())
            fbas::pipeline::cmd_report_figures(resolve_config(figures_opts),
                                               figures_opts.out_dir);
    } catch (const fbas::ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fbas::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fbas::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fbas::CatalogError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
