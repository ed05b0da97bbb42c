#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <set>

#include <json.hpp>

#include <sys/wait.h>

#include "fbas/ela.hpp"
#include "fbas/modcma.hpp"
#include "fbas/errors.hpp"
#include "fbas/pipeline.hpp"
#include "fbas/util.hpp"
#include "test_util.hpp"

using namespace fbas;
using pipeline::PipelineConfig;

namespace {

PipelineConfig tiny_config() {
    PipelineConfig config;
    config.functions = {1, 3};
    config.instances = {1, 2};
    config.dim = 5;
    config.budget = 24;
    config.runs = 1;
    config.n_samples = 60;
    config.feature_reps = 2;
    config.forest.n_trees = 15;
    config.cv.k = 2;
    config.cv.replications = 2;
    config.threshold_grid = {0.01, 0.1, 1.0, 10.0, 50.0};
    config.seed = 4711;
    return config;
}

}  // namespace

TEST_CASE("config parsing") {
    SUBCASE("defaults") {
        const auto config = pipeline::parse_config_text("");
        CHECK(config.dim == 5);
        CHECK(config.budget == 500);
        CHECK(config.runs == 5);
        CHECK(config.n_samples == 2000);
        CHECK(config.feature_reps == 50);
        CHECK(config.forest.n_trees == 1000);
        CHECK(config.forest.max_features == 1.0);
        CHECK(config.forest.bootstrap);
        CHECK(config.cv.k == 4);
        CHECK(config.cv.replications == 3);
        CHECK(config.problem_ids().size() == 40);  // 10 functions x 4 instances
        CHECK(config.feature_names().size() == 38);
    }

    SUBCASE("full file with comments and overrides") {
        const std::string text =
            "# desk experiment\n"
            "suite.functions = 1,2,5-7\n"
            "suite.instances = 1-4\n"
            "suite.dim = 5\n"
            "portfolio.file = default\n"
            "portfolio.budget = 500\n"
            "portfolio.runs = 5\n"
            "features.n_samples = 250\n"
            "features.reps = 10   # fast\n"
            "features.subset = selected-9\n"
            "forest.n_trees = 200\n"
            "forest.max_features = 0.75\n"
            "cv.k = 4\n"
            "cv.replications = 3\n"
            "selection.threshold_grid = 0.01,0.1,1,10\n"
            "selection.metric = rmse\n"
            "seed = 99\n";
        const auto config = pipeline::parse_config_text(text);
        CHECK(config.functions == std::vector<int>{1, 2, 5, 6, 7});
        CHECK(config.n_samples == 250);
        CHECK(config.feature_subset == "selected-9");
        CHECK(config.feature_names() == ela::selected_feature_names());
        CHECK(config.forest.max_features == 0.75);
        CHECK(config.grid().size() == 4);
        CHECK(config.metric == selector::Metric::rmse);
        CHECK(config.seed == 99);
        CHECK(config.problem_ids().size() == 20);
    }

    SUBCASE("errors") {
        CHECK_THROWS_AS(pipeline::parse_config_text("nonsense\n"), ParseError);
        CHECK_THROWS_AS(pipeline::parse_config_text("unknown.key = 3\n"), ValidationError);
        CHECK_THROWS_AS(pipeline::parse_config_text("suite.dim = five\n"), ValidationError);
        CHECK_THROWS_AS(pipeline::parse_config_text("selection.metric = mae\n"),
                        ValidationError);
    }
}

TEST_CASE("config hash tracks semantic changes") {
    auto a = tiny_config();
    auto b = tiny_config();
    CHECK(pipeline::config_hash(a) == pipeline::config_hash(b));
    b.seed += 1;
    CHECK(pipeline::config_hash(a) != pipeline::config_hash(b));
    b = tiny_config();
    b.forest.n_trees += 1;
    CHECK(pipeline::config_hash(a) != pipeline::config_hash(b));
}

TEST_CASE("run-portfolio writes counted, reproducible artifacts") {
    const auto config = tiny_config();
    test::TempDir dir;
    pipeline::cmd_run_portfolio(config, dir.path(), 2);

    const auto lines = read_lines(dir / pipeline::kPerformanceRunsFile);
    REQUIRE(lines.size() >= 2);
    CHECK(lines[0].find("seed=4711") != std::string::npos);
    CHECK(lines[1] == "fid,iid,dim,algo_id,run,budget,precision");
    // 2 functions x 2 instances x 8 default configs x 1 run
    CHECK(lines.size() == 2 + 2 * 2 * 8 * 1);

    const auto medians = read_lines(dir / pipeline::kPerformanceMedianFile);
    CHECK(medians.size() == 2 + 2 * 2 * 8);

    test::TempDir dir2;
    pipeline::cmd_run_portfolio(config, dir2.path(), 1);
    CHECK(read_text_file(dir / pipeline::kPerformanceRunsFile) ==
          read_text_file(dir2 / pipeline::kPerformanceRunsFile));
    CHECK(read_text_file(dir / pipeline::kPerformanceMedianFile) ==
          read_text_file(dir2 / pipeline::kPerformanceMedianFile));
}

TEST_CASE("select-portfolio writes per-function winners") {
    const auto config = tiny_config();
    test::TempDir dir;
    pipeline::cmd_run_portfolio(config, dir.path(), 2);
    pipeline::cmd_select_portfolio(config, dir.path());
    const auto portfolio = modcma::read_portfolio_file(dir / pipeline::kPortfolioFile);
    CHECK(!portfolio.empty());
    CHECK(portfolio.size() <= 2);  // at most one winner per function
}

TEST_CASE("extract-features honours subset and metadata") {
    auto config = tiny_config();
    config.feature_subset = "selected-9";
    config.n_samples = 250;
    test::TempDir dir;
    pipeline::cmd_extract_features(config, dir.path(), 2, true);

    const auto rows = ela::read_features_csv(dir / pipeline::kFeaturesFile);
    REQUIRE(rows.size() == 4);
    for (const auto& fv : rows) {
        CHECK(fv.names == ela::selected_feature_names());
        CHECK(fv.n_samples == 250);
        CHECK(fv.n_reps == 2);
    }

    const auto normalized = ela::read_features_csv(dir / pipeline::kFeaturesNormalizedFile);
    for (const auto& fv : normalized)
        for (double v : fv.values) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }

    test::TempDir dir2;
    pipeline::cmd_extract_features(config, dir2.path(), 1, true);
    CHECK(read_text_file(dir / pipeline::kFeaturesFile) ==
          read_text_file(dir2 / pipeline::kFeaturesFile));
}

TEST_CASE("train-eval, tuning and figures run end to end") {
    auto config = tiny_config();
    test::TempDir dir;
    pipeline::cmd_run_portfolio(config, dir.path(), 2);
    pipeline::cmd_extract_features(config, dir.path(), 2);
    pipeline::cmd_train_eval(config, dir.path(), 2);

    const auto report = nlohmann::json::parse(read_text_file(dir / pipeline::kReportFile));
    CHECK(report.at("baselines").at("vbs").at("rmse").get<double>() == 0.0);
    CHECK(report.at("config").at("seed").get<std::uint64_t>() == 4711);
    const double combined = report.at("selectors").at("combined_log_rmse").at("log_rmse");
    const double pure_log = report.at("selectors").at("log").at("log_rmse");
    const double pure_unscaled = report.at("selectors").at("unscaled").at("log_rmse");
    CHECK(combined <= pure_log);
    CHECK(combined <= pure_unscaled);
    CHECK(report.at("threshold_sensitivity").size() == config.threshold_grid.size());

    pipeline::cmd_tune_threshold(config, dir.path());
    const auto tuned = nlohmann::json::parse(read_text_file(dir / pipeline::kThresholdFile));
    CHECK(tuned.at("threshold").get<double>() > 0.0);
    CHECK(tuned.at("metric") == "log_rmse");

    pipeline::cmd_report_figures(config, dir.path());

    const auto winners = read_lines(dir / "fig2_winners.csv");
    int total_wins = 0;
    for (std::size_t i = 2; i < winners.size(); ++i)
        total_wins += std::stoi(split(winners[i], ',')[1]);
    CHECK(total_wins == 4);  // one winner per instance

    const auto fig5 = read_lines(dir / "fig5_selector_quality.csv");
    CHECK(fig5.size() == 2 + 8 + 5 + 1);  // configs + selectors + vbs

    const auto fig3 = read_lines(dir / "fig3_features_normalized.csv");
    for (std::size_t i = 2; i < fig3.size(); ++i) {
        const double v = std::stod(split(fig3[i], ',')[3]);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }

    SUBCASE("missing coverage is a named validation error") {
        auto wider = config;
        wider.functions = {1, 3, 6};
        try {
            pipeline::cmd_train_eval(wider, dir.path(), 1);
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("f6i1d5") != std::string::npos);
        }
    }
}

#ifdef FBAS_CLI_PATH
TEST_CASE("cli exit codes") {
    test::TempDir dir;
    const std::string cli = FBAS_CLI_PATH;
    const std::string quiet = " > /dev/null 2>&1";

    CHECK(std::system((cli + " --help" + quiet).c_str()) == 0);

    // no subcommand -> parse error -> 2
    int rc = std::system((cli + quiet).c_str());
    CHECK(WEXITSTATUS(rc) == 2);

    // missing config file -> validation error -> 2
    rc = std::system((cli + " run-portfolio --config /nonexistent.cfg" + quiet).c_str());
    CHECK(WEXITSTATUS(rc) == 2);

    // bad config content -> 2
    write_text_file(dir / "bad.cfg", "whatever = 3\n");
    rc = std::system(
        (cli + " run-portfolio --config " + (dir / "bad.cfg").string() + quiet).c_str());
    CHECK(WEXITSTATUS(rc) == 2);

    // a valid tiny run -> 0
    write_text_file(dir / "ok.cfg",
                    "suite.functions = 1\nsuite.instances = 1\nportfolio.budget = 16\n"
                    "portfolio.runs = 1\nseed = 3\n");
    rc = std::system((cli + " run-portfolio --config " + (dir / "ok.cfg").string() + " --out " +
                      (dir / "out").string() + quiet)
                         .c_str());
    CHECK(WEXITSTATUS(rc) == 0);

    // figures without the train-eval artifacts -> runtime error -> 1
    rc = std::system((cli + " report-figures --config " + (dir / "ok.cfg").string() + " --out " +
                      (dir / "out").string() + quiet)
                         .c_str());
    CHECK(WEXITSTATUS(rc) == 1);
}
#endif
