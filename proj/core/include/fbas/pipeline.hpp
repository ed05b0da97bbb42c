#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fbas/forest.hpp"
#include "fbas/selector.hpp"

namespace fbas::pipeline {

/// Declarative experiment configuration. Files are flat `key = value` lines
/// with '#' comments; CLI flags override file keys. All randomness flows
/// from `seed` through documented stream derivations, so a fixed config and
/// seed reproduce every artifact byte-identically at any worker count.
struct PipelineConfig {
    // suite
    std::vector<int> functions;   // default: whole catalog
    std::vector<int> instances;   // default: 1..4
    int dim = 5;

    // portfolio
    std::string portfolio_file;   // empty or "default" -> built-in 8 configs
    long budget = 500;
    int runs = 5;

    // features
    int n_samples = 2000;
    int feature_reps = 50;
    std::string feature_subset = "all";  // all | selected-9 | name,name,...

    // forest
    forest::ForestParams forest;

    // cv
    selector::CvConfig cv;

    // selection
    std::vector<double> threshold_grid;  // empty -> default grid
    selector::Metric metric = selector::Metric::log_rmse;

    std::uint64_t seed = 1;

    std::vector<bench::ProblemId> problem_ids() const;
    std::vector<std::string> feature_names() const;
    const std::vector<double>& grid() const;
};

PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config_text(const std::string& text, const std::string& origin = "config");

/// Stable hash of every semantic field; embedded in output artifacts.
std::uint64_t config_hash(const PipelineConfig& config);

/// JSON object echoing the effective configuration.
std::string config_echo_json(const PipelineConfig& config);

// Output file names inside the --out directory.
inline constexpr const char* kPerformanceRunsFile = "performance_runs.csv";
inline constexpr const char* kPerformanceMedianFile = "performance_median.csv";
inline constexpr const char* kPortfolioFile = "portfolio.txt";
inline constexpr const char* kFeaturesFile = "features.csv";
inline constexpr const char* kFeaturesNormalizedFile = "features_normalized.csv";
inline constexpr const char* kPredictionsFile = "predictions.csv";
inline constexpr const char* kReportFile = "report.json";
inline constexpr const char* kThresholdFile = "threshold.json";

/// Runs the portfolio and writes performance_runs.csv plus the
/// median-aggregated performance_median.csv.
void cmd_run_portfolio(const PipelineConfig& config, const std::filesystem::path& out, int jobs);

/// Reads performance_runs.csv and writes the per-function winner portfolio.
void cmd_select_portfolio(const PipelineConfig& config, const std::filesystem::path& out);

/// Computes median feature vectors for every instance and writes
/// features.csv (plus a min-max normalized companion when asked).
void cmd_extract_features(const PipelineConfig& config, const std::filesystem::path& out,
                          int jobs, bool report_normalized = false);

/// Cross-validates the regression models and writes predictions.csv and
/// report.json.
void cmd_train_eval(const PipelineConfig& config, const std::filesystem::path& out, int jobs);

/// Re-tunes the combined-selector threshold from existing predictions.csv
/// and performance_median.csv; writes threshold.json.
void cmd_tune_threshold(const PipelineConfig& config, const std::filesystem::path& out);

/// Emits plot-ready CSV bundles from the artifacts in `out`:
/// fig1_performance.csv, fig2_winners.csv, fig3_features_normalized.csv,
/// fig4_true_vs_predicted.csv, fig5_selector_quality.csv.
void cmd_report_figures(const PipelineConfig& config, const std::filesystem::path& out);

}  // namespace fbas::pipeline
