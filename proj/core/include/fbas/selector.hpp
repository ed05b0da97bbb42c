#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fbas/bench.hpp"
#include "fbas/ela.hpp"
#include "fbas/forest.hpp"

namespace fbas::selector {

/// Dense per-instance-per-algorithm median precisions, all entries > 0.
/// Instances are sorted by (fid, iid, dim), algorithms lexicographically;
/// every tie rule below breaks to the lower index in these orders.
struct PerformanceMatrix {
    std::vector<bench::ProblemId> instances;
    std::vector<std::string> algos;
    Eigen::MatrixXd precision;  // rows = instances, cols = algos

    static PerformanceMatrix from_records(const std::vector<bench::PerformanceRecord>& records);
    int instance_index(const bench::ProblemId& id) const;  // -1 when absent
    int algo_index(std::string_view algo) const;
};

/// Cross-validated predictions on the same index sets as the performance
/// matrix: unscaled precisions and log10 precisions.
struct PredictionMatrix {
    std::vector<bench::ProblemId> instances;
    std::vector<std::string> algos;
    Eigen::MatrixXd pred_unscaled;
    Eigen::MatrixXd pred_log;
};

enum class Metric { rmse, log_rmse };

struct Choice {
    int algo = 0;
    double precision = 0.0;
};

/// Oracle selector: per-instance argmin of the true precision.
std::vector<Choice> vbs(const PerformanceMatrix& perf);

/// The single portfolio member minimising the selector metric of always
/// playing it; returns the algorithm index.
int sbs(const PerformanceMatrix& perf, Metric metric);

/// RMSE (or log10-RMSE) of the chosen precisions against the per-instance
/// best precisions.
double selector_metric(std::span<const int> choices, const PerformanceMatrix& perf,
                       Metric metric);

int select_unscaled(const PredictionMatrix& pred, int instance);
int select_log(const PredictionMatrix& pred, int instance);

/// Threshold rule: when the log-model's best predicted precision
/// 10^min(pred_log) falls below the threshold the log choice is used,
/// otherwise the unscaled choice.
int select_combined(const PredictionMatrix& pred, int instance, double threshold);

std::vector<int> choices_unscaled(const PredictionMatrix& pred);
std::vector<int> choices_log(const PredictionMatrix& pred);
std::vector<int> choices_combined(const PredictionMatrix& pred, double threshold);

/// Per instance the better (true precision) of the two pure model choices.
std::vector<int> vbs_of_two(const PredictionMatrix& pred, const PerformanceMatrix& perf);

struct ThresholdResult {
    double threshold = 0.0;
    double value = 0.0;
};

/// Evaluates the combined selector on every grid value plus the two
/// degenerate endpoints (below the smallest and above the largest predicted
/// precision) and returns the argmin; ties go to the smaller threshold.
ThresholdResult tune_threshold(const PredictionMatrix& pred, const PerformanceMatrix& perf,
                               std::span<const double> grid, Metric metric);

/// The coarse grid {0.01, 0.1, 0.5, 1, 2, 3, 10, 20, 50} refined with 200
/// log-spaced points in [0.01, 50].
const std::vector<double>& default_threshold_grid();

struct CvConfig {
    int k = 4;  // must equal the number of distinct instance ids
    int replications = 3;
};

struct ModelAccuracy {
    std::string algo;
    double rmse = 0.0;                     // unscaled model vs truth
    double log_rmse = 0.0;                 // log model vs log10 truth
    double rmse_log_model = 0.0;           // 10^log-prediction vs truth
    double log_rmse_unscaled_model = 0.0;  // log10 unscaled prediction vs log10 truth
};

struct SelectorResult {
    std::string name;
    double rmse = 0.0;
    double log_rmse = 0.0;
    double threshold = std::numeric_limits<double>::quiet_NaN();
    std::vector<int> choices;
};

struct ThresholdRow {
    double threshold = 0.0;
    double rmse = 0.0;
    double log_rmse = 0.0;
};

struct EvalReport {
    std::vector<ModelAccuracy> model_accuracy;
    std::vector<SelectorResult> selectors;  // unscaled, log, combined_rmse,
                                            // combined_log_rmse, vbs_of_two
    std::vector<Choice> vbs_choices;
    double vbs_rmse = 0.0;
    double vbs_log_rmse = 0.0;
    int sbs_rmse_algo = 0;
    double sbs_rmse_value = 0.0;
    int sbs_log_algo = 0;
    double sbs_log_value = 0.0;
    std::vector<ThresholdRow> sensitivity;
};

/// One raw cross-validation cell prediction (before the median over
/// replications). `fold` is the held-out instance id.
struct RawPrediction {
    int fold = 0;
    int rep = 0;
    bench::ProblemId id;
    std::string algo;
    double pred_unscaled = 0.0;
    double pred_log10 = 0.0;
    double true_precision = 0.0;
};

struct CvResult {
    PredictionMatrix predictions;  // medians over replications
    std::vector<RawPrediction> raw;
    EvalReport report;
};

/// Leave-one-instance-out cross-validation: per algorithm, fold and
/// replication an unscaled forest is fit on the training precisions and a
/// log forest on their log10 values; test-instance predictions are stored,
/// medians over replications assembled, and all selectors and baselines
/// evaluated on the assembled matrices.
CvResult run_cv(const std::vector<ela::FeatureVector>& features, const PerformanceMatrix& perf,
                const CvConfig& cv, const forest::ForestParams& params, std::uint64_t seed,
                std::span<const double> threshold_grid, int jobs = 1);

/// Model accuracy (prediction vs truth over all instances) for each
/// algorithm column of the prediction matrix.
std::vector<ModelAccuracy> model_accuracy(const PredictionMatrix& pred,
                                          const PerformanceMatrix& perf);

/// All selectors, baselines and the threshold-sensitivity table for an
/// assembled prediction/performance matrix pair.
EvalReport evaluate(const PredictionMatrix& pred, const PerformanceMatrix& perf,
                    std::span<const double> threshold_grid);

/// predictions CSV: `fold,rep,fid,iid,algo_id,pred_unscaled,pred_log10,true_precision`.
void write_predictions_csv(const std::filesystem::path& path,
                           const std::vector<RawPrediction>& raw,
                           const std::string& header_comment = {});
std::vector<RawPrediction> read_predictions_csv(const std::filesystem::path& path);

/// Rebuilds the median prediction matrix from raw rows (the inverse of the
/// CSV round trip), restricted to instances present in `perf`.
PredictionMatrix predictions_from_raw(const std::vector<RawPrediction>& raw,
                                      const PerformanceMatrix& perf);

/// Serialises the report (plus a config echo JSON object) to the report
/// JSON document.
std::string report_to_json(const EvalReport& report, const PerformanceMatrix& perf,
                           const std::string& config_echo_json);

}  // namespace fbas::selector
