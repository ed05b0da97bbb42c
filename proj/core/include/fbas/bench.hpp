#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace fbas::bench {

struct ProblemId {
    int fid = 0;
    int iid = 0;
    int dim = 0;

    auto operator<=>(const ProblemId&) const = default;
    std::string to_string() const;
};

/// Seeded per-instance transform: an orthogonal rotation, a shift placed in
/// the interior of the domain, and an additive offset on the optimum value.
struct InstanceTransform {
    Eigen::MatrixXd rotation;  // orthogonal d x d
    Eigen::VectorXd shift;     // in [-4, 4]^d
    double f_offset = 0.0;     // in [-100, 100]
};

struct FunctionInfo {
    int fid;
    std::string_view name;
    bool rotated;  // whether the instance rotation enters the evaluation
};

/// The 10-function core suite: separable, multimodal, ill-conditioned and
/// ridge-type landscapes plus a purely affine slope.
const std::vector<FunctionInfo>& catalog();
const FunctionInfo& function_info(int fid);

/// A concrete objective with a known optimum and an evaluation counter.
/// Evaluation is stateful (the counter); use one instance per worker and
/// clone() for independent copies (the clone starts with a fresh counter).
class ProblemInstance {
  public:
    static constexpr double kDomainLo = -5.0;
    static constexpr double kDomainHi = 5.0;
    static constexpr double kPrecisionFloor = 1e-12;

    const ProblemId& id() const { return id_; }
    const InstanceTransform& transform() const { return transform_; }
    double f_opt() const { return f_opt_; }
    long eval_count() const { return eval_count_; }
    std::string_view function_name() const;

    /// Evaluates f(x), counting the call. Defined on all of R^d; points
    /// outside the box are evaluated as-is.
    double evaluate(const Eigen::VectorXd& x);

    /// Target precision max(best_fitness - f_opt, 1e-12); the floor keeps
    /// log10 precisions finite.
    double precision(double best_fitness) const;

    ProblemInstance clone() const;

  private:
    friend ProblemInstance make_problem(int fid, int iid, int dim);

    ProblemId id_;
    InstanceTransform transform_;
    double f_opt_ = 0.0;
    long eval_count_ = 0;

    // function-specific precomputed data
    Eigen::VectorXd slope_coef_;    // linear slope
    Eigen::VectorXd slope_corner_;  // linear slope argmin (domain corner)
    Eigen::VectorXd power_exp_;     // different powers exponents
    Eigen::MatrixXd peak_center_;   // gallagher, d x m
    Eigen::VectorXd peak_weight_;
    Eigen::VectorXd peak_width_;
};

/// Deterministic instance construction: the transform is seeded by a fixed
/// hash of (fid, iid, dim), so the same triple always yields the bit-identical
/// problem. Throws CatalogError for unknown fid, ArgumentError for bad
/// iid/dim.
ProblemInstance make_problem(int fid, int iid, int dim);

/// One row of the per-run performance CSV.
struct RunRow {
    ProblemId id;
    std::string algo_id;
    int run = 0;
    long budget = 0;
    double precision = 0.0;
};

/// Median-aggregated performance of one algorithm on one problem instance.
struct PerformanceRecord {
    ProblemId problem;
    std::string algo_id;
    double median_precision = 0.0;
    int runs = 0;
};

/// CSV schema: `fid,iid,dim,algo_id,run,budget,precision`, header mandatory,
/// `#` comment lines skipped. Parse failures name the line number; rows with
/// precision <= 0 are a ValidationError.
std::vector<RunRow> read_performance_csv(const std::filesystem::path& path);

/// Parses the per-run CSV and groups rows into per-(problem, algorithm)
/// median records, sorted by (fid, iid, dim, algo_id).
std::vector<PerformanceRecord> ingest_performance(const std::filesystem::path& path);

std::vector<PerformanceRecord> aggregate_runs(const std::vector<RunRow>& rows);

}  // namespace fbas::bench
