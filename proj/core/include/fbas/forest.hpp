#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fbas::forest {

struct ForestParams {
    int n_trees = 1000;
    double max_features = 1.0;  // fraction of features tried per split
    int min_samples_split = 2;
    int min_samples_leaf = 1;
    int max_depth = 0;  // 0 = unlimited
    bool bootstrap = true;
};

enum class TargetScale { unscaled, log10 };

/// Flat node: feature < 0 marks a leaf carrying the mean target of the rows
/// routed to it; split nodes route x[feature] <= threshold to `left`.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    int count = 0;
};

struct Tree {
    std::vector<TreeNode> nodes;
    double predict(std::span<const double> x) const;
};

/// Bagged variance-reduction regression trees. Splits maximise the weighted
/// variance reduction over candidate features and midpoints between
/// consecutive sorted unique values; ties break to the lower feature index,
/// then the lower threshold. Fully deterministic given the seed (per-tree
/// streams are derived from (seed, tree index), independent of scheduling).
class Forest {
  public:
    static Forest fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const ForestParams& params, std::uint64_t seed,
                      std::vector<std::string> feature_names = {},
                      TargetScale scale = TargetScale::unscaled, int jobs = 1);

    double predict(std::span<const double> x) const;
    double predict(const Eigen::VectorXd& x) const;
    Eigen::VectorXd predict_rows(const Eigen::MatrixXd& X) const;

    const ForestParams& params() const { return params_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    TargetScale target_scale() const { return scale_; }
    const std::vector<Tree>& trees() const { return trees_; }

    /// Versioned little-endian binary dump; load reproduces predictions
    /// bit-exactly.
    void save(const std::filesystem::path& path) const;
    static Forest load(const std::filesystem::path& path);

  private:
    std::vector<Tree> trees_;
    ForestParams params_;
    std::vector<std::string> feature_names_;
    TargetScale scale_ = TargetScale::unscaled;
    int n_features_ = 0;
};

/// sqrt(mean((pred - truth)^2)); lengths must match and be nonzero.
double rmse(std::span<const double> pred, std::span<const double> truth);
double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

}  // namespace fbas::forest
