#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fbas/bench.hpp"

namespace fbas::ela {

/// Uniformly sampled design points with their fitness values.
struct SampleSet {
    Eigen::MatrixXd X;  // n x d, rows are points in the box
    Eigen::VectorXd y;  // fitness per row
    std::uint64_t seed = 0;

    int n() const { return static_cast<int>(X.rows()); }
    int dim() const { return static_cast<int>(X.cols()); }
};

/// n i.i.d. uniform points in [-5,5]^d, evaluated on the problem.
/// Requires n >= 10*d.
SampleSet uniform_sample(bench::ProblemInstance& problem, int n, std::uint64_t seed);

/// Settings for the information-content features. The epsilon grid is
/// {0} plus 10^k for k = -5..15 in steps of 0.25.
struct IcSettings {
    std::vector<double> epsilon_grid;
    double settling_threshold = 0.05;
    double half_ratio = 0.5;
    std::uint64_t tour_seed = 0;

    IcSettings();
};

std::vector<double> default_epsilon_grid();

using NamedValues = std::vector<std::pair<std::string, double>>;

// Feature families. Each returns (name, value) pairs in canonical order and
// never produces non-finite values; degenerate inputs map to documented
// sentinel values (constant y -> 0 for skew/kurtosis and correlations,
// exact fits -> adjusted R^2 of 1, empty distance sets -> 0).
NamedValues basic_stats(const SampleSet& sample);
NamedValues ela_distr(const SampleSet& sample);
NamedValues ela_meta(const SampleSet& sample);
NamedValues dispersion(const SampleSet& sample);
NamedValues dispersion(const SampleSet& sample, std::span<const double> quantiles);
NamedValues information_content(const SampleSet& sample, const IcSettings& settings = {});
NamedValues nearest_better(const SampleSet& sample);

/// Named landscape feature values for one problem instance.
struct FeatureVector {
    bench::ProblemId problem;
    int n_samples = 0;
    int n_reps = 0;
    std::vector<std::string> names;
    std::vector<double> values;

    double at(std::string_view name) const;  // ArgumentError when missing
    bool has(std::string_view name) const;
};

/// The full 38-name inventory in the order used by the features CSV.
const std::vector<std::string>& canonical_feature_names();

/// The nine-feature subset used by the reduced regression models.
const std::vector<std::string>& selected_feature_names();

/// All families on one sample, in canonical order.
FeatureVector compute_features(const SampleSet& sample, const IcSettings& settings = {});

/// Fresh uniform sample and full feature computation per replication
/// (rep seed = hash_combine(seed, rep)), then the per-feature median across
/// replications. `per_rep`, when given, receives the individual replications.
FeatureVector compute_features(bench::ProblemInstance& problem, int n, int reps,
                               std::uint64_t seed, const IcSettings& settings = {},
                               std::vector<FeatureVector>* per_rep = nullptr);

/// Projection onto `names`, preserving the order of `names`. Unknown or
/// duplicate names are an ArgumentError.
FeatureVector select_features(const FeatureVector& fv, std::span<const std::string> names);

/// Wide CSV: `fid,iid,dim,n_samples,n_reps,<features...>`. All vectors must
/// share the same feature name list.
void write_features_csv(const std::filesystem::path& path,
                        const std::vector<FeatureVector>& rows,
                        const std::string& header_comment = {});
std::vector<FeatureVector> read_features_csv(const std::filesystem::path& path);

}  // namespace fbas::ela
