#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "fbas/bench.hpp"
#include "fbas/rng.hpp"

namespace fbas::modcma {

enum class BaseSampler : int { gaussian = 0, sobol = 1, halton = 2 };
enum class RestartStrategy : int { none = 0, ipop = 1, bipop = 2 };

/// One switch vector over the eleven algorithm modules. Nine binary slots
/// and two ternary slots span 2^9 * 3^2 = 4608 variants.
///
/// Module semantics:
///  - active_update: covariance update also subtracts weighted outer
///    products of the worst offspring directions (negative weights scaled
///    to keep C positive definite).
///  - elitism: (mu+lambda) selection; parents compete with offspring and
///    the incumbent can never get worse.
///  - mirrored_sampling: offspring are drawn in pairs (z, -z).
///  - orthogonal_sampling: the first min(lambda, d) base draws are
///    Gram-Schmidt orthonormalised and rescaled to their original norms.
///  - sequential_selection: offspring are evaluated one by one; once an
///    offspring improves on the best fitness of the previous generations
///    the remaining offspring of the generation are skipped.
///  - threshold_convergence: mutation steps shorter than a threshold that
///    decays with the remaining budget are stretched to that threshold.
///  - two_point_step_size: sigma is adapted by comparing f(m + sigma*v)
///    and f(m - sigma*v) along the previous mean shift v instead of CSA.
///  - pairwise_selection: of each mirrored pair only the better half is
///    eligible for recombination (no-op unless mirrored_sampling is on).
///  - equal_recombination_weights: recombination weights 1/mu instead of
///    log-rank weights.
///  - base_sampler: gaussian | sobol | halton; the low-discrepancy points
///    are mapped through the inverse normal CDF (quasi-Gaussian).
///  - restart_strategy: none | IPOP (population doubles on restart) |
///    BIPOP (alternating large and small regimes under a budget ledger).
struct ModuleConfig {
    bool active_update = false;
    bool elitism = false;
    bool mirrored_sampling = false;
    bool orthogonal_sampling = false;
    bool sequential_selection = false;
    bool threshold_convergence = false;
    bool two_point_step_size = false;
    bool pairwise_selection = false;
    bool equal_recombination_weights = false;
    BaseSampler base_sampler = BaseSampler::gaussian;
    RestartStrategy restart = RestartStrategy::none;

    bool operator==(const ModuleConfig&) const = default;

    /// Canonical 11-character code, one digit per slot in declaration order.
    std::string code() const;
    static ModuleConfig from_code(std::string_view code);
};

constexpr int kVariantCount = 4608;

/// Optional per-slot constraints; digit value or unset.
struct VariantFilter {
    std::array<std::optional<int>, 11> slots;

    /// Pattern of 11 characters, '*' for a free slot ("0*1********").
    static VariantFilter from_pattern(std::string_view pattern);
};

/// All 4608 configurations in canonical (code-lexicographic) order, or the
/// subset matching the filter.
std::vector<ModuleConfig> enumerate_variants();
std::vector<ModuleConfig> enumerate_variants(const VariantFilter& filter);

struct CmaParams {
    int lambda = 0;        // 0 -> 4 + floor(3 ln d)
    int mu = 0;            // 0 -> floor(lambda / 2)
    double sigma0 = 2.0;   // initial step size in the [-5,5] box
};

int default_lambda(int dim);

struct RunResult {
    double best_precision = 0.0;
    long evals_used = 0;
    Eigen::VectorXd best_x;
    /// Best-so-far fitness after each generation (diagnostics).
    std::vector<double> incumbent_history;
    int restarts = 0;
};

/// One fixed-budget run. Consumes at most `budget` evaluations of
/// `problem` (tracked through its eval counter) and is bit-reproducible
/// given the seed. Covariance decomposition failures reset C to the
/// identity; they never abort the run.
RunResult run(bench::ProblemInstance& problem, const ModuleConfig& config,
              const CmaParams& params, long budget, std::uint64_t seed);

/// Median target precision over `runs` seeded replicates for every
/// (problem, config) pair. Run seeds derive from (seed, problem, config,
/// run index), so results are independent of scheduling; `jobs` controls
/// the worker pool.
std::vector<bench::PerformanceRecord> run_portfolio(
    const std::vector<bench::ProblemId>& problems,
    const std::vector<ModuleConfig>& portfolio, long budget, int runs,
    std::uint64_t seed, int jobs = 1);

/// The per-run rows behind run_portfolio, in task order (problem-major,
/// then config, then run index).
std::vector<bench::RunRow> run_portfolio_runs(const std::vector<bench::ProblemId>& problems,
                                              const std::vector<ModuleConfig>& portfolio,
                                              long budget, int runs, std::uint64_t seed,
                                              int jobs = 1);

/// Per-function winners: medians over instances per algorithm, argmin per
/// function, deduplicated union capped at k entries. Records must cover
/// every (function, algorithm) pair.
std::vector<std::string> select_portfolio(const std::vector<bench::PerformanceRecord>& records,
                                          std::size_t k);

/// One config code per line; '#' starts a comment.
std::vector<ModuleConfig> read_portfolio_file(const std::filesystem::path& path);
void write_portfolio_file(const std::filesystem::path& path,
                          const std::vector<ModuleConfig>& portfolio,
                          const std::string& header_comment = {});

/// Eight hand-picked diverse configurations used by the desk-scale
/// experiments when no portfolio file is given.
const std::vector<ModuleConfig>& default_portfolio();

namespace detail {

/// Produces the z-draws for one generation: base sampler, then orthogonal
/// sampling, then mirroring. Exposed for direct testing of the sampling
/// invariants.
class OffspringSampler {
  public:
    OffspringSampler(const ModuleConfig& config, int dim, std::uint64_t seed);

    /// d x lambda matrix of z-vectors.
    Eigen::MatrixXd sample(int lambda);

  private:
    Eigen::VectorXd base_draw();

    ModuleConfig config_;
    int dim_;
    Rng rng_;
    std::optional<SobolSequence> sobol_;
    std::optional<HaltonSequence> halton_;
};

}  // namespace detail

}  // namespace fbas::modcma
