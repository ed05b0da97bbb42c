#include "fbas/modcma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "fbas/errors.hpp"
#include "fbas/util.hpp"

namespace fbas::modcma {

namespace {

constexpr int kBinarySlots = 9;

int slot_value(const ModuleConfig& c, int slot) {
    switch (slot) {
        case 0: return c.active_update;
        case 1: return c.elitism;
        case 2: return c.mirrored_sampling;
        case 3: return c.orthogonal_sampling;
        case 4: return c.sequential_selection;
        case 5: return c.threshold_convergence;
        case 6: return c.two_point_step_size;
        case 7: return c.pairwise_selection;
        case 8: return c.equal_recombination_weights;
        case 9: return static_cast<int>(c.base_sampler);
        case 10: return static_cast<int>(c.restart);
        default: throw ArgumentError("bad module slot " + std::to_string(slot));
    }
}

void set_slot(ModuleConfig& c, int slot, int value) {
    const int arity = slot < kBinarySlots ? 2 : 3;
    if (value < 0 || value >= arity)
        throw ArgumentError("slot " + std::to_string(slot) + " value out of range: " +
                            std::to_string(value));
    switch (slot) {
        case 0: c.active_update = value; break;
        case 1: c.elitism = value; break;
        case 2: c.mirrored_sampling = value; break;
        case 3: c.orthogonal_sampling = value; break;
        case 4: c.sequential_selection = value; break;
        case 5: c.threshold_convergence = value; break;
        case 6: c.two_point_step_size = value; break;
        case 7: c.pairwise_selection = value; break;
        case 8: c.equal_recombination_weights = value; break;
        case 9: c.base_sampler = static_cast<BaseSampler>(value); break;
        case 10: c.restart = static_cast<RestartStrategy>(value); break;
        default: throw ArgumentError("bad module slot " + std::to_string(slot));
    }
}

}  // namespace

std::string ModuleConfig::code() const {
    std::string code(11, '0');
    for (int slot = 0; slot < 11; ++slot)
        code[static_cast<std::size_t>(slot)] = static_cast<char>('0' + slot_value(*this, slot));
    return code;
}

ModuleConfig ModuleConfig::from_code(std::string_view code) {
    if (code.size() != 11)
        throw ArgumentError("config code must have 11 characters, got '" + std::string(code) +
                            "'");
    ModuleConfig c;
    for (int slot = 0; slot < 11; ++slot) {
        const char ch = code[static_cast<std::size_t>(slot)];
        if (ch < '0' || ch > '9')
            throw ArgumentError("config code has non-digit character: '" + std::string(code) +
                                "'");
        set_slot(c, slot, ch - '0');
    }
    return c;
}

VariantFilter VariantFilter::from_pattern(std::string_view pattern) {
    if (pattern.size() != 11)
        throw ArgumentError("filter pattern must have 11 characters");
    VariantFilter f;
    for (int slot = 0; slot < 11; ++slot) {
        const char ch = pattern[static_cast<std::size_t>(slot)];
        if (ch == '*') continue;
        if (ch < '0' || ch > '9') throw ArgumentError("filter pattern: bad character");
        f.slots[static_cast<std::size_t>(slot)] = ch - '0';
    }
    return f;
}

std::vector<ModuleConfig> enumerate_variants() { return enumerate_variants(VariantFilter{}); }

std::vector<ModuleConfig> enumerate_variants(const VariantFilter& filter) {
    std::vector<ModuleConfig> out;
    std::array<int, 11> digits{};
    for (;;) {
        bool match = true;
        for (int slot = 0; slot < 11 && match; ++slot)
            if (filter.slots[static_cast<std::size_t>(slot)] &&
                *filter.slots[static_cast<std::size_t>(slot)] != digits[static_cast<std::size_t>(slot)])
                match = false;
        if (match) {
            ModuleConfig c;
            for (int slot = 0; slot < 11; ++slot)
                set_slot(c, slot, digits[static_cast<std::size_t>(slot)]);
            out.push_back(c);
        }
        // odometer increment, last slot fastest: canonical code order
        int slot = 10;
        for (; slot >= 0; --slot) {
            const int arity = slot < kBinarySlots ? 2 : 3;
            if (++digits[static_cast<std::size_t>(slot)] < arity) break;
            digits[static_cast<std::size_t>(slot)] = 0;
        }
        if (slot < 0) break;
    }
    return out;
}

int default_lambda(int dim) {
    return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(dim))));
}

// ---------------------------------------------------------------------------
// Offspring sampling
// ---------------------------------------------------------------------------

namespace detail {

OffspringSampler::OffspringSampler(const ModuleConfig& config, int dim, std::uint64_t seed)
    : config_(config), dim_(dim), rng_(stream_seed(fnv1a64("fbas.modcma.sampler"), {seed})) {
    if (config.base_sampler == BaseSampler::sobol)
        sobol_.emplace(dim, rng_);
    else if (config.base_sampler == BaseSampler::halton)
        halton_.emplace(dim, rng_);
}

Eigen::VectorXd OffspringSampler::base_draw() {
    if (config_.base_sampler == BaseSampler::gaussian) return rng_.normal_vector(dim_);
    Eigen::VectorXd u = sobol_ ? sobol_->next() : halton_->next();
    for (int i = 0; i < dim_; ++i) u[i] = inverse_normal_cdf(u[i]);
    return u;
}

Eigen::MatrixXd OffspringSampler::sample(int lambda) {
    const int n_base = config_.mirrored_sampling ? (lambda + 1) / 2 : lambda;
    Eigen::MatrixXd base(dim_, n_base);
    for (int i = 0; i < n_base; ++i) base.col(i) = base_draw();

    if (config_.orthogonal_sampling) {
        // Modified Gram-Schmidt on the first min(n_base, d) draws, keeping
        // each vector's original norm.
        const int k = std::min(n_base, dim_);
        for (int i = 0; i < k; ++i) {
            const double norm0 = base.col(i).norm();
            Eigen::VectorXd v = base.col(i);
            for (int j = 0; j < i; ++j) {
                const Eigen::VectorXd q = base.col(j) / base.col(j).norm();
                v -= q.dot(v) * q;
            }
            if (v.norm() > 1e-12 && norm0 > 0.0) base.col(i) = v * (norm0 / v.norm());
        }
    }

    Eigen::MatrixXd z(dim_, lambda);
    if (config_.mirrored_sampling) {
        for (int i = 0; i < lambda; ++i) {
            if (i % 2 == 0)
                z.col(i) = base.col(i / 2);
            else
                z.col(i) = -base.col(i / 2);
        }
    } else {
        z = base;
    }
    return z;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CMA-ES core
// ---------------------------------------------------------------------------

namespace {

struct Individual {
    Eigen::VectorXd x;
    Eigen::VectorXd y;  // (x - m_old) / sigma in the frame of its generation
    double f = std::numeric_limits<double>::infinity();
    bool eligible = true;  // pairwise selection can disable recombination
};

struct StrategyWeights {
    Eigen::VectorXd positive;  // mu entries, sums to 1
    Eigen::VectorXd negative;  // lambda - mu entries, nonpositive
    double mueff = 0.0;
};

StrategyWeights make_weights(int lambda, int mu, int dim, bool equal, double c1, double cmu) {
    StrategyWeights w;
    Eigen::VectorXd raw(lambda);
    for (int i = 0; i < lambda; ++i)
        raw[i] = equal ? (i < mu ? 1.0 : -1.0)
                       : std::log((lambda + 1.0) / 2.0) - std::log(i + 1.0);

    Eigen::VectorXd pos = raw.head(mu).cwiseMax(1e-12);
    w.positive = pos / pos.sum();
    w.mueff = 1.0 / w.positive.squaredNorm();

    const int n_neg = lambda - mu;
    w.negative = Eigen::VectorXd::Zero(n_neg);
    if (n_neg > 0) {
        Eigen::VectorXd neg = raw.tail(n_neg).cwiseMin(0.0);
        const double sum_abs = -neg.sum();
        if (sum_abs > 0.0) {
            const double mueff_neg = neg.sum() * neg.sum() / neg.squaredNorm();
            const double alpha_mu = 1.0 + c1 / cmu;
            const double alpha_mueff = 1.0 + 2.0 * mueff_neg / (w.mueff + 2.0);
            const double alpha_posdef = (1.0 - c1 - cmu) / (dim * cmu);
            const double scale = std::min({alpha_mu, alpha_mueff, alpha_posdef});
            w.negative = neg * (scale / sum_abs);
        }
    }
    return w;
}

struct RestartBookkeeping {
    int lambda_default = 0;
    int lambda_large = 0;
    long budget_large = 0;
    long budget_small = 0;
    bool last_was_large = true;
};

constexpr double kTpaAlpha = 0.5;
constexpr double kTpaCs = 0.3;
constexpr double kThresholdInit = 0.1;
constexpr double kThresholdDecay = 0.995;

}  // namespace

RunResult run(bench::ProblemInstance& problem, const ModuleConfig& config,
              const CmaParams& params, long budget, std::uint64_t seed) {
    const int d = problem.id().dim;
    const int lambda0 = params.lambda > 0 ? params.lambda : default_lambda(d);
    const int mu0 = params.mu > 0 ? params.mu : std::max(1, lambda0 / 2);
    if (mu0 > lambda0) throw ArgumentError("run: mu must be <= lambda");
    if (!(params.sigma0 > 0.0)) throw ArgumentError("run: sigma0 must be positive");
    if (budget < lambda0)
        throw ArgumentError("run: budget must be at least lambda = " + std::to_string(lambda0));

    Rng rng(stream_seed(fnv1a64("fbas.modcma.run"), {seed}));
    detail::OffspringSampler sampler(config, d, hash_combine(seed, fnv1a64("sampler")));

    const double lo = bench::ProblemInstance::kDomainLo;
    const double hi = bench::ProblemInstance::kDomainHi;
    const double diameter = (hi - lo) * std::sqrt(static_cast<double>(d));
    const double chi_n = std::sqrt(static_cast<double>(d)) *
                         (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d));

    const long eval_base = problem.eval_count();
    auto evals_used = [&] { return problem.eval_count() - eval_base; };

    RunResult result;
    result.best_x = Eigen::VectorXd::Zero(d);
    double best_f = std::numeric_limits<double>::infinity();

    RestartBookkeeping ledger;
    ledger.lambda_default = lambda0;
    ledger.lambda_large = lambda0;

    int lambda = lambda0;
    double sigma0 = params.sigma0;

    // Per-epoch state, re-initialised on every restart.
    Eigen::VectorXd m, ps, pc, eigvals, scale_d;
    Eigen::MatrixXd C, B;
    std::vector<Individual> parents;
    std::vector<double> epoch_best_history;
    double sigma = sigma0, s_tpa = 0.0;
    Eigen::VectorXd prev_shift;
    double epoch_prev_best = std::numeric_limits<double>::infinity();
    int epoch_gen = 0;
    long epoch_evals = 0;

    auto begin_epoch = [&](int new_lambda, double new_sigma0) {
        lambda = new_lambda;
        sigma = new_sigma0;
        m = rng.uniform_vector(d, lo, hi);
        C = Eigen::MatrixXd::Identity(d, d);
        B = Eigen::MatrixXd::Identity(d, d);
        eigvals = Eigen::VectorXd::Ones(d);
        scale_d = Eigen::VectorXd::Ones(d);
        ps = Eigen::VectorXd::Zero(d);
        pc = Eigen::VectorXd::Zero(d);
        parents.clear();
        epoch_best_history.clear();
        s_tpa = 0.0;
        prev_shift = Eigen::VectorXd();
        epoch_prev_best = std::numeric_limits<double>::infinity();
        epoch_gen = 0;
        epoch_evals = 0;
    };
    begin_epoch(lambda0, sigma0);

    while (evals_used() < budget) {
        const int mu = params.mu > 0 ? std::min(params.mu, lambda)
                                     : std::max(1, lambda / 2);

        // c1/cmu need mueff; build weights in two passes with provisional
        // constants (the guard only affects the negative-weight scaling).
        StrategyWeights w = make_weights(lambda, mu, d,
                                         config.equal_recombination_weights, 0.01, 0.1);
        const double mueff = w.mueff;
        const double cc = (4.0 + mueff / d) / (d + 4.0 + 2.0 * mueff / d);
        const double cs = (mueff + 2.0) / (d + mueff + 5.0);
        const double c1_final = 2.0 / ((d + 1.3) * (d + 1.3) + mueff);
        const double cmu = std::min(1.0 - c1_final,
                                    2.0 * (mueff - 2.0 + 1.0 / mueff) / ((d + 2.0) * (d + 2.0) + mueff));
        const double damps =
            1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (d + 1.0)) - 1.0) + cs;
        w = make_weights(lambda, mu, d, config.equal_recombination_weights, c1_final, cmu);

        // --- sample one generation ---
        Eigen::MatrixXd z = sampler.sample(lambda);
        std::vector<Individual> offspring(static_cast<std::size_t>(lambda));
        const bool tpa_active = config.two_point_step_size && prev_shift.size() == d &&
                                prev_shift.norm() > 0.0 && lambda >= 2;

        const double threshold =
            kThresholdInit * diameter *
            std::pow(static_cast<double>(budget - evals_used()) / static_cast<double>(budget),
                     kThresholdDecay);

        for (int i = 0; i < lambda; ++i) {
            Eigen::VectorXd y = B * (scale_d.asDiagonal() * z.col(i));
            if (tpa_active && i < 2) {
                const Eigen::VectorXd v = prev_shift / sigma;
                y = (i == 0) ? v : Eigen::VectorXd(-v);
            }
            if (config.threshold_convergence) {
                const double len = sigma * y.norm();
                if (len > 0.0 && len < threshold) {
                    const double target_len = 2.0 * threshold - len;
                    y *= target_len / len;
                }
            }
            Eigen::VectorXd x = m + sigma * y;
            const bool outside = (x.array() < lo).any() || (x.array() > hi).any();
            if (outside) {
                // resample once, then clamp
                const Eigen::VectorXd z2 = sampler.sample(1).col(0);
                Eigen::VectorXd y2 = B * (scale_d.asDiagonal() * z2);
                Eigen::VectorXd x2 = m + sigma * y2;
                if ((x2.array() >= lo).all() && (x2.array() <= hi).all()) {
                    y = y2;
                    x = x2;
                } else {
                    x = x.cwiseMax(lo).cwiseMin(hi);
                    y = (x - m) / sigma;
                }
            }
            offspring[static_cast<std::size_t>(i)].x = std::move(x);
            offspring[static_cast<std::size_t>(i)].y = std::move(y);
        }

        // --- evaluate, honouring budget and sequential cutoff ---
        const long remaining = budget - evals_used();
        const int evaluable = static_cast<int>(std::min<long>(lambda, remaining));
        const int seq_cutoff = (config.mirrored_sampling && config.pairwise_selection) ||
                                       tpa_active
                                   ? 2
                                   : 1;
        int evaluated = 0;
        for (int i = 0; i < evaluable; ++i) {
            auto& ind = offspring[static_cast<std::size_t>(i)];
            ind.f = problem.evaluate(ind.x);
            ++evaluated;
            if (ind.f < best_f) {
                best_f = ind.f;
                result.best_x = ind.x;
            }
            if (config.sequential_selection && epoch_gen > 0 && ind.f < epoch_prev_best &&
                evaluated >= seq_cutoff)
                break;
        }
        offspring.resize(static_cast<std::size_t>(evaluated));
        epoch_evals += evaluated;

        if (evaluated < lambda && evals_used() >= budget) {
            // budget exhausted mid-generation: no adaptation on a partial pool
            result.incumbent_history.push_back(best_f);
            break;
        }

        // --- pairwise selection: drop the worse half of each mirrored pair ---
        if (config.mirrored_sampling && config.pairwise_selection) {
            for (int i = 0; i + 1 < evaluated; i += 2) {
                auto& a = offspring[static_cast<std::size_t>(i)];
                auto& b = offspring[static_cast<std::size_t>(i + 1)];
                (a.f <= b.f ? b : a).eligible = false;
            }
        }

        // --- selection pool ---
        std::vector<Individual> pool;
        pool.reserve(offspring.size() + parents.size());
        for (auto& ind : offspring)
            if (ind.eligible) pool.push_back(ind);
        if (config.elitism)
            for (const auto& p : parents) pool.push_back(p);
        std::stable_sort(pool.begin(), pool.end(),
                         [](const Individual& a, const Individual& b) { return a.f < b.f; });

        const int mu_used = std::min<int>(mu, static_cast<int>(pool.size()));
        Eigen::VectorXd w_used = w.positive.head(mu_used);
        w_used /= w_used.sum();

        const Eigen::VectorXd m_old = m;
        Eigen::VectorXd m_new = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < mu_used; ++i) m_new += w_used[i] * pool[static_cast<std::size_t>(i)].x;
        m = m_new;

        const Eigen::VectorXd shift = m - m_old;
        const Eigen::MatrixXd inv_sqrt_c =
            B * eigvals.cwiseSqrt().cwiseInverse().asDiagonal() * B.transpose();

        ps = (1.0 - cs) * ps +
             std::sqrt(cs * (2.0 - cs) * mueff) * (inv_sqrt_c * shift) / sigma;
        const double hsig_lhs =
            ps.norm() / std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * (epoch_gen + 1)));
        const bool hsig = hsig_lhs / chi_n < 1.4 + 2.0 / (d + 1.0);
        pc = (1.0 - cc) * pc +
             (hsig ? std::sqrt(cc * (2.0 - cc) * mueff) : 0.0) * shift / sigma;

        // --- covariance update ---
        Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(d, d);
        for (int i = 0; i < mu_used; ++i) {
            const Eigen::VectorXd y = (pool[static_cast<std::size_t>(i)].x - m_old) / sigma;
            rank_mu += w_used[i] * y * y.transpose();
        }
        double neg_sum = 0.0;
        if (config.active_update && evaluated > mu_used) {
            std::vector<const Individual*> ranked;
            for (const auto& ind : offspring) ranked.push_back(&ind);
            std::stable_sort(ranked.begin(), ranked.end(),
                             [](const Individual* a, const Individual* b) { return a->f < b->f; });
            const int n_neg =
                std::min<int>(static_cast<int>(w.negative.size()), evaluated - mu_used);
            for (int j = 0; j < n_neg; ++j) {
                const Individual& worst = *ranked[ranked.size() - 1 - static_cast<std::size_t>(j)];
                const Eigen::VectorXd y = (worst.x - m_old) / sigma;
                const double norm = (inv_sqrt_c * y).norm();
                const double scale = norm > 0.0 ? std::sqrt(static_cast<double>(d)) / norm : 1.0;
                const Eigen::VectorXd yhat = scale * y;
                const double wj = w.negative[j];
                rank_mu += wj * yhat * yhat.transpose();
                neg_sum += wj;
            }
        }
        const double delta_hsig = (1.0 - (hsig ? 1.0 : 0.0)) * cc * (2.0 - cc);
        C = (1.0 + c1_final * delta_hsig - c1_final - cmu * (1.0 + neg_sum)) * C +
            c1_final * (pc * pc.transpose()) + cmu * rank_mu;
        C = 0.5 * (C + C.transpose());

        // --- step size ---
        if (config.two_point_step_size) {
            if (tpa_active && evaluated >= 2) {
                const double rank = offspring[0].f < offspring[1].f ? kTpaAlpha : -kTpaAlpha;
                s_tpa = (1.0 - kTpaCs) * s_tpa + kTpaCs * rank;
                sigma *= std::exp(s_tpa);
            }
        } else {
            sigma *= std::exp((cs / damps) * (ps.norm() / chi_n - 1.0));
        }
        sigma = std::min(sigma, 1e8);
        prev_shift = shift;

        // --- eigendecomposition (every generation; d is small) ---
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
        bool decomposition_ok = eig.info() == Eigen::Success && C.allFinite();
        if (decomposition_ok && eig.eigenvalues().minCoeff() <= 0.0) decomposition_ok = false;
        if (!decomposition_ok) {
            C = Eigen::MatrixXd::Identity(d, d);
            B = Eigen::MatrixXd::Identity(d, d);
            eigvals = Eigen::VectorXd::Ones(d);
            ps.setZero();
            pc.setZero();
        } else {
            B = eig.eigenvectors();
            eigvals = eig.eigenvalues();
        }
        scale_d = eigvals.cwiseSqrt();

        // --- bookkeeping ---
        parents.assign(pool.begin(), pool.begin() + mu_used);
        const double gen_best = pool.front().f;
        epoch_prev_best = std::min(epoch_prev_best, gen_best);
        epoch_best_history.push_back(gen_best);
        result.incumbent_history.push_back(gen_best);
        ++epoch_gen;

        // --- restart handling ---
        if (config.restart != RestartStrategy::none && evals_used() < budget) {
            const std::size_t window =
                10 + static_cast<std::size_t>(std::ceil(30.0 * d / lambda));
            bool stagnated = false;
            if (epoch_best_history.size() >= window) {
                const auto begin = epoch_best_history.end() - static_cast<long>(window);
                const auto [lo_it, hi_it] = std::minmax_element(begin, epoch_best_history.end());
                stagnated = (*hi_it - *lo_it) < 1e-12;
            }
            const double cond = eigvals.maxCoeff() / eigvals.minCoeff();
            const bool tiny_sigma = sigma * scale_d.maxCoeff() < 1e-12;
            if (stagnated || tiny_sigma || cond > 1e14) {
                ++result.restarts;
                if (config.restart == RestartStrategy::ipop) {
                    ledger.lambda_large *= 2;
                    begin_epoch(ledger.lambda_large, sigma0);
                } else {
                    // BIPOP: spend budget alternately on a doubling large
                    // regime and a small randomized regime.
                    if (ledger.last_was_large)
                        ledger.budget_large += epoch_evals;
                    else
                        ledger.budget_small += epoch_evals;
                    if (ledger.budget_large <= ledger.budget_small) {
                        ledger.lambda_large *= 2;
                        ledger.last_was_large = true;
                        begin_epoch(ledger.lambda_large, sigma0);
                    } else {
                        const double u = rng.uniform01();
                        const int lambda_small = std::max(
                            4, static_cast<int>(std::floor(
                                   ledger.lambda_default *
                                   std::pow(0.5 * ledger.lambda_large / ledger.lambda_default,
                                            u * u))));
                        ledger.last_was_large = false;
                        begin_epoch(lambda_small,
                                    sigma0 * std::pow(10.0, -2.0 * rng.uniform01()));
                    }
                }
                // a restart needs at least one full generation of budget
                if (budget - evals_used() < lambda) break;
            }
        }
        if (budget - evals_used() < 1) break;
    }

    result.evals_used = evals_used();
    result.best_precision = problem.precision(best_f);
    return result;
}

// ---------------------------------------------------------------------------
// Portfolio execution
// ---------------------------------------------------------------------------

std::vector<bench::RunRow> run_portfolio_runs(const std::vector<bench::ProblemId>& problems,
                                              const std::vector<ModuleConfig>& portfolio,
                                              long budget, int runs, std::uint64_t seed,
                                              int jobs) {
    if (runs < 1) throw ArgumentError("run_portfolio: runs must be >= 1");
    if (problems.empty() || portfolio.empty())
        throw ArgumentError("run_portfolio: empty problem or portfolio list");

    struct Task {
        bench::ProblemId id;
        const ModuleConfig* config;
        int run = 0;
    };
    std::vector<Task> tasks;
    tasks.reserve(problems.size() * portfolio.size() * static_cast<std::size_t>(runs));
    for (const auto& id : problems)
        for (const auto& config : portfolio)
            for (int r = 0; r < runs; ++r) tasks.push_back({id, &config, r});

    std::vector<bench::RunRow> rows(tasks.size());
    parallel_for(tasks.size(), jobs, [&](std::size_t t) {
        const Task& task = tasks[t];
        auto problem = bench::make_problem(task.id.fid, task.id.iid, task.id.dim);
        const std::string code = task.config->code();
        const std::uint64_t run_seed =
            stream_seed(seed, {fnv1a64("fbas.modcma.portfolio"),
                               static_cast<std::uint64_t>(task.id.fid),
                               static_cast<std::uint64_t>(task.id.iid),
                               static_cast<std::uint64_t>(task.id.dim), fnv1a64(code),
                               static_cast<std::uint64_t>(task.run)});
        const RunResult res = run(problem, *task.config, CmaParams{}, budget, run_seed);
        rows[t] = bench::RunRow{task.id, code, task.run, budget, res.best_precision};
    });
    return rows;
}

std::vector<bench::PerformanceRecord> run_portfolio(const std::vector<bench::ProblemId>& problems,
                                                    const std::vector<ModuleConfig>& portfolio,
                                                    long budget, int runs, std::uint64_t seed,
                                                    int jobs) {
    return bench::aggregate_runs(run_portfolio_runs(problems, portfolio, budget, runs, seed, jobs));
}

std::vector<std::string> select_portfolio(const std::vector<bench::PerformanceRecord>& records,
                                          std::size_t k) {
    if (records.empty()) throw ValidationError("select_portfolio: no records");
    std::set<int> fids;
    std::set<std::string> algos;
    for (const auto& rec : records) {
        fids.insert(rec.problem.fid);
        algos.insert(rec.algo_id);
    }
    // coverage: every (function, algorithm) pair needs at least one record
    std::map<std::pair<int, std::string>, std::vector<double>> cells;
    for (const auto& rec : records)
        cells[{rec.problem.fid, rec.algo_id}].push_back(rec.median_precision);
    for (int fid : fids)
        for (const auto& algo : algos)
            if (!cells.count({fid, algo}))
                throw ValidationError("select_portfolio: missing records for fid=" +
                                      std::to_string(fid) + ", algo=" + algo);

    std::vector<std::string> winners;
    for (int fid : fids) {
        std::string best_algo;
        double best_median = std::numeric_limits<double>::infinity();
        for (const auto& algo : algos) {  // std::set iterates lexicographically
            const double med = median(cells[{fid, algo}]);
            if (med < best_median) {
                best_median = med;
                best_algo = algo;
            }
        }
        if (std::find(winners.begin(), winners.end(), best_algo) == winners.end())
            winners.push_back(best_algo);
    }
    if (winners.size() > k) winners.resize(k);
    return winners;
}

std::vector<ModuleConfig> read_portfolio_file(const std::filesystem::path& path) {
    std::vector<ModuleConfig> portfolio;
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto line = std::string(trim(lines[i]));
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = std::string(trim(line.substr(0, hash)));
        if (line.empty()) continue;
        try {
            portfolio.push_back(ModuleConfig::from_code(line));
        } catch (const ArgumentError& e) {
            throw ParseError("line " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    if (portfolio.empty())
        throw ValidationError("portfolio file has no configurations: " + path.string());
    return portfolio;
}

void write_portfolio_file(const std::filesystem::path& path,
                          const std::vector<ModuleConfig>& portfolio,
                          const std::string& header_comment) {
    std::ostringstream out;
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    for (const auto& config : portfolio) out << config.code() << "\n";
    write_text_file(path, out.str());
}

const std::vector<ModuleConfig>& default_portfolio() {
    static const std::vector<ModuleConfig> portfolio = [] {
        std::vector<ModuleConfig> p;
        for (const char* code : {
                 "00000000000",  // vanilla
                 "11000000000",  // active update + elitism
                 "00100001000",  // mirrored + pairwise selection
                 "00010000010",  // orthogonal sampling, sobol base
                 "00001100000",  // sequential selection + threshold convergence
                 "00000010001",  // two-point step size + IPOP
                 "00000000122",  // equal weights, halton base, BIPOP
                 "10101010100",  // active + mirrored + sequential + TPA + equal weights
             })
            p.push_back(ModuleConfig::from_code(code));
        return p;
    }();
    return portfolio;
}

}  // namespace fbas::modcma
