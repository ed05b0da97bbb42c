#include "fbas/ela.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "fbas/errors.hpp"
#include "fbas/rng.hpp"
#include "fbas/util.hpp"

namespace fbas::ela {

namespace {

constexpr double kRatioSentinel = 1e12;

// a/b with documented degenerate rules: 0/0 -> 1, x/0 -> large sentinel.
// Keeps every feature finite for the downstream regression.
double safe_ratio(double a, double b) {
    if (b != 0.0) return a / b;
    return a == 0.0 ? 1.0 : kRatioSentinel;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<double> pairwise_distances(const Eigen::MatrixXd& X,
                                       const std::vector<int>& idx) {
    std::vector<double> d;
    d.reserve(idx.size() * (idx.size() - 1) / 2);
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = a + 1; b < idx.size(); ++b)
            d.push_back((X.row(idx[a]) - X.row(idx[b])).norm());
    return d;
}

std::string quantile_label(double q) {
    const int pct = static_cast<int>(std::lround(q * 100.0));
    std::string s = std::to_string(pct);
    return s.size() < 2 ? "0" + s : s;
}

}  // namespace

SampleSet uniform_sample(bench::ProblemInstance& problem, int n, std::uint64_t seed) {
    const int d = problem.id().dim;
    if (n < 10 * d)
        throw ArgumentError("uniform_sample: n must be >= 10*d = " + std::to_string(10 * d) +
                            ", got " + std::to_string(n));
    Rng rng(stream_seed(fnv1a64("fbas.ela.sample"), {seed}));
    SampleSet s;
    s.seed = seed;
    s.X.resize(n, d);
    s.y.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j)
            s.X(i, j) = rng.uniform(bench::ProblemInstance::kDomainLo,
                                    bench::ProblemInstance::kDomainHi);
        s.y[i] = problem.evaluate(s.X.row(i).transpose());
    }
    return s;
}

std::vector<double> default_epsilon_grid() {
    std::vector<double> grid{0.0};
    for (double k = -5.0; k <= 15.0 + 1e-9; k += 0.25) grid.push_back(std::pow(10.0, k));
    return grid;
}

IcSettings::IcSettings() : epsilon_grid(default_epsilon_grid()) {}

NamedValues basic_stats(const SampleSet& sample) {
    std::vector<double> y(sample.y.data(), sample.y.data() + sample.y.size());
    return {
        {"basic.y_min", *std::min_element(y.begin(), y.end())},
        {"basic.y_max", *std::max_element(y.begin(), y.end())},
        {"basic.y_mean", mean_of(y)},
        {"basic.y_sd", sample_sd(y)},
    };
}

NamedValues ela_distr(const SampleSet& sample) {
    const int n = sample.n();
    if (n < 4) throw ArgumentError("ela_distr: need at least 4 samples");
    const double mean = sample.y.mean();
    double m2 = 0, m3 = 0, m4 = 0;
    for (int i = 0; i < n; ++i) {
        const double c = sample.y[i] - mean;
        m2 += c * c;
        m3 += c * c * c;
        m4 += c * c * c * c;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    double skewness = 0.0, kurtosis = 0.0;
    if (m2 > 0.0) {  // constant y keeps the documented zero values
        skewness = m3 / std::pow(m2, 1.5);
        kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return {{"ela_distr.skewness", skewness}, {"ela_distr.kurtosis", kurtosis}};
}

namespace {

struct FitResult {
    Eigen::VectorXd beta;
    double adj_r2 = 1.0;
};

FitResult least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, int p) {
    FitResult fit;
    // Complete orthogonal decomposition = pseudo-inverse solution, which
    // also covers rank-deficient designs.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    fit.beta = cod.solve(y);
    const double n = static_cast<double>(A.rows());
    const double mean = y.mean();
    const double ss_tot = (y.array() - mean).square().sum();
    if (ss_tot <= 0.0) {
        fit.adj_r2 = 1.0;  // constant response: the intercept model is exact
        return fit;
    }
    const double ss_res = (y - A * fit.beta).squaredNorm();
    const double r2 = 1.0 - ss_res / ss_tot;
    fit.adj_r2 = 1.0 - (1.0 - r2) * (n - 1.0) / (n - p - 1.0);
    return fit;
}

}  // namespace

NamedValues ela_meta(const SampleSet& sample) {
    const int n = sample.n();
    const int d = sample.dim();
    if (n <= 2 * d + 1)
        throw ArgumentError("ela_meta: need n > 2d+1 samples, got " + std::to_string(n));

    Eigen::MatrixXd lin(n, d + 1);
    lin.col(0).setOnes();
    lin.rightCols(d) = sample.X;
    const FitResult lin_fit = least_squares(lin, sample.y, d);

    const bool constant_y = (sample.y.array() - sample.y.mean()).square().sum() <= 0.0;
    double coef_min = 0.0, coef_max = 0.0, intercept = sample.y.mean();
    if (!constant_y) {
        intercept = lin_fit.beta[0];
        coef_min = std::numeric_limits<double>::infinity();
        coef_max = 0.0;
        for (int j = 1; j <= d; ++j) {
            coef_min = std::min(coef_min, std::fabs(lin_fit.beta[j]));
            coef_max = std::max(coef_max, std::fabs(lin_fit.beta[j]));
        }
    }

    Eigen::MatrixXd quad(n, 2 * d + 1);
    quad.col(0).setOnes();
    quad.middleCols(1, d) = sample.X;
    quad.rightCols(d) = sample.X.array().square();
    const FitResult quad_fit = least_squares(quad, sample.y, 2 * d);

    double cond = 1.0;
    if (!constant_y) {
        double qmin = std::numeric_limits<double>::infinity(), qmax = 0.0;
        for (int j = d + 1; j <= 2 * d; ++j) {
            qmin = std::min(qmin, std::fabs(quad_fit.beta[j]));
            qmax = std::max(qmax, std::fabs(quad_fit.beta[j]));
        }
        cond = safe_ratio(qmax, qmin);
        if (qmax == 0.0) cond = 1.0;
    }

    return {
        {"ela_meta.lin_simple.adj_r2", lin_fit.adj_r2},
        {"ela_meta.lin_simple.intercept", intercept},
        {"ela_meta.lin_simple.coef.min", coef_min},
        {"ela_meta.lin_simple.coef.max", coef_max},
        {"ela_meta.quad_simple.adj_r2", quad_fit.adj_r2},
        {"ela_meta.quad_simple.cond", cond},
    };
}

NamedValues dispersion(const SampleSet& sample) {
    static constexpr double kQuantiles[] = {0.02, 0.05, 0.10, 0.25};
    return dispersion(sample, kQuantiles);
}

NamedValues dispersion(const SampleSet& sample, std::span<const double> quantiles) {
    const int n = sample.n();
    if (n < 2) throw ArgumentError("dispersion: need at least 2 samples");

    // Rank points by fitness, ties by index, so the best-quantile subset
    // depends only on the fitness order.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return sample.y[a] < sample.y[b]; });

    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    const auto dist_all = pairwise_distances(sample.X, all);
    const double mean_all = mean_of(dist_all);
    const double median_all = dist_all.empty() ? 0.0 : median(dist_all);

    NamedValues ratio_mean, ratio_median, diff_mean, diff_median;
    for (double q : quantiles) {
        const int size = std::min<int>(n, static_cast<int>(std::ceil(q * n)));
        const std::vector<int> subset(order.begin(), order.begin() + std::max(size, 1));
        // Fewer than two points have no pairwise distances; their dispersion
        // is taken as 0.
        double mean_q = 0.0, median_q = 0.0;
        if (subset.size() >= 2) {
            const auto dist_q = pairwise_distances(sample.X, subset);
            mean_q = mean_of(dist_q);
            median_q = median(dist_q);
        }
        const std::string label = quantile_label(q);
        ratio_mean.emplace_back("disp.ratio_mean_" + label, safe_ratio(mean_q, mean_all));
        ratio_median.emplace_back("disp.ratio_median_" + label,
                                  safe_ratio(median_q, median_all));
        diff_mean.emplace_back("disp.diff_mean_" + label, mean_q - mean_all);
        diff_median.emplace_back("disp.diff_median_" + label, median_q - median_all);
    }
    NamedValues out;
    for (auto* part : {&ratio_mean, &ratio_median, &diff_mean, &diff_median})
        out.insert(out.end(), part->begin(), part->end());
    return out;
}

namespace {

std::vector<int> greedy_tour(const SampleSet& sample, std::uint64_t tour_seed) {
    const int n = sample.n();
    std::vector<int> tour;
    tour.reserve(n);
    std::vector<bool> visited(n, false);
    int current = static_cast<int>(tour_seed % static_cast<std::uint64_t>(n));
    tour.push_back(current);
    visited[current] = true;
    for (int step = 1; step < n; ++step) {
        double best = std::numeric_limits<double>::infinity();
        int best_idx = -1;
        for (int j = 0; j < n; ++j) {
            if (visited[j]) continue;
            const double dist = (sample.X.row(current) - sample.X.row(j)).norm();
            if (dist < best) {
                best = dist;
                best_idx = j;
            }
        }
        current = best_idx;
        tour.push_back(current);
        visited[current] = true;
    }
    return tour;
}

int sign_symbol(double slope, double eps) {
    if (slope < -eps) return -1;
    if (slope > eps) return 1;
    return 0;
}

double pair_entropy(const std::vector<int>& symbols) {
    if (symbols.size() < 2) return 0.0;
    int counts[3][3] = {};
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i)
        ++counts[symbols[i] + 1][symbols[i + 1] + 1];
    const double total = static_cast<double>(symbols.size() - 1);
    const double log6 = std::log(6.0);
    double h = 0.0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            if (a == b || counts[a][b] == 0) continue;
            const double p = counts[a][b] / total;
            h -= p * std::log(p) / log6;
        }
    return h;
}

double partial_information(const std::vector<int>& symbols, int n_points) {
    int length = 0;
    int prev = 0;  // zeros are deleted, so 0 never equals a kept symbol
    for (int s : symbols) {
        if (s == 0) continue;
        if (s != prev) {
            ++length;
            prev = s;
        }
    }
    return static_cast<double>(length) / static_cast<double>(n_points - 1);
}

}  // namespace

NamedValues information_content(const SampleSet& sample, const IcSettings& settings) {
    const int n = sample.n();
    if (n < 3) throw ArgumentError("information_content: need at least 3 samples");
    if (settings.epsilon_grid.empty())
        throw ArgumentError("information_content: empty epsilon grid");

    const auto tour = greedy_tour(sample, settings.tour_seed);
    std::vector<double> slopes;
    slopes.reserve(n - 1);
    for (int i = 0; i + 1 < n; ++i) {
        const double dist = (sample.X.row(tour[i]) - sample.X.row(tour[i + 1])).norm();
        if (dist == 0.0) continue;  // duplicate points contribute no slope
        slopes.push_back((sample.y[tour[i + 1]] - sample.y[tour[i]]) / dist);
    }

    std::vector<double> eps_positive;
    for (double e : settings.epsilon_grid)
        if (e > 0.0) eps_positive.push_back(e);
    std::sort(eps_positive.begin(), eps_positive.end());
    if (eps_positive.empty())
        throw ArgumentError("information_content: grid needs a positive epsilon");
    const double eps_min = eps_positive.front();

    auto symbols_at = [&](double eps) {
        std::vector<int> sym;
        sym.reserve(slopes.size());
        for (double s : slopes) sym.push_back(sign_symbol(s, eps));
        return sym;
    };

    const double m0 = partial_information(symbols_at(0.0), n);
    const double h0 = pair_entropy(symbols_at(0.0));

    double h_max = h0;
    double h_max_positive = -1.0;
    double eps_max = eps_min;
    double eps_s = std::log10(eps_positive.back());
    bool settled = false;
    double eps_ratio = std::log10(eps_min);

    for (double eps : eps_positive) {
        const auto sym = symbols_at(eps);
        const double h = pair_entropy(sym);
        const double m = partial_information(sym, n);
        h_max = std::max(h_max, h);
        if (h > h_max_positive) {
            h_max_positive = h;
            eps_max = eps;
        }
        if (!settled && h < settings.settling_threshold) {
            eps_s = std::log10(eps);
            settled = true;
        }
        if (m0 > 0.0 && m >= settings.half_ratio * m0) eps_ratio = std::log10(eps);
    }

    return {
        {"ic.h.max", h_max},
        {"ic.eps.s", eps_s},
        {"ic.eps.max", eps_max},
        {"ic.eps.ratio", eps_ratio},
        {"ic.m0", m0},
    };
}

NamedValues nearest_better(const SampleSet& sample) {
    const int n = sample.n();
    if (n < 3) throw ArgumentError("nearest_better: need at least 3 samples");

    // better(j, i): strictly lower fitness, ties broken by sample index.
    auto better = [&](int j, int i) {
        return sample.y[j] < sample.y[i] || (sample.y[j] == sample.y[i] && j < i);
    };

    std::vector<double> nn(n, std::numeric_limits<double>::infinity());
    std::vector<double> nb;   // per non-best point
    std::vector<double> nn_of_nb_points;
    std::vector<double> ratio;
    std::vector<double> indegree(n, 0.0);
    nb.reserve(n - 1);

    for (int i = 0; i < n; ++i) {
        double nb_dist = std::numeric_limits<double>::infinity();
        int nb_idx = -1;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double dist = (sample.X.row(i) - sample.X.row(j)).norm();
            nn[i] = std::min(nn[i], dist);
            if (better(j, i) && (dist < nb_dist || (dist == nb_dist && j < nb_idx))) {
                nb_dist = dist;
                nb_idx = j;
            }
        }
        if (nb_idx >= 0) {
            nb.push_back(nb_dist);
            nn_of_nb_points.push_back(nn[i]);
            ratio.push_back(safe_ratio(nb_dist, nn[i]));
            indegree[nb_idx] += 1.0;
        }
    }

    std::vector<double> nn_all(nn.begin(), nn.end());
    std::vector<double> fitness(sample.y.data(), sample.y.data() + n);

    return {
        {"nbc.nn_nb.sd_ratio", safe_ratio(sample_sd(nn_all), sample_sd(nb))},
        {"nbc.nn_nb.mean_ratio", safe_ratio(mean_of(nn_all), mean_of(nb))},
        {"nbc.nn_nb.cor", pearson_correlation(nn_of_nb_points, nb)},
        {"nbc.dist_ratio.coeff_var", safe_ratio(sample_sd(ratio), mean_of(ratio))},
        {"nbc.nb_fitness.cor", pearson_correlation(fitness, indegree)},
    };
}

const std::vector<std::string>& canonical_feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v = {
            "basic.y_min", "basic.y_max", "basic.y_mean", "basic.y_sd",
            "ela_distr.skewness", "ela_distr.kurtosis",
            "ela_meta.lin_simple.adj_r2", "ela_meta.lin_simple.intercept",
            "ela_meta.lin_simple.coef.min", "ela_meta.lin_simple.coef.max",
            "ela_meta.quad_simple.adj_r2", "ela_meta.quad_simple.cond",
        };
        for (const char* kind : {"ratio_mean", "ratio_median", "diff_mean", "diff_median"})
            for (const char* q : {"02", "05", "10", "25"})
                v.push_back(std::string("disp.") + kind + "_" + q);
        for (const char* name :
             {"ic.h.max", "ic.eps.s", "ic.eps.max", "ic.eps.ratio", "ic.m0"})
            v.push_back(name);
        for (const char* name : {"nbc.nn_nb.sd_ratio", "nbc.nn_nb.mean_ratio", "nbc.nn_nb.cor",
                                 "nbc.dist_ratio.coeff_var", "nbc.nb_fitness.cor"})
            v.push_back(name);
        return v;
    }();
    return names;
}

const std::vector<std::string>& selected_feature_names() {
    static const std::vector<std::string> names = {
        "disp.diff_mean_02",
        "ela_distr.skewness",
        "ela_meta.lin_simple.adj_r2",
        "ela_meta.lin_simple.coef.max",
        "ela_meta.lin_simple.intercept",
        "ela_meta.quad_simple.adj_r2",
        "ic.eps.ratio",
        "ic.eps.s",
        "nbc.nb_fitness.cor",
    };
    return names;
}

double FeatureVector::at(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return values[i];
    throw ArgumentError("unknown feature name: " + std::string(name));
}

bool FeatureVector::has(std::string_view name) const {
    for (const auto& n : names)
        if (n == name) return true;
    return false;
}

FeatureVector compute_features(const SampleSet& sample, const IcSettings& settings) {
    FeatureVector fv;
    fv.n_samples = sample.n();
    fv.n_reps = 1;
    auto append = [&](const NamedValues& part) {
        for (const auto& [name, value] : part) {
            fv.names.push_back(name);
            fv.values.push_back(value);
        }
    };
    append(basic_stats(sample));
    append(ela_distr(sample));
    append(ela_meta(sample));
    append(dispersion(sample));
    append(information_content(sample, settings));
    append(nearest_better(sample));
    return fv;
}

FeatureVector compute_features(bench::ProblemInstance& problem, int n, int reps,
                               std::uint64_t seed, const IcSettings& settings,
                               std::vector<FeatureVector>* per_rep) {
    if (reps < 1) throw ArgumentError("compute_features: reps must be >= 1");
    std::vector<FeatureVector> all;
    all.reserve(reps);
    for (int rep = 0; rep < reps; ++rep) {
        const auto sample =
            uniform_sample(problem, n, hash_combine(seed, static_cast<std::uint64_t>(rep)));
        all.push_back(compute_features(sample, settings));
        all.back().problem = problem.id();
    }
    FeatureVector result = all.front();
    result.problem = problem.id();
    result.n_reps = reps;
    for (std::size_t f = 0; f < result.values.size(); ++f) {
        std::vector<double> values(all.size());
        for (std::size_t r = 0; r < all.size(); ++r) values[r] = all[r].values[f];
        result.values[f] = median(values);
    }
    if (per_rep) *per_rep = std::move(all);
    return result;
}

FeatureVector select_features(const FeatureVector& fv, std::span<const std::string> names) {
    FeatureVector out;
    out.problem = fv.problem;
    out.n_samples = fv.n_samples;
    out.n_reps = fv.n_reps;
    for (const auto& name : names) {
        if (std::count(names.begin(), names.end(), name) > 1)
            throw ArgumentError("duplicate feature name: " + name);
        if (!fv.has(name)) {
            std::string available;
            for (const auto& n : fv.names) available += (available.empty() ? "" : ", ") + n;
            throw ArgumentError("unknown feature name: " + name + " (available: " + available +
                                ")");
        }
        out.names.push_back(name);
        out.values.push_back(fv.at(name));
    }
    return out;
}

void write_features_csv(const std::filesystem::path& path,
                        const std::vector<FeatureVector>& rows,
                        const std::string& header_comment) {
    std::ostringstream out;
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    const std::vector<std::string>* names =
        rows.empty() ? &canonical_feature_names() : &rows.front().names;
    out << "fid,iid,dim,n_samples,n_reps";
    for (const auto& name : *names) out << "," << name;
    out << "\n";
    for (const auto& fv : rows) {
        if (fv.names != *names)
            throw ArgumentError("write_features_csv: inconsistent feature columns");
        out << fv.problem.fid << "," << fv.problem.iid << "," << fv.problem.dim << ","
            << fv.n_samples << "," << fv.n_reps;
        for (double v : fv.values) out << "," << format_double(v);
        out << "\n";
    }
    write_text_file(path, out.str());
}

std::vector<FeatureVector> read_features_csv(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    std::vector<FeatureVector> rows;
    std::vector<std::string> names;
    bool header_seen = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = trim(lines[i]);
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split(line, ',');
        if (!header_seen) {
            if (fields.size() < 6 || fields[0] != "fid")
                throw ParseError("line " + std::to_string(i + 1) +
                                 ": expected features header starting with 'fid'");
            names.assign(fields.begin() + 5, fields.end());
            header_seen = true;
            continue;
        }
        if (fields.size() != names.size() + 5)
            throw ParseError("line " + std::to_string(i + 1) + ": expected " +
                             std::to_string(names.size() + 5) + " fields");
        FeatureVector fv;
        fv.names = names;
        try {
            fv.problem.fid = std::stoi(fields[0]);
            fv.problem.iid = std::stoi(fields[1]);
            fv.problem.dim = std::stoi(fields[2]);
            fv.n_samples = std::stoi(fields[3]);
            fv.n_reps = std::stoi(fields[4]);
            for (std::size_t f = 5; f < fields.size(); ++f)
                fv.values.push_back(std::stod(fields[f]));
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(i + 1) + ": bad numeric field");
        }
        rows.push_back(std::move(fv));
    }
    if (!header_seen) throw ParseError("missing features header row");
    return rows;
}

}  // namespace fbas::ela
