#include "fbas/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "fbas/errors.hpp"
#include "fbas/rng.hpp"
#include "fbas/util.hpp"

namespace fbas::forest {

namespace {

struct SplitChoice {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

// Gains within this relative band count as ties (resolved to the lower
// feature index, then the lower threshold). The band absorbs the rounding
// noise that a large constant target shift leaves in otherwise equal gains;
// being relative, it also survives positive rescaling of the targets.
constexpr double kGainTieBand = 1e-7;

struct TreeBuilder {
    const Eigen::MatrixXd& X;
    const std::vector<double>& target;  // root-centred targets, see fit()
    const Eigen::VectorXd& raw_y;
    const ForestParams& params;
    Rng& rng;
    Tree tree;

    int build(std::vector<int>& rows, int depth) {
        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        const int n = static_cast<int>(rows.size());
        const bool depth_capped = params.max_depth > 0 && depth >= params.max_depth;
        SplitChoice split;
        if (n >= params.min_samples_split && !depth_capped) split = find_split(rows);

        if (split.feature < 0) {
            make_leaf(node_id, rows);
            return node_id;
        }
        std::vector<int> left_rows, right_rows;
        left_rows.reserve(rows.size());
        right_rows.reserve(rows.size());
        for (int r : rows)
            (X(r, split.feature) <= split.threshold ? left_rows : right_rows).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        tree.nodes[node_id].feature = split.feature;
        tree.nodes[node_id].threshold = split.threshold;
        const int left = build(left_rows, depth + 1);
        const int right = build(right_rows, depth + 1);
        tree.nodes[node_id].left = left;
        tree.nodes[node_id].right = right;
        return node_id;
    }

    void make_leaf(int node_id, const std::vector<int>& rows) {
        // All-equal leaves keep the exact target value, so constant responses
        // reproduce bit-for-bit.
        bool all_equal = true;
        for (int r : rows)
            if (raw_y[r] != raw_y[rows.front()]) {
                all_equal = false;
                break;
            }
        double value = raw_y[rows.front()];
        if (!all_equal) {
            double sum = 0.0;
            for (int r : rows) sum += raw_y[r];
            value = sum / static_cast<double>(rows.size());
        }
        tree.nodes[node_id].value = value;
        tree.nodes[node_id].count = static_cast<int>(rows.size());
    }

    std::vector<int> candidate_features() {
        const int p = static_cast<int>(X.cols());
        const int k = std::min(
            p, std::max(1, static_cast<int>(std::ceil(params.max_features * p))));
        std::vector<int> features(p);
        std::iota(features.begin(), features.end(), 0);
        if (k == p) return features;  // no rng consumption when all features are tried
        // Partial Fisher-Yates, then sorted so the tie rule stays "lowest
        // feature index wins" regardless of draw order.
        for (int i = 0; i < k; ++i) {
            const int j = i + static_cast<int>(rng.uniform_int(
                                  static_cast<std::uint64_t>(p - i)));
            std::swap(features[i], features[j]);
        }
        features.resize(k);
        std::sort(features.begin(), features.end());
        return features;
    }

    SplitChoice find_split(const std::vector<int>& rows) {
        const int n = static_cast<int>(rows.size());
        SplitChoice best;

        bool constant_target = true;
        for (int r : rows)
            if (target[r] != target[rows.front()]) {
                constant_target = false;
                break;
            }
        if (constant_target) return best;  // no split can reduce variance

        // Gains are computed on node-centred targets: variance reduction is
        // invariant under constant target offsets, and centring here makes
        // that hold numerically too (constant shifts of y cancel instead of
        // leaking rounding noise into the argmax).
        double node_mean = 0.0;
        for (int r : rows) node_mean += target[r];
        node_mean /= static_cast<double>(rows.size());

        std::vector<std::pair<double, double>> values(rows.size());  // (feature value, target)
        for (int feature : candidate_features()) {
            for (std::size_t i = 0; i < rows.size(); ++i)
                values[i] = {X(rows[i], feature), target[rows[i]] - node_mean};
            std::sort(values.begin(), values.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

            // Candidate thresholds are midpoints between consecutive distinct
            // sorted values; the gain is the decrease in summed squared error,
            // sum_L^2/n_L + sum_R^2/n_R for centred targets.
            double left_sum = 0.0;
            double total = 0.0;
            for (const auto& [v, t] : values) total += t;
            for (int i = 0; i + 1 < n; ++i) {
                left_sum += values[i].second;
                if (values[i].first == values[i + 1].first) continue;
                const int n_left = i + 1;
                const int n_right = n - n_left;
                if (n_left < params.min_samples_leaf || n_right < params.min_samples_leaf)
                    continue;
                const double right_sum = total - left_sum;
                const double gain =
                    left_sum * left_sum / n_left + right_sum * right_sum / n_right;
                if (gain > best.gain * (1.0 + kGainTieBand)) {
                    best.gain = gain;
                    best.feature = feature;
                    best.threshold = values[i].first + 0.5 * (values[i + 1].first - values[i].first);
                }
            }
        }
        return best;
    }
};

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), 8);
}

void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) {
    const std::uint64_t bits = get_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

constexpr char kMagic[8] = {'F', 'B', 'F', 'R', 'S', 'T', '0', '1'};

}  // namespace

double Tree::predict(std::span<const double> x) const {
    int node = 0;
    for (;;) {
        const TreeNode& cur = nodes[static_cast<std::size_t>(node)];
        if (cur.feature < 0) return cur.value;
        node = x[static_cast<std::size_t>(cur.feature)] <= cur.threshold ? cur.left : cur.right;
    }
}

Forest Forest::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   const ForestParams& params, std::uint64_t seed,
                   std::vector<std::string> feature_names, TargetScale scale, int jobs) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    if (n < 2) throw ArgumentError("forest fit: need at least 2 rows");
    if (params.n_trees < 1) throw ArgumentError("forest fit: n_trees must be >= 1");
    if (!(params.max_features > 0.0 && params.max_features <= 1.0))
        throw ArgumentError("forest fit: max_features must be in (0, 1]");
    if (y.size() != n) throw ArgumentError("forest fit: X and y row counts differ");
    if (!feature_names.empty() && static_cast<int>(feature_names.size()) != p)
        throw ArgumentError("forest fit: feature_names length does not match columns");
    for (int i = 0; i < n; ++i) {
        if (!std::isfinite(y[i]))
            throw ArgumentError("forest fit: non-finite target at row " + std::to_string(i));
        for (int j = 0; j < p; ++j)
            if (!std::isfinite(X(i, j)))
                throw ArgumentError("forest fit: non-finite feature at row " + std::to_string(i) +
                                    ", column " + std::to_string(j));
    }

    Forest forest;
    forest.params_ = params;
    forest.feature_names_ = std::move(feature_names);
    forest.scale_ = scale;
    forest.n_features_ = p;
    forest.trees_.resize(static_cast<std::size_t>(params.n_trees));

    parallel_for(static_cast<std::size_t>(params.n_trees), jobs, [&](std::size_t t) {
        Rng rng(stream_seed(fnv1a64("fbas.forest.tree"), {seed, static_cast<std::uint64_t>(t)}));
        std::vector<int> rows(static_cast<std::size_t>(n));
        if (params.bootstrap) {
            for (auto& r : rows)
                r = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
        } else {
            std::iota(rows.begin(), rows.end(), 0);
        }
        // Split gains are computed on targets anchored at one in-bag value;
        // the anchor shifts exactly with any constant offset of y, which
        // keeps split decisions stable under large shifts. Leaf values are
        // means of the raw targets.
        const double anchor = y[rows.front()];
        std::vector<double> centred(static_cast<std::size_t>(n), 0.0);
        for (int r : rows) centred[static_cast<std::size_t>(r)] = y[r] - anchor;

        TreeBuilder builder{X, centred, y, params, rng, {}};
        builder.tree.nodes.reserve(2 * rows.size());
        builder.build(rows, 0);
        forest.trees_[t] = std::move(builder.tree);
    });
    return forest;
}

double Forest::predict(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != n_features_)
        throw ArgumentError("forest predict: expected " + std::to_string(n_features_) +
                            " features, got " + std::to_string(x.size()));
    // unanimous trees return their common value exactly (the mean of k equal
    // values is that value; summing would round it)
    const double first = trees_.front().predict(x);
    double sum = first;
    bool unanimous = true;
    for (std::size_t t = 1; t < trees_.size(); ++t) {
        const double value = trees_[t].predict(x);
        unanimous &= value == first;
        sum += value;
    }
    if (unanimous) return first;
    return sum / static_cast<double>(trees_.size());
}

double Forest::predict(const Eigen::VectorXd& x) const {
    return predict(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

Eigen::VectorXd Forest::predict_rows(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd out(X.rows());
    std::vector<double> row(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) row[static_cast<std::size_t>(j)] = X(i, j);
        out[i] = predict(row);
    }
    return out;
}

void Forest::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open model file for writing: " + path.string());
    out.write(kMagic, sizeof(kMagic));
    put_u64(out, static_cast<std::uint64_t>(params_.n_trees));
    put_f64(out, params_.max_features);
    put_u64(out, static_cast<std::uint64_t>(params_.min_samples_split));
    put_u64(out, static_cast<std::uint64_t>(params_.min_samples_leaf));
    put_u64(out, static_cast<std::uint64_t>(params_.max_depth));
    put_u64(out, params_.bootstrap ? 1 : 0);
    put_u64(out, scale_ == TargetScale::log10 ? 1 : 0);
    put_u64(out, static_cast<std::uint64_t>(n_features_));
    put_u64(out, static_cast<std::uint64_t>(feature_names_.size()));
    for (const auto& name : feature_names_) {
        put_u64(out, name.size());
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
    }
    put_u64(out, trees_.size());
    for (const auto& tree : trees_) {
        put_u64(out, tree.nodes.size());
        for (const auto& node : tree.nodes) {
            put_u64(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(node.feature)));
            put_f64(out, node.threshold);
            put_u64(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(node.left)));
            put_u64(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(node.right)));
            put_f64(out, node.value);
            put_u64(out, static_cast<std::uint64_t>(node.count));
        }
    }
    if (!out) throw Error("write failed: " + path.string());
}

Forest Forest::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file: " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw ParseError("not a forest model file: " + path.string());
    Forest forest;
    forest.params_.n_trees = static_cast<int>(get_u64(in));
    forest.params_.max_features = get_f64(in);
    forest.params_.min_samples_split = static_cast<int>(get_u64(in));
    forest.params_.min_samples_leaf = static_cast<int>(get_u64(in));
    forest.params_.max_depth = static_cast<int>(get_u64(in));
    forest.params_.bootstrap = get_u64(in) != 0;
    forest.scale_ = get_u64(in) != 0 ? TargetScale::log10 : TargetScale::unscaled;
    forest.n_features_ = static_cast<int>(get_u64(in));
    const auto n_names = get_u64(in);
    for (std::uint64_t i = 0; i < n_names; ++i) {
        const auto len = get_u64(in);
        std::string name(len, '\0');
        in.read(name.data(), static_cast<std::streamsize>(len));
        forest.feature_names_.push_back(std::move(name));
    }
    const auto n_trees = get_u64(in);
    forest.trees_.resize(n_trees);
    for (auto& tree : forest.trees_) {
        const auto n_nodes = get_u64(in);
        tree.nodes.resize(n_nodes);
        for (auto& node : tree.nodes) {
            node.feature = static_cast<int>(static_cast<std::int64_t>(get_u64(in)));
            node.threshold = get_f64(in);
            node.left = static_cast<int>(static_cast<std::int64_t>(get_u64(in)));
            node.right = static_cast<int>(static_cast<std::int64_t>(get_u64(in)));
            node.value = get_f64(in);
            node.count = static_cast<int>(get_u64(in));
        }
    }
    if (!in) throw ParseError("truncated forest model file: " + path.string());
    return forest;
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size())
        throw ArgumentError("rmse: length mismatch, " + std::to_string(pred.size()) + " vs " +
                            std::to_string(truth.size()));
    if (pred.empty()) throw ArgumentError("rmse: empty input");
    double ss = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - truth[i];
        ss += e * e;
    }
    return std::sqrt(ss / static_cast<double>(pred.size()));
}

double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
    return rmse(std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())),
                std::span<const double>(truth.data(), static_cast<std::size_t>(truth.size())));
}

}  // namespace fbas::forest
