#include "fbas/bench.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <Eigen/Dense>

#include "fbas/errors.hpp"
#include "fbas/rng.hpp"
#include "fbas/util.hpp"

namespace fbas::bench {

namespace {

enum Fid : int {
    kSphere = 1,
    kEllipsoid = 2,
    kRastrigin = 3,
    kLinearSlope = 4,
    kAttractiveSector = 5,
    kRosenbrock = 6,
    kSharpRidge = 7,
    kDifferentPowers = 8,
    kSchaffers = 9,
    kGallagher = 10,
};

const std::vector<FunctionInfo> kCatalog = {
    {kSphere, "sphere", false},
    {kEllipsoid, "ellipsoid_separable", false},
    {kRastrigin, "rastrigin", false},
    {kLinearSlope, "linear_slope", false},
    {kAttractiveSector, "attractive_sector", true},
    {kRosenbrock, "rosenbrock_rotated", true},
    {kSharpRidge, "sharp_ridge", true},
    {kDifferentPowers, "different_powers", true},
    {kSchaffers, "schaffers_f7", true},
    {kGallagher, "gallagher_peaks_21", false},
};

constexpr int kGallagherPeaks = 21;

Eigen::MatrixXd random_rotation(int d, Rng& rng) {
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < d; ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

}  // namespace

std::string ProblemId::to_string() const {
    return "f" + std::to_string(fid) + "i" + std::to_string(iid) + "d" + std::to_string(dim);
}

const std::vector<FunctionInfo>& catalog() { return kCatalog; }

const FunctionInfo& function_info(int fid) {
    for (const auto& info : kCatalog)
        if (info.fid == fid) return info;
    throw CatalogError("unknown function id " + std::to_string(fid));
}

std::string_view ProblemInstance::function_name() const { return function_info(id_.fid).name; }

ProblemInstance make_problem(int fid, int iid, int dim) {
    const FunctionInfo& info = function_info(fid);
    if (iid <= 0) throw ArgumentError("instance id must be >= 1, got " + std::to_string(iid));
    if (dim < 2) throw ArgumentError("dimension must be >= 2, got " + std::to_string(dim));

    // Fixed hash of the triple; instances are universe constants independent
    // of any experiment seed.
    const std::uint64_t seed = stream_seed(fnv1a64("fbas.bench.instance"),
                                           {static_cast<std::uint64_t>(fid),
                                            static_cast<std::uint64_t>(iid),
                                            static_cast<std::uint64_t>(dim)});
    Rng rng(seed);

    ProblemInstance p;
    p.id_ = {fid, iid, dim};
    p.transform_.rotation = info.rotated ? random_rotation(dim, rng)
                                         : Eigen::MatrixXd::Identity(dim, dim);
    p.transform_.shift = rng.uniform_vector(dim, -4.0, 4.0);
    p.transform_.f_offset = rng.uniform(-100.0, 100.0);
    p.f_opt_ = p.transform_.f_offset;

    switch (fid) {
        case kLinearSlope: {
            // Slope signs follow the shift; the optimum sits on the domain
            // corner 5*sign(coef), so the function is affine everywhere yet
            // bounded below by f_opt inside the box.
            p.slope_coef_.resize(dim);
            p.slope_corner_.resize(dim);
            for (int i = 0; i < dim; ++i) {
                const double sign = p.transform_.shift[i] >= 0.0 ? 1.0 : -1.0;
                p.slope_coef_[i] = sign * std::pow(10.0, static_cast<double>(i) / (dim - 1));
                p.slope_corner_[i] = 5.0 * sign;
            }
            break;
        }
        case kDifferentPowers: {
            p.power_exp_.resize(dim);
            for (int i = 0; i < dim; ++i)
                p.power_exp_[i] = 2.0 + 4.0 * static_cast<double>(i) / (dim - 1);
            break;
        }
        case kGallagher: {
            p.peak_center_.resize(dim, kGallagherPeaks);
            p.peak_weight_.resize(kGallagherPeaks);
            p.peak_width_.resize(kGallagherPeaks);
            p.peak_center_.col(0) = p.transform_.shift;
            p.peak_weight_[0] = 10.0;
            p.peak_width_[0] = rng.uniform(0.5, 2.0);
            for (int k = 1; k < kGallagherPeaks; ++k) {
                p.peak_center_.col(k) = rng.uniform_vector(dim, -4.9, 4.9);
                p.peak_weight_[k] = 1.1 + 8.0 * (k - 1.0) / (kGallagherPeaks - 2.0);
                p.peak_width_[k] = rng.uniform(0.5, 5.0);
            }
            break;
        }
        default:
            break;
    }
    return p;
}

double ProblemInstance::evaluate(const Eigen::VectorXd& x) {
    const int d = id_.dim;
    if (x.size() != d)
        throw ArgumentError("evaluate: expected dimension " + std::to_string(d) + ", got " +
                            std::to_string(x.size()));
    for (int i = 0; i < d; ++i)
        if (!std::isfinite(x[i]))
            throw ArgumentError("evaluate: non-finite coordinate at index " + std::to_string(i));
    ++eval_count_;

    const double off = transform_.f_offset;
    switch (id_.fid) {
        case kSphere: {
            const Eigen::VectorXd z = x - transform_.shift;
            return z.squaredNorm() + off;
        }
        case kEllipsoid: {
            const Eigen::VectorXd z = x - transform_.shift;
            double sum = 0.0;
            for (int i = 0; i < d; ++i)
                sum += std::pow(10.0, 6.0 * i / (d - 1)) * z[i] * z[i];
            return sum + off;
        }
        case kRastrigin: {
            const Eigen::VectorXd z = x - transform_.shift;
            double cos_sum = 0.0;
            for (int i = 0; i < d; ++i) cos_sum += std::cos(2.0 * std::numbers::pi * z[i]);
            return 10.0 * (d - cos_sum) + z.squaredNorm() + off;
        }
        case kLinearSlope:
            return slope_coef_.dot(slope_corner_ - x) + off;
        case kAttractiveSector: {
            const Eigen::VectorXd z = transform_.rotation * (x - transform_.shift);
            double sum = 0.0;
            for (int i = 0; i < d; ++i) {
                const double w = z[i] > 0.0 ? 100.0 : 1.0;
                sum += w * z[i] * w * z[i];
            }
            return sum + off;
        }
        case kRosenbrock: {
            const Eigen::VectorXd z =
                (transform_.rotation * (x - transform_.shift)).array() + 1.0;
            double sum = 0.0;
            for (int i = 0; i + 1 < d; ++i) {
                const double a = z[i] * z[i] - z[i + 1];
                const double b = z[i] - 1.0;
                sum += 100.0 * a * a + b * b;
            }
            return sum + off;
        }
        case kSharpRidge: {
            const Eigen::VectorXd z = transform_.rotation * (x - transform_.shift);
            const double tail = z.tail(d - 1).norm();
            return z[0] * z[0] + 100.0 * tail + off;
        }
        case kDifferentPowers: {
            const Eigen::VectorXd z = transform_.rotation * (x - transform_.shift);
            double sum = 0.0;
            for (int i = 0; i < d; ++i) sum += std::pow(std::fabs(z[i]), power_exp_[i]);
            return std::sqrt(sum) + off;
        }
        case kSchaffers: {
            const Eigen::VectorXd z = transform_.rotation * (x - transform_.shift);
            double sum = 0.0;
            for (int i = 0; i + 1 < d; ++i) {
                const double s = std::sqrt(z[i] * z[i] + z[i + 1] * z[i + 1]);
                const double t = std::sin(50.0 * std::pow(s, 0.2));
                sum += std::sqrt(s) * (1.0 + t * t);
            }
            const double avg = sum / (d - 1);
            return avg * avg + off;
        }
        case kGallagher: {
            double best = 0.0;
            for (int k = 0; k < peak_weight_.size(); ++k) {
                const double dist2 = (x - peak_center_.col(k)).squaredNorm();
                const double v = peak_weight_[k] * std::exp(-peak_width_[k] * dist2 / (2.0 * d));
                best = std::max(best, v);
            }
            const double g = 10.0 - best;
            return g * g + off;
        }
        default:
            throw CatalogError("unknown function id " + std::to_string(id_.fid));
    }
}

double ProblemInstance::precision(double best_fitness) const {
    return std::max(best_fitness - f_opt_, kPrecisionFloor);
}

ProblemInstance ProblemInstance::clone() const {
    ProblemInstance copy = *this;
    copy.eval_count_ = 0;
    return copy;
}

namespace {

long parse_long(const std::string& field, std::size_t line_no, const char* what) {
    std::size_t pos = 0;
    long value = 0;
    try {
        value = std::stol(std::string(trim(field)), &pos);
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" + field + "'");
    }
    if (pos != trim(field).size())
        throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" + field + "'");
    return value;
}

double parse_double(const std::string& field, std::size_t line_no, const char* what) {
    std::size_t pos = 0;
    double value = 0;
    try {
        value = std::stod(std::string(trim(field)), &pos);
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" + field + "'");
    }
    if (pos != trim(field).size())
        throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" + field + "'");
    return value;
}

}  // namespace

std::vector<RunRow> read_performance_csv(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    std::vector<RunRow> rows;
    bool header_seen = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        const auto line = trim(lines[i]);
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            if (!line.starts_with("fid"))
                throw ParseError("line " + std::to_string(line_no) +
                                 ": expected header row starting with 'fid'");
            header_seen = true;
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != 7)
            throw ParseError("line " + std::to_string(line_no) + ": expected 7 fields, got " +
                             std::to_string(fields.size()));
        RunRow row;
        row.id.fid = static_cast<int>(parse_long(fields[0], line_no, "fid"));
        row.id.iid = static_cast<int>(parse_long(fields[1], line_no, "iid"));
        row.id.dim = static_cast<int>(parse_long(fields[2], line_no, "dim"));
        row.algo_id = std::string(trim(fields[3]));
        row.run = static_cast<int>(parse_long(fields[4], line_no, "run"));
        row.budget = parse_long(fields[5], line_no, "budget");
        row.precision = parse_double(fields[6], line_no, "precision");
        if (!(row.precision > 0.0))
            throw ValidationError("line " + std::to_string(line_no) +
                                  ": precision must be positive, got " + fields[6]);
        rows.push_back(std::move(row));
    }
    if (!header_seen) throw ParseError("missing header row");
    return rows;
}

std::vector<PerformanceRecord> aggregate_runs(const std::vector<RunRow>& rows) {
    std::map<std::tuple<int, int, int, std::string>, std::vector<double>> groups;
    for (const auto& row : rows)
        groups[{row.id.fid, row.id.iid, row.id.dim, row.algo_id}].push_back(row.precision);
    std::vector<PerformanceRecord> records;
    records.reserve(groups.size());
    for (const auto& [key, precisions] : groups) {
        PerformanceRecord rec;
        rec.problem = {std::get<0>(key), std::get<1>(key), std::get<2>(key)};
        rec.algo_id = std::get<3>(key);
        rec.median_precision = median(precisions);
        rec.runs = static_cast<int>(precisions.size());
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<PerformanceRecord> ingest_performance(const std::filesystem::path& path) {
    return aggregate_runs(read_performance_csv(path));
}

}  // namespace fbas::bench
