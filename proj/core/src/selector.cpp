#include "fbas/selector.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fbas/errors.hpp"
#include "fbas/rng.hpp"
#include "fbas/util.hpp"

namespace fbas::selector {

namespace {

double metric_of_errors(const std::vector<double>& chosen, const std::vector<double>& best,
                        Metric metric) {
    double ss = 0.0;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        const double e = metric == Metric::rmse
                             ? chosen[i] - best[i]
                             : std::log10(chosen[i]) - std::log10(best[i]);
        ss += e * e;
    }
    return std::sqrt(ss / static_cast<double>(chosen.size()));
}

}  // namespace

PerformanceMatrix PerformanceMatrix::from_records(
    const std::vector<bench::PerformanceRecord>& records) {
    if (records.empty()) throw ValidationError("performance matrix: no records");
    std::set<bench::ProblemId> instance_set;
    std::set<std::string> algo_set;
    for (const auto& rec : records) {
        instance_set.insert(rec.problem);
        algo_set.insert(rec.algo_id);
    }
    PerformanceMatrix m;
    m.instances.assign(instance_set.begin(), instance_set.end());
    m.algos.assign(algo_set.begin(), algo_set.end());
    m.precision.resize(static_cast<Eigen::Index>(m.instances.size()),
                       static_cast<Eigen::Index>(m.algos.size()));
    Eigen::MatrixXd seen = Eigen::MatrixXd::Zero(m.precision.rows(), m.precision.cols());
    for (const auto& rec : records) {
        const int i = m.instance_index(rec.problem);
        const int a = m.algo_index(rec.algo_id);
        if (seen(i, a) != 0.0)
            throw ValidationError("performance matrix: duplicate cell " +
                                  rec.problem.to_string() + " / " + rec.algo_id);
        if (!(rec.median_precision > 0.0))
            throw ValidationError("performance matrix: nonpositive precision for " +
                                  rec.problem.to_string() + " / " + rec.algo_id);
        m.precision(i, a) = rec.median_precision;
        seen(i, a) = 1.0;
    }
    for (Eigen::Index i = 0; i < seen.rows(); ++i)
        for (Eigen::Index a = 0; a < seen.cols(); ++a)
            if (seen(i, a) == 0.0)
                throw ValidationError("performance matrix: missing cell " +
                                      m.instances[static_cast<std::size_t>(i)].to_string() +
                                      " / " + m.algos[static_cast<std::size_t>(a)]);
    return m;
}

int PerformanceMatrix::instance_index(const bench::ProblemId& id) const {
    const auto it = std::lower_bound(instances.begin(), instances.end(), id);
    if (it == instances.end() || !(*it == id)) return -1;
    return static_cast<int>(it - instances.begin());
}

int PerformanceMatrix::algo_index(std::string_view algo) const {
    const auto it = std::lower_bound(algos.begin(), algos.end(), algo);
    if (it == algos.end() || *it != algo) return -1;
    return static_cast<int>(it - algos.begin());
}

std::vector<Choice> vbs(const PerformanceMatrix& perf) {
    std::vector<Choice> out(perf.instances.size());
    for (Eigen::Index i = 0; i < perf.precision.rows(); ++i) {
        int best = 0;
        for (Eigen::Index a = 1; a < perf.precision.cols(); ++a)
            if (perf.precision(i, a) < perf.precision(i, best)) best = static_cast<int>(a);
        out[static_cast<std::size_t>(i)] = {best, perf.precision(i, best)};
    }
    return out;
}

double selector_metric(std::span<const int> choices, const PerformanceMatrix& perf,
                       Metric metric) {
    if (choices.size() != perf.instances.size())
        throw ValidationError("selector_metric: choices must cover all instances");
    const auto best = vbs(perf);
    std::vector<double> chosen(choices.size()), optimal(choices.size());
    for (std::size_t i = 0; i < choices.size(); ++i) {
        chosen[i] = perf.precision(static_cast<Eigen::Index>(i), choices[i]);
        optimal[i] = best[i].precision;
    }
    return metric_of_errors(chosen, optimal, metric);
}

int sbs(const PerformanceMatrix& perf, Metric metric) {
    int best_algo = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < perf.algos.size(); ++a) {
        const std::vector<int> constant(perf.instances.size(), static_cast<int>(a));
        const double value = selector_metric(constant, perf, metric);
        if (value < best_value) {
            best_value = value;
            best_algo = static_cast<int>(a);
        }
    }
    return best_algo;
}

namespace {

int argmin_row(const Eigen::MatrixXd& m, int instance) {
    int best = 0;
    for (Eigen::Index a = 1; a < m.cols(); ++a)
        if (m(instance, a) < m(instance, best)) best = static_cast<int>(a);
    return best;
}

}  // namespace

int select_unscaled(const PredictionMatrix& pred, int instance) {
    return argmin_row(pred.pred_unscaled, instance);
}

int select_log(const PredictionMatrix& pred, int instance) {
    return argmin_row(pred.pred_log, instance);
}

int select_combined(const PredictionMatrix& pred, int instance, double threshold) {
    if (!(threshold > 0.0)) throw ArgumentError("select_combined: threshold must be positive");
    const double best_log = pred.pred_log.row(instance).minCoeff();
    const double best_precision = std::pow(10.0, best_log);
    return best_precision < threshold ? select_log(pred, instance)
                                      : select_unscaled(pred, instance);
}

std::vector<int> choices_unscaled(const PredictionMatrix& pred) {
    std::vector<int> out(pred.instances.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = select_unscaled(pred, static_cast<int>(i));
    return out;
}

std::vector<int> choices_log(const PredictionMatrix& pred) {
    std::vector<int> out(pred.instances.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = select_log(pred, static_cast<int>(i));
    return out;
}

std::vector<int> choices_combined(const PredictionMatrix& pred, double threshold) {
    std::vector<int> out(pred.instances.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = select_combined(pred, static_cast<int>(i), threshold);
    return out;
}

std::vector<int> vbs_of_two(const PredictionMatrix& pred, const PerformanceMatrix& perf) {
    if (pred.instances != perf.instances || pred.algos != perf.algos)
        throw ValidationError("vbs_of_two: prediction and performance matrices disagree");
    std::vector<int> out(pred.instances.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int u = select_unscaled(pred, static_cast<int>(i));
        const int l = select_log(pred, static_cast<int>(i));
        const double pu = perf.precision(static_cast<Eigen::Index>(i), u);
        const double pl = perf.precision(static_cast<Eigen::Index>(i), l);
        if (pu < pl)
            out[i] = u;
        else if (pl < pu)
            out[i] = l;
        else
            out[i] = std::min(u, l);
    }
    return out;
}

ThresholdResult tune_threshold(const PredictionMatrix& pred, const PerformanceMatrix& perf,
                               std::span<const double> grid, Metric metric) {
    if (grid.empty()) throw ArgumentError("tune_threshold: empty grid");
    for (double t : grid)
        if (!(t > 0.0)) throw ArgumentError("tune_threshold: thresholds must be positive");

    const double min_pred = std::pow(10.0, pred.pred_log.minCoeff());
    const double max_pred = std::pow(10.0, pred.pred_log.maxCoeff());
    std::vector<double> candidates(grid.begin(), grid.end());
    candidates.push_back(0.5 * min_pred);  // below-min endpoint: pure unscaled
    candidates.push_back(2.0 * max_pred + 1.0);  // above-max endpoint: pure log
    std::sort(candidates.begin(), candidates.end());

    ThresholdResult best{0.0, std::numeric_limits<double>::infinity()};
    for (double t : candidates) {
        const double value = selector_metric(choices_combined(pred, t), perf, metric);
        if (value < best.value) best = {t, value};
    }
    return best;
}

const std::vector<double>& default_threshold_grid() {
    static const std::vector<double> grid = [] {
        std::vector<double> g = {0.01, 0.1, 0.5, 1.0, 2.0, 3.0, 10.0, 20.0, 50.0};
        const double lo = std::log10(0.01), hi = std::log10(50.0);
        for (int i = 0; i < 200; ++i)
            g.push_back(std::pow(10.0, lo + (hi - lo) * i / 199.0));
        std::sort(g.begin(), g.end());
        g.erase(std::unique(g.begin(), g.end()), g.end());
        return g;
    }();
    return grid;
}

std::vector<ModelAccuracy> model_accuracy(const PredictionMatrix& pred,
                                          const PerformanceMatrix& perf) {
    if (pred.instances != perf.instances || pred.algos != perf.algos)
        throw ValidationError("model_accuracy: prediction and performance matrices disagree");
    std::vector<ModelAccuracy> out;
    const Eigen::Index n = perf.precision.rows();
    for (std::size_t a = 0; a < perf.algos.size(); ++a) {
        ModelAccuracy acc;
        acc.algo = perf.algos[a];
        double ss_u = 0, ss_l = 0, ss_lu = 0, ss_ul = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double truth = perf.precision(i, static_cast<Eigen::Index>(a));
            const double log_truth = std::log10(truth);
            const double pu = pred.pred_unscaled(i, static_cast<Eigen::Index>(a));
            const double pl = pred.pred_log(i, static_cast<Eigen::Index>(a));
            ss_u += (pu - truth) * (pu - truth);
            ss_l += (pl - log_truth) * (pl - log_truth);
            const double e_lu = std::pow(10.0, pl) - truth;
            ss_lu += e_lu * e_lu;
            // unscaled predictions are averages of positive targets, so the
            // log10 below is well defined
            const double e_ul = std::log10(pu) - log_truth;
            ss_ul += e_ul * e_ul;
        }
        const double dn = static_cast<double>(n);
        acc.rmse = std::sqrt(ss_u / dn);
        acc.log_rmse = std::sqrt(ss_l / dn);
        acc.rmse_log_model = std::sqrt(ss_lu / dn);
        acc.log_rmse_unscaled_model = std::sqrt(ss_ul / dn);
        out.push_back(std::move(acc));
    }
    return out;
}

CvResult run_cv(const std::vector<ela::FeatureVector>& features, const PerformanceMatrix& perf,
                const CvConfig& cv, const forest::ForestParams& params, std::uint64_t seed,
                std::span<const double> threshold_grid, int jobs) {
    if (cv.replications < 1) throw ArgumentError("run_cv: replications must be >= 1");

    // align features to the performance matrix rows
    const int p = features.empty() ? 0 : static_cast<int>(features.front().names.size());
    std::vector<const ela::FeatureVector*> by_instance(perf.instances.size(), nullptr);
    for (const auto& fv : features) {
        const int idx = perf.instance_index(fv.problem);
        if (idx < 0)
            throw ValidationError("run_cv: features cover unknown instance " +
                                  fv.problem.to_string());
        by_instance[static_cast<std::size_t>(idx)] = &fv;
    }
    for (std::size_t i = 0; i < by_instance.size(); ++i)
        if (!by_instance[i])
            throw ValidationError("run_cv: missing features for instance " +
                                  perf.instances[i].to_string());

    Eigen::MatrixXd X(perf.instances.size(), p);
    for (std::size_t i = 0; i < by_instance.size(); ++i) {
        if (static_cast<int>(by_instance[i]->values.size()) != p)
            throw ValidationError("run_cv: inconsistent feature vector length");
        for (int j = 0; j < p; ++j) X(static_cast<Eigen::Index>(i), j) = by_instance[i]->values[static_cast<std::size_t>(j)];
    }

    // folds are the distinct instance ids
    std::set<int> iid_set;
    for (const auto& id : perf.instances) iid_set.insert(id.iid);
    const std::vector<int> folds(iid_set.begin(), iid_set.end());
    if (folds.size() < 2) throw ValidationError("run_cv: need at least 2 distinct instance ids");
    if (cv.k != static_cast<int>(folds.size()))
        throw ValidationError("run_cv: cv.k = " + std::to_string(cv.k) + " but there are " +
                              std::to_string(folds.size()) + " distinct instance ids");

    struct Cell {
        int algo;
        int fold_pos;
        int rep;
    };
    std::vector<Cell> cells;
    for (int a = 0; a < static_cast<int>(perf.algos.size()); ++a)
        for (int f = 0; f < static_cast<int>(folds.size()); ++f)
            for (int r = 0; r < cv.replications; ++r) cells.push_back({a, f, r});

    std::vector<std::vector<RawPrediction>> cell_rows(cells.size());
    parallel_for(cells.size(), jobs, [&](std::size_t c) {
        const Cell& cell = cells[c];
        const int fold_iid = folds[static_cast<std::size_t>(cell.fold_pos)];
        std::vector<int> train_rows, test_rows;
        for (std::size_t i = 0; i < perf.instances.size(); ++i)
            (perf.instances[i].iid == fold_iid ? test_rows : train_rows)
                .push_back(static_cast<int>(i));

        Eigen::MatrixXd Xtr(train_rows.size(), p);
        Eigen::VectorXd y_raw(train_rows.size()), y_log(train_rows.size());
        for (std::size_t i = 0; i < train_rows.size(); ++i) {
            Xtr.row(static_cast<Eigen::Index>(i)) = X.row(train_rows[i]);
            const double precision = perf.precision(train_rows[i], cell.algo);
            y_raw[static_cast<Eigen::Index>(i)] = precision;
            y_log[static_cast<Eigen::Index>(i)] = std::log10(precision);
        }

        const auto cell_seed = [&](const char* scale) {
            return stream_seed(seed, {fnv1a64("fbas.cv.cell"),
                                      fnv1a64(perf.algos[static_cast<std::size_t>(cell.algo)]),
                                      static_cast<std::uint64_t>(fold_iid),
                                      static_cast<std::uint64_t>(cell.rep), fnv1a64(scale)});
        };
        const auto unscaled = forest::Forest::fit(Xtr, y_raw, params, cell_seed("unscaled"), {},
                                                  forest::TargetScale::unscaled);
        const auto logged = forest::Forest::fit(Xtr, y_log, params, cell_seed("log10"), {},
                                                forest::TargetScale::log10);

        auto& rows = cell_rows[c];
        for (int row : test_rows) {
            const Eigen::VectorXd x = X.row(row).transpose();
            RawPrediction rp;
            rp.fold = fold_iid;
            rp.rep = cell.rep;
            rp.id = perf.instances[static_cast<std::size_t>(row)];
            rp.algo = perf.algos[static_cast<std::size_t>(cell.algo)];
            rp.pred_unscaled = unscaled.predict(x);
            rp.pred_log10 = logged.predict(x);
            rp.true_precision = perf.precision(row, cell.algo);
            rows.push_back(std::move(rp));
        }
    });

    CvResult result;
    for (auto& rows : cell_rows)
        result.raw.insert(result.raw.end(), rows.begin(), rows.end());

    result.predictions = predictions_from_raw(result.raw, perf);
    result.report = evaluate(result.predictions, perf, threshold_grid);
    return result;
}

PredictionMatrix predictions_from_raw(const std::vector<RawPrediction>& raw,
                                      const PerformanceMatrix& perf) {
    PredictionMatrix pred;
    pred.instances = perf.instances;
    pred.algos = perf.algos;
    pred.pred_unscaled.resize(perf.precision.rows(), perf.precision.cols());
    pred.pred_log.resize(perf.precision.rows(), perf.precision.cols());

    // the predictions CSV carries no dim column; rows are matched to the
    // performance matrix by (fid, iid)
    std::map<std::pair<int, int>, int> instance_by_fid_iid;
    for (std::size_t i = 0; i < perf.instances.size(); ++i)
        instance_by_fid_iid[{perf.instances[i].fid, perf.instances[i].iid}] =
            static_cast<int>(i);

    std::map<std::pair<int, int>, std::pair<std::vector<double>, std::vector<double>>> cells;
    for (const auto& rp : raw) {
        const auto it = instance_by_fid_iid.find({rp.id.fid, rp.id.iid});
        const int a = perf.algo_index(rp.algo);
        if (it == instance_by_fid_iid.end() || a < 0) continue;  // rows outside the matrix
        cells[{it->second, a}].first.push_back(rp.pred_unscaled);
        cells[{it->second, a}].second.push_back(rp.pred_log10);
    }
    for (Eigen::Index i = 0; i < perf.precision.rows(); ++i)
        for (Eigen::Index a = 0; a < perf.precision.cols(); ++a) {
            const auto it = cells.find({static_cast<int>(i), static_cast<int>(a)});
            if (it == cells.end())
                throw ValidationError("predictions do not cover instance " +
                                      perf.instances[static_cast<std::size_t>(i)].to_string() +
                                      " / algo " + perf.algos[static_cast<std::size_t>(a)]);
            pred.pred_unscaled(i, a) = median(it->second.first);
            pred.pred_log(i, a) = median(it->second.second);
        }
    return pred;
}

EvalReport evaluate(const PredictionMatrix& pred, const PerformanceMatrix& perf,
                    std::span<const double> threshold_grid) {
    EvalReport report;
    report.model_accuracy = model_accuracy(pred, perf);

    const auto add_selector = [&](std::string name, std::vector<int> choices,
                                  double threshold = std::numeric_limits<double>::quiet_NaN()) {
        SelectorResult sr;
        sr.name = std::move(name);
        sr.rmse = selector_metric(choices, perf, Metric::rmse);
        sr.log_rmse = selector_metric(choices, perf, Metric::log_rmse);
        sr.threshold = threshold;
        sr.choices = std::move(choices);
        report.selectors.push_back(std::move(sr));
    };

    add_selector("unscaled", choices_unscaled(pred));
    add_selector("log", choices_log(pred));
    const auto tuned_rmse = tune_threshold(pred, perf, threshold_grid, Metric::rmse);
    add_selector("combined_rmse", choices_combined(pred, tuned_rmse.threshold),
                 tuned_rmse.threshold);
    const auto tuned_log = tune_threshold(pred, perf, threshold_grid, Metric::log_rmse);
    add_selector("combined_log_rmse", choices_combined(pred, tuned_log.threshold),
                 tuned_log.threshold);
    add_selector("vbs_of_two", vbs_of_two(pred, perf));

    report.vbs_choices = vbs(perf);
    std::vector<int> vbs_idx(report.vbs_choices.size());
    for (std::size_t i = 0; i < vbs_idx.size(); ++i) vbs_idx[i] = report.vbs_choices[i].algo;
    report.vbs_rmse = selector_metric(vbs_idx, perf, Metric::rmse);
    report.vbs_log_rmse = selector_metric(vbs_idx, perf, Metric::log_rmse);

    report.sbs_rmse_algo = sbs(perf, Metric::rmse);
    report.sbs_rmse_value = selector_metric(
        std::vector<int>(perf.instances.size(), report.sbs_rmse_algo), perf, Metric::rmse);
    report.sbs_log_algo = sbs(perf, Metric::log_rmse);
    report.sbs_log_value = selector_metric(
        std::vector<int>(perf.instances.size(), report.sbs_log_algo), perf, Metric::log_rmse);

    for (double t : threshold_grid) {
        ThresholdRow row;
        row.threshold = t;
        const auto choices = choices_combined(pred, t);
        row.rmse = selector_metric(choices, perf, Metric::rmse);
        row.log_rmse = selector_metric(choices, perf, Metric::log_rmse);
        report.sensitivity.push_back(row);
    }
    return report;
}

void write_predictions_csv(const std::filesystem::path& path,
                           const std::vector<RawPrediction>& raw,
                           const std::string& header_comment) {
    std::ostringstream out;
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "fold,rep,fid,iid,algo_id,pred_unscaled,pred_log10,true_precision\n";
    for (const auto& rp : raw)
        out << rp.fold << "," << rp.rep << "," << rp.id.fid << "," << rp.id.iid << "," << rp.algo
            << "," << format_double(rp.pred_unscaled) << "," << format_double(rp.pred_log10)
            << "," << format_double(rp.true_precision) << "\n";
    write_text_file(path, out.str());
}

std::vector<RawPrediction> read_predictions_csv(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    std::vector<RawPrediction> raw;
    bool header_seen = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = trim(lines[i]);
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            if (!line.starts_with("fold"))
                throw ParseError("line " + std::to_string(i + 1) +
                                 ": expected predictions header starting with 'fold'");
            header_seen = true;
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != 8)
            throw ParseError("line " + std::to_string(i + 1) + ": expected 8 fields");
        RawPrediction rp;
        try {
            rp.fold = std::stoi(fields[0]);
            rp.rep = std::stoi(fields[1]);
            rp.id.fid = std::stoi(fields[2]);
            rp.id.iid = std::stoi(fields[3]);
            rp.algo = fields[4];
            rp.pred_unscaled = std::stod(fields[5]);
            rp.pred_log10 = std::stod(fields[6]);
            rp.true_precision = std::stod(fields[7]);
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(i + 1) + ": bad numeric field");
        }
        raw.push_back(std::move(rp));
    }
    if (!header_seen) throw ParseError("missing predictions header row");
    return raw;
}

std::string report_to_json(const EvalReport& report, const PerformanceMatrix& perf,
                           const std::string& config_echo_json) {
    nlohmann::ordered_json doc;
    if (!config_echo_json.empty()) doc["config"] = nlohmann::ordered_json::parse(config_echo_json);

    doc["instances"] = nlohmann::ordered_json::array();
    for (const auto& id : perf.instances)
        doc["instances"].push_back({{"fid", id.fid}, {"iid", id.iid}, {"dim", id.dim}});
    doc["algos"] = perf.algos;

    auto& selectors = doc["selectors"];
    for (const auto& sr : report.selectors) {
        nlohmann::ordered_json entry;
        entry["rmse"] = sr.rmse;
        entry["log_rmse"] = sr.log_rmse;
        if (!std::isnan(sr.threshold)) entry["threshold"] = sr.threshold;
        auto& per_instance = entry["per_instance"];
        per_instance = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < sr.choices.size(); ++i) {
            const auto& id = perf.instances[i];
            per_instance.push_back(
                {{"fid", id.fid},
                 {"iid", id.iid},
                 {"chosen_algo", perf.algos[static_cast<std::size_t>(sr.choices[i])]},
                 {"chosen_precision",
                  perf.precision(static_cast<Eigen::Index>(i), sr.choices[i])},
                 {"vbs_algo",
                  perf.algos[static_cast<std::size_t>(report.vbs_choices[i].algo)]},
                 {"vbs_precision", report.vbs_choices[i].precision}});
        }
        selectors[sr.name] = std::move(entry);
    }

    doc["baselines"] = {
        {"vbs", {{"rmse", report.vbs_rmse}, {"log_rmse", report.vbs_log_rmse}}},
        {"sbs_rmse",
         {{"algo", perf.algos[static_cast<std::size_t>(report.sbs_rmse_algo)]},
          {"value", report.sbs_rmse_value}}},
        {"sbs_log_rmse",
         {{"algo", perf.algos[static_cast<std::size_t>(report.sbs_log_algo)]},
          {"value", report.sbs_log_value}}},
    };

    doc["model_accuracy"] = nlohmann::ordered_json::array();
    for (const auto& acc : report.model_accuracy)
        doc["model_accuracy"].push_back({{"algo", acc.algo},
                                         {"rmse", acc.rmse},
                                         {"log_rmse", acc.log_rmse},
                                         {"rmse_log_model", acc.rmse_log_model},
                                         {"log_rmse_unscaled_model", acc.log_rmse_unscaled_model}});

    doc["threshold_sensitivity"] = nlohmann::ordered_json::array();
    for (const auto& row : report.sensitivity)
        doc["threshold_sensitivity"].push_back(
            {{"threshold", row.threshold}, {"rmse", row.rmse}, {"log_rmse", row.log_rmse}});

    return doc.dump(2) + "\n";
}

}  // namespace fbas::selector
