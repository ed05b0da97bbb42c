#include "fbas/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fbas/ela.hpp"
#include "fbas/errors.hpp"
#include "fbas/modcma.hpp"
#include "fbas/rng.hpp"
#include "fbas/util.hpp"

namespace fbas::pipeline {

namespace {

std::vector<int> parse_int_list(const std::string& value, const std::string& key) {
    std::vector<int> out;
    for (const auto& part : split(value, ',')) {
        const auto item = trim(part);
        if (item.empty()) continue;
        const auto dash = item.find('-', 1);  // allow negative start, not expected
        try {
            if (dash != std::string_view::npos) {
                const int lo = std::stoi(std::string(item.substr(0, dash)));
                const int hi = std::stoi(std::string(item.substr(dash + 1)));
                for (int v = lo; v <= hi; ++v) out.push_back(v);
            } else {
                out.push_back(std::stoi(std::string(item)));
            }
        } catch (const std::exception&) {
            throw ValidationError("config key '" + key + "': bad integer list entry '" +
                                  std::string(item) + "'");
        }
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& value, const std::string& key) {
    std::vector<double> out;
    for (const auto& part : split(value, ',')) {
        const auto item = trim(part);
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(std::string(item)));
        } catch (const std::exception&) {
            throw ValidationError("config key '" + key + "': bad number '" + std::string(item) +
                                  "'");
        }
    }
    return out;
}

long parse_integer(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': bad integer '" + value + "'");
    }
}

double parse_number(const std::string& value, const std::string& key) {
    try {
        return std::stod(value);
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': bad number '" + value + "'");
    }
}

std::string artifact_header(const PipelineConfig& config) {
    std::ostringstream out;
    out << "seed=" << config.seed << " config_hash=" << std::hex << config_hash(config);
    return out.str();
}

std::vector<modcma::ModuleConfig> resolve_portfolio(const PipelineConfig& config) {
    if (config.portfolio_file.empty() || config.portfolio_file == "default")
        return modcma::default_portfolio();
    return modcma::read_portfolio_file(config.portfolio_file);
}

}  // namespace

std::vector<bench::ProblemId> PipelineConfig::problem_ids() const {
    std::vector<int> fids = functions;
    if (fids.empty())
        for (const auto& info : bench::catalog()) fids.push_back(info.fid);
    std::vector<int> iids = instances;
    if (iids.empty()) iids = {1, 2, 3, 4};
    std::vector<bench::ProblemId> ids;
    for (int fid : fids)
        for (int iid : iids) ids.push_back({fid, iid, dim});
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<std::string> PipelineConfig::feature_names() const {
    if (feature_subset.empty() || feature_subset == "all") return ela::canonical_feature_names();
    if (feature_subset == "selected-9") return ela::selected_feature_names();
    std::vector<std::string> names;
    for (const auto& part : split(feature_subset, ','))
        if (!trim(part).empty()) names.emplace_back(trim(part));
    if (names.empty())
        throw ValidationError("feature subset resolves to no feature names: '" + feature_subset +
                              "'");
    return names;
}

const std::vector<double>& PipelineConfig::grid() const {
    return threshold_grid.empty() ? selector::default_threshold_grid() : threshold_grid;
}

PipelineConfig parse_config_text(const std::string& text, const std::string& origin) {
    PipelineConfig config;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto content = std::string(trim(line));
        const auto hash = content.find('#');
        if (hash != std::string::npos) content = std::string(trim(content.substr(0, hash)));
        if (content.empty()) continue;
        const auto eq = content.find('=');
        if (eq == std::string::npos)
            throw ParseError(origin + " line " + std::to_string(line_no) +
                             ": expected 'key = value'");
        const std::string key{trim(content.substr(0, eq))};
        const std::string value{trim(content.substr(eq + 1))};

        if (key == "suite.functions")
            config.functions = value == "all" ? std::vector<int>{} : parse_int_list(value, key);
        else if (key == "suite.instances")
            config.instances = parse_int_list(value, key);
        else if (key == "suite.dim")
            config.dim = static_cast<int>(parse_integer(value, key));
        else if (key == "portfolio.file")
            config.portfolio_file = value;
        else if (key == "portfolio.budget")
            config.budget = parse_integer(value, key);
        else if (key == "portfolio.runs")
            config.runs = static_cast<int>(parse_integer(value, key));
        else if (key == "features.n_samples")
            config.n_samples = static_cast<int>(parse_integer(value, key));
        else if (key == "features.reps")
            config.feature_reps = static_cast<int>(parse_integer(value, key));
        else if (key == "features.subset")
            config.feature_subset = value;
        else if (key == "forest.n_trees")
            config.forest.n_trees = static_cast<int>(parse_integer(value, key));
        else if (key == "forest.max_features")
            config.forest.max_features = parse_number(value, key);
        else if (key == "forest.min_samples_split")
            config.forest.min_samples_split = static_cast<int>(parse_integer(value, key));
        else if (key == "forest.min_samples_leaf")
            config.forest.min_samples_leaf = static_cast<int>(parse_integer(value, key));
        else if (key == "forest.max_depth")
            config.forest.max_depth = static_cast<int>(parse_integer(value, key));
        else if (key == "forest.bootstrap")
            config.forest.bootstrap = value == "on" || value == "true" || value == "1";
        else if (key == "cv.k")
            config.cv.k = static_cast<int>(parse_integer(value, key));
        else if (key == "cv.replications")
            config.cv.replications = static_cast<int>(parse_integer(value, key));
        else if (key == "selection.threshold_grid")
            config.threshold_grid =
                value == "default" ? std::vector<double>{} : parse_double_list(value, key);
        else if (key == "selection.metric") {
            if (value == "rmse")
                config.metric = selector::Metric::rmse;
            else if (value == "log_rmse")
                config.metric = selector::Metric::log_rmse;
            else
                throw ValidationError("config key 'selection.metric': expected rmse or log_rmse");
        } else if (key == "seed")
            config.seed = static_cast<std::uint64_t>(parse_integer(value, key));
        else
            throw ValidationError(origin + " line " + std::to_string(line_no) +
                                  ": unknown key '" + key + "'");
    }
    return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    return parse_config_text(read_text_file(path), path.string());
}

std::uint64_t config_hash(const PipelineConfig& config) {
    std::uint64_t h = fnv1a64("fbas.config");
    auto mix_int = [&](std::uint64_t v) { h = hash_combine(h, v); };
    auto mix_str = [&](const std::string& s) { h = hash_combine(h, fnv1a64(s)); };
    auto mix_double = [&](double v) { h = hash_combine(h, fnv1a64(format_double(v))); };
    for (int f : config.functions) mix_int(static_cast<std::uint64_t>(f));
    for (int i : config.instances) mix_int(static_cast<std::uint64_t>(i));
    mix_int(static_cast<std::uint64_t>(config.dim));
    mix_str(config.portfolio_file);
    mix_int(static_cast<std::uint64_t>(config.budget));
    mix_int(static_cast<std::uint64_t>(config.runs));
    mix_int(static_cast<std::uint64_t>(config.n_samples));
    mix_int(static_cast<std::uint64_t>(config.feature_reps));
    mix_str(config.feature_subset);
    mix_int(static_cast<std::uint64_t>(config.forest.n_trees));
    mix_double(config.forest.max_features);
    mix_int(static_cast<std::uint64_t>(config.forest.min_samples_split));
    mix_int(static_cast<std::uint64_t>(config.forest.min_samples_leaf));
    mix_int(static_cast<std::uint64_t>(config.forest.max_depth));
    mix_int(config.forest.bootstrap ? 1 : 0);
    mix_int(static_cast<std::uint64_t>(config.cv.k));
    mix_int(static_cast<std::uint64_t>(config.cv.replications));
    for (double t : config.threshold_grid) mix_double(t);
    mix_int(config.metric == selector::Metric::rmse ? 0 : 1);
    mix_int(config.seed);
    return h;
}

std::string config_echo_json(const PipelineConfig& config) {
    std::vector<int> effective_functions = config.functions;
    if (effective_functions.empty())
        for (const auto& info : bench::catalog()) effective_functions.push_back(info.fid);
    std::vector<int> effective_instances =
        config.instances.empty() ? std::vector<int>{1, 2, 3, 4} : config.instances;

    nlohmann::ordered_json doc;
    doc["suite"] = {{"functions", effective_functions},
                    {"instances", effective_instances},
                    {"dim", config.dim}};
    doc["portfolio"] = {{"file", config.portfolio_file.empty() ? "default" : config.portfolio_file},
                        {"budget", config.budget},
                        {"runs", config.runs}};
    doc["features"] = {{"n_samples", config.n_samples},
                       {"reps", config.feature_reps},
                       {"subset", config.feature_subset}};
    doc["forest"] = {{"n_trees", config.forest.n_trees},
                     {"max_features", config.forest.max_features},
                     {"min_samples_split", config.forest.min_samples_split},
                     {"min_samples_leaf", config.forest.min_samples_leaf},
                     {"max_depth", config.forest.max_depth},
                     {"bootstrap", config.forest.bootstrap}};
    doc["cv"] = {{"k", config.cv.k}, {"replications", config.cv.replications}};
    doc["selection"] = {
        {"threshold_grid", config.threshold_grid.empty() ? "default" : "explicit"},
        {"grid_size", config.grid().size()},
        {"metric", config.metric == selector::Metric::rmse ? "rmse" : "log_rmse"}};
    doc["seed"] = config.seed;
    doc["config_hash"] = config_hash(config);
    return doc.dump();
}

void cmd_run_portfolio(const PipelineConfig& config, const std::filesystem::path& out, int jobs) {
    const auto problems = config.problem_ids();
    const auto portfolio = resolve_portfolio(config);
    const auto rows = modcma::run_portfolio_runs(problems, portfolio, config.budget, config.runs,
                                                 config.seed, jobs);

    std::ostringstream runs_csv;
    runs_csv << "# " << artifact_header(config) << "\n";
    runs_csv << "fid,iid,dim,algo_id,run,budget,precision\n";
    for (const auto& row : rows)
        runs_csv << row.id.fid << "," << row.id.iid << "," << row.id.dim << "," << row.algo_id
                 << "," << row.run << "," << row.budget << "," << format_double(row.precision)
                 << "\n";
    std::filesystem::create_directories(out);
    write_text_file(out / kPerformanceRunsFile, runs_csv.str());

    std::ostringstream median_csv;
    median_csv << "# " << artifact_header(config) << "\n";
    median_csv << "fid,iid,dim,algo_id,runs,median_precision\n";
    for (const auto& rec : bench::aggregate_runs(rows))
        median_csv << rec.problem.fid << "," << rec.problem.iid << "," << rec.problem.dim << ","
                   << rec.algo_id << "," << rec.runs << ","
                   << format_double(rec.median_precision) << "\n";
    write_text_file(out / kPerformanceMedianFile, median_csv.str());
}

namespace {

std::vector<bench::PerformanceRecord> read_median_csv(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    std::vector<bench::PerformanceRecord> records;
    bool header_seen = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = trim(lines[i]);
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            if (!line.starts_with("fid"))
                throw ParseError("line " + std::to_string(i + 1) +
                                 ": expected median header starting with 'fid'");
            header_seen = true;
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != 6)
            throw ParseError("line " + std::to_string(i + 1) + ": expected 6 fields");
        bench::PerformanceRecord rec;
        try {
            rec.problem.fid = std::stoi(fields[0]);
            rec.problem.iid = std::stoi(fields[1]);
            rec.problem.dim = std::stoi(fields[2]);
            rec.algo_id = fields[3];
            rec.runs = std::stoi(fields[4]);
            rec.median_precision = std::stod(fields[5]);
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(i + 1) + ": bad numeric field");
        }
        records.push_back(std::move(rec));
    }
    if (!header_seen) throw ParseError("missing median header row");
    return records;
}

}  // namespace

void cmd_select_portfolio(const PipelineConfig& config, const std::filesystem::path& out) {
    const auto records = bench::ingest_performance(out / kPerformanceRunsFile);
    std::set<int> fids;
    for (const auto& rec : records) fids.insert(rec.problem.fid);
    const auto winners = modcma::select_portfolio(records, fids.size());
    std::vector<modcma::ModuleConfig> portfolio;
    for (const auto& code : winners) portfolio.push_back(modcma::ModuleConfig::from_code(code));
    modcma::write_portfolio_file(out / kPortfolioFile, portfolio, artifact_header(config));
}

void cmd_extract_features(const PipelineConfig& config, const std::filesystem::path& out,
                          int jobs, bool report_normalized) {
    const auto problems = config.problem_ids();
    const auto names = config.feature_names();

    std::vector<ela::FeatureVector> rows(problems.size());
    parallel_for(problems.size(), jobs, [&](std::size_t i) {
        auto problem = bench::make_problem(problems[i].fid, problems[i].iid, problems[i].dim);
        const std::uint64_t feature_seed =
            stream_seed(config.seed, {fnv1a64("fbas.ela.features"),
                                      static_cast<std::uint64_t>(problems[i].fid),
                                      static_cast<std::uint64_t>(problems[i].iid),
                                      static_cast<std::uint64_t>(problems[i].dim)});
        const auto full = ela::compute_features(problem, config.n_samples, config.feature_reps,
                                                feature_seed);
        rows[i] = ela::select_features(full, names);
    });

    std::filesystem::create_directories(out);
    ela::write_features_csv(out / kFeaturesFile, rows, artifact_header(config));

    if (report_normalized) {
        // min-max per feature across instances, display-only companion
        std::vector<ela::FeatureVector> normalized = rows;
        for (std::size_t f = 0; f < names.size(); ++f) {
            double lo = rows.front().values[f], hi = lo;
            for (const auto& fv : rows) {
                lo = std::min(lo, fv.values[f]);
                hi = std::max(hi, fv.values[f]);
            }
            for (auto& fv : normalized)
                fv.values[f] = hi > lo ? (fv.values[f] - lo) / (hi - lo) : 0.0;
        }
        ela::write_features_csv(out / kFeaturesNormalizedFile, normalized,
                                artifact_header(config));
    }
}

namespace {

selector::PerformanceMatrix load_perf_matrix(const PipelineConfig& config,
                                             const std::filesystem::path& out) {
    auto records = read_median_csv(out / kPerformanceMedianFile);
    const auto wanted = config.problem_ids();
    const std::set<bench::ProblemId> wanted_set(wanted.begin(), wanted.end());
    std::vector<bench::PerformanceRecord> kept;
    for (auto& rec : records)
        if (wanted_set.count(rec.problem)) kept.push_back(std::move(rec));
    for (const auto& id : wanted) {
        bool found = false;
        for (const auto& rec : kept)
            if (rec.problem == id) {
                found = true;
                break;
            }
        if (!found)
            throw ValidationError("performance data missing instance " + id.to_string());
    }
    return selector::PerformanceMatrix::from_records(kept);
}

std::vector<ela::FeatureVector> load_features(const PipelineConfig& config,
                                              const std::filesystem::path& out) {
    auto rows = ela::read_features_csv(out / kFeaturesFile);
    const auto names = config.feature_names();
    const auto wanted = config.problem_ids();
    const std::set<bench::ProblemId> wanted_set(wanted.begin(), wanted.end());
    std::vector<ela::FeatureVector> kept;
    for (auto& fv : rows) {
        if (!wanted_set.count(fv.problem)) continue;
        kept.push_back(fv.names == names ? std::move(fv) : ela::select_features(fv, names));
    }
    for (const auto& id : wanted) {
        bool found = false;
        for (const auto& fv : kept)
            if (fv.problem == id) {
                found = true;
                break;
            }
        if (!found) throw ValidationError("features missing instance " + id.to_string());
    }
    return kept;
}

}  // namespace

void cmd_train_eval(const PipelineConfig& config, const std::filesystem::path& out, int jobs) {
    const auto perf = load_perf_matrix(config, out);
    const auto features = load_features(config, out);
    const auto result = selector::run_cv(features, perf, config.cv, config.forest, config.seed,
                                         config.grid(), jobs);
    selector::write_predictions_csv(out / kPredictionsFile, result.raw, artifact_header(config));
    write_text_file(out / kReportFile,
                    selector::report_to_json(result.report, perf, config_echo_json(config)));
}

void cmd_tune_threshold(const PipelineConfig& config, const std::filesystem::path& out) {
    const auto perf = load_perf_matrix(config, out);
    const auto raw = selector::read_predictions_csv(out / kPredictionsFile);
    const auto pred = selector::predictions_from_raw(raw, perf);
    const auto tuned = selector::tune_threshold(pred, perf, config.grid(), config.metric);

    nlohmann::ordered_json doc;
    doc["metric"] = config.metric == selector::Metric::rmse ? "rmse" : "log_rmse";
    doc["threshold"] = tuned.threshold;
    doc["value"] = tuned.value;
    doc["grid_size"] = config.grid().size();
    doc["seed"] = config.seed;
    doc["config_hash"] = config_hash(config);
    write_text_file(out / kThresholdFile, doc.dump(2) + "\n");
}

void cmd_report_figures(const PipelineConfig& config, const std::filesystem::path& out) {
    const auto perf = load_perf_matrix(config, out);
    const auto raw = selector::read_predictions_csv(out / kPredictionsFile);
    const auto pred = selector::predictions_from_raw(raw, perf);
    const auto report_text = read_text_file(out / kReportFile);
    const auto report_doc = nlohmann::json::parse(report_text);
    const std::string header = "# " + artifact_header(config) + "\n";

    // fig 1: per-instance median precision heat map data
    {
        std::ostringstream csv;
        csv << header << "fid,iid,algo_id,median_precision,log10_precision\n";
        for (std::size_t i = 0; i < perf.instances.size(); ++i)
            for (std::size_t a = 0; a < perf.algos.size(); ++a) {
                const double v = perf.precision(static_cast<Eigen::Index>(i),
                                                static_cast<Eigen::Index>(a));
                csv << perf.instances[i].fid << "," << perf.instances[i].iid << ","
                    << perf.algos[a] << "," << format_double(v) << ","
                    << format_double(std::log10(v)) << "\n";
            }
        write_text_file(out / "fig1_performance.csv", csv.str());
    }

    // fig 2: per-algorithm winner counts
    {
        const auto winners = selector::vbs(perf);
        std::map<std::string, int> wins;
        for (const auto& algo : perf.algos) wins[algo] = 0;
        for (const auto& choice : winners)
            ++wins[perf.algos[static_cast<std::size_t>(choice.algo)]];
        std::ostringstream csv;
        csv << header << "algo_id,wins\n";
        for (const auto& algo : perf.algos) csv << algo << "," << wins[algo] << "\n";
        write_text_file(out / "fig2_winners.csv", csv.str());
    }

    // fig 3: min-max normalized feature values per instance
    {
        const auto features = load_features(config, out);
        const auto& names = features.front().names;
        std::ostringstream csv;
        csv << header << "fid,iid,feature,value_normalized\n";
        for (std::size_t f = 0; f < names.size(); ++f) {
            double lo = features.front().values[f], hi = lo;
            for (const auto& fv : features) {
                lo = std::min(lo, fv.values[f]);
                hi = std::max(hi, fv.values[f]);
            }
            for (const auto& fv : features) {
                const double v = hi > lo ? (fv.values[f] - lo) / (hi - lo) : 0.0;
                csv << fv.problem.fid << "," << fv.problem.iid << "," << names[f] << ","
                    << format_double(v) << "\n";
            }
        }
        write_text_file(out / "fig3_features_normalized.csv", csv.str());
    }

    // fig 4: true vs predicted distributions (raw replication rows)
    {
        std::ostringstream csv;
        csv << header << "fold,rep,fid,iid,algo_id,true_precision,pred_unscaled,pred_log10\n";
        for (const auto& rp : raw)
            csv << rp.fold << "," << rp.rep << "," << rp.id.fid << "," << rp.id.iid << ","
                << rp.algo << "," << format_double(rp.true_precision) << ","
                << format_double(rp.pred_unscaled) << "," << format_double(rp.pred_log10)
                << "\n";
        write_text_file(out / "fig4_true_vs_predicted.csv", csv.str());
    }

    // fig 5: selector and per-configuration quality scatter
    {
        std::ostringstream csv;
        csv << header << "name,kind,rmse,log_rmse\n";
        for (std::size_t a = 0; a < perf.algos.size(); ++a) {
            const std::vector<int> constant(perf.instances.size(), static_cast<int>(a));
            csv << perf.algos[a] << ",config,"
                << format_double(selector::selector_metric(constant, perf,
                                                           selector::Metric::rmse))
                << ","
                << format_double(selector::selector_metric(constant, perf,
                                                           selector::Metric::log_rmse))
                << "\n";
        }
        for (const auto& [name, entry] : report_doc.at("selectors").items())
            csv << name << ",selector," << format_double(entry.at("rmse").get<double>()) << ","
                << format_double(entry.at("log_rmse").get<double>()) << "\n";
        const auto& vbs_entry = report_doc.at("baselines").at("vbs");
        csv << "vbs,baseline," << format_double(vbs_entry.at("rmse").get<double>()) << ","
            << format_double(vbs_entry.at("log_rmse").get<double>()) << "\n";
        write_text_file(out / "fig5_selector_quality.csv", csv.str());
    }
}

}  // namespace fbas::pipeline
