// Command-line front end. Every subcommand reads and writes the canonical
// dataset directory layout, so stages can run one at a time or via `run`.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "diskprep.hpp"

namespace fs = std::filesystem;
using namespace diskprep;
using nlohmann::json;

namespace {

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    auto out = csv::open_output(path);
    out << text;
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string pick_model(const Dataset& ds, const std::string& requested) {
    if (!requested.empty()) {
        ds.attributes(requested);
        return requested;
    }
    return default_model(ds);
}

/// Flags shared by the pipeline-driven subcommands.
struct PipelineFlags {
    PipelineConfig cfg;
    std::string fill = "spline";
    std::string model_kind = "gbdt";
    std::string policy = "lastday";
    int n_days = -1;
    int train_end = -1;
    bool no_ff = false, no_ow = false;

    void add(CLI::App* app) {
        app->add_option("--disk-model", cfg.model, "disk model to analyze (default: the most common)");
        app->add_flag("--no-ff", no_ff, "disable failure-type filtering");
        app->add_flag("--no-ow", no_ow, "disable the observation window");
        app->add_option("--fill", fill, "none|ffill|linear|spline")->capture_default_str();
        app->add_option("--max-gap", cfg.max_gap)->capture_default_str();
        app->add_option("--k", cfg.top_k, "top correlated attributes")->capture_default_str();
        app->add_option("--detection-window", cfg.detection_window)->capture_default_str();
        app->add_option("--z-threshold", cfg.z_threshold)->capture_default_str();
        app->add_option("--n-days", n_days, "backtracking window override (-1 = automatic)")->capture_default_str();
        app->add_option("--train-end", train_end, "last training day (-1 = ratio split)")->capture_default_str();
        app->add_option("--train-ratio", cfg.train_ratio)->capture_default_str();
        app->add_option("--test-ratio", cfg.test_ratio)->capture_default_str();
        app->add_option("--fpr", cfg.fpr_budget)->capture_default_str();
        app->add_option("--healthy-cap", cfg.healthy_cap)->capture_default_str();
        app->add_option("--model", model_kind, "gbdt|rf")->capture_default_str();
        app->add_option("--trees", cfg.train.n_trees)->capture_default_str();
        app->add_option("--max-depth", cfg.train.max_depth, "0 = model default")->capture_default_str();
        app->add_option("--learning-rate", cfg.train.learning_rate)->capture_default_str();
        app->add_option("--feature-subsample", cfg.train.feature_subsample)->capture_default_str();
        app->add_option("--policy", policy, "lastday|undersample")->capture_default_str();
    }

    PipelineConfig resolve(std::uint64_t seed) const {
        PipelineConfig c = cfg;
        auto m = parse_fill_method(fill);
        if (!m) throw ConfigError("unknown fill method '" + fill + "'");
        c.fill_method = *m;
        auto k = parse_model_kind(model_kind);
        if (!k) throw ConfigError("unknown model '" + model_kind + "'");
        c.train.model_kind = *k;
        auto p = parse_sampling_policy(policy);
        if (!p) throw ConfigError("unknown policy '" + policy + "'");
        c.train.sampling_policy = *p;
        c.failure_type_filtering = !no_ff;
        c.observation_window = !no_ow;
        if (n_days >= 0) c.n_days = n_days;
        if (train_end >= 0) c.train_end_day = train_end;
        c.seed = seed;
        c.validate();
        return c;
    }
};

json to_json(const MissingStats& s) {
    return {{"dmr_failed", s.dmr_failed},
            {"dmr_healthy", s.dmr_healthy},
            {"pct_gap_ge_10", s.pct_gap_ge_10},
            {"pct_gap_ge_25", s.pct_gap_ge_25},
            {"failed_disks", s.failed_disks},
            {"healthy_disks", s.healthy_disks},
            {"data_missing_failed", s.data_missing_failed}};
}

json curve_json(const std::vector<CurvePoint>& curve) {
    json out = json::array();
    for (const auto& p : curve) {
        out.push_back({{"fpr", p.fpr}, {"tpr", p.tpr}, {"threshold", std::isinf(p.threshold) ? json(nullptr) : json(p.threshold)}});
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"diskprep: preprocessing pipeline for disk failure prediction"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "key = value config file; command-line flags override it");
    std::uint64_t seed = 1;
    app.add_option("--seed", seed, "seed for every random choice")->capture_default_str();

    // ingest
    auto* ingest = app.add_subcommand("ingest", "parse SMART CSV files and trouble tickets into a dataset directory");
    std::vector<std::string> smart_files;
    std::string tickets_file, out_dir, epoch, vendor_column;
    ingest->add_option("--smart", smart_files, "SMART CSV files or directories")->required();
    ingest->add_option("--tickets", tickets_file, "tickets CSV or JSON lines");
    ingest->add_option("--epoch", epoch, "day 0 as YYYY-MM-DD (default: earliest date)");
    ingest->add_option("--vendor-column", vendor_column);
    ingest->add_option("--out", out_dir)->required();

    // analyze
    auto* analyze = app.add_subcommand("analyze", "AFR and missing-data statistics per disk model");
    std::string data_dir, report_out, ccdf_out, table_out;
    analyze->add_option("--data", data_dir)->required();
    analyze->add_option("--out", report_out, "report JSON (default stdout)");
    analyze->add_option("--table", table_out, "per-model CSV table");
    analyze->add_option("--ccdf", ccdf_out, "missing-gap CCDF CSV");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic fleet with ground truth");
    std::string synth_config;
    std::size_t synth_disks = 0;
    synth->add_option("--config", synth_config, "synthetic fleet JSON (missing keys use defaults)");
    synth->add_option("--disks", synth_disks, "override the number of disks");
    synth->add_option("--out", out_dir)->required();

    // filter-types
    auto* ftypes = app.add_subcommand("filter-types", "SRCC ranking and KS predictability table");
    std::string disk_model;
    std::size_t top_k = 4;
    int until = -1;
    ftypes->add_option("--data", data_dir)->required();
    ftypes->add_option("--disk-model", disk_model);
    ftypes->add_option("--k", top_k)->capture_default_str();
    ftypes->add_option("--train-end", until, "use tickets and samples up to this day (-1 = all)");
    ftypes->add_option("--out", report_out, "report JSON (default stdout)");

    // fill
    auto* fill = app.add_subcommand("fill", "fill missing days of every disk");
    std::string fill_method = "spline";
    int max_gap = 30;
    fill->add_option("--data", data_dir)->required();
    fill->add_option("--method", fill_method, "none|ffill|linear|spline")->capture_default_str();
    fill->add_option("--max-gap", max_gap)->capture_default_str();
    fill->add_option("--out", out_dir)->required();
    fill->add_option("--report", report_out, "fill report JSON (default <out>/fill_report.json)");

    // backtrack
    auto* backtrack = app.add_subcommand("backtrack", "pre-failure period from change-point detection");
    std::string types_file;
    int detection_window = 60, n_days = -1;
    double z_threshold = 2.5;
    backtrack->add_option("--data", data_dir, "filled dataset")->required();
    backtrack->add_option("--disk-model", disk_model);
    backtrack->add_option("--types", types_file, "filter-types report; restricts positives to predictable types");
    backtrack->add_option("--k", top_k)->capture_default_str();
    backtrack->add_option("--detection-window", detection_window)->capture_default_str();
    backtrack->add_option("--z-threshold", z_threshold)->capture_default_str();
    backtrack->add_option("--n-days", n_days, "skip detection and use this window");
    backtrack->add_option("--out", report_out, "report JSON (default stdout)");

    // featurize
    auto* featurize = app.add_subcommand("featurize", "build the feature matrix of a filled dataset");
    std::string features_out, format = "csv";
    bool observation_window = false;
    int train_end = -1;
    featurize->add_option("--data", data_dir, "filled dataset")->required();
    featurize->add_option("--disk-model", disk_model);
    featurize->add_option("--out", features_out)->required();
    featurize->add_option("--format", format, "csv|binary")->capture_default_str();
    featurize->add_option("--n-days", n_days, "label with this backtracking window (-1 = unlabeled)");
    featurize->add_option("--train-end", train_end, "last training day for labels (-1 = span end)");
    featurize->add_flag("--ow", observation_window, "drop the last n samples of healthy disks");

    // train
    auto* trainc = app.add_subcommand("train", "train a GBDT or random forest on a labeled feature matrix");
    std::string features_in, model_out, model_kind = "gbdt", policy = "lastday";
    TrainConfig tc;
    trainc->add_option("--features", features_in)->required();
    trainc->add_option("--model", model_kind, "gbdt|rf")->capture_default_str();
    trainc->add_option("--trees", tc.n_trees)->capture_default_str();
    trainc->add_option("--max-depth", tc.max_depth, "0 = model default")->capture_default_str();
    trainc->add_option("--learning-rate", tc.learning_rate)->capture_default_str();
    trainc->add_option("--policy", policy, "lastday|undersample")->capture_default_str();
    trainc->add_option("--out", model_out)->required();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "disk-level TPR at an FPR budget");
    std::string scores_file, model_in, curve_out;
    double fpr = 0.001;
    int test_start = -1, test_end = -1;
    evaluate->add_option("--scores", scores_file, "CSV serial,failed,score");
    evaluate->add_option("--data", data_dir, "filled dataset to score with --model-file");
    evaluate->add_option("--model-file", model_in);
    evaluate->add_option("--disk-model", disk_model);
    evaluate->add_option("--test-start", test_start, "first test day (with --data)");
    evaluate->add_option("--test-end", test_end, "last test day (default: span end)");
    evaluate->add_option("--fpr", fpr)->capture_default_str();
    evaluate->add_option("--curve", curve_out, "write the full TPR/FPR sweep as CSV");
    evaluate->add_option("--out", report_out, "report JSON (default stdout)");

    // evaluate-sliding
    auto* sliding = app.add_subcommand("evaluate-sliding", "sliding train/test runs with mean TPR and 95% CI");
    PipelineFlags sliding_flags;
    sliding_flags.cfg.fpr_budget = 0.04;
    int train_months = 3, test_months = 1;
    sliding->add_option("--data", data_dir, "raw dataset")->required();
    sliding->add_option("--train-months", train_months)->capture_default_str();
    sliding->add_option("--test-months", test_months)->capture_default_str();
    sliding->add_option("--out", report_out, "report JSON (default stdout)");
    sliding_flags.add(sliding);

    // run
    auto* run = app.add_subcommand("run", "run every stage on a single train/test split");
    PipelineFlags run_flags;
    bool resume = false;
    run->add_option("--data", data_dir, "raw dataset")->required();
    run->add_option("--out", out_dir, "artifact directory")->required();
    run->add_flag("--resume", resume, "reuse stage artifacts whose manifest entries still match");
    run_flags.add(run);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            std::vector<std::string> files;
            for (const auto& p : smart_files) {
                if (fs::is_directory(p)) {
                    std::vector<std::string> in_dir;
                    for (const auto& e : fs::directory_iterator(p)) {
                        if (e.path().extension() == ".csv") in_dir.push_back(e.path().string());
                    }
                    std::sort(in_dir.begin(), in_dir.end());
                    files.insert(files.end(), in_dir.begin(), in_dir.end());
                } else {
                    files.push_back(p);
                }
            }
            SmartCsvSchema schema;
            schema.epoch = epoch;
            schema.vendor_column = vendor_column;
            auto parsed = parse_smart_csv_files(files, schema);
            json summary = {{"files", files.size()},
                            {"rows", parsed.rows},
                            {"skipped_rows", parsed.skipped_rows},
                            {"duplicate_rows", parsed.duplicate_rows},
                            {"ignored_columns", parsed.ignored_columns}};
            if (!tickets_file.empty()) {
                auto t = parse_tickets(tickets_file, parsed.dataset.epoch);
                auto orphans = merge_tickets(parsed.dataset, t.tickets);
                summary["tickets"] = {{"records", t.records},
                                      {"malformed", t.malformed},
                                      {"unrecognized_types", t.unrecognized_types},
                                      {"orphans", orphans.size()}};
            }
            write_dataset(parsed.dataset, out_dir);
            summary["disks"] = parsed.dataset.disks.size();
            summary["epoch"] = parsed.dataset.epoch;
            summary["span_days"] = parsed.dataset.span_days;
            std::cout << summary.dump(2) << '\n';
        } else if (*analyze) {
            const Dataset ds = read_dataset(data_dir);
            json report = json::array();
            std::string table = "model,vendor,disks,failed,afr,dmr_failed,dmr_healthy,pct_gap_ge_10,pct_gap_ge_25\n";
            std::string ccdf = "model,gap_days,ccdf\n";
            for (const auto& m : summarize_models(ds)) {
                const auto ms = missing_stats(ds, m.model);
                report.push_back({{"model", m.model},
                                  {"vendor", m.vendor},
                                  {"disks", m.disks},
                                  {"failed", m.failed},
                                  {"afr", m.afr},
                                  {"missing", to_json(ms)}});
                table += csv::escape(m.model) + "," + csv::escape(m.vendor) + "," + std::to_string(m.disks) + "," +
                         std::to_string(m.failed) + "," + csv::format_double(m.afr) + "," +
                         csv::format_double(ms.dmr_failed) + "," + csv::format_double(ms.dmr_healthy) + "," +
                         csv::format_double(ms.pct_gap_ge_10) + "," + csv::format_double(ms.pct_gap_ge_25) + "\n";
                for (const auto& [gap, p] : gap_ccdf(ms))
                    ccdf += csv::escape(m.model) + "," + std::to_string(gap) + "," + csv::format_double(p) + "\n";
            }
            write_json(report_out, {{"span_days", ds.span_days}, {"epoch", ds.epoch}, {"models", report}});
            if (!table_out.empty()) write_text(table_out, table);
            if (!ccdf_out.empty()) write_text(ccdf_out, ccdf);
        } else if (*synth) {
            SynthConfig cfg = synth_config.empty() ? default_synth_config() : synth_config_from_json(read_json(synth_config));
            if (synth_disks) cfg.n_disks = synth_disks;
            if (app.count("--seed") || synth_config.empty()) cfg.seed = seed;
            if (cfg.afr_target * static_cast<double>(cfg.n_disks) < 1.0)
                warn("afr_target * n_disks < 1: the fleet will likely have no failures");
            const auto result = generate(cfg);
            write_dataset(result.dataset, out_dir);
            write_json((fs::path(out_dir) / "ground_truth.json").string(), ground_truth_to_json(result.truth));
            write_json((fs::path(out_dir) / "synth_config.json").string(), synth_config_to_json(cfg));
            std::cout << json{{"disks", result.dataset.disks.size()}, {"failures", result.truth.failures.size()}}.dump(2)
                      << '\n';
        } else if (*ftypes) {
            const Dataset ds = read_dataset(data_dir);
            const std::string model = pick_model(ds, disk_model);
            const std::optional<Day> limit = until >= 0 ? std::optional<Day>(until) : std::nullopt;
            const auto top = top_correlated_attributes(ds, model, top_k, limit);
            std::vector<std::string> attrs;
            json corr = json::array();
            for (const auto& a : top) {
                attrs.push_back(a.attribute);
                corr.push_back({{"attribute", a.attribute}, {"srcc", a.srcc}});
            }
            PredictabilityOptions po;
            po.seed = seed;
            po.until = limit;
            const auto table = predictability_table(ds, model, attrs, po);
            write_json(report_out, {{"model", model}, {"correlated", corr}, {"table", to_json(table)}});
        } else if (*fill) {
            auto method = parse_fill_method(fill_method);
            if (!method) throw ConfigError("unknown fill method '" + fill_method + "'");
            const Dataset ds = read_dataset(data_dir);
            auto [filled, report] = fill_dataset(ds, *method, max_gap);
            write_dataset(filled, out_dir);
            json dropped = json::array();
            for (const auto& d : report.dropped_disks) dropped.push_back({{"serial", d.serial}, {"reason", d.reason}});
            write_json(report_out.empty() ? (fs::path(out_dir) / "fill_report.json").string() : report_out,
                       {{"method", to_string(report.method)},
                        {"max_gap", max_gap},
                        {"filled_days", report.filled_days},
                        {"extrapolated_days", report.extrapolated_days},
                        {"dropped_disks", dropped}});
        } else if (*backtrack) {
            const Dataset ds = read_dataset(data_dir);
            const std::string model = pick_model(ds, disk_model);
            TicketMap failures = ds.tickets;
            std::vector<std::string> attrs;
            if (!types_file.empty()) {
                const json types = read_json(types_file);
                for (const auto& a : types.at("correlated")) attrs.push_back(a.at("attribute").get<std::string>());
                std::set<FailureType> keep;
                for (const auto& t : types.at("table").at("predictable_types")) {
                    if (auto ft = parse_failure_type(t.get<std::string>())) keep.insert(*ft);
                }
                if (keep.empty()) {
                    warn("no predictable failure type; all tickets are used");
                } else {
                    std::erase_if(failures, [&](const auto& kv) { return !keep.count(kv.second.failure_type); });
                }
            } else {
                for (const auto& a : top_correlated_attributes(ds, model, top_k)) attrs.push_back(a.attribute);
            }
            if (n_days >= 0) {
                write_json(report_out, {{"model", model}, {"n_days", n_days}, {"automatic", false}});
            } else {
                BacktrackOptions bo;
                bo.detection_window = detection_window;
                bo.z_threshold = z_threshold;
                const auto p = prefailure_period(ds, model, failures, attrs, bo);
                json j = to_json(p);
                j["model"] = model;
                j["automatic"] = true;
                write_json(report_out, j);
            }
        } else if (*featurize) {
            const Dataset ds = read_dataset(data_dir);
            const std::string model = pick_model(ds, disk_model);
            std::optional<LabelPlan> plan;
            if (n_days >= 0) {
                const Day end = train_end >= 0 ? train_end : ds.span_days - 1;
                plan = label_samples(ds, ds.tickets, n_days, observation_window, end);
            }
            const auto m = featurize_dataset(ds, model, ds.attributes(model), plan ? &*plan : nullptr);
            if (format == "binary") write_feature_binary(m, features_out);
            else if (format == "csv") write_feature_csv(m, features_out);
            else throw ConfigError("unknown feature format '" + format + "'");
            std::cout << json{{"rows", m.rows()}, {"columns", m.cols()}, {"schema", hex64(m.schema())}}.dump(2) << '\n';
        } else if (*trainc) {
            auto k = parse_model_kind(model_kind);
            if (!k) throw ConfigError("unknown model '" + model_kind + "'");
            auto p = parse_sampling_policy(policy);
            if (!p) throw ConfigError("unknown policy '" + policy + "'");
            tc.model_kind = *k;
            tc.sampling_policy = *p;
            tc.seed = seed;
            const FeatureMatrix m = read_features(features_in);
            if (m.labels.empty()) throw DataError("training needs a labeled feature matrix (featurize --n-days)");
            // The matrix already holds the labeled rows; the policy only thins negatives.
            LabelPlan plan;
            for (std::size_t i = 0; i < m.rows(); ++i) {
                auto& d = plan.disks[m.serials[i]];
                d.failed = d.failed || m.labels[i] == Label::Positive;
            }
            const FeatureMatrix rows = assemble_training_set(m, plan, tc.sampling_policy, tc.seed);
            const TrainedModel model = train(rows, tc);
            save_model(model, model_out);
            std::cout << json{{"rows", rows.rows()}, {"trees", model.trees.size()}, {"fingerprint", hex64(model.fingerprint())}}.dump(2)
                      << '\n';
        } else if (*evaluate) {
            std::map<std::string, double> scores;
            std::map<std::string, bool> failed;
            std::map<std::string, FailureType> types;
            if (!scores_file.empty()) {
                auto in = csv::open_input(scores_file);
                std::string line;
                std::getline(in, line);
                while (std::getline(in, line)) {
                    if (csv::trim(line).empty()) continue;
                    const auto f = csv::split_line(line);
                    if (f.size() < 3) throw DataError("scores CSV rows need serial,failed,score");
                    auto v = csv::parse_double(f[2]);
                    if (!v) throw DataError("bad score for " + f[0]);
                    scores[f[0]] = *v;
                    failed[f[0]] = f[1] == "1" || f[1] == "true";
                }
            } else {
                if (data_dir.empty() || model_in.empty()) throw ConfigError("evaluate needs --scores or --data with --model-file");
                const Dataset ds = read_dataset(data_dir);
                const std::string model = pick_model(ds, disk_model);
                const TrainedModel m = load_model(model_in);
                RunDescriptor run;
                run.test_end = test_end >= 0 ? test_end : ds.span_days - 1;
                run.test_start = test_start >= 0 ? test_start : run.test_end - 29;
                run.train_end = run.test_start - 1;
                std::map<std::string, Day> last;
                for (const auto& [s, d] : ds.disks) {
                    if (!d.empty()) last[s] = d.days.back();
                }
                Dataset in_window = ds;
                std::erase_if(in_window.tickets, [&](const auto& kv) { return kv.second.day > run.test_end; });
                RunResult r;
                score_test_disks(in_window, model, ds.attributes(model), m, run, last, r);
                scores = std::move(r.disk_scores);
                failed = std::move(r.failed);
                for (const auto& [s, f] : failed) {
                    if (f) types[s] = ds.tickets.at(s).failure_type;
                }
            }
            EvalReport report = tpr_at_fpr(scores, failed, fpr);
            if (!types.empty()) add_type_breakdown(report, scores, types);
            write_json(report_out, to_json(report));
            if (!curve_out.empty() && fs::path(curve_out).extension() == ".json") {
                write_json(curve_out, curve_json(tpr_fpr_curve(scores, failed)));
            } else if (!curve_out.empty()) {
                std::string text = "fpr,tpr,threshold\n";
                for (const auto& p : tpr_fpr_curve(scores, failed))
                    text += csv::format_double(p.fpr) + "," + csv::format_double(p.tpr) + "," +
                            (std::isinf(p.threshold) ? std::string("inf") : csv::format_double(p.threshold)) + "\n";
                write_text(curve_out, text);
            }
        } else if (*sliding) {
            const Dataset ds = read_dataset(data_dir);
            const PipelineConfig cfg = sliding_flags.resolve(seed);
            const auto result = sliding_runs(ds, cfg, train_months, test_months);
            json runs = json::array();
            for (const auto& r : result.reports) runs.push_back(to_json(r));
            json skipped = json::array();
            for (const auto& s : result.skipped)
                skipped.push_back({{"train_start", s.run.train_start}, {"test_end", s.run.test_end}, {"reason", s.reason}});
            write_json(report_out, {{"config", pipeline_config_to_json(cfg)},
                                    {"config_fingerprint", hex64(cfg.fingerprint())},
                                    {"runs", runs},
                                    {"skipped", skipped},
                                    {"tpr", {{"mean", result.tpr.mean},
                                             {"ci95_lower", result.tpr.lower},
                                             {"ci95_upper", result.tpr.upper},
                                             {"n", result.tpr.n}}}});
        } else if (*run) {
            const Dataset ds = read_dataset(data_dir);
            const PipelineConfig cfg = run_flags.resolve(seed);
            const auto outcome = run_pipeline_staged(ds, cfg, out_dir, resume);
            json j = to_json(outcome.result.report);
            j["n_days"] = outcome.result.n_days;
            j["reused_stages"] = outcome.reused_stages;
            std::cout << j.dump(2) << '\n';
        }
    } catch (const StageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
