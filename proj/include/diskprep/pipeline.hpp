#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "backtrack.hpp"
#include "dataset.hpp"
#include "dataset_io.hpp"
#include "eval.hpp"
#include "features.hpp"
#include "filling.hpp"
#include "model.hpp"
#include "typefilter.hpp"

namespace diskprep {

/// Raised when a pipeline stage fails; `stage` names it.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error("stage '" + stage + "' failed: " + what), stage(std::move(stage)) {}
    std::string stage;
};

struct PipelineConfig {
    std::string model;  ///< empty: the model with the most disks
    bool failure_type_filtering = true;
    bool observation_window = true;
    FillMethod fill_method = FillMethod::Spline;
    int max_gap = 30;
    std::size_t top_k = 4;
    int detection_window = 60;
    double z_threshold = 2.5;
    std::optional<int> n_days;  ///< overrides the automatic pre-failure period
    int train_ratio = 10;       ///< single split: train:test by days
    int test_ratio = 1;
    std::optional<Day> train_end_day;  ///< explicit split instead of the ratio
    double fpr_budget = 0.001;
    std::size_t healthy_cap = 20000;
    TrainConfig train;
    std::uint64_t seed = 1;

    void validate() const {
        if (max_gap < 1) throw ConfigError("max_gap must be >= 1");
        if (top_k < 1) throw ConfigError("k must be >= 1");
        if (detection_window < 2) throw ConfigError("detection_window must be >= 2");
        if (n_days && *n_days < 0) throw ConfigError("n_days must be >= 0");
        if (train_ratio < 1 || test_ratio < 1) throw ConfigError("train/test ratio parts must be >= 1");
        if (!(fpr_budget >= 0 && fpr_budget <= 1)) throw ConfigError("fpr budget must be in [0,1]");
        train.validate();
    }

    /// Everything except paths; the seed is folded into the training seed.
    std::uint64_t fingerprint() const {
        Fnv1a h;
        h.update("pipeline-config/1")
            .update(model)
            .update_u64(failure_type_filtering)
            .update_u64(observation_window)
            .update_u64(static_cast<std::uint64_t>(fill_method))
            .update_u64(static_cast<std::uint64_t>(max_gap))
            .update_u64(top_k)
            .update_u64(static_cast<std::uint64_t>(detection_window))
            .update(z_threshold)
            .update_u64(n_days ? static_cast<std::uint64_t>(*n_days) + 1 : 0)
            .update_u64(static_cast<std::uint64_t>(train_ratio))
            .update_u64(static_cast<std::uint64_t>(test_ratio))
            .update_u64(train_end_day ? static_cast<std::uint64_t>(*train_end_day) + 1 : 0)
            .update(fpr_budget)
            .update_u64(healthy_cap)
            .update_u64(train.fingerprint())
            .update_u64(seed);
        return h.digest();
    }
};

/// Baseline of the comparison: no type filtering, no observation window,
/// positives only on the failure day.
inline PipelineConfig baseline_config(PipelineConfig c) {
    c.failure_type_filtering = false;
    c.observation_window = false;
    c.n_days = 0;
    return c;
}

inline nlohmann::json pipeline_config_to_json(const PipelineConfig& c) {
    nlohmann::json j = {
        {"model", c.model},
        {"failure_type_filtering", c.failure_type_filtering},
        {"observation_window", c.observation_window},
        {"fill", to_string(c.fill_method)},
        {"max_gap", c.max_gap},
        {"k", c.top_k},
        {"detection_window", c.detection_window},
        {"z_threshold", c.z_threshold},
        {"train_ratio", c.train_ratio},
        {"test_ratio", c.test_ratio},
        {"fpr", c.fpr_budget},
        {"healthy_cap", c.healthy_cap},
        {"seed", c.seed},
        {"train",
         {{"model", to_string(c.train.model_kind)},
          {"trees", c.train.n_trees},
          {"max_depth", c.train.max_depth},
          {"learning_rate", c.train.learning_rate},
          {"feature_subsample", c.train.feature_subsample},
          {"policy", to_string(c.train.sampling_policy)},
          {"l2", c.train.l2},
          {"min_child_weight", c.train.min_child_weight}}},
    };
    j["n_days"] = c.n_days ? nlohmann::json(*c.n_days) : nlohmann::json(nullptr);
    j["train_end_day"] = c.train_end_day ? nlohmann::json(*c.train_end_day) : nlohmann::json(nullptr);
    return j;
}

/// Missing keys keep their defaults. Unknown keys are rejected so typos surface.
inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j, PipelineConfig c = {}) {
    static const std::set<std::string> known = {
        "model", "failure_type_filtering", "observation_window", "fill", "max_gap", "k", "detection_window",
        "z_threshold", "n_days", "train_ratio", "test_ratio", "train_end_day", "fpr", "healthy_cap", "seed", "train"};
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw ConfigError("unknown pipeline config key '" + key + "'");
    }
    try {
        c.model = j.value("model", c.model);
        c.failure_type_filtering = j.value("failure_type_filtering", c.failure_type_filtering);
        c.observation_window = j.value("observation_window", c.observation_window);
        if (j.contains("fill")) {
            auto m = parse_fill_method(j.at("fill").get<std::string>());
            if (!m) throw ConfigError("unknown fill method '" + j.at("fill").get<std::string>() + "'");
            c.fill_method = *m;
        }
        c.max_gap = j.value("max_gap", c.max_gap);
        c.top_k = j.value("k", c.top_k);
        c.detection_window = j.value("detection_window", c.detection_window);
        c.z_threshold = j.value("z_threshold", c.z_threshold);
        if (j.contains("n_days"))
            c.n_days = j.at("n_days").is_null() ? std::nullopt : std::optional<int>(j.at("n_days").get<int>());
        c.train_ratio = j.value("train_ratio", c.train_ratio);
        c.test_ratio = j.value("test_ratio", c.test_ratio);
        if (j.contains("train_end_day"))
            c.train_end_day = j.at("train_end_day").is_null() ? std::nullopt
                                                                : std::optional<Day>(j.at("train_end_day").get<Day>());
        c.fpr_budget = j.value("fpr", c.fpr_budget);
        c.healthy_cap = j.value("healthy_cap", c.healthy_cap);
        c.seed = j.value("seed", c.seed);
        if (j.contains("train")) {
            const auto& t = j.at("train");
            if (t.contains("model")) {
                auto k = parse_model_kind(t.at("model").get<std::string>());
                if (!k) throw ConfigError("unknown model kind '" + t.at("model").get<std::string>() + "'");
                c.train.model_kind = *k;
            }
            if (t.contains("policy")) {
                auto p = parse_sampling_policy(t.at("policy").get<std::string>());
                if (!p) throw ConfigError("unknown sampling policy '" + t.at("policy").get<std::string>() + "'");
                c.train.sampling_policy = *p;
            }
            c.train.n_trees = t.value("trees", c.train.n_trees);
            c.train.max_depth = t.value("max_depth", c.train.max_depth);
            c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
            c.train.feature_subsample = t.value("feature_subsample", c.train.feature_subsample);
            c.train.l2 = t.value("l2", c.train.l2);
            c.train.min_child_weight = t.value("min_child_weight", c.train.min_child_weight);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad pipeline config: ") + e.what());
    }
    return c;
}

/// Model with the most disks (ties: name order).
inline std::string default_model(const Dataset& ds) {
    std::map<std::string, std::size_t> count;
    for (const auto& m : ds.models()) count[m] = 0;
    for (const auto& [_, d] : ds.disks) ++count[d.model];
    std::string best;
    std::size_t n = 0;
    for (const auto& [m, c] : count) {
        if (best.empty() || c > n) {
            best = m;
            n = c;
        }
    }
    if (best.empty()) throw DataError("dataset has no disk models");
    return best;
}

/// Train/test days of the single split.
inline RunDescriptor single_split(int span_days, const PipelineConfig& c) {
    RunDescriptor r;
    r.train_start = 0;
    if (c.train_end_day) {
        r.train_end = *c.train_end_day;
    } else {
        r.train_end = static_cast<Day>(static_cast<long long>(span_days) * c.train_ratio / (c.train_ratio + c.test_ratio)) - 1;
    }
    r.test_start = r.train_end + 1;
    r.test_end = span_days - 1;
    if (r.train_end < 0 || r.test_start > r.test_end)
        throw ConfigError("train/test split leaves an empty phase (span " + std::to_string(span_days) + " days)");
    return r;
}

/// Disks of one model limited to one run: samples in [history_start, test_end],
/// failed disks cut at their ticket day with last_day stretched to it, disks
/// that failed before the run and tickets after it removed. Also returns the
/// last observed day of every kept disk.
struct PreparedRun {
    Dataset dataset;
    std::map<std::string, Day> last_observed;
};

inline PreparedRun prepare_run(const Dataset& ds, const std::string& model, const RunDescriptor& run,
                               Day history_start) {
    PreparedRun out;
    Dataset& r = out.dataset;
    r.epoch = ds.epoch;
    r.span_days = ds.span_days;
    r.model_attributes[model] = ds.attributes(model);
    for (const auto& [serial, src] : ds.disks) {
        if (src.model != model) continue;
        const TicketEvent* t = ds.ticket_for(serial);
        if (t && t->day < run.train_start) continue;
        const bool fails = t && t->day <= run.test_end;
        const Day cut = fails ? t->day : run.test_end;

        auto lo = std::lower_bound(src.days.begin(), src.days.end(), history_start);
        auto hi = std::upper_bound(src.days.begin(), src.days.end(), cut);
        if (lo == hi) continue;
        DiskSeries d;
        d.serial = src.serial;
        d.model = src.model;
        d.vendor = src.vendor;
        const auto b = static_cast<std::size_t>(lo - src.days.begin());
        const auto e = static_cast<std::size_t>(hi - src.days.begin());
        d.days.assign(lo, hi);
        d.columns.resize(src.columns.size());
        for (std::size_t a = 0; a < src.columns.size(); ++a)
            d.columns[a].assign(src.columns[a].begin() + static_cast<std::ptrdiff_t>(b),
                                src.columns[a].begin() + static_cast<std::ptrdiff_t>(e));
        d.first_day = d.days.front();
        d.last_day = fails ? t->day : d.days.back();
        out.last_observed[serial] = d.days.back();
        if (fails) r.tickets.emplace(serial, *t);
        r.disks.emplace(serial, std::move(d));
    }
    return out;
}

struct TypeFilterResult {
    std::vector<AttributeCorrelation> correlated;
    std::optional<PredictabilityTable> table;  ///< absent when filtering is off
    TicketMap training_failures;               ///< positives used for backtracking and labels
};

struct RunResult {
    EvalReport report;
    FillReport fill;
    TypeFilterResult types;
    std::optional<PrefailurePeriod> prefailure;
    int n_days = 0;
    std::size_t training_rows = 0;
    std::size_t training_positives = 0;
    std::map<std::string, double> disk_scores;
    std::map<std::string, bool> failed;
    TrainedModel model;
};

namespace detail {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

} // namespace detail

inline TypeFilterResult filter_types(const Dataset& filled, const std::string& model, const PipelineConfig& c,
                                     Day train_end) {
    TypeFilterResult out;
    out.correlated = top_correlated_attributes(filled, model, c.top_k, train_end);
    TicketMap train_tickets;
    for (const auto& [s, t] : filled.tickets) {
        if (t.day <= train_end) train_tickets.emplace(s, t);
    }
    if (!c.failure_type_filtering) {
        out.training_failures = std::move(train_tickets);
        return out;
    }
    std::vector<std::string> attrs;
    for (const auto& a : out.correlated) attrs.push_back(a.attribute);
    PredictabilityOptions po;
    po.healthy_cap = c.healthy_cap;
    po.seed = c.seed;
    po.until = train_end;
    out.table = predictability_table(filled, model, attrs, po);
    out.training_failures = filter_positives(train_tickets, *out.table);
    return out;
}

/// Max model score per test disk over test-phase samples up to the disk's
/// last observed day. A disk failing in the test phase whose last observed
/// sample precedes the test phase is scored on that sample.
inline void score_test_disks(const Dataset& filled, const std::string& model, const std::vector<std::string>& attrs,
                             const TrainedModel& m, const RunDescriptor& run,
                             const std::map<std::string, Day>& last_observed, RunResult& out) {
    std::vector<std::size_t> idx;
    for (const auto& a : attrs) idx.push_back(filled.attribute_index(model, a));
    std::vector<double> buf(attrs.size() * kFeaturesPerAttribute);
    for (const auto& [serial, d] : filled.disks) {
        if (d.empty()) continue;
        const TicketEvent* t = filled.ticket_for(serial);
        if (t && t->day < run.test_start) continue;
        const bool failed = t != nullptr;
        const Day upto = std::min(run.test_end, last_observed.at(serial));
        Day from = run.test_start;
        if (upto < from) {
            if (!failed) continue;
            from = upto;
        }
        FeatureBuilder b(d, idx);
        double best = -std::numeric_limits<double>::infinity();
        auto lo = std::lower_bound(d.days.begin(), d.days.end(), from);
        auto hi = std::upper_bound(d.days.begin(), d.days.end(), upto);
        for (auto it = lo; it != hi; ++it) {
            b.row(static_cast<std::size_t>(it - d.days.begin()), buf);
            best = std::max(best, m.score(buf));
        }
        if (lo == hi) continue;
        out.disk_scores[serial] = best;
        out.failed[serial] = failed;
    }
}

/// One train/test run on `ds` (all stages in memory).
inline RunResult run_once(const Dataset& ds, const PipelineConfig& c, const RunDescriptor& run) {
    c.validate();
    const std::string model = c.model.empty() ? default_model(ds) : c.model;
    const Day history = std::max(0, run.train_start - static_cast<Day>(kFeatureWindows.back()));
    RunResult out;
    out.report.run = run;
    out.report.run.config_fingerprint = c.fingerprint();

    auto prepared = detail::stage("prepare", [&] { return prepare_run(ds, model, run, history); });
    Dataset filled = detail::stage("fill", [&] {
        auto [f, rep] = fill_dataset(prepared.dataset, c.fill_method, c.max_gap);
        out.fill = std::move(rep);
        return std::move(f);
    });
    const auto& attrs = filled.attributes(model);
    out.types = detail::stage("filter-types", [&] { return filter_types(filled, model, c, run.train_end); });
    out.n_days = detail::stage("backtrack", [&] {
        if (c.n_days) return *c.n_days;
        std::vector<std::string> top;
        for (const auto& a : out.types.correlated) top.push_back(a.attribute);
        BacktrackOptions bo;
        bo.detection_window = c.detection_window;
        bo.z_threshold = c.z_threshold;
        out.prefailure = prefailure_period(filled, model, out.types.training_failures, top, bo);
        return out.prefailure->n_days;
    });
    const LabelPlan plan = detail::stage("label", [&] {
        return label_samples(filled, out.types.training_failures, out.n_days, c.observation_window, run.train_end);
    });
    TrainConfig tc = c.train;
    tc.seed = detail::splitmix64(c.seed ^ c.train.seed);
    const FeatureMatrix training = detail::stage("featurize", [&] {
        return build_training_set(filled, model, attrs, plan, tc.sampling_policy, tc.seed, run.train_start);
    });
    out.training_rows = training.rows();
    out.training_positives = static_cast<std::size_t>(std::count(training.labels.begin(), training.labels.end(), Label::Positive));
    if (out.training_positives == 0) throw StageError("train", "no positive training samples");
    out.model = detail::stage("train", [&] { return train(training, tc); });
    detail::stage("score", [&] {
        score_test_disks(filled, model, attrs, out.model, run, prepared.last_observed, out);
        return 0;
    });
    out.report = detail::stage("evaluate", [&] {
        auto r = tpr_at_fpr(out.disk_scores, out.failed, c.fpr_budget);
        std::map<std::string, FailureType> types;
        for (const auto& [s, f] : out.failed) {
            if (f) types[s] = filled.tickets.at(s).failure_type;
        }
        add_type_breakdown(r, out.disk_scores, types);
        return r;
    });
    out.report.run = run;
    out.report.run.config_fingerprint = c.fingerprint();
    return out;
}

/// Single train/test split per the config.
inline RunResult run_pipeline(const Dataset& ds, const PipelineConfig& c) {
    return run_once(ds, c, single_split(ds.span_days, c));
}

struct SkippedRun {
    RunDescriptor run;
    std::string reason;
};

struct SlidingResult {
    std::vector<EvalReport> reports;
    std::vector<SkippedRun> skipped;
    MeanCi tpr;
};

inline SlidingResult sliding_runs(const Dataset& ds, const PipelineConfig& c, int train_months = 3,
                                  int test_months = 1) {
    SlidingResult out;
    const auto windows = sliding_windows(ds.span_days, train_months, test_months);
    if (windows.empty()) throw ConfigError("dataset span is shorter than train + test months");
    std::vector<double> tprs;
    for (const auto& w : windows) {
        try {
            auto r = run_once(ds, c, w);
            tprs.push_back(r.report.tpr);
            out.reports.push_back(std::move(r.report));
        } catch (const StageError& e) {
            out.skipped.push_back({w, e.what()});
        }
    }
    out.tpr = mean_ci95(tprs);
    return out;
}

// ---------------------------------------------------------------------------
// JSON views of reports.

inline nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json types = nlohmann::json::object();
    for (const auto& [t, row] : r.per_type)
        types[std::string(to_string(t))] = {{"failed", row.failed}, {"detected", row.detected}, {"tpr", row.tpr}};
    return {{"tpr", r.tpr},
            {"fpr", r.fpr},
            {"threshold", r.threshold},
            {"fpr_budget", r.fpr_budget},
            {"true_positives", r.true_positives},
            {"false_positives", r.false_positives},
            {"failed_disks", r.failed_disks},
            {"healthy_disks", r.healthy_disks},
            {"run",
             {{"train_start", r.run.train_start},
              {"train_end", r.run.train_end},
              {"test_start", r.run.test_start},
              {"test_end", r.run.test_end},
              {"config_fingerprint", hex64(r.run.config_fingerprint)}}},
            {"per_type", types}};
}

inline nlohmann::json to_json(const PredictabilityTable& t) {
    nlohmann::json rows = nlohmann::json::object();
    for (const auto& [type, ticks] : t.ticks) {
        rows[std::string(to_string(type))] = {{"ticks", ticks}, {"failed_disks", t.failed_disks.at(type)}};
    }
    nlohmann::json pred = nlohmann::json::array();
    for (auto type : t.predictable_types) pred.push_back(to_string(type));
    return {{"attributes", t.attributes}, {"types", rows}, {"predictable_types", pred}};
}

inline nlohmann::json to_json(const PrefailurePeriod& p) {
    return {{"n_days", p.n_days},
            {"per_attribute_p75", p.per_attribute_p75},
            {"per_attribute_detections", p.per_attribute_detections},
            {"failed_disks", p.failed_disks},
            {"detection_window", p.detection_window},
            {"z_threshold", p.z_threshold}};
}

// ---------------------------------------------------------------------------
// Staged execution with artifacts and a manifest.

/// Content hash of a dataset, independent of how it was loaded.
inline std::uint64_t dataset_hash(const Dataset& ds) {
    Fnv1a h;
    h.update("dataset/1").update(ds.epoch).update_u64(static_cast<std::uint64_t>(ds.span_days));
    for (const auto& [m, attrs] : ds.model_attributes) {
        h.update(m).update_u64(attrs.size());
        for (const auto& a : attrs) h.update(a).update("\x1f");
    }
    for (const auto& [s, d] : ds.disks) {
        h.update(s).update("\x1f").update(d.model).update("\x1f").update(d.vendor).update("\x1f");
        h.update_u64(static_cast<std::uint64_t>(d.first_day)).update_u64(static_cast<std::uint64_t>(d.last_day));
        for (Day day : d.days) h.update_u64(static_cast<std::uint64_t>(day));
        for (const auto& col : d.columns) {
            for (double v : col) h.update(is_missing(v) ? kMissing : v);
        }
    }
    for (const auto& [s, t] : ds.tickets)
        h.update(s).update_u64(static_cast<std::uint64_t>(t.day)).update_u64(static_cast<std::uint64_t>(t.failure_type));
    return h.digest();
}

inline std::uint64_t file_hash(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read " + p.string());
    Fnv1a h;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        h.update(std::string_view(buf, static_cast<std::size_t>(in.gcount())));
    }
    return h.digest();
}

struct StagedOutcome {
    RunResult result;
    nlohmann::json manifest;
    std::vector<std::string> reused_stages;
};

/// Runs the single-split pipeline, writing one artifact per stage under
/// `out_dir` plus manifest.json. Each manifest entry records the hash of the
/// stage inputs (previous stage key chained with the config fingerprint) and
/// of the artifact. With `resume`, a stage whose key and artifact hash match
/// the existing manifest is loaded instead of recomputed. The model stage is
/// resumable; the cheap stages before it are recomputed whenever it is not.
inline StagedOutcome run_pipeline_staged(const Dataset& ds, const PipelineConfig& c,
                                         const std::filesystem::path& out_dir, bool resume = false) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    StagedOutcome so;
    nlohmann::json previous;
    if (resume && fs::exists(out_dir / "manifest.json")) {
        std::ifstream in(out_dir / "manifest.json");
        try {
            in >> previous;
        } catch (const nlohmann::json::exception&) {
            previous = nullptr;
        }
    }
    const std::uint64_t cfg = c.fingerprint();
    so.manifest = {{"config_fingerprint", hex64(cfg)},
                   {"config", pipeline_config_to_json(c)},
                   {"input_hash", hex64(dataset_hash(ds))},
                   {"stages", nlohmann::json::array()}};
    std::uint64_t chain = Fnv1a().update_u64(cfg).update_u64(dataset_hash(ds)).digest();

    auto record = [&](const std::string& name, const std::string& file) {
        const std::uint64_t key = chain;
        const std::uint64_t art = file_hash(out_dir / file);
        so.manifest["stages"].push_back(
            {{"stage", name}, {"input_hash", hex64(key)}, {"artifact", file}, {"artifact_hash", hex64(art)}});
        chain = Fnv1a().update_u64(key).update_u64(art).digest();
    };
    auto reusable = [&](const std::string& name, const std::string& file) {
        if (!previous.is_object() || !previous.contains("stages")) return false;
        for (const auto& s : previous["stages"]) {
            if (s.value("stage", "") != name) continue;
            return s.value("input_hash", "") == hex64(chain) && fs::exists(out_dir / file) &&
                   s.value("artifact_hash", "") == hex64(file_hash(out_dir / file));
        }
        return false;
    };
    auto write_json = [&](const std::string& file, const nlohmann::json& j) {
        auto out = csv::open_output((out_dir / file).string());
        out << j.dump(2) << '\n';
    };

    const RunDescriptor run = single_split(ds.span_days, c);
    const std::string model = c.model.empty() ? default_model(ds) : c.model;
    RunResult& out = so.result;
    out.report.run = run;

    auto prepared = detail::stage("prepare", [&] { return prepare_run(ds, model, run, 0); });
    Dataset filled = detail::stage("fill", [&] {
        auto [f, rep] = fill_dataset(prepared.dataset, c.fill_method, c.max_gap);
        out.fill = std::move(rep);
        write_dataset(f, out_dir / "filled");
        nlohmann::json dropped = nlohmann::json::array();
        for (const auto& d : out.fill.dropped_disks) dropped.push_back({{"serial", d.serial}, {"reason", d.reason}});
        write_json("fill.json", {{"method", to_string(out.fill.method)},
                                 {"filled_days", out.fill.filled_days},
                                 {"extrapolated_days", out.fill.extrapolated_days},
                                 {"dataset_hash", hex64(dataset_hash(f))},
                                 {"dropped_disks", dropped}});
        return std::move(f);
    });
    record("fill", "fill.json");

    out.types = detail::stage("filter-types", [&] { return filter_types(filled, model, c, run.train_end); });
    {
        nlohmann::json corr = nlohmann::json::array();
        for (const auto& a : out.types.correlated) corr.push_back({{"attribute", a.attribute}, {"srcc", a.srcc}});
        nlohmann::json kept = nlohmann::json::array();
        for (const auto& [s, _] : out.types.training_failures) kept.push_back(s);
        write_json("types.json", {{"correlated", corr},
                                  {"table", out.types.table ? to_json(*out.types.table) : nlohmann::json(nullptr)},
                                  {"training_failures", kept}});
    }
    record("filter-types", "types.json");

    out.n_days = detail::stage("backtrack", [&] {
        if (c.n_days) return *c.n_days;
        std::vector<std::string> top;
        for (const auto& a : out.types.correlated) top.push_back(a.attribute);
        BacktrackOptions bo;
        bo.detection_window = c.detection_window;
        bo.z_threshold = c.z_threshold;
        out.prefailure = prefailure_period(filled, model, out.types.training_failures, top, bo);
        return out.prefailure->n_days;
    });
    write_json("backtrack.json", {{"n_days", out.n_days},
                                  {"automatic", !c.n_days.has_value()},
                                  {"period", out.prefailure ? to_json(*out.prefailure) : nlohmann::json(nullptr)}});
    record("backtrack", "backtrack.json");

    const auto& attrs = filled.attributes(model);
    TrainConfig tc = c.train;
    tc.seed = detail::splitmix64(c.seed ^ c.train.seed);
    const LabelPlan plan =
        label_samples(filled, out.types.training_failures, out.n_days, c.observation_window, run.train_end);
    const FeatureMatrix training = detail::stage("featurize", [&] {
        auto m = build_training_set(filled, model, attrs, plan, tc.sampling_policy, tc.seed, run.train_start);
        write_feature_csv(m, (out_dir / "training.csv").string());
        return m;
    });
    record("featurize", "training.csv");
    out.training_rows = training.rows();
    out.training_positives =
        static_cast<std::size_t>(std::count(training.labels.begin(), training.labels.end(), Label::Positive));

    if (reusable("train", "model.bin")) {
        out.model = load_model((out_dir / "model.bin").string());
        so.reused_stages.push_back("train");
    } else {
        if (out.training_positives == 0) throw StageError("train", "no positive training samples");
        out.model = detail::stage("train", [&] { return train(training, tc); });
        save_model(out.model, (out_dir / "model.bin").string());
    }
    record("train", "model.bin");

    detail::stage("score", [&] {
        score_test_disks(filled, model, attrs, out.model, run, prepared.last_observed, out);
        auto f = csv::open_output((out_dir / "scores.csv").string());
        csv::write_row(f, {"serial", "failed", "score"});
        for (const auto& [s, v] : out.disk_scores)
            csv::write_row(f, {s, out.failed.at(s) ? "1" : "0", csv::format_double(v)});
        return 0;
    });
    record("score", "scores.csv");

    out.report = detail::stage("evaluate", [&] {
        auto r = tpr_at_fpr(out.disk_scores, out.failed, c.fpr_budget);
        std::map<std::string, FailureType> types;
        for (const auto& [s, f] : out.failed) {
            if (f) types[s] = filled.tickets.at(s).failure_type;
        }
        add_type_breakdown(r, out.disk_scores, types);
        return r;
    });
    out.report.run = run;
    out.report.run.config_fingerprint = cfg;
    write_json("report.json", to_json(out.report));
    record("evaluate", "report.json");
    write_json("manifest.json", so.manifest);
    return so;
}

} // namespace diskprep
