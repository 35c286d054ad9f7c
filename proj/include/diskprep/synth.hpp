#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dataset.hpp"

namespace diskprep {

enum class AttributeKind { Cumulative, Instantaneous, Age };

struct SynthAttribute {
    std::string name;
    AttributeKind kind = AttributeKind::Cumulative;
    double noise_sigma = 0;      ///< Gaussian noise added to the reported value
    double baseline = 0;         ///< starting count / mean level
    double healthy_rate = 0;     ///< Cumulative: Poisson increments per day of an error-prone disk
    double error_prone = 0.2;    ///< Cumulative: share of disks with a non-zero healthy rate
    double ar_coefficient = 0.5; ///< Instantaneous: AR(1) coefficient
    bool signature = false;      ///< ramps before failures of signature-bearing types
    double ramp_base = 0;        ///< Cumulative: Poisson mean on the first ramp day
    double ramp_slope = 0.15;    ///< per-day growth of the ramp (mean shift for Instantaneous)
    double burst_rate = 0;       ///< Cumulative: daily probability of a one-day error burst, any disk
    double burst_mean = 0;       ///< Cumulative: Poisson mean of a burst
};

struct SynthFailureType {
    FailureType type = FailureType::Other;
    double weight = 1;
    bool signature = false;
};

struct SynthConfig {
    std::size_t n_disks = 1000;
    int span_days = 365;
    double afr_target = 0.02;
    std::string model = "SYN1";
    std::string vendor = "Synth";
    std::string epoch = "2017-07-01";
    std::vector<SynthAttribute> attributes;
    std::vector<SynthFailureType> failure_types;
    int ramp_days = 20;
    std::size_t min_ramping_attributes = 2;  ///< each signature failure ramps a random subset this large or larger
    int max_install_age_days = 5 * 365;
    double daily_drop_rate = 0.1;
    double prefailure_gap_probability = 0.8;
    int prefailure_gap_min = 8;
    int prefailure_gap_max = 16;
    std::uint64_t seed = 1;

    void validate() const {
        auto prob = [](double p, const char* what) {
            if (!(p >= 0 && p <= 1)) throw ConfigError(std::string(what) + " must be in [0,1]");
        };
        prob(afr_target, "afr_target");
        prob(daily_drop_rate, "daily_drop_rate");
        prob(prefailure_gap_probability, "prefailure_gap_probability");
        for (const auto& a : attributes) prob(a.error_prone, "error_prone");
        if (span_days < 2) throw ConfigError("span_days must be >= 2");
        if (ramp_days < 0 || ramp_days >= span_days) throw ConfigError("ramp_days must be in [0, span_days)");
        if (attributes.empty()) throw ConfigError("synthetic fleet needs at least one attribute");
        if (prefailure_gap_min < 1 || prefailure_gap_max < prefailure_gap_min)
            throw ConfigError("bad pre-failure gap length range");
    }
};

/// A fleet shaped after the measurement study: eight attributes of which the
/// four error counters ramp before signature-bearing failures, a failure-type
/// mix where about two thirds of failures carry a SMART signature, and
/// random daily drops plus pre-failure logging gaps.
inline SynthConfig default_synth_config() {
    SynthConfig c;
    c.attributes = {
        {"smart_5_raw", AttributeKind::Cumulative, 0, 0, 0.05, 0.2, 0.5, true, 0, 0.15},
        {"smart_187_raw", AttributeKind::Cumulative, 0, 0, 0.05, 0.2, 0.5, true, 0, 0.15},
        {"smart_197_raw", AttributeKind::Cumulative, 0, 0, 0.05, 0.2, 0.5, true, 0, 0.15},
        {"smart_198_raw", AttributeKind::Cumulative, 0, 0, 0.05, 0.2, 0.5, true, 0, 0.15},
        {"smart_9_raw", AttributeKind::Age, 0, 0, 0, 0, 0, false, 0, 0},
        {"smart_194_raw", AttributeKind::Instantaneous, 2, 35, 0, 0, 0.7, false, 0, 0},
        {"smart_1_raw", AttributeKind::Instantaneous, 10, 100, 0, 0, 0.3, false, 0, 0},
        {"smart_7_raw", AttributeKind::Instantaneous, 5, 60, 0, 0, 0.5, false, 0, 0},
    };
    c.failure_types = {
        {FailureType::DataCorruption, 0.35, true},
        {FailureType::DiskNotFound, 0.20, true},
        {FailureType::UnhealthyDisk, 0.10, true},
        {FailureType::IoRequestError, 0.20, false},
        {FailureType::UnhandledError, 0.15, false},
    };
    return c;
}

struct FailureTruth {
    Day failure_day = 0;
    FailureType type = FailureType::Other;
    bool signature = false;
    std::optional<Day> ramp_start;  ///< failure_day - ramp_days for signature types
    std::vector<std::string> ramping_attributes;
};

struct GroundTruth {
    std::map<std::string, FailureTruth> failures;
    std::map<std::string, std::vector<Day>> missing_days;
};

struct SynthResult {
    Dataset dataset;
    GroundTruth truth;
    bool no_failures_possible = false;  ///< afr_target * n_disks < 1
};

/// Deterministic given the seed; each disk draws from its own derived stream.
inline SynthResult generate(const SynthConfig& cfg) {
    cfg.validate();
    SynthResult out;
    out.no_failures_possible = cfg.afr_target * static_cast<double>(cfg.n_disks) < 1.0;
    Dataset& ds = out.dataset;
    ds.epoch = cfg.epoch;
    ds.span_days = cfg.span_days;
    auto& names = ds.model_attributes[cfg.model];
    for (const auto& a : cfg.attributes) names.push_back(a.name);

    const double p_fail = std::min(1.0, cfg.afr_target * static_cast<double>(cfg.span_days) / 365.0);
    double type_weight = 0;
    for (const auto& t : cfg.failure_types) type_weight += t.weight;
    const std::size_t A = cfg.attributes.size();

    for (std::size_t i = 0; i < cfg.n_disks; ++i) {
        std::mt19937_64 rng(detail::splitmix64(cfg.seed * 0x9e3779b97f4a7c15ULL + i));
        std::uniform_real_distribution<double> U(0.0, 1.0);
        std::normal_distribution<double> N(0.0, 1.0);
        char serial_buf[32];
        std::snprintf(serial_buf, sizeof serial_buf, "SYN%07zu", i);
        const std::string serial = serial_buf;

        // Failure draw.
        std::optional<FailureTruth> failure;
        if (U(rng) < p_fail && !cfg.failure_types.empty()) {
            FailureTruth f;
            f.failure_day = std::uniform_int_distribution<Day>(1, cfg.span_days - 1)(rng);
            double pick = U(rng) * type_weight;
            const SynthFailureType* chosen = &cfg.failure_types.back();
            for (const auto& t : cfg.failure_types) {
                if (pick < t.weight) {
                    chosen = &t;
                    break;
                }
                pick -= t.weight;
            }
            f.type = chosen->type;
            f.signature = chosen->signature;
            if (f.signature) f.ramp_start = f.failure_day - cfg.ramp_days;
            failure = f;
        }
        // Which signature attributes ramp on this disk.
        std::vector<bool> ramps(A, false);
        if (failure && failure->signature) {
            std::vector<std::size_t> sig;
            for (std::size_t a = 0; a < A; ++a) {
                if (cfg.attributes[a].signature) sig.push_back(a);
            }
            std::shuffle(sig.begin(), sig.end(), rng);
            const std::size_t lo = std::min(cfg.min_ramping_attributes, sig.size());
            const std::size_t count = sig.empty() ? 0 : std::uniform_int_distribution<std::size_t>(lo, sig.size())(rng);
            for (std::size_t k = 0; k < count; ++k) ramps[sig[k]] = true;
            for (std::size_t a = 0; a < A; ++a) {
                if (ramps[a]) failure->ramping_attributes.push_back(cfg.attributes[a].name);
            }
        }
        const Day last = failure ? failure->failure_day : cfg.span_days - 1;

        // Per-disk attribute parameters.
        std::vector<double> rate(A, 0.0), level(A, 0.0);
        const double install_age = U(rng) * cfg.max_install_age_days;
        for (std::size_t a = 0; a < A; ++a) {
            const auto& at = cfg.attributes[a];
            if (at.kind == AttributeKind::Cumulative) {
                rate[a] = U(rng) < at.error_prone ? at.healthy_rate * (0.5 + U(rng)) : 0.0;
                level[a] = at.baseline;
            } else if (at.kind == AttributeKind::Instantaneous) {
                level[a] = at.baseline;
            }
        }

        // Missing days.
        std::vector<bool> missing(static_cast<std::size_t>(last + 1), false);
        for (Day d = 0; d <= last; ++d) missing[static_cast<std::size_t>(d)] = U(rng) < cfg.daily_drop_rate;
        if (failure && U(rng) < cfg.prefailure_gap_probability) {
            const int len = std::uniform_int_distribution<int>(cfg.prefailure_gap_min, cfg.prefailure_gap_max)(rng);
            for (Day d = std::max(1, last - len + 1); d <= last; ++d) missing[static_cast<std::size_t>(d)] = true;
        }
        missing[0] = false;  // every disk reports on its first day

        DiskSeries s;
        s.serial = serial;
        s.model = cfg.model;
        s.vendor = cfg.vendor;
        std::vector<double> counter(A, 0.0), ar(A, 0.0), row(A);
        for (std::size_t a = 0; a < A; ++a) counter[a] = cfg.attributes[a].baseline;
        std::vector<Day> dropped;
        for (Day d = 0; d <= last; ++d) {
            const bool ramping = failure && failure->ramp_start && d >= *failure->ramp_start;
            const double ramp_day = ramping ? static_cast<double>(d - *failure->ramp_start) : 0.0;
            for (std::size_t a = 0; a < A; ++a) {
                const auto& at = cfg.attributes[a];
                double v = 0;
                switch (at.kind) {
                case AttributeKind::Cumulative: {
                    double mu = rate[a];
                    if (ramping && ramps[a]) mu += at.ramp_base + at.ramp_slope * ramp_day;
                    if (at.burst_rate > 0 && U(rng) < at.burst_rate) mu += at.burst_mean;
                    if (mu > 0) counter[a] += static_cast<double>(std::poisson_distribution<long>(mu)(rng));
                    v = counter[a] + (at.noise_sigma > 0 ? at.noise_sigma * N(rng) : 0.0);
                    break;
                }
                case AttributeKind::Instantaneous: {
                    ar[a] = at.ar_coefficient * ar[a] + std::sqrt(1 - at.ar_coefficient * at.ar_coefficient) * N(rng);
                    v = level[a] + at.noise_sigma * ar[a];
                    if (ramping && ramps[a]) v += at.ramp_slope * (ramp_day + 1);
                    break;
                }
                case AttributeKind::Age:
                    v = std::floor((install_age + d) * 24.0);
                    break;
                }
                row[a] = std::max(0.0, v);
            }
            if (missing[static_cast<std::size_t>(d)]) {
                dropped.push_back(d);
                continue;
            }
            s.append(d, row);
        }
        s.first_day = s.days.front();
        s.last_day = s.days.back();
        if (!dropped.empty()) out.truth.missing_days.emplace(serial, std::move(dropped));
        if (failure) {
            ds.tickets.emplace(serial, TicketEvent{serial, failure->failure_day, failure->type});
            out.truth.failures.emplace(serial, *failure);
        }
        ds.disks.emplace(serial, std::move(s));
    }
    return out;
}

// JSON (de)serialization of SynthConfig for the CLI.

inline void to_json(nlohmann::json& j, const SynthAttribute& a) {
    j = {{"name", a.name},
         {"kind", a.kind == AttributeKind::Cumulative ? "cumulative"
                  : a.kind == AttributeKind::Instantaneous ? "instantaneous"
                                                           : "age"},
         {"noise_sigma", a.noise_sigma},
         {"baseline", a.baseline},
         {"healthy_rate", a.healthy_rate},
         {"error_prone", a.error_prone},
         {"ar_coefficient", a.ar_coefficient},
         {"signature", a.signature},
         {"ramp_base", a.ramp_base},
         {"ramp_slope", a.ramp_slope},
         {"burst_rate", a.burst_rate},
         {"burst_mean", a.burst_mean}};
}

inline void from_json(const nlohmann::json& j, SynthAttribute& a) {
    a.name = j.at("name").get<std::string>();
    const auto kind = j.value("kind", std::string("cumulative"));
    if (kind == "cumulative") a.kind = AttributeKind::Cumulative;
    else if (kind == "instantaneous") a.kind = AttributeKind::Instantaneous;
    else if (kind == "age") a.kind = AttributeKind::Age;
    else throw ConfigError("unknown attribute kind '" + kind + "'");
    a.noise_sigma = j.value("noise_sigma", a.noise_sigma);
    a.baseline = j.value("baseline", a.baseline);
    a.healthy_rate = j.value("healthy_rate", a.healthy_rate);
    a.error_prone = j.value("error_prone", a.error_prone);
    a.ar_coefficient = j.value("ar_coefficient", a.ar_coefficient);
    a.signature = j.value("signature", a.signature);
    a.ramp_base = j.value("ramp_base", a.ramp_base);
    a.ramp_slope = j.value("ramp_slope", a.ramp_slope);
    a.burst_rate = j.value("burst_rate", a.burst_rate);
    a.burst_mean = j.value("burst_mean", a.burst_mean);
}

inline nlohmann::json synth_config_to_json(const SynthConfig& c) {
    nlohmann::json types = nlohmann::json::array();
    for (const auto& t : c.failure_types)
        types.push_back({{"type", to_string(t.type)}, {"weight", t.weight}, {"signature", t.signature}});
    return {{"n_disks", c.n_disks},
            {"span_days", c.span_days},
            {"afr_target", c.afr_target},
            {"model", c.model},
            {"vendor", c.vendor},
            {"epoch", c.epoch},
            {"attributes", c.attributes},
            {"failure_types", types},
            {"ramp_days", c.ramp_days},
            {"min_ramping_attributes", c.min_ramping_attributes},
            {"max_install_age_days", c.max_install_age_days},
            {"daily_drop_rate", c.daily_drop_rate},
            {"prefailure_gap_probability", c.prefailure_gap_probability},
            {"prefailure_gap_min", c.prefailure_gap_min},
            {"prefailure_gap_max", c.prefailure_gap_max},
            {"seed", c.seed}};
}

/// Missing keys keep the values of default_synth_config().
inline SynthConfig synth_config_from_json(const nlohmann::json& j) {
    SynthConfig c = default_synth_config();
    c.n_disks = j.value("n_disks", c.n_disks);
    c.span_days = j.value("span_days", c.span_days);
    c.afr_target = j.value("afr_target", c.afr_target);
    c.model = j.value("model", c.model);
    c.vendor = j.value("vendor", c.vendor);
    c.epoch = j.value("epoch", c.epoch);
    if (j.contains("attributes")) c.attributes = j.at("attributes").get<std::vector<SynthAttribute>>();
    if (j.contains("failure_types")) {
        c.failure_types.clear();
        for (const auto& t : j.at("failure_types")) {
            const auto name = t.at("type").get<std::string>();
            auto ft = parse_failure_type(name);
            if (!ft) throw ConfigError("unknown failure type '" + name + "'");
            c.failure_types.push_back({*ft, t.value("weight", 1.0), t.value("signature", false)});
        }
    }
    c.ramp_days = j.value("ramp_days", c.ramp_days);
    c.min_ramping_attributes = j.value("min_ramping_attributes", c.min_ramping_attributes);
    c.max_install_age_days = j.value("max_install_age_days", c.max_install_age_days);
    c.daily_drop_rate = j.value("daily_drop_rate", c.daily_drop_rate);
    c.prefailure_gap_probability = j.value("prefailure_gap_probability", c.prefailure_gap_probability);
    c.prefailure_gap_min = j.value("prefailure_gap_min", c.prefailure_gap_min);
    c.prefailure_gap_max = j.value("prefailure_gap_max", c.prefailure_gap_max);
    c.seed = j.value("seed", c.seed);
    return c;
}

inline nlohmann::json ground_truth_to_json(const GroundTruth& t) {
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& [serial, f] : t.failures) {
        nlohmann::json row = {{"serial", serial},
                              {"failure_day", f.failure_day},
                              {"failure_type", to_string(f.type)},
                              {"signature", f.signature},
                              {"ramping_attributes", f.ramping_attributes}};
        row["ramp_start"] = f.ramp_start ? nlohmann::json(*f.ramp_start) : nlohmann::json(nullptr);
        failures.push_back(row);
    }
    nlohmann::json missing = nlohmann::json::object();
    for (const auto& [serial, days] : t.missing_days) missing[serial] = days;
    return {{"failures", failures}, {"missing_days", missing}};
}

} // namespace diskprep
