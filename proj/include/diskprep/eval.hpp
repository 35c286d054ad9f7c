#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "core.hpp"

namespace diskprep {

struct RunDescriptor {
    Day train_start = 0;
    Day train_end = 0;  ///< inclusive
    Day test_start = 0;
    Day test_end = 0;   ///< inclusive
    std::uint64_t config_fingerprint = 0;
};

struct TypeBreakdown {
    std::size_t failed = 0;
    std::size_t detected = 0;
    double tpr = 0;
};

struct EvalReport {
    double tpr = 0;
    double fpr = 0;
    double threshold = 0;
    double fpr_budget = 0;
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t failed_disks = 0;
    std::size_t healthy_disks = 0;
    RunDescriptor run;
    std::map<FailureType, TypeBreakdown> per_type;
};

/// Disk-level operating point at an FPR budget.
///
/// The threshold is the smallest value t such that the share of healthy disks
/// with score >= t does not exceed the budget; a disk is flagged when its
/// score >= t.
inline EvalReport tpr_at_fpr(const std::map<std::string, double>& disk_scores, const std::map<std::string, bool>& failed,
                             double fpr_budget) {
    if (!(fpr_budget >= 0 && fpr_budget <= 1)) throw ConfigError("FPR budget must be in [0,1]");
    std::vector<double> healthy, positive;
    for (const auto& [serial, is_failed] : failed) {
        auto it = disk_scores.find(serial);
        if (it == disk_scores.end()) throw DataError("no score for test disk " + serial);
        (is_failed ? positive : healthy).push_back(it->second);
    }
    if (positive.empty()) throw DataError("TPR undefined: no failed disks in the test phase");
    if (healthy.empty()) throw DataError("FPR undefined: no healthy disks in the test phase");

    std::sort(healthy.begin(), healthy.end(), std::greater<>());
    const auto H = healthy.size();
    // Largest number of flagged healthy disks the budget admits (with a small
    // tolerance so that e.g. 0.25 * 4 counts as exactly 1).
    const auto allowed = static_cast<std::size_t>(std::floor(fpr_budget * static_cast<double>(H) + 1e-9));

    double threshold;
    if (allowed >= H) {
        threshold = std::min(healthy.back(), *std::min_element(positive.begin(), positive.end()));
    } else {
        threshold = std::nextafter(healthy[allowed], std::numeric_limits<double>::infinity());
    }
    EvalReport r;
    r.fpr_budget = fpr_budget;
    r.threshold = threshold;
    r.failed_disks = positive.size();
    r.healthy_disks = H;
    for (double s : healthy) r.false_positives += s >= threshold;
    for (double s : positive) r.true_positives += s >= threshold;
    r.fpr = static_cast<double>(r.false_positives) / static_cast<double>(H);
    r.tpr = static_cast<double>(r.true_positives) / static_cast<double>(r.failed_disks);
    return r;
}

/// Adds the per-failure-type TPR rows at the report's threshold.
inline void add_type_breakdown(EvalReport& r, const std::map<std::string, double>& disk_scores,
                               const std::map<std::string, FailureType>& failed_types) {
    r.per_type.clear();
    for (const auto& [serial, type] : failed_types) {
        auto it = disk_scores.find(serial);
        if (it == disk_scores.end()) continue;
        auto& row = r.per_type[type];
        ++row.failed;
        row.detected += it->second >= r.threshold;
    }
    for (auto& [_, row] : r.per_type) row.tpr = static_cast<double>(row.detected) / static_cast<double>(row.failed);
}

struct CurvePoint {
    double fpr = 0;
    double tpr = 0;
    double threshold = 0;
};

/// Every distinct operating point, from the strictest threshold to the loosest.
inline std::vector<CurvePoint> tpr_fpr_curve(const std::map<std::string, double>& disk_scores,
                                             const std::map<std::string, bool>& failed) {
    std::vector<std::pair<double, bool>> s;
    std::size_t P = 0, N = 0;
    for (const auto& [serial, f] : failed) {
        s.emplace_back(disk_scores.at(serial), f);
        (f ? P : N) += 1;
    }
    if (P == 0 || N == 0) throw DataError("curve needs failed and healthy disks");
    std::sort(s.begin(), s.end(), [](auto& a, auto& b) { return a.first > b.first; });
    std::vector<CurvePoint> out;
    out.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < s.size();) {
        const double t = s[i].first;
        for (; i < s.size() && s[i].first == t; ++i) (s[i].second ? tp : fp) += 1;
        out.push_back({static_cast<double>(fp) / static_cast<double>(N), static_cast<double>(tp) / static_cast<double>(P), t});
    }
    return out;
}

/// Train/test windows of 30-day months sliding by one month.
inline std::vector<RunDescriptor> sliding_windows(int span_days, int train_months, int test_months,
                                                  int month_days = 30) {
    if (train_months < 1 || test_months < 1) throw ConfigError("train and test months must be >= 1");
    const int months = span_days / month_days;
    std::vector<RunDescriptor> out;
    for (int start = 0; start + train_months + test_months <= months; ++start) {
        RunDescriptor r;
        r.train_start = start * month_days;
        r.train_end = (start + train_months) * month_days - 1;
        r.test_start = r.train_end + 1;
        r.test_end = r.test_start + test_months * month_days - 1;
        out.push_back(r);
    }
    return out;
}

struct MeanCi {
    double mean = 0;
    double lower = 0;
    double upper = 0;
    std::size_t n = 0;
};

/// Mean with a two-sided Student-t 95% confidence interval.
inline MeanCi mean_ci95(const std::vector<double>& v) {
    MeanCi r;
    r.n = v.size();
    if (v.empty()) return r;
    double s = 0;
    for (double x : v) s += x;
    r.mean = s / static_cast<double>(v.size());
    r.lower = r.upper = r.mean;
    if (v.size() < 2) return r;
    double ss = 0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    const boost::math::students_t dist(static_cast<double>(v.size() - 1));
    const double half = boost::math::quantile(boost::math::complement(dist, 0.025)) * sd /
                        std::sqrt(static_cast<double>(v.size()));
    r.lower = r.mean - half;
    r.upper = r.mean + half;
    return r;
}

} // namespace diskprep
