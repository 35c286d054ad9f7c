#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dataset.hpp"

namespace diskprep {

/// Annualized failure rate from raw counts.
inline double annualized_failure_rate(std::size_t failed, std::size_t total, int span_days) {
    if (total == 0) throw DataError("AFR undefined: no disks");
    if (span_days <= 0) throw DataError("AFR undefined: non-positive span");
    return static_cast<double>(failed) / static_cast<double>(total) * (365.0 / span_days);
}

/// AFR of one model: failed/total scaled from the dataset span to one year.
inline double afr(const Dataset& ds, const std::string& model) {
    std::size_t total = 0, failed = 0;
    for (const auto& [serial, d] : ds.disks) {
        if (d.model != model) continue;
        ++total;
        if (ds.ticket_for(serial)) ++failed;
    }
    if (total == 0) throw DataError("AFR undefined: no disks of model " + model);
    return annualized_failure_rate(failed, total, ds.span_days);
}

struct MissingStats {
    double dmr_failed = 0;
    double dmr_healthy = 0;
    double pct_gap_ge_10 = 0;
    double pct_gap_ge_25 = 0;
    std::map<int, std::size_t> gap_histogram;  ///< gap days -> data-missing failed disks
    std::size_t failed_disks = 0;
    std::size_t healthy_disks = 0;             ///< healthy disks present on day 0
    std::size_t data_missing_failed = 0;
    bool failed_cohort_empty = true;
    bool healthy_cohort_empty = true;
};

/// Expected and missing days of a failed disk: every day from its first
/// appearance through the ticket day counts as expected.
struct FailedDiskCoverage {
    std::size_t expected = 0;
    std::size_t missing = 0;
    int gap = 0;  ///< ticket day - last sample day (0 when the ticket day has a sample)
};

inline FailedDiskCoverage failed_disk_coverage(const DiskSeries& d, Day ticket_day) {
    FailedDiskCoverage c;
    if (d.empty() || ticket_day < d.days.front()) return c;
    const Day start = d.days.front();
    c.expected = static_cast<std::size_t>(ticket_day - start + 1);
    const auto observed = static_cast<std::size_t>(
        std::upper_bound(d.days.begin(), d.days.end(), ticket_day) - d.days.begin());
    c.missing = c.expected - observed;
    const Day last = d.days[observed - 1];
    c.gap = ticket_day - last;
    return c;
}

/// Data-missing ratios and pre-ticket missing-gap statistics for one model.
///
/// A day is missing when no sample exists for it (all attributes absent).
/// Healthy-disk DMR only covers disks present on day 0, with the full span as
/// the expectation.
inline MissingStats missing_stats(const Dataset& ds, const std::string& model) {
    ds.attributes(model);  // throws for an unknown model
    MissingStats s;
    std::size_t f_expected = 0, f_missing = 0, h_expected = 0, h_missing = 0;
    for (const auto& [serial, d] : ds.disks) {
        if (d.model != model || d.empty()) continue;
        if (const TicketEvent* t = ds.ticket_for(serial)) {
            const auto c = failed_disk_coverage(d, t->day);
            if (c.expected == 0) continue;
            ++s.failed_disks;
            f_expected += c.expected;
            f_missing += c.missing;
            if (c.gap > 0) {
                ++s.data_missing_failed;
                ++s.gap_histogram[c.gap];
            }
        } else if (d.days.front() == 0) {
            ++s.healthy_disks;
            const auto expected = static_cast<std::size_t>(std::max(ds.span_days, 0));
            const auto observed = static_cast<std::size_t>(
                std::lower_bound(d.days.begin(), d.days.end(), ds.span_days) - d.days.begin());
            h_expected += expected;
            h_missing += expected - std::min(observed, expected);
        }
    }
    s.failed_cohort_empty = f_expected == 0;
    s.healthy_cohort_empty = h_expected == 0;
    if (f_expected) s.dmr_failed = static_cast<double>(f_missing) / static_cast<double>(f_expected);
    if (h_expected) s.dmr_healthy = static_cast<double>(h_missing) / static_cast<double>(h_expected);
    if (s.data_missing_failed) {
        std::size_t ge10 = 0, ge25 = 0;
        for (const auto& [gap, n] : s.gap_histogram) {
            if (gap >= 10) ge10 += n;
            if (gap >= 25) ge25 += n;
        }
        s.pct_gap_ge_10 = static_cast<double>(ge10) / static_cast<double>(s.data_missing_failed);
        s.pct_gap_ge_25 = static_cast<double>(ge25) / static_cast<double>(s.data_missing_failed);
    }
    return s;
}

/// (gap, P[gap >= value]) points over data-missing failed disks.
inline std::vector<std::pair<int, double>> gap_ccdf(const MissingStats& s) {
    std::vector<std::pair<int, double>> out;
    if (s.data_missing_failed == 0) return out;
    std::size_t remaining = s.data_missing_failed;
    for (const auto& [gap, n] : s.gap_histogram) {
        out.emplace_back(gap, static_cast<double>(remaining) / static_cast<double>(s.data_missing_failed));
        remaining -= n;
    }
    return out;
}

struct ModelSummary {
    std::string model;
    std::string vendor;
    std::size_t disks = 0;
    std::size_t failed = 0;
    double afr = 0;
};

inline std::vector<ModelSummary> summarize_models(const Dataset& ds) {
    std::vector<ModelSummary> out;
    for (const auto& model : ds.models()) {
        ModelSummary m;
        m.model = model;
        for (const auto& [serial, d] : ds.disks) {
            if (d.model != model) continue;
            if (m.vendor.empty()) m.vendor = d.vendor;
            ++m.disks;
            if (ds.ticket_for(serial)) ++m.failed;
        }
        if (m.disks == 0) continue;
        m.afr = annualized_failure_rate(m.failed, m.disks, std::max(ds.span_days, 1));
        out.push_back(std::move(m));
    }
    return out;
}

} // namespace diskprep
