#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "changepoint.hpp"
#include "dataset.hpp"
#include "numstats.hpp"

namespace diskprep {

struct PrefailurePeriod {
    int n_days = 0;
    std::map<std::string, int> per_attribute_p75;
    std::map<std::string, std::size_t> per_attribute_detections;
    std::size_t failed_disks = 0;
    int detection_window = 60;
    double z_threshold = 2.5;
};

struct BacktrackOptions {
    int detection_window = 60;
    double z_threshold = 2.5;
    double percentile = 0.75;
};

/// Days between the earliest significant change and the failure day, using
/// the `window` days of `attr` that end on the failure day. None when no
/// change is significant.
inline std::optional<int> change_to_failure_days(const DiskSeries& d, std::size_t attr, Day failure_day,
                                                 const BacktrackOptions& opt = {}) {
    const Day from = failure_day - opt.detection_window + 1;
    auto lo = std::lower_bound(d.days.begin(), d.days.end(), from);
    auto hi = std::upper_bound(d.days.begin(), d.days.end(), failure_day);
    std::vector<double> values;
    std::vector<Day> days;
    for (auto it = lo; it != hi; ++it) {
        const double v = d.columns[attr][static_cast<std::size_t>(it - d.days.begin())];
        if (is_missing(v)) continue;
        values.push_back(v);
        days.push_back(*it);
    }
    if (values.size() < 2) return std::nullopt;
    const auto probs = change_probabilities(values);
    const auto idx = significant_change_day(probs, opt.z_threshold);
    if (!idx) return std::nullopt;
    return failure_day - days[*idx];
}

/// Pre-failure period of one model: per attribute, the nearest-rank 75th
/// percentile of change-to-failure days over failed disks with a detected
/// change; the period is the maximum over attributes.
///
/// `failures` should hold only the positives kept after failure-type
/// filtering, and `dataset` should already be filled.
inline PrefailurePeriod prefailure_period(const Dataset& dataset, const std::string& model,
                                          const TicketMap& failures, const std::vector<std::string>& attrs,
                                          const BacktrackOptions& opt = {}) {
    if (opt.detection_window < 2) throw ConfigError("detection window must be >= 2 days");
    if (attrs.empty()) throw ConfigError("prefailure_period: no attributes");
    PrefailurePeriod out;
    out.detection_window = opt.detection_window;
    out.z_threshold = opt.z_threshold;

    std::vector<std::size_t> attr_idx;
    for (const auto& a : attrs) attr_idx.push_back(dataset.attribute_index(model, a));

    std::vector<std::vector<double>> gaps(attrs.size());
    for (const auto& [serial, t] : failures) {
        auto it = dataset.disks.find(serial);
        if (it == dataset.disks.end() || it->second.model != model) continue;
        ++out.failed_disks;
        for (std::size_t k = 0; k < attrs.size(); ++k) {
            if (auto g = change_to_failure_days(it->second, attr_idx[k], t.day, opt))
                gaps[k].push_back(*g);
        }
    }
    bool any = false;
    for (std::size_t k = 0; k < attrs.size(); ++k) {
        out.per_attribute_detections[attrs[k]] = gaps[k].size();
        if (gaps[k].empty()) continue;
        const int p = static_cast<int>(stats::percentile(gaps[k], opt.percentile));
        out.per_attribute_p75[attrs[k]] = p;
        out.n_days = any ? std::max(out.n_days, p) : p;
        any = true;
    }
    if (!any)
        throw DataError("no failed disk of model " + model +
                        " shows a significant change; choose the backtracking window manually (--n-days)");
    return out;
}

enum class Label { Positive, Negative, Dropped, Excluded };

inline std::string_view to_string(Label l) noexcept {
    switch (l) {
    case Label::Positive: return "positive";
    case Label::Negative: return "negative";
    case Label::Dropped: return "dropped";
    case Label::Excluded: return "excluded";
    }
    return "excluded";
}

using DaySpan = std::pair<Day, Day>;  ///< inclusive

/// Training-phase labels of one disk. Days outside both spans (and not after
/// `last_training_day`) are negative.
struct DiskLabelPlan {
    std::optional<DaySpan> positive;
    std::optional<DaySpan> dropped;
    bool failed = false;
    bool excluded = false;  ///< failed with a filtered-out type: not used for training
    Day last_training_day = -1;
};

struct LabelPlan {
    int n = 0;
    bool observation_window = false;
    Day train_end_day = 0;
    std::map<std::string, DiskLabelPlan> disks;

    /// Label of a training-phase sample. Days after the disk's last training
    /// day (or unknown disks) are Excluded.
    Label label(const std::string& serial, Day day) const {
        auto it = disks.find(serial);
        if (it == disks.end()) return Label::Excluded;
        const DiskLabelPlan& p = it->second;
        if (p.excluded || day > p.last_training_day) return Label::Excluded;
        auto in = [day](const std::optional<DaySpan>& s) { return s && day >= s->first && day <= s->second; };
        if (in(p.positive)) return Label::Positive;
        if (in(p.dropped)) return Label::Dropped;
        return Label::Negative;
    }
};

/// Backtracking labels. A failed disk (ticket in `failures`, failure day
/// T <= train_end_day) gets positives on [T - n, T]; with the observation
/// window, a healthy disk drops its last n samples up to train_end_day.
/// Disks that failed by train_end_day with a ticket absent from `failures`
/// are excluded.
inline LabelPlan label_samples(const Dataset& dataset, const TicketMap& failures, int n, bool observation_window,
                               Day train_end_day) {
    if (n < 0) throw ConfigError("backtracking window must be >= 0");
    LabelPlan plan;
    plan.n = n;
    plan.observation_window = observation_window;
    plan.train_end_day = train_end_day;
    for (const auto& [serial, d] : dataset.disks) {
        DiskLabelPlan p;
        auto upto = static_cast<std::size_t>(
            std::upper_bound(d.days.begin(), d.days.end(), train_end_day) - d.days.begin());
        if (upto == 0) continue;  // no training-phase samples
        p.last_training_day = d.days[upto - 1];

        const TicketEvent* any_ticket = dataset.ticket_for(serial);
        auto f = failures.find(serial);
        if (f != failures.end() && f->second.day <= train_end_day) {
            p.failed = true;
            const Day t = f->second.day;
            p.positive = DaySpan{std::max(d.first_day, t - n), t};
            p.last_training_day = std::min(p.last_training_day, t);
        } else if (any_ticket && any_ticket->day <= train_end_day) {
            p.failed = true;
            p.excluded = true;
        } else if (observation_window && n > 0) {
            const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(n), upto);
            p.dropped = DaySpan{d.days[upto - k], d.days[upto - 1]};
        }
        plan.disks.emplace(serial, p);
    }
    return plan;
}

} // namespace diskprep
