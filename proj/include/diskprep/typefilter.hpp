#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "numstats.hpp"

namespace diskprep {

struct AttributeCorrelation {
    std::string attribute;
    double srcc = 0;  ///< 0 when the correlation is undefined
};

namespace detail {

/// Value of attribute `a` on the disk's last observed day <= `until`.
inline std::optional<double> last_value(const DiskSeries& d, std::size_t a, Day until) {
    const auto end = static_cast<std::size_t>(std::upper_bound(d.days.begin(), d.days.end(), until) - d.days.begin());
    for (std::size_t i = end; i-- > 0;) {
        if (!is_missing(d.columns[a][i])) return d.columns[a][i];
    }
    return std::nullopt;
}

inline bool failed_by(const Dataset& ds, const std::string& serial, Day until) {
    const TicketEvent* t = ds.ticket_for(serial);
    return t && t->day <= until;
}

} // namespace detail

/// Ranks the model's attributes by |SRCC| between each disk's last observed
/// value (up to `until`) and its 0/1 failure indicator, and returns the top k.
/// Attributes missing on more than half the disks are skipped.
inline std::vector<AttributeCorrelation> top_correlated_attributes(const Dataset& ds, const std::string& model,
                                                                   std::size_t k = 4,
                                                                   std::optional<Day> until = std::nullopt) {
    if (k < 1) throw ConfigError("k must be >= 1");
    const auto& names = ds.attributes(model);
    const Day limit = until.value_or(std::numeric_limits<Day>::max());
    const auto disks = ds.disks_of(model);
    std::vector<const DiskSeries*> in_scope;
    for (const DiskSeries* d : disks) {
        if (!d->empty() && d->days.front() <= limit) in_scope.push_back(d);
    }
    std::size_t failures = 0;
    for (const DiskSeries* d : in_scope) failures += detail::failed_by(ds, d->serial, limit);
    if (in_scope.size() < 2) throw DataError("attribute ranking needs at least 2 disks of model " + model);
    if (failures == 0) throw DataError("attribute ranking needs at least one failed disk of model " + model);

    std::vector<AttributeCorrelation> ranked;
    std::vector<double> x, y;
    for (std::size_t a = 0; a < names.size(); ++a) {
        x.clear();
        y.clear();
        for (const DiskSeries* d : in_scope) {
            auto v = detail::last_value(*d, a, limit);
            if (!v) continue;
            x.push_back(*v);
            y.push_back(detail::failed_by(ds, d->serial, limit) ? 1.0 : 0.0);
        }
        if (2 * x.size() < in_scope.size()) continue;
        double r = 0;
        try {
            if (x.size() >= 2) r = stats::spearman(x, y);
        } catch (const UndefinedStatistic&) {
            r = 0;
        }
        ranked.push_back({names[a], r});
    }
    // Attribute id is the position in the model's attribute list.
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& p, const auto& q) { return std::abs(p.srcc) > std::abs(q.srcc); });
    if (ranked.size() > k) ranked.resize(k);
    return ranked;
}

struct PredictabilityTable {
    std::vector<std::string> attributes;
    std::map<FailureType, std::vector<bool>> ticks;  ///< per type, parallel to attributes
    std::map<FailureType, std::size_t> failed_disks;
    std::set<FailureType> predictable_types;

    std::size_t tick_count(FailureType t) const {
        auto it = ticks.find(t);
        return it == ticks.end() ? 0 : static_cast<std::size_t>(std::count(it->second.begin(), it->second.end(), true));
    }
};

struct PredictabilityOptions {
    double alpha = 0.05;
    std::size_t healthy_cap = 20000;
    std::size_t min_ticks = 2;
    std::uint64_t seed = 1;
    std::optional<Day> until;  ///< only tickets and samples up to this day
};

/// KS test per (failure type, attribute) between last observed values of the
/// type's failed disks and of healthy disks. A type with at least
/// `min_ticks` rejections is predictable.
inline PredictabilityTable predictability_table(const Dataset& ds, const std::string& model,
                                                const std::vector<std::string>& attrs,
                                                const PredictabilityOptions& opt = {}) {
    if (attrs.empty()) throw ConfigError("predictability_table: no attributes");
    const Day limit = opt.until.value_or(std::numeric_limits<Day>::max());
    std::vector<std::size_t> idx;
    for (const auto& a : attrs) idx.push_back(ds.attribute_index(model, a));

    std::vector<const DiskSeries*> healthy;
    std::map<FailureType, std::vector<const DiskSeries*>> failed;
    for (const DiskSeries* d : ds.disks_of(model)) {
        if (d->empty() || d->days.front() > limit) continue;
        const TicketEvent* t = ds.ticket_for(d->serial);
        if (t && t->day <= limit) failed[t->failure_type].push_back(d);
        else healthy.push_back(d);
    }
    if (healthy.empty()) throw DataError("predictability_table: no healthy disks of model " + model);
    if (healthy.size() > opt.healthy_cap) {
        // disks_of is ordered by serial, so the sample depends only on the seed.
        std::vector<const DiskSeries*> sample;
        std::mt19937_64 rng(opt.seed);
        std::sample(healthy.begin(), healthy.end(), std::back_inserter(sample), opt.healthy_cap, rng);
        healthy = std::move(sample);
    }

    PredictabilityTable table;
    table.attributes = attrs;
    std::vector<double> hv, fv;
    for (const auto& [type, disks] : failed) {
        auto& row = table.ticks[type];
        row.assign(attrs.size(), false);
        table.failed_disks[type] = disks.size();
        for (std::size_t k = 0; k < attrs.size(); ++k) {
            hv.clear();
            fv.clear();
            for (const DiskSeries* d : healthy) {
                if (auto v = detail::last_value(*d, idx[k], limit)) hv.push_back(*v);
            }
            for (const DiskSeries* d : disks) {
                if (auto v = detail::last_value(*d, idx[k], limit)) fv.push_back(*v);
            }
            if (hv.empty() || fv.empty()) continue;
            row[k] = stats::ks_two_sample(fv, hv, opt.alpha).reject;
        }
        if (table.tick_count(type) >= opt.min_ticks) table.predictable_types.insert(type);
    }
    return table;
}

/// Tickets of predictable types. With no predictable type at all, every
/// ticket passes and a warning is emitted.
inline TicketMap filter_positives(const TicketMap& tickets, const PredictabilityTable& table) {
    if (table.predictable_types.empty()) {
        warn("no predictable failure type; failure-type filtering keeps all tickets");
        return tickets;
    }
    TicketMap out;
    for (const auto& [serial, t] : tickets) {
        if (table.predictable_types.count(t.failure_type)) out.emplace(serial, t);
    }
    return out;
}

} // namespace diskprep
