#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"

namespace diskprep {

/// One day of SMART telemetry. Attribute values are aligned with the model's
/// attribute list; std::nullopt marks an attribute that was not reported.
struct SmartSample {
    Day day = 0;
    std::vector<std::optional<double>> attributes;
};

/// One disk's daily series, stored column-wise.
///
/// `days` is strictly ascending. `columns[a][i]` is the raw value of attribute
/// `a` on `days[i]` (NaN when the attribute was not reported that day). A day
/// with no sample at all is simply absent from `days`.
///
/// `first_day`/`last_day` bound the expected observation span. Ingestion sets
/// them to the first and last sample; the pipeline stretches `last_day` of a
/// failed disk to its ticket day so filling can cover the pre-failure gap.
struct DiskSeries {
    std::string serial;
    std::string model;
    std::string vendor;
    Day first_day = 0;
    Day last_day = -1;
    std::vector<Day> days;
    std::vector<std::vector<double>> columns;

    std::size_t size() const noexcept { return days.size(); }
    bool empty() const noexcept { return days.empty(); }
    std::size_t attribute_count() const noexcept { return columns.size(); }

    /// Position of `day` in `days`, if present.
    std::optional<std::size_t> index_of(Day day) const {
        auto it = std::lower_bound(days.begin(), days.end(), day);
        if (it == days.end() || *it != day) return std::nullopt;
        return static_cast<std::size_t>(it - days.begin());
    }

    SmartSample sample(std::size_t i) const {
        SmartSample s;
        s.day = days.at(i);
        s.attributes.reserve(columns.size());
        for (const auto& col : columns) {
            const double v = col[i];
            s.attributes.push_back(is_missing(v) ? std::nullopt : std::optional<double>(v));
        }
        return s;
    }

    /// Number of days in [first_day, last_day] without a sample.
    std::size_t missing_days() const noexcept {
        if (last_day < first_day) return 0;
        return static_cast<std::size_t>(last_day - first_day + 1) - days.size();
    }

    void append(Day day, const std::vector<double>& values) {
        if (columns.empty()) columns.resize(values.size());
        if (values.size() != columns.size())
            throw DataError("sample width does not match series " + serial);
        days.push_back(day);
        for (std::size_t a = 0; a < values.size(); ++a) columns[a].push_back(values[a]);
    }

    /// Drops samples with day > `day` and clamps last_day.
    void truncate_after(Day day) {
        auto keep = static_cast<std::size_t>(
            std::upper_bound(days.begin(), days.end(), day) - days.begin());
        days.resize(keep);
        for (auto& col : columns) col.resize(keep);
        last_day = std::min(last_day, day);
    }

    /// Throws DataError when an invariant is broken.
    void validate() const {
        for (const auto& col : columns) {
            if (col.size() != days.size())
                throw DataError("column length mismatch in series " + serial);
        }
        for (std::size_t i = 1; i < days.size(); ++i) {
            if (days[i] <= days[i - 1])
                throw DataError("days not strictly ascending in series " + serial);
        }
        if (!days.empty() && (days.front() < first_day || days.back() > last_day))
            throw DataError("sample outside [first_day, last_day] in series " + serial);
        if (!days.empty() && days.front() < 0)
            throw DataError("negative day in series " + serial);
    }

    bool operator==(const DiskSeries& o) const {
        if (serial != o.serial || model != o.model || vendor != o.vendor ||
            first_day != o.first_day || last_day != o.last_day || days != o.days ||
            columns.size() != o.columns.size())
            return false;
        for (std::size_t a = 0; a < columns.size(); ++a) {
            const auto& x = columns[a];
            const auto& y = o.columns[a];
            if (x.size() != y.size()) return false;
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (is_missing(x[i]) != is_missing(y[i])) return false;
                if (!is_missing(x[i]) && x[i] != y[i]) return false;
            }
        }
        return true;
    }
};

struct TicketEvent {
    std::string serial;
    Day day = 0;
    FailureType failure_type = FailureType::Unknown;

    bool operator==(const TicketEvent&) const = default;
};

using TicketMap = std::map<std::string, TicketEvent>;

/// Parsed fleet: per-disk series, at most one ticket per serial, and the
/// attribute list of each disk model.
struct Dataset {
    std::map<std::string, DiskSeries> disks;
    TicketMap tickets;
    std::map<std::string, std::vector<std::string>> model_attributes;
    std::string epoch = "1970-01-01";
    int span_days = 0;

    const std::vector<std::string>& attributes(const std::string& model) const {
        auto it = model_attributes.find(model);
        if (it == model_attributes.end()) throw DataError("unknown disk model: " + model);
        return it->second;
    }

    std::size_t attribute_index(const std::string& model, const std::string& attr) const {
        const auto& attrs = attributes(model);
        auto it = std::find(attrs.begin(), attrs.end(), attr);
        if (it == attrs.end()) throw DataError("model " + model + " has no attribute " + attr);
        return static_cast<std::size_t>(it - attrs.begin());
    }

    std::vector<std::string> models() const {
        std::vector<std::string> out;
        for (const auto& [m, _] : model_attributes) out.push_back(m);
        return out;
    }

    std::vector<const DiskSeries*> disks_of(const std::string& model) const {
        std::vector<const DiskSeries*> out;
        for (const auto& [_, d] : disks) {
            if (d.model == model) out.push_back(&d);
        }
        return out;
    }

    const TicketEvent* ticket_for(const std::string& serial) const {
        auto it = tickets.find(serial);
        return it == tickets.end() ? nullptr : &it->second;
    }

    /// Adds a ticket, keeping the earliest one per serial.
    void add_ticket(const TicketEvent& t) {
        auto [it, inserted] = tickets.emplace(t.serial, t);
        if (!inserted && t.day < it->second.day) it->second = t;
    }

    /// Copy with only the disks of `model` (and their tickets).
    Dataset restricted_to(const std::string& model) const {
        Dataset out;
        out.epoch = epoch;
        out.span_days = span_days;
        out.model_attributes[model] = attributes(model);
        for (const auto& [s, d] : disks) {
            if (d.model != model) continue;
            out.disks.emplace(s, d);
            if (auto* t = ticket_for(s)) out.tickets.emplace(s, *t);
        }
        return out;
    }

    bool operator==(const Dataset&) const = default;
};

} // namespace diskprep
