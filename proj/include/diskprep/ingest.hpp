#pragma once

#include <algorithm>
#include <istream>
#include <map>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "dataset.hpp"

namespace diskprep {

/// Column mapping for SMART CSV input. The defaults match the Backblaze layout
/// (`date,serial_number,model,capacity_bytes,failure,smart_N_raw,smart_N_normalized`).
struct SmartCsvSchema {
    std::string date_column = "date";
    std::string serial_column = "serial_number";
    std::string model_column = "model";
    std::string failure_column = "failure";
    std::string vendor_column;  ///< optional; empty = derive from the model string
    /// Attribute columns. Empty = every column matching `attribute_pattern`.
    std::vector<std::string> attribute_columns;
    std::string attribute_pattern = R"(smart_\d+_raw)";
    /// Day 0 as "YYYY-MM-DD". Empty = earliest date in the file.
    std::string epoch;
};

struct SmartParseResult {
    Dataset dataset;
    std::size_t rows = 0;
    std::size_t skipped_rows = 0;    ///< unparseable date or serial
    std::size_t duplicate_rows = 0;  ///< (serial, day) seen before; last one kept
    std::vector<std::string> ignored_columns;
};

struct TicketParseResult {
    TicketMap tickets;
    std::size_t records = 0;
    std::size_t malformed = 0;
    std::size_t unrecognized_types = 0;  ///< mapped to FailureType::Other
    std::size_t collapsed = 0;           ///< later tickets for an already-seen serial
};

namespace detail {

inline std::string derive_vendor(const std::string& model) {
    auto sp = model.find(' ');
    if (sp != std::string::npos) return model.substr(0, sp);
    if (model.rfind("ST", 0) == 0) return "Seagate";
    if (model.rfind("WDC", 0) == 0) return "WDC";
    if (model.rfind("HGST", 0) == 0 || model.rfind("Hitachi", 0) == 0) return "HGST";
    return {};
}

/// Day field: a plain non-negative integer is a day index; otherwise a date.
inline std::optional<long long> parse_day_field(std::string_view field, long long epoch) {
    if (auto i = csv::parse_int(field)) return *i;
    if (auto d = csv::parse_date(field)) return *d - epoch;
    return std::nullopt;
}

} // namespace detail

/// Parses a SMART CSV stream into per-disk daily series plus Unknown-type
/// tickets derived from the failure flag.
inline SmartParseResult parse_smart_csv(std::istream& in, const SmartCsvSchema& schema = {}) {
    SmartParseResult result;
    std::string line;
    if (!std::getline(in, line)) {
        result.dataset.epoch = schema.epoch.empty() ? "1970-01-01" : schema.epoch;
        return result;
    }
    const auto header = csv::split_line(line);
    auto column = [&](const std::string& name, bool mandatory) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (csv::trim(header[i]) == name) return i;
        }
        if (mandatory) throw ConfigError("missing mandatory column '" + name + "'");
        return std::nullopt;
    };
    const std::size_t c_date = *column(schema.date_column, true);
    const std::size_t c_serial = *column(schema.serial_column, true);
    const std::size_t c_model = *column(schema.model_column, true);
    const std::size_t c_fail = *column(schema.failure_column, true);
    std::optional<std::size_t> c_vendor;
    if (!schema.vendor_column.empty()) c_vendor = column(schema.vendor_column, true);

    std::vector<std::size_t> attr_cols;
    std::vector<std::string> attr_names;
    if (!schema.attribute_columns.empty()) {
        for (const auto& name : schema.attribute_columns) {
            attr_cols.push_back(*column(name, true));
            attr_names.push_back(name);
        }
    } else {
        const std::regex pattern(schema.attribute_pattern);
        for (std::size_t i = 0; i < header.size(); ++i) {
            const std::string name(csv::trim(header[i]));
            if (std::regex_match(name, pattern)) {
                attr_cols.push_back(i);
                attr_names.push_back(name);
            } else if (i != c_date && i != c_serial && i != c_model && i != c_fail &&
                       (!c_vendor || i != *c_vendor)) {
                result.ignored_columns.push_back(name);
            }
        }
    }

    struct Row {
        std::string model;
        std::string vendor;
        bool failed = false;
        std::vector<double> values;
    };
    // serial -> absolute day -> row; later rows overwrite earlier ones.
    std::map<std::string, std::map<long long, Row>> rows;
    std::optional<long long> min_day;

    while (std::getline(in, line)) {
        if (csv::trim(line).empty()) continue;
        ++result.rows;
        auto f = csv::split_line(line);
        if (f.size() < header.size()) f.resize(header.size());
        const auto date = csv::parse_date(f[c_date]);
        const std::string serial(csv::trim(f[c_serial]));
        if (!date || serial.empty()) {
            ++result.skipped_rows;
            continue;
        }
        Row r;
        r.model = std::string(csv::trim(f[c_model]));
        r.vendor = c_vendor ? std::string(csv::trim(f[*c_vendor])) : detail::derive_vendor(r.model);
        const auto flag = csv::parse_double(f[c_fail]);
        r.failed = flag && *flag != 0.0;
        r.values.reserve(attr_cols.size());
        for (std::size_t c : attr_cols) r.values.push_back(csv::parse_double(f[c]).value_or(kMissing));
        auto& per_disk = rows[serial];
        auto [it, inserted] = per_disk.insert_or_assign(*date, std::move(r));
        if (!inserted) ++result.duplicate_rows;
        min_day = min_day ? std::min(*min_day, *date) : *date;
    }

    long long epoch = 0;
    if (!schema.epoch.empty()) {
        auto e = csv::parse_date(schema.epoch);
        if (!e) throw ConfigError("bad epoch date '" + schema.epoch + "'");
        epoch = *e;
    } else if (min_day) {
        epoch = *min_day;
    }
    Dataset& ds = result.dataset;
    ds.epoch = csv::format_date(epoch);

    // Per-model attribute lists exclude attributes that are never reported.
    std::map<std::string, std::vector<bool>> seen;
    for (const auto& [serial, per_disk] : rows) {
        for (const auto& [day, r] : per_disk) {
            auto& s = seen[r.model];
            s.resize(attr_cols.size(), false);
            for (std::size_t a = 0; a < r.values.size(); ++a) {
                if (!is_missing(r.values[a])) s[a] = true;
            }
        }
    }
    std::map<std::string, std::vector<std::size_t>> kept;
    for (const auto& [model, s] : seen) {
        auto& attrs = ds.model_attributes[model];
        for (std::size_t a = 0; a < s.size(); ++a) {
            if (s[a]) {
                attrs.push_back(attr_names[a]);
                kept[model].push_back(a);
            }
        }
    }

    int max_day = -1;
    for (auto& [serial, per_disk] : rows) {
        const std::string& model = per_disk.rbegin()->second.model;
        const auto& keep = kept[model];
        DiskSeries series;
        series.serial = serial;
        series.model = model;
        series.vendor = per_disk.rbegin()->second.vendor;
        series.columns.resize(keep.size());
        for (auto& [abs_day, r] : per_disk) {
            const long long day = abs_day - epoch;
            if (day < 0) {
                ++result.skipped_rows;
                continue;
            }
            series.days.push_back(static_cast<Day>(day));
            for (std::size_t k = 0; k < keep.size(); ++k) {
                // A row of a different model than the disk's final model has
                // no meaningful alignment; treat its values as missing.
                series.columns[k].push_back(r.model == model ? r.values[keep[k]] : kMissing);
            }
            if (r.failed) ds.add_ticket({serial, static_cast<Day>(day), FailureType::Unknown});
        }
        if (series.days.empty()) continue;
        series.first_day = series.days.front();
        series.last_day = series.days.back();
        max_day = std::max(max_day, series.last_day);
        ds.disks.emplace(serial, std::move(series));
    }
    ds.span_days = max_day + 1;
    return result;
}

inline SmartParseResult parse_smart_csv(const std::string& path, const SmartCsvSchema& schema = {}) {
    auto in = csv::open_input(path);
    return parse_smart_csv(in, schema);
}

/// Merges `src` into `dst` (both relative to the same epoch). Attribute lists
/// are unioned per model; on a (serial, day) clash the `src` sample wins;
/// tickets keep the earliest per serial.
inline void merge_datasets(Dataset& dst, const Dataset& src) {
    if (dst.disks.empty() && dst.model_attributes.empty()) {
        dst = src;
        return;
    }
    if (src.epoch != dst.epoch) throw DataError("cannot merge datasets with different epochs");
    std::map<std::string, std::vector<std::size_t>> remap;  // src attr index -> dst attr index
    for (const auto& [model, attrs] : src.model_attributes) {
        auto& dattrs = dst.model_attributes[model];
        auto& r = remap[model];
        for (const auto& a : attrs) {
            auto it = std::find(dattrs.begin(), dattrs.end(), a);
            if (it == dattrs.end()) {
                dattrs.push_back(a);
                it = dattrs.end() - 1;
            }
            r.push_back(static_cast<std::size_t>(it - dattrs.begin()));
        }
    }
    for (const auto& [serial, sd] : src.disks) {
        const auto& r = remap.at(sd.model);
        const std::size_t width = dst.model_attributes.at(sd.model).size();
        std::map<Day, std::vector<double>> samples;
        auto it = dst.disks.find(serial);
        if (it != dst.disks.end()) {
            const DiskSeries& dd = it->second;
            const std::size_t dwidth = dst.model_attributes.at(dd.model).size();
            const bool same_model = dd.model == sd.model;
            for (std::size_t i = 0; i < dd.size(); ++i) {
                std::vector<double> v(same_model ? width : dwidth, kMissing);
                for (std::size_t a = 0; a < dd.columns.size(); ++a) v[a] = dd.columns[a][i];
                samples[dd.days[i]] = std::move(v);
            }
            if (!same_model) samples.clear();  // the latest file decides the model
        }
        for (std::size_t i = 0; i < sd.size(); ++i) {
            std::vector<double> v(width, kMissing);
            for (std::size_t a = 0; a < sd.columns.size(); ++a) v[r[a]] = sd.columns[a][i];
            samples[sd.days[i]] = std::move(v);
        }
        DiskSeries out;
        out.serial = serial;
        out.model = sd.model;
        out.vendor = sd.vendor;
        out.columns.resize(width);
        for (auto& [day, v] : samples) {
            v.resize(width, kMissing);
            out.append(day, v);
        }
        out.first_day = out.days.front();
        out.last_day = out.days.back();
        dst.disks[serial] = std::move(out);
    }
    // Disks whose model gained attributes need the extra columns.
    for (auto& [serial, d] : dst.disks) {
        const std::size_t width = dst.model_attributes.at(d.model).size();
        d.columns.resize(width, std::vector<double>(d.size(), kMissing));
    }
    for (const auto& [serial, t] : src.tickets) dst.add_ticket(t);
    dst.span_days = std::max(dst.span_days, src.span_days);
}

/// Parses several SMART CSV files (e.g. one per day) into one dataset. When
/// the schema has no epoch, the earliest date over all files is used.
inline SmartParseResult parse_smart_csv_files(const std::vector<std::string>& paths, SmartCsvSchema schema = {}) {
    if (schema.epoch.empty()) {
        std::optional<long long> min_day;
        for (const auto& p : paths) {
            auto in = csv::open_input(p);
            std::string line;
            if (!std::getline(in, line)) continue;
            const auto header = csv::split_line(line);
            std::optional<std::size_t> c_date;
            for (std::size_t i = 0; i < header.size(); ++i) {
                if (csv::trim(header[i]) == schema.date_column) c_date = i;
            }
            if (!c_date) throw ConfigError("missing mandatory column '" + schema.date_column + "' in " + p);
            while (std::getline(in, line)) {
                const auto f = csv::split_line(line);
                if (f.size() <= *c_date) continue;
                if (auto d = csv::parse_date(f[*c_date])) min_day = min_day ? std::min(*min_day, *d) : *d;
            }
        }
        schema.epoch = csv::format_date(min_day.value_or(0));
    }
    SmartParseResult total;
    total.dataset.epoch = schema.epoch;
    for (const auto& p : paths) {
        auto r = parse_smart_csv(p, schema);
        total.rows += r.rows;
        total.skipped_rows += r.skipped_rows;
        total.duplicate_rows += r.duplicate_rows;
        for (auto& c : r.ignored_columns) {
            if (std::find(total.ignored_columns.begin(), total.ignored_columns.end(), c) == total.ignored_columns.end())
                total.ignored_columns.push_back(c);
        }
        merge_datasets(total.dataset, r.dataset);
    }
    return total;
}

/// Parses trouble tickets. Accepts CSV with a `serial,date,failure_type`
/// header (a `day` column may replace `date`) or JSON lines with the same keys.
/// `epoch` converts dates to day indices.
inline TicketParseResult parse_tickets(std::istream& in, const std::string& epoch = "1970-01-01") {
    const auto epoch_days = csv::parse_date(epoch);
    if (!epoch_days) throw ConfigError("bad epoch date '" + epoch + "'");

    TicketParseResult result;
    auto accept = [&](std::string_view serial, std::string_view when, std::string_view type) {
        ++result.records;
        const auto day = detail::parse_day_field(when, *epoch_days);
        serial = csv::trim(serial);
        if (serial.empty() || !day || *day < 0) {
            ++result.malformed;
            return;
        }
        auto ft = parse_failure_type(type);
        if (!ft) {
            ++result.unrecognized_types;
            ft = FailureType::Other;
        }
        TicketEvent t{std::string(serial), static_cast<Day>(*day), *ft};
        auto [it, inserted] = result.tickets.emplace(t.serial, t);
        if (!inserted) {
            ++result.collapsed;
            if (t.day < it->second.day) it->second = t;
        }
    };

    std::string line;
    std::optional<std::vector<std::string>> header;
    std::size_t c_serial = 0, c_date = 1, c_type = 2;
    while (std::getline(in, line)) {
        const auto trimmed = csv::trim(line);
        if (trimmed.empty()) continue;
        if (trimmed.front() == '{') {
            auto j = nlohmann::json::parse(trimmed, nullptr, false);
            if (j.is_discarded() || !j.is_object() || !j.contains("serial") ||
                !j.contains("failure_type") || !(j.contains("date") || j.contains("day"))) {
                ++result.records;
                ++result.malformed;
                continue;
            }
            const auto& when = j.contains("date") ? j["date"] : j["day"];
            const std::string when_s = when.is_string() ? when.get<std::string>() : when.dump();
            const std::string serial_s = j["serial"].is_string() ? j["serial"].get<std::string>() : "";
            const std::string type_s =
                j["failure_type"].is_string() ? j["failure_type"].get<std::string>() : "";
            accept(serial_s, when_s, type_s);
            continue;
        }
        auto f = csv::split_line(trimmed);
        if (!header) {
            header = f;
            auto find = [&](std::initializer_list<std::string_view> names) -> std::optional<std::size_t> {
                for (std::size_t i = 0; i < f.size(); ++i) {
                    for (auto n : names) {
                        if (csv::trim(f[i]) == n) return i;
                    }
                }
                return std::nullopt;
            };
            auto s = find({"serial", "serial_number"});
            auto d = find({"date", "day"});
            auto t = find({"failure_type", "type"});
            if (!s || !d || !t) throw ConfigError("ticket header must name serial, date and failure_type");
            c_serial = *s;
            c_date = *d;
            c_type = *t;
            continue;
        }
        if (f.size() <= std::max({c_serial, c_date, c_type})) {
            ++result.records;
            ++result.malformed;
            continue;
        }
        accept(f[c_serial], f[c_date], f[c_type]);
    }
    if (result.records > 0 && result.malformed == result.records)
        throw DataError("all " + std::to_string(result.records) + " ticket records are malformed");
    return result;
}

inline TicketParseResult parse_tickets(const std::string& path, const std::string& epoch = "1970-01-01") {
    auto in = csv::open_input(path);
    return parse_tickets(in, epoch);
}

/// Merges parsed tickets into a dataset (earliest per serial). Tickets for
/// unknown serials are returned rather than added.
inline std::vector<TicketEvent> merge_tickets(Dataset& ds, const TicketMap& tickets) {
    std::vector<TicketEvent> orphans;
    for (const auto& [serial, t] : tickets) {
        if (!ds.disks.count(serial)) {
            orphans.push_back(t);
            continue;
        }
        auto it = ds.tickets.find(serial);
        if (it == ds.tickets.end()) {
            ds.tickets.emplace(serial, t);
        } else if (t.day < it->second.day) {
            it->second = t;
        } else if (t.day == it->second.day && it->second.failure_type == FailureType::Unknown) {
            it->second.failure_type = t.failure_type;
        }
    }
    return orphans;
}

} // namespace diskprep
