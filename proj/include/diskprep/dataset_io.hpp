#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "dataset.hpp"

// Canonical on-disk dataset layout (format tag "diskprep-dataset", version 1):
//
//   <dir>/meta.json          {"format", "version", "epoch", "span_days",
//                             "models": [{"name", "file", "attributes": [...]}]}
//   <dir>/disks/<file>.csv   serial,vendor,first_day,last_day,day,<attributes...>
//                            one row per sample; empty cell = attribute missing;
//                            a disk without samples is one row with an empty day
//   <dir>/tickets.csv        serial,day,failure_type
//
// Rows are sorted by (serial, day), so equal datasets serialize byte-identically.

namespace diskprep {

inline constexpr const char* kDatasetFormat = "diskprep-dataset";
inline constexpr int kDatasetVersion = 1;

namespace detail {

inline std::string model_file_name(const std::string& model, std::map<std::string, int>& used) {
    std::string base;
    for (char c : model) base.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    if (base.empty()) base = "model";
    const int n = used[base]++;
    return n == 0 ? base + ".csv" : base + "_" + std::to_string(n) + ".csv";
}

} // namespace detail

inline void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "disks");

    nlohmann::json meta;
    meta["format"] = kDatasetFormat;
    meta["version"] = kDatasetVersion;
    meta["epoch"] = ds.epoch;
    meta["span_days"] = ds.span_days;
    meta["models"] = nlohmann::json::array();

    std::map<std::string, int> used;
    for (const auto& [model, attrs] : ds.model_attributes) {
        const std::string file = detail::model_file_name(model, used);
        meta["models"].push_back({{"name", model}, {"file", file}, {"attributes", attrs}});

        auto out = csv::open_output((dir / "disks" / file).string());
        std::vector<std::string> header{"serial", "vendor", "first_day", "last_day", "day"};
        header.insert(header.end(), attrs.begin(), attrs.end());
        csv::write_row(out, header);
        for (const auto& [serial, d] : ds.disks) {
            if (d.model != model) continue;
            const std::vector<std::string> ident{d.serial, d.vendor, std::to_string(d.first_day),
                                                 std::to_string(d.last_day)};
            if (d.empty()) {
                auto row = ident;
                row.emplace_back();
                row.resize(header.size());
                csv::write_row(out, row);
                continue;
            }
            for (std::size_t i = 0; i < d.size(); ++i) {
                auto row = ident;
                row.push_back(std::to_string(d.days[i]));
                for (std::size_t a = 0; a < attrs.size(); ++a) {
                    row.push_back(a < d.columns.size() ? csv::format_double(d.columns[a][i]) : "");
                }
                csv::write_row(out, row);
            }
        }
    }

    auto tout = csv::open_output((dir / "tickets.csv").string());
    csv::write_row(tout, {"serial", "day", "failure_type"});
    for (const auto& [serial, t] : ds.tickets) {
        csv::write_row(tout, {t.serial, std::to_string(t.day), std::string(to_string(t.failure_type))});
    }

    auto mout = csv::open_output((dir / "meta.json").string());
    mout << meta.dump(2) << '\n';
}

inline Dataset read_dataset(const std::filesystem::path& dir) {
    std::ifstream min(dir / "meta.json");
    if (!min) throw Error("no dataset at " + dir.string() + " (meta.json missing)");
    nlohmann::json meta;
    try {
        min >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("corrupt meta.json: " + std::string(e.what()));
    }
    if (meta.value("format", "") != kDatasetFormat)
        throw DataError("not a " + std::string(kDatasetFormat) + " directory: " + dir.string());
    if (meta.value("version", 0) != kDatasetVersion)
        throw DataError("unsupported dataset version " + std::to_string(meta.value("version", 0)));

    Dataset ds;
    ds.epoch = meta.at("epoch").get<std::string>();
    ds.span_days = meta.at("span_days").get<int>();
    for (const auto& m : meta.at("models")) {
        const auto model = m.at("name").get<std::string>();
        const auto attrs = m.at("attributes").get<std::vector<std::string>>();
        ds.model_attributes[model] = attrs;

        auto in = csv::open_input((dir / "disks" / m.at("file").get<std::string>()).string());
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto f = csv::split_line(line);
            if (f.size() < 5 + attrs.size()) throw DataError("short row in " + model + " disk file");
            auto [it, inserted] = ds.disks.try_emplace(f[0]);
            DiskSeries& d = it->second;
            if (inserted) {
                d.serial = f[0];
                d.model = model;
                d.vendor = f[1];
                d.first_day = static_cast<Day>(csv::parse_int(f[2]).value_or(0));
                d.last_day = static_cast<Day>(csv::parse_int(f[3]).value_or(-1));
                d.columns.resize(attrs.size());
            }
            const auto day = csv::parse_int(f[4]);
            if (!day) continue;
            d.days.push_back(static_cast<Day>(*day));
            for (std::size_t a = 0; a < attrs.size(); ++a) {
                d.columns[a].push_back(csv::parse_double(f[5 + a]).value_or(kMissing));
            }
        }
    }
    for (const auto& [_, d] : ds.disks) d.validate();

    auto tin = csv::open_input((dir / "tickets.csv").string());
    std::string line;
    std::getline(tin, line);
    while (std::getline(tin, line)) {
        if (line.empty()) continue;
        auto f = csv::split_line(line);
        if (f.size() < 3) throw DataError("short ticket row");
        const auto day = csv::parse_int(f[1]);
        const auto type = parse_failure_type(f[2]);
        if (!day || !type) throw DataError("bad ticket row: " + line);
        ds.tickets[f[0]] = TicketEvent{f[0], static_cast<Day>(*day), *type};
    }
    return ds;
}

} // namespace diskprep
