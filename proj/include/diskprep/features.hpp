#pragma once

#include <array>
#include <cstdint>
#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "backtrack.hpp"
#include "csv.hpp"
#include "dataset.hpp"
#include "numstats.hpp"

namespace diskprep {

inline constexpr std::array<std::size_t, 2> kFeatureWindows = {7, 14};
inline constexpr std::array<const char*, 6> kWindowStatistics = {"mean", "std", "median", "ewma", "sum", "delta"};
inline constexpr std::size_t kFeaturesPerAttribute =
    2 + 2 * kFeatureWindows.size() * kWindowStatistics.size();  // 26

/// Column names: per attribute a block of 26 columns, namely the value, its
/// day-over-day difference, then the six window statistics of each of the two
/// for every window size.
inline std::vector<std::string> feature_names(const std::vector<std::string>& basic_attrs) {
    if (basic_attrs.empty()) throw ConfigError("no basic attributes for feature construction");
    std::vector<std::string> names;
    names.reserve(basic_attrs.size() * kFeaturesPerAttribute);
    for (const auto& a : basic_attrs) {
        names.push_back(a);
        names.push_back(a + "_diff");
        for (const std::string& src : {a, a + "_diff"}) {
            for (std::size_t w : kFeatureWindows) {
                for (const char* stat : kWindowStatistics) names.push_back(src + "_" + stat + "_" + std::to_string(w));
            }
        }
    }
    return names;
}

inline std::uint64_t schema_hash(const std::vector<std::string>& column_names) {
    Fnv1a h;
    for (const auto& c : column_names) h.update(c).update(std::string_view("\x1f", 1));
    return h.digest();
}

/// Row-major feature matrix keyed by (serial, day).
struct FeatureMatrix {
    std::vector<std::string> column_names;
    std::vector<std::string> serials;
    std::vector<Day> days;
    std::vector<double> values;
    std::vector<Label> labels;  ///< empty for unlabeled matrices

    std::size_t rows() const noexcept { return days.size(); }
    std::size_t cols() const noexcept { return column_names.size(); }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * cols(), cols()}; }
    std::uint64_t schema() const { return schema_hash(column_names); }

    void append(const std::string& serial, Day day, std::span<const double> row_values) {
        if (row_values.size() != cols()) throw DataError("feature row width mismatch");
        serials.push_back(serial);
        days.push_back(day);
        values.insert(values.end(), row_values.begin(), row_values.end());
    }
};

namespace detail {

inline void window_statistics(std::span<const double> w, std::size_t window, double* out) {
    out[0] = stats::mean(w);
    out[1] = stats::stddev(w);
    out[2] = stats::median(w);
    out[3] = stats::ewma(w, window);
    double s = 0;
    for (double v : w) s += v;
    out[4] = s;
    out[5] = w.back() - w.front();
}

} // namespace detail

/// Computes feature rows of a gap-free series at the given positions (indices
/// into `series.days`). Windows are trailing and shrink to the available
/// history near the start of the series.
class FeatureBuilder {
public:
    FeatureBuilder(const DiskSeries& series, std::vector<std::size_t> attr_indices)
        : series_(series), attrs_(std::move(attr_indices)) {
        if (attrs_.empty()) throw ConfigError("no basic attributes for feature construction");
        const std::size_t n = series.size();
        if (n > 0 && static_cast<std::size_t>(series.days.back() - series.days.front()) + 1 != n)
            throw DataError("series " + series.serial + " has missing days; fill before featurizing");
        diffs_.resize(attrs_.size());
        for (std::size_t k = 0; k < attrs_.size(); ++k) {
            const auto& col = series.columns.at(attrs_[k]);
            auto& d = diffs_[k];
            d.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                if (is_missing(col[i]))
                    throw DataError("series " + series.serial + " has missing values; fill before featurizing");
                d[i] = i == 0 ? 0.0 : col[i] - col[i - 1];
            }
        }
    }

    std::size_t width() const noexcept { return attrs_.size() * kFeaturesPerAttribute; }

    void row(std::size_t pos, std::span<double> out) const {
        double* p = out.data();
        for (std::size_t k = 0; k < attrs_.size(); ++k) {
            const auto& col = series_.columns[attrs_[k]];
            *p++ = col[pos];
            *p++ = diffs_[k][pos];
            for (const std::vector<double>* src : {&col, &diffs_[k]}) {
                for (std::size_t w : kFeatureWindows) {
                    const std::size_t start = pos + 1 >= w ? pos + 1 - w : 0;
                    detail::window_statistics(std::span<const double>(src->data() + start, pos + 1 - start), w, p);
                    p += kWindowStatistics.size();
                }
            }
        }
    }

    std::vector<double> row(std::size_t pos) const {
        std::vector<double> out(width());
        row(pos, out);
        return out;
    }

private:
    const DiskSeries& series_;
    std::vector<std::size_t> attrs_;
    std::vector<std::vector<double>> diffs_;
};

/// Feature rows for every day of a filled series.
inline FeatureMatrix build_features(const DiskSeries& series, const std::vector<std::string>& attr_names,
                                    const std::vector<std::size_t>& attr_indices) {
    FeatureMatrix m;
    m.column_names = feature_names(attr_names);
    FeatureBuilder b(series, attr_indices);
    std::vector<double> buf(b.width());
    for (std::size_t i = 0; i < series.size(); ++i) {
        b.row(i, buf);
        m.append(series.serial, series.days[i], buf);
    }
    return m;
}

/// Labeled rows of the training phase (dropped and excluded samples omitted),
/// in (serial, day) order.
inline FeatureMatrix featurize_dataset(const Dataset& ds, const std::string& model,
                                       const std::vector<std::string>& basic_attrs, const LabelPlan* plan = nullptr) {
    FeatureMatrix m;
    m.column_names = feature_names(basic_attrs);
    std::vector<std::size_t> idx;
    for (const auto& a : basic_attrs) idx.push_back(ds.attribute_index(model, a));
    std::vector<double> buf(m.cols());
    for (const auto& [serial, d] : ds.disks) {
        if (d.model != model || d.empty()) continue;
        FeatureBuilder b(d, idx);
        for (std::size_t i = 0; i < d.size(); ++i) {
            Label l = Label::Negative;
            if (plan) {
                l = plan->label(serial, d.days[i]);
                if (l == Label::Dropped || l == Label::Excluded) continue;
            }
            b.row(i, buf);
            m.append(serial, d.days[i], buf);
            if (plan) m.labels.push_back(l);
        }
    }
    return m;
}

namespace detail {

template <class T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class T>
T get(std::istream& in) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError("truncated binary file");
    return v;
}
inline void put_string(std::ostream& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline std::string get_string(std::istream& in) {
    const auto len = get<std::uint32_t>(in);
    std::string s(len, '\0');
    if (!in.read(s.data(), len)) throw DataError("truncated binary file");
    return s;
}

} // namespace detail

inline constexpr char kFeatureMagic[8] = {'D', 'P', 'F', 'E', 'A', 'T', '\0', '\0'};
inline constexpr std::uint32_t kFeatureVersion = 1;

/// Binary columnar layout: header (magic, version, schema hash, column names,
/// row count, labeled flag), then the serial, day and label columns, then
/// each feature column as a contiguous block of doubles.
inline void write_feature_binary(const FeatureMatrix& m, const std::string& path) {
    auto out = csv::open_output(path);
    out.write(kFeatureMagic, sizeof kFeatureMagic);
    detail::put(out, kFeatureVersion);
    detail::put(out, m.schema());
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
    for (const auto& c : m.column_names) detail::put_string(out, c);
    detail::put<std::uint64_t>(out, m.rows());
    const bool labeled = !m.labels.empty();
    detail::put<std::uint8_t>(out, labeled ? 1 : 0);
    for (const auto& s : m.serials) detail::put_string(out, s);
    for (Day d : m.days) detail::put<std::int32_t>(out, d);
    if (labeled) {
        for (Label l : m.labels) detail::put<std::uint8_t>(out, static_cast<std::uint8_t>(l));
    }
    std::vector<double> col(m.rows());
    for (std::size_t c = 0; c < m.cols(); ++c) {
        for (std::size_t r = 0; r < m.rows(); ++r) col[r] = m.values[r * m.cols() + c];
        out.write(reinterpret_cast<const char*>(col.data()), static_cast<std::streamsize>(col.size() * sizeof(double)));
    }
}

inline FeatureMatrix read_feature_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    char magic[8];
    if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + 8, kFeatureMagic))
        throw DataError(path + " is not a binary feature file");
    if (detail::get<std::uint32_t>(in) != kFeatureVersion) throw DataError("unsupported feature file version");
    const auto declared = detail::get<std::uint64_t>(in);
    FeatureMatrix m;
    const auto ncols = detail::get<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < ncols; ++i) m.column_names.push_back(detail::get_string(in));
    if (m.schema() != declared) throw DataError("feature file schema hash mismatch");
    const auto nrows = static_cast<std::size_t>(detail::get<std::uint64_t>(in));
    const bool labeled = detail::get<std::uint8_t>(in) != 0;
    m.serials.resize(nrows);
    m.days.resize(nrows);
    for (auto& s : m.serials) s = detail::get_string(in);
    for (auto& d : m.days) d = detail::get<std::int32_t>(in);
    if (labeled) {
        m.labels.resize(nrows);
        for (auto& l : m.labels) {
            const auto v = detail::get<std::uint8_t>(in);
            if (v > static_cast<std::uint8_t>(Label::Excluded)) throw DataError("bad label in feature file");
            l = static_cast<Label>(v);
        }
    }
    m.values.resize(nrows * ncols);
    std::vector<double> col(nrows);
    for (std::size_t c = 0; c < ncols; ++c) {
        if (!in.read(reinterpret_cast<char*>(col.data()), static_cast<std::streamsize>(nrows * sizeof(double))))
            throw DataError("truncated binary file");
        for (std::size_t r = 0; r < nrows; ++r) m.values[r * ncols + c] = col[r];
    }
    return m;
}

inline void write_feature_csv(const FeatureMatrix& m, const std::string& path) {
    auto out = csv::open_output(path);
    out << "#schema=" << hex64(m.schema()) << '\n';
    std::vector<std::string> header{"serial", "day", "label"};
    header.insert(header.end(), m.column_names.begin(), m.column_names.end());
    csv::write_row(out, header);
    std::vector<std::string> row;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        row.clear();
        row.push_back(m.serials[i]);
        row.push_back(std::to_string(m.days[i]));
        row.emplace_back(m.labels.empty() ? "" : std::string(to_string(m.labels[i])));
        for (double v : m.row(i)) row.push_back(csv::format_double(v));
        csv::write_row(out, row);
    }
}

inline FeatureMatrix read_feature_csv(const std::string& path) {
    auto in = csv::open_input(path);
    std::string line;
    std::string declared;
    FeatureMatrix m;
    bool header = false;
    bool labeled = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("#schema=", 0) == 0) declared = line.substr(8);
            continue;
        }
        auto f = csv::split_line(line);
        if (!header) {
            if (f.size() < 3 || f[0] != "serial" || f[1] != "day" || f[2] != "label")
                throw DataError("feature CSV header must start with serial,day,label");
            m.column_names.assign(f.begin() + 3, f.end());
            header = true;
            continue;
        }
        if (f.size() != m.cols() + 3) throw DataError("feature CSV row width mismatch");
        std::vector<double> vals;
        vals.reserve(m.cols());
        for (std::size_t c = 3; c < f.size(); ++c) vals.push_back(csv::parse_double(f[c]).value_or(kMissing));
        m.append(f[0], static_cast<Day>(csv::parse_int(f[1]).value_or(0)), vals);
        if (!f[2].empty()) {
            labeled = true;
            m.labels.push_back(f[2] == "positive" ? Label::Positive : Label::Negative);
        }
    }
    if (labeled && m.labels.size() != m.rows()) throw DataError("feature CSV mixes labeled and unlabeled rows");
    if (!declared.empty() && declared != hex64(m.schema())) throw DataError("feature CSV schema hash mismatch");
    return m;
}

/// Binary when the file starts with the feature magic, CSV otherwise.
inline FeatureMatrix read_features(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    char magic[8] = {};
    probe.read(magic, sizeof magic);
    if (probe.gcount() == 8 && std::equal(magic, magic + 8, kFeatureMagic)) return read_feature_binary(path);
    return read_feature_csv(path);
}

} // namespace diskprep
