#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dataset.hpp"

namespace diskprep {

/// Natural cubic spline (second derivative zero at both end knots).
///
/// Outside the knot range the first or last piece is evaluated as-is, so
/// extrapolation reuses the boundary cubic rather than a linear tail.
class NaturalCubicSpline {
public:
    NaturalCubicSpline(std::span<const double> xs, std::span<const double> ys)
        : x_(xs.begin(), xs.end()), y_(ys.begin(), ys.end()), m_(xs.size(), 0.0) {
        const std::size_t n = x_.size();
        if (n < 2 || ys.size() != n) throw DataError("spline needs >= 2 knots with matching values");
        for (std::size_t i = 1; i < n; ++i) {
            if (!(x_[i] > x_[i - 1])) throw DataError("spline knots must be strictly increasing");
        }
        if (n == 2) return;
        // Tridiagonal system for interior second derivatives (Thomas algorithm).
        const std::size_t k = n - 2;
        std::vector<double> sub(k), diag(k), sup(k), rhs(k);
        for (std::size_t j = 0; j < k; ++j) {
            const std::size_t i = j + 1;
            const double h0 = x_[i] - x_[i - 1];
            const double h1 = x_[i + 1] - x_[i];
            sub[j] = h0;
            diag[j] = 2.0 * (h0 + h1);
            sup[j] = h1;
            rhs[j] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
        }
        for (std::size_t j = 1; j < k; ++j) {
            const double w = sub[j] / diag[j - 1];
            diag[j] -= w * sup[j - 1];
            rhs[j] -= w * rhs[j - 1];
        }
        m_[k] = rhs[k - 1] / diag[k - 1];
        for (std::size_t j = k - 1; j-- > 0;) m_[j + 1] = (rhs[j] - sup[j] * m_[j + 2]) / diag[j];
    }

    double operator()(double x) const {
        const std::size_t n = x_.size();
        std::size_t i = 0;
        if (x >= x_[n - 1]) {
            i = n - 2;
        } else if (x > x_[0]) {
            i = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin()) - 1;
        }
        return piece(i, x);
    }

    /// Evaluates segment i's cubic at x (x may lie outside the segment).
    double piece(std::size_t i, double x) const {
        const double h = x_[i + 1] - x_[i];
        const double a = x_[i + 1] - x;
        const double b = x - x_[i];
        return m_[i] * a * a * a / (6 * h) + m_[i + 1] * b * b * b / (6 * h) +
               (y_[i] / h - m_[i] * h / 6) * a + (y_[i + 1] / h - m_[i + 1] * h / 6) * b;
    }

    const std::vector<double>& second_derivatives() const noexcept { return m_; }

private:
    std::vector<double> x_, y_, m_;
};

/// Interpolating polynomial through up to three points (Lagrange form).
inline double lagrange(std::span<const double> xs, std::span<const double> ys, double x) {
    double sum = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double term = ys[i];
        for (std::size_t j = 0; j < xs.size(); ++j) {
            if (j != i) term *= (x - xs[j]) / (xs[i] - xs[j]);
        }
        sum += term;
    }
    return sum;
}

enum class FillMethod { None, Forward, Linear, Spline };

inline std::string_view to_string(FillMethod m) noexcept {
    switch (m) {
    case FillMethod::None: return "none";
    case FillMethod::Forward: return "ffill";
    case FillMethod::Linear: return "linear";
    case FillMethod::Spline: return "spline";
    }
    return "none";
}

inline std::optional<FillMethod> parse_fill_method(std::string_view s) {
    for (auto m : {FillMethod::None, FillMethod::Forward, FillMethod::Linear, FillMethod::Spline}) {
        if (s == to_string(m)) return m;
    }
    if (s == "forward") return FillMethod::Forward;
    return std::nullopt;
}

struct DroppedDisk {
    std::string serial;
    std::string reason;
    bool operator==(const DroppedDisk&) const = default;
};

struct FillReport {
    FillMethod method = FillMethod::None;
    std::size_t filled_days = 0;        ///< days without any sample that were synthesized
    std::size_t extrapolated_days = 0;  ///< subset of filled_days outside the observed range
    std::vector<DroppedDisk> dropped_disks;

    void merge(const FillReport& o) {
        filled_days += o.filled_days;
        extrapolated_days += o.extrapolated_days;
        dropped_disks.insert(dropped_disks.end(), o.dropped_disks.begin(), o.dropped_disks.end());
    }
};

struct FillOutcome {
    std::optional<DiskSeries> series;  ///< empty when the disk was dropped
    FillReport report;
};

namespace detail {

/// Value at `day` for a gap of the given method. `knots` are (day, value)
/// pairs of observed samples; `lo`/`hi` index the knots bracketing the gap
/// (lo == npos: leading gap, hi == npos: trailing gap).
class GapFiller {
public:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    GapFiller(FillMethod method, std::span<const double> kx, std::span<const double> ky)
        : method_(method), kx_(kx), ky_(ky) {}

    /// Prepares the local model for one gap.
    void prepare(std::size_t lo, std::size_t hi) {
        lo_ = lo;
        hi_ = hi;
        const std::size_t n = kx_.size();
        std::size_t first = 0, last = 0;  // inclusive knot range used
        if (lo == npos) {
            first = 0;
            last = std::min<std::size_t>(n - 1, 3);
        } else if (hi == npos) {
            last = n - 1;
            first = n >= 4 ? n - 4 : 0;
        } else {
            first = lo > 0 ? lo - 1 : lo;
            last = hi + 1 < n ? hi + 1 : hi;
        }
        xs_.assign(kx_.begin() + static_cast<std::ptrdiff_t>(first), kx_.begin() + static_cast<std::ptrdiff_t>(last + 1));
        ys_.assign(ky_.begin() + static_cast<std::ptrdiff_t>(first), ky_.begin() + static_cast<std::ptrdiff_t>(last + 1));
        spline_.reset();
        if (method_ == FillMethod::Spline && xs_.size() == 4) spline_.emplace(xs_, ys_);
    }

    double value(double day) const {
        switch (method_) {
        case FillMethod::Forward:
            return lo_ == npos ? ky_.front() : ky_[lo_];
        case FillMethod::Linear:
            return linear(day);
        case FillMethod::Spline:
            if (spline_) return (*spline_)(day);
            if (xs_.size() == 3) return lagrange(xs_, ys_, day);
            return linear(day);
        case FillMethod::None:
            break;
        }
        return kMissing;
    }

private:
    double linear(double day) const {
        std::size_t a = 0, b = 0;
        if (lo_ == npos) {
            a = 0;
            b = 1;
        } else if (hi_ == npos) {
            a = kx_.size() - 2;
            b = kx_.size() - 1;
        } else {
            a = lo_;
            b = hi_;
        }
        const double t = (day - kx_[a]) / (kx_[b] - kx_[a]);
        return ky_[a] + t * (ky_[b] - ky_[a]);
    }

    FillMethod method_;
    std::span<const double> kx_, ky_;
    std::size_t lo_ = npos, hi_ = npos;
    std::vector<double> xs_, ys_;
    std::optional<NaturalCubicSpline> spline_;
};

} // namespace detail

/// Fills every day of [first_day, last_day] for every attribute.
///
/// Interior gaps use the two closest observed samples on each side; leading
/// and trailing gaps extrapolate with the first or last local polynomial. A
/// run of more than `max_gap` consecutive missing days in any attribute drops
/// the whole series. Filled values are clamped below at zero.
inline FillOutcome fill_series(const DiskSeries& series, FillMethod method, int max_gap = 30) {
    if (max_gap < 1) throw ConfigError("max_gap must be >= 1");
    FillOutcome out;
    out.report.method = method;
    if (method == FillMethod::None) {
        out.series = series;
        return out;
    }
    auto drop = [&](std::string reason) {
        out.report.dropped_disks.push_back({series.serial, std::move(reason)});
        return out;
    };
    if (series.empty()) return drop("no samples");
    if (series.last_day < series.first_day) return drop("empty observation span");

    const Day first = series.first_day, last = series.last_day;
    const auto span = static_cast<std::size_t>(last - first + 1);

    DiskSeries filled;
    filled.serial = series.serial;
    filled.model = series.model;
    filled.vendor = series.vendor;
    filled.first_day = first;
    filled.last_day = last;
    filled.days.resize(span);
    for (std::size_t i = 0; i < span; ++i) filled.days[i] = first + static_cast<Day>(i);
    filled.columns.assign(series.attribute_count(), std::vector<double>(span, kMissing));

    std::vector<double> kx, ky;
    for (std::size_t a = 0; a < series.attribute_count(); ++a) {
        kx.clear();
        ky.clear();
        const auto& col = series.columns[a];
        for (std::size_t i = 0; i < series.size(); ++i) {
            if (is_missing(col[i])) continue;
            kx.push_back(series.days[i]);
            ky.push_back(col[i]);
        }
        const std::string attr_label = "attribute #" + std::to_string(a);
        if (kx.empty()) return drop(attr_label + " never observed");

        // Longest missing run, including open-ended runs.
        int longest = static_cast<int>(kx.front()) - first;
        longest = std::max(longest, last - static_cast<int>(kx.back()));
        for (std::size_t k = 1; k < kx.size(); ++k)
            longest = std::max(longest, static_cast<int>(kx[k] - kx[k - 1]) - 1);
        if (longest > max_gap)
            return drop("gap of " + std::to_string(longest) + " days in " + attr_label +
                        " exceeds max_gap " + std::to_string(max_gap));
        if (longest > 0 && kx.size() < 2) return drop("fewer than 2 samples with missing days");

        auto& dst = filled.columns[a];
        for (std::size_t k = 0; k < kx.size(); ++k) dst[static_cast<std::size_t>(kx[k] - first)] = ky[k];
        if (longest == 0) continue;

        detail::GapFiller filler(method, kx, ky);
        auto fill_range = [&](Day from, Day to, std::size_t lo, std::size_t hi) {
            if (from > to) return;
            filler.prepare(lo, hi);
            for (Day d = from; d <= to; ++d) {
                dst[static_cast<std::size_t>(d - first)] = std::max(0.0, filler.value(d));
            }
        };
        constexpr auto npos = detail::GapFiller::npos;
        fill_range(first, static_cast<Day>(kx.front()) - 1, npos, 0);
        for (std::size_t k = 0; k + 1 < kx.size(); ++k) {
            if (kx[k + 1] - kx[k] > 1)
                fill_range(static_cast<Day>(kx[k]) + 1, static_cast<Day>(kx[k + 1]) - 1, k, k + 1);
        }
        fill_range(static_cast<Day>(kx.back()) + 1, last, kx.size() - 1, npos);
    }

    out.report.filled_days = span - series.size();
    out.report.extrapolated_days = static_cast<std::size_t>(series.days.front() - first) +
                                   static_cast<std::size_t>(last - series.days.back());
    out.series = std::move(filled);
    return out;
}

/// Applies fill_series to every disk. Dropped disks and their tickets are
/// removed from the returned dataset.
inline std::pair<Dataset, FillReport> fill_dataset(const Dataset& ds, FillMethod method, int max_gap = 30) {
    FillReport report;
    report.method = method;
    if (method == FillMethod::None) return {ds, report};
    Dataset out;
    out.epoch = ds.epoch;
    out.span_days = ds.span_days;
    out.model_attributes = ds.model_attributes;
    for (const auto& [serial, d] : ds.disks) {
        auto r = fill_series(d, method, max_gap);
        report.merge(r.report);
        if (!r.series) continue;
        out.disks.emplace(serial, std::move(*r.series));
        if (auto* t = ds.ticket_for(serial)) out.tickets.emplace(serial, *t);
    }
    return {std::move(out), std::move(report)};
}

} // namespace diskprep
