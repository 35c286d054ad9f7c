#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "core.hpp"

namespace diskprep::stats {

inline double mean(std::span<const double> v) {
    if (v.empty()) throw DataError("mean of empty sequence");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Population standard deviation.
inline double stddev(std::span<const double> v) {
    const double m = mean(v);
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

inline double median(std::span<const double> v) {
    if (v.empty()) throw DataError("median of empty sequence");
    std::vector<double> s(v.begin(), v.end());
    const std::size_t mid = s.size() / 2;
    std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(mid), s.end());
    if (s.size() % 2 == 1) return s[mid];
    const double hi = s[mid];
    const double lo = *std::max_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

/// Exponentially weighted moving average with smoothing 2/(w+1), seeded with
/// the first value; returns the value after the last element.
inline double ewma(std::span<const double> v, std::size_t window) {
    if (v.empty()) throw DataError("ewma of empty sequence");
    const double alpha = 2.0 / (static_cast<double>(window) + 1.0);
    double e = v.front();
    for (std::size_t i = 1; i < v.size(); ++i) e = alpha * v[i] + (1.0 - alpha) * e;
    return e;
}

/// 1-based average ranks; tied values share the mean of their rank span.
inline std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DataError("pearson: length mismatch");
    const double mx = mean(x), my = mean(y);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0 || syy == 0) throw UndefinedStatistic("correlation undefined: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Spearman's rank correlation: Pearson correlation of average ranks.
/// Throws UndefinedStatistic when either side has zero rank variance.
inline double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DataError("spearman: length mismatch");
    if (x.size() < 2) throw DataError("spearman: need at least 2 observations");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

struct KsResult {
    double statistic = 0;
    double critical_value = 0;
    bool reject = false;
};

/// Asymptotic two-sample coefficient c(alpha) = sqrt(-ln(alpha/2) / 2);
/// c(0.05) ~= 1.358.
inline double ks_coefficient(double alpha) {
    if (!(alpha > 0 && alpha < 1)) throw ConfigError("KS alpha must be in (0,1)");
    return std::sqrt(-std::log(alpha / 2.0) / 2.0);
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic critical value
/// c(alpha) * sqrt((n+m)/(n*m)).
inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b, double alpha = 0.05) {
    if (a.empty() || b.empty()) throw DataError("ks_two_sample: empty sample");
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const double n = static_cast<double>(sa.size()), m = static_cast<double>(sb.size());
    std::size_t i = 0, j = 0;
    double d = 0;
    while (i < sa.size() && j < sb.size()) {
        const double x = std::min(sa[i], sb[j]);
        while (i < sa.size() && sa[i] == x) ++i;
        while (j < sb.size() && sb[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    KsResult r;
    r.statistic = d;
    r.critical_value = ks_coefficient(alpha) * std::sqrt((n + m) / (n * m));
    r.reject = r.statistic > r.critical_value;
    return r;
}

/// Nearest-rank percentile: the ceil(p*n)-th smallest value (at least the first).
inline double percentile(std::span<const double> v, double p) {
    if (v.empty()) throw DataError("percentile of empty sequence");
    if (!(p >= 0 && p <= 1)) throw ConfigError("percentile p must be in [0,1]");
    std::vector<double> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    auto rank = static_cast<std::size_t>(std::ceil(p * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, s.size());
    return s[rank - 1];
}

struct ZScores {
    std::vector<double> values;
    bool degenerate = false;  ///< zero variance or fewer than 2 values; values all 0
};

/// (v - mean) / population stddev, elementwise.
inline ZScores zscores(std::span<const double> v) {
    ZScores z;
    z.values.assign(v.size(), 0.0);
    if (v.size() < 2) {
        z.degenerate = true;
        return z;
    }
    const double m = mean(v);
    const double sd = stddev(v);
    // Sequences that differ only by rounding noise are treated as constant.
    if (!(sd > 1e-12 * std::max(1.0, std::abs(m)))) {
        z.degenerate = true;
        return z;
    }
    for (std::size_t i = 0; i < v.size(); ++i) z.values[i] = (v[i] - m) / sd;
    return z;
}

} // namespace diskprep::stats
