#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"

using namespace diskprep;

namespace {

// Direct definition of D: max over every sample point of the ECDF difference.
double ks_brute(const std::vector<double>& a, const std::vector<double>& b) {
    auto ecdf = [](const std::vector<double>& s, double x) {
        std::size_t c = 0;
        for (double v : s) c += v <= x;
        return static_cast<double>(c) / static_cast<double>(s.size());
    };
    double d = 0;
    for (const auto* s : {&a, &b}) {
        for (double x : *s) d = std::max(d, std::abs(ecdf(a, x) - ecdf(b, x)));
    }
    return d;
}

// Rank of each element counted by comparison, ties averaged.
std::vector<double> ranks_brute(const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double less = 0, equal = 0;
        for (double w : v) {
            less += w < v[i];
            equal += w == v[i];
        }
        r[i] = less + (equal + 1) / 2.0;
    }
    return r;
}

} // namespace

TEST(Stats, BasicMoments) {
    const std::vector<double> v = {2, 4, 4, 4, 5, 5, 7, 9};
    EXPECT_DOUBLE_EQ(stats::mean(v), 5.0);
    EXPECT_DOUBLE_EQ(stats::stddev(v), 2.0);
    EXPECT_DOUBLE_EQ(stats::median(v), 4.5);
    EXPECT_DOUBLE_EQ(stats::median(std::vector<double>{3, 1, 2}), 2.0);
    EXPECT_THROW(stats::mean(std::vector<double>{}), DataError);
    EXPECT_THROW(stats::median(std::vector<double>{}), DataError);
}

TEST(Stats, EwmaMatchesRecurrence) {
    const std::vector<double> v = {1, 2, 3};
    // alpha = 0.5 for window 3: e = 1 -> 1.5 -> 2.25
    EXPECT_DOUBLE_EQ(stats::ewma(v, 3), 2.25);
    EXPECT_DOUBLE_EQ(stats::ewma(std::vector<double>{7}, 14), 7.0);
}

TEST(Stats, MedianMatchesSortOracle) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> len(1, 40), val(-5, 5);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> v(static_cast<std::size_t>(len(rng)));
        for (auto& x : v) x = val(rng);
        auto s = v;
        std::sort(s.begin(), s.end());
        const std::size_t n = s.size();
        const double expect = n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
        EXPECT_DOUBLE_EQ(stats::median(v), expect);
    }
}

TEST(Stats, AverageRanksMatchBruteForce) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> len(1, 30), val(0, 6);
    for (int t = 0; t < 300; ++t) {
        std::vector<double> v(static_cast<std::size_t>(len(rng)));
        for (auto& x : v) x = val(rng);
        EXPECT_EQ(stats::average_ranks(v), ranks_brute(v));
    }
}

TEST(Stats, SpearmanWithoutTiesMatchesClosedForm) {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 5 + static_cast<std::size_t>(t % 20);
        std::vector<double> x(n), y(n);
        std::iota(x.begin(), x.end(), 0.0);
        std::iota(y.begin(), y.end(), 0.0);
        std::shuffle(x.begin(), x.end(), rng);
        std::shuffle(y.begin(), y.end(), rng);
        double d2 = 0;
        for (std::size_t i = 0; i < n; ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
        const double nn = static_cast<double>(n);
        EXPECT_NEAR(stats::spearman(x, y), 1 - 6 * d2 / (nn * (nn * nn - 1)), 1e-12);
    }
}

TEST(Stats, SpearmanMonotoneAndUndefined) {
    const std::vector<double> x = {1, 2, 3, 4}, y = {10, 100, 1000, 10000};
    EXPECT_DOUBLE_EQ(stats::spearman(x, y), 1.0);
    const std::vector<double> rev = {4, 3, 2, 1};
    EXPECT_DOUBLE_EQ(stats::spearman(x, rev), -1.0);
    const std::vector<double> flat = {1, 1, 1, 1};
    EXPECT_THROW(stats::spearman(x, flat), UndefinedStatistic);
    EXPECT_THROW(stats::spearman(std::vector<double>{1}, std::vector<double>{1}), DataError);
}

TEST(Stats, KsStatisticMatchesBruteForce) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> len(1, 25), val(0, 8);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> a(static_cast<std::size_t>(len(rng))), b(static_cast<std::size_t>(len(rng)));
        for (auto& x : a) x = val(rng);
        for (auto& x : b) x = val(rng) + (t % 3);
        EXPECT_NEAR(stats::ks_two_sample(a, b).statistic, ks_brute(a, b), 1e-12);
    }
}

TEST(Stats, KsCriticalValue) {
    EXPECT_NEAR(stats::ks_coefficient(0.05), 1.3581, 1e-4);
    const std::vector<double> a(100, 0.0);
    std::vector<double> b(100);
    std::iota(b.begin(), b.end(), 1.0);
    const auto r = stats::ks_two_sample(a, b);
    EXPECT_DOUBLE_EQ(r.statistic, 1.0);
    EXPECT_NEAR(r.critical_value, 1.3581 * std::sqrt(0.02), 1e-4);
    EXPECT_TRUE(r.reject);
    EXPECT_FALSE(stats::ks_two_sample(b, b).reject);
    EXPECT_THROW(stats::ks_coefficient(0), ConfigError);
}

TEST(Stats, NearestRankPercentile) {
    const std::vector<double> v = {15, 20, 35, 40, 50};
    EXPECT_EQ(stats::percentile(v, 0.05), 15);
    EXPECT_EQ(stats::percentile(v, 0.30), 20);
    EXPECT_EQ(stats::percentile(v, 0.40), 20);
    EXPECT_EQ(stats::percentile(v, 0.50), 35);
    EXPECT_EQ(stats::percentile(v, 1.00), 50);
    EXPECT_EQ(stats::percentile(std::vector<double>{1, 2, 3, 4}, 0.75), 3);
    EXPECT_THROW(stats::percentile(v, 1.5), ConfigError);
}

TEST(Stats, PercentileMatchesCountingOracle) {
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> len(1, 30), val(0, 20);
    std::uniform_real_distribution<double> pd(0, 1);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> v(static_cast<std::size_t>(len(rng)));
        for (auto& x : v) x = val(rng);
        const double p = pd(rng);
        const auto need = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size()) - 1e-9)));
        // Smallest value with at least `need` values <= it.
        double expect = std::numeric_limits<double>::infinity();
        for (double c : v) {
            std::size_t le = 0;
            for (double w : v) le += w <= c;
            if (le >= need) expect = std::min(expect, c);
        }
        EXPECT_EQ(stats::percentile(v, p), expect);
    }
}

TEST(Stats, ZScores) {
    const auto z = stats::zscores(std::vector<double>{1, 2, 3});
    EXPECT_FALSE(z.degenerate);
    EXPECT_NEAR(z.values[0], -std::sqrt(1.5), 1e-12);
    EXPECT_NEAR(z.values[1], 0, 1e-12);
    EXPECT_TRUE(stats::zscores(std::vector<double>{4, 4, 4}).degenerate);
    EXPECT_TRUE(stats::zscores(std::vector<double>{4}).degenerate);
}
