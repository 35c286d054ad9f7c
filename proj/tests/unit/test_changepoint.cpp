#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"

using namespace diskprep;

namespace {

// log marginal likelihood of one segment under the Normal-Gamma prior.
double log_marginal(const std::vector<double>& seg, const NormalGammaPrior& p) {
    const double m = static_cast<double>(seg.size());
    if (seg.empty()) return 0;
    double mean = 0;
    for (double x : seg) mean += x;
    mean /= m;
    double ss = 0;
    for (double x : seg) ss += (x - mean) * (x - mean);
    const double kn = p.kappa + m, an = p.alpha + m / 2;
    const double bn = p.beta + 0.5 * ss + p.kappa * m * (mean - p.mu) * (mean - p.mu) / (2 * kn);
    return std::lgamma(an) - std::lgamma(p.alpha) + p.alpha * std::log(p.beta) - an * std::log(bn) +
           0.5 * std::log(p.kappa / kn) - 0.5 * m * std::log(2 * M_PI);
}

// P(change at t | x[0..t]) by enumerating every change-indicator sequence.
std::vector<double> brute_change_probs(const std::vector<double>& raw, const NormalGammaPrior& p) {
    const std::size_t n = raw.size();
    double mean = 0;
    for (double x : raw) mean += x;
    mean /= static_cast<double>(n);
    double var = 0;
    for (double x : raw) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = (raw[i] - mean) / sd;
    const double h = 1.0 / static_cast<double>(n);

    std::vector<double> out(n);
    for (std::size_t t = 0; t < n; ++t) {
        double num = 0, den = 0;
        for (std::uint32_t mask = 0; mask < (1u << (t + 1)); ++mask) {
            double lw = 0;
            std::vector<double> seg;
            for (std::size_t i = 0; i <= t; ++i) {
                const bool c = mask >> i & 1u;
                lw += c ? std::log(h) : std::log1p(-h);
                if (c) {
                    lw += log_marginal(seg, p);
                    seg.clear();
                }
                seg.push_back(x[i]);
            }
            lw += log_marginal(seg, p);
            const double w = std::exp(lw);
            den += w;
            if (mask >> t & 1u) num += w;
        }
        out[t] = num / den;
    }
    return out;
}

std::vector<double> step_series(std::size_t before, std::size_t after, double level, double sigma, std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0, sigma);
    std::vector<double> v;
    for (std::size_t i = 0; i < before; ++i) v.push_back(noise(rng));
    for (std::size_t i = 0; i < after; ++i) v.push_back(level + noise(rng));
    return v;
}

} // namespace

TEST(ChangeProbabilities, MatchesExhaustiveEnumeration) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> z(0, 1);
    const NormalGammaPrior prior;
    for (int t = 0; t < 40; ++t) {
        const std::size_t n = 2 + static_cast<std::size_t>(t % 9);
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = z(rng) + (i >= n / 2 ? 3.0 * (t % 2) : 0.0);
        const auto got = change_probabilities(v, prior);
        const auto want = brute_change_probs(v, prior);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(got[i], want[i], 1e-9) << "n=" << n << " i=" << i;
    }
}

TEST(ChangeProbabilities, ShapeAndBounds) {
    const auto p = change_probabilities(std::vector<double>{1, 2});
    ASSERT_EQ(p.size(), 2u);
    for (double v : p) {
        EXPECT_GE(v, 0);
        EXPECT_LE(v, 1);
    }
    EXPECT_DOUBLE_EQ(p[0], 0.5);
    EXPECT_THROW(change_probabilities(std::vector<double>{1}), DataError);
}

TEST(ChangeProbabilities, ConstantSeriesHasNoSignificantDay) {
    const std::vector<double> v(60, 5.0);
    const auto p = change_probabilities(v);
    for (double x : p) EXPECT_LE(x, 1.0 / 60 + 1e-15);
    EXPECT_FALSE(significant_change_day(p).has_value());
}

TEST(ChangeProbabilities, StepIsLocated) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 20; ++t) {
        const auto v = step_series(30, 30, 100, 1, rng);
        const auto p = change_probabilities(v);
        const auto arg = static_cast<long>(std::max_element(p.begin(), p.end()) - p.begin());
        EXPECT_NEAR(arg, 30, 2);
        const auto day = significant_change_day(p);
        ASSERT_TRUE(day.has_value());
        EXPECT_NEAR(static_cast<long>(*day), 30, 2);
    }
}

TEST(ChangeProbabilities, ScaleFree) {
    std::mt19937_64 rng(8);
    const auto v = step_series(20, 20, 5, 1, rng);
    auto w = v;
    for (auto& x : w) x = 1000 * x + 7;
    const auto a = change_probabilities(v), b = change_probabilities(w);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
}

TEST(SignificantChangeDay, SpikeIsFound) {
    std::vector<double> p(20, 0.01);
    p[7] = 0.1;
    EXPECT_EQ(significant_change_day(p), 7u);
}

TEST(SignificantChangeDay, UniformHasNone) {
    EXPECT_FALSE(significant_change_day(std::vector<double>(30, 0.2)).has_value());
}

TEST(SignificantChangeDay, EarliestOfTwoWins) {
    std::vector<double> p(40, 0.0);
    p[12] = 1.0;
    p[30] = 1.0;
    // z at the spikes: mean 0.05, sd ~0.218 -> z ~4.36
    EXPECT_EQ(significant_change_day(p), 12u);
    EXPECT_FALSE(significant_change_day(p, 5.0).has_value());
}
