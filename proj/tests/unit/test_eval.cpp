#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"

using namespace diskprep;

namespace {

struct Fleet {
    std::map<std::string, double> scores;
    std::map<std::string, bool> failed;
};

Fleet random_fleet(std::uint64_t seed, std::size_t healthy, std::size_t positive, int levels) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> v(0, levels);
    Fleet f;
    for (std::size_t i = 0; i < healthy; ++i) {
        const std::string s = "h" + std::to_string(i);
        f.scores[s] = v(rng) / static_cast<double>(levels);
        f.failed[s] = false;
    }
    for (std::size_t i = 0; i < positive; ++i) {
        const std::string s = "p" + std::to_string(i);
        f.scores[s] = std::min(1.0, v(rng) / static_cast<double>(levels) + 0.3);
        f.failed[s] = true;
    }
    return f;
}

// Best TPR over every candidate threshold whose healthy false-positive share
// is within budget.
double brute_tpr(const Fleet& f, double budget) {
    std::set<double> cands;
    for (const auto& [s, v] : f.scores) cands.insert(v);
    cands.insert(INFINITY);
    std::size_t H = 0, P = 0;
    for (const auto& [s, b] : f.failed) (b ? P : H) += 1;
    double best = 0;
    for (double t : cands) {
        std::size_t fp = 0, tp = 0;
        for (const auto& [s, b] : f.failed) (b ? tp : fp) += f.scores.at(s) >= t;
        if (static_cast<double>(fp) <= budget * static_cast<double>(H) + 1e-9)
            best = std::max(best, static_cast<double>(tp) / static_cast<double>(P));
    }
    return best;
}

} // namespace

TEST(TprAtFpr, WorkedExample) {
    // 4 healthy disks, budget 0.25: one healthy disk may be flagged.
    Fleet f;
    f.scores = {{"h1", 0.1}, {"h2", 0.2}, {"h3", 0.3}, {"h4", 0.9}, {"p1", 0.25}, {"p2", 0.95}};
    for (const auto& [s, _] : f.scores) f.failed[s] = s[0] == 'p';
    const auto r = tpr_at_fpr(f.scores, f.failed, 0.25);
    EXPECT_EQ(r.false_positives, 1u);
    EXPECT_DOUBLE_EQ(r.fpr, 0.25);
    EXPECT_DOUBLE_EQ(r.tpr, 0.5);
    EXPECT_GT(r.threshold, 0.3);
    EXPECT_LE(r.threshold, 0.9);

    const auto zero = tpr_at_fpr(f.scores, f.failed, 0.0);
    EXPECT_EQ(zero.false_positives, 0u);
    EXPECT_DOUBLE_EQ(zero.tpr, 0.5);
    const auto all = tpr_at_fpr(f.scores, f.failed, 1.0);
    EXPECT_DOUBLE_EQ(all.tpr, 1.0);
}

TEST(TprAtFpr, MatchesThresholdSweepOracle) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto f = random_fleet(seed, 50 + seed % 40, 5 + seed % 7, 20);
        for (double budget : {0.0, 0.0004, 0.001, 0.01, 0.04, 0.1, 0.5}) {
            const auto r = tpr_at_fpr(f.scores, f.failed, budget);
            EXPECT_LE(r.fpr, budget + 1e-12);
            EXPECT_NEAR(r.tpr, brute_tpr(f, budget), 1e-12) << seed << " " << budget;
        }
    }
}

TEST(TprAtFpr, Errors) {
    Fleet f;
    f.scores = {{"a", 0.1}};
    f.failed = {{"a", false}};
    EXPECT_THROW(tpr_at_fpr(f.scores, f.failed, 0.01), DataError);
    f.failed = {{"a", true}};
    EXPECT_THROW(tpr_at_fpr(f.scores, f.failed, 0.01), DataError);
    f.failed["b"] = false;
    EXPECT_THROW(tpr_at_fpr(f.scores, f.failed, 0.01), DataError);
    f.scores["b"] = 0;
    EXPECT_THROW(tpr_at_fpr(f.scores, f.failed, 1.5), ConfigError);
}

TEST(TypeBreakdown, PerTypeTpr) {
    Fleet f;
    f.scores = {{"h", 0.1}, {"a", 0.9}, {"b", 0.05}, {"c", 0.8}};
    for (const auto& [s, _] : f.scores) f.failed[s] = s != "h";
    auto r = tpr_at_fpr(f.scores, f.failed, 0.0);
    add_type_breakdown(r, f.scores, {{"a", FailureType::DataCorruption}, {"b", FailureType::DataCorruption}, {"c", FailureType::Other}});
    EXPECT_DOUBLE_EQ(r.per_type.at(FailureType::DataCorruption).tpr, 0.5);
    EXPECT_DOUBLE_EQ(r.per_type.at(FailureType::Other).tpr, 1.0);
}

TEST(Curve, MonotoneAndConsistentWithOperatingPoint) {
    const auto f = random_fleet(3, 100, 20, 30);
    const auto c = tpr_fpr_curve(f.scores, f.failed);
    EXPECT_EQ(c.front().fpr, 0);
    EXPECT_EQ(c.back().fpr, 1);
    EXPECT_EQ(c.back().tpr, 1);
    for (std::size_t i = 1; i < c.size(); ++i) {
        EXPECT_GE(c[i].fpr, c[i - 1].fpr);
        EXPECT_GE(c[i].tpr, c[i - 1].tpr);
        EXPECT_LT(c[i].threshold, c[i - 1].threshold);
    }
    const auto r = tpr_at_fpr(f.scores, f.failed, 0.05);
    double best = 0;
    for (const auto& p : c)
        if (p.fpr <= 0.05) best = std::max(best, p.tpr);
    EXPECT_DOUBLE_EQ(r.tpr, best);
}

TEST(SlidingWindows, RunCounts) {
    EXPECT_EQ(sliding_windows(18 * 30, 3, 1).size(), 15u);
    EXPECT_EQ(sliding_windows(40 * 30, 3, 1).size(), 37u);
    const auto w = sliding_windows(18 * 30, 3, 1);
    EXPECT_EQ(w[0].train_start, 0);
    EXPECT_EQ(w[0].train_end, 89);
    EXPECT_EQ(w[0].test_start, 90);
    EXPECT_EQ(w[0].test_end, 119);
    EXPECT_EQ(w[1].train_start, 30);
    EXPECT_EQ(w.back().test_end, 18 * 30 - 1);
    EXPECT_TRUE(sliding_windows(100, 3, 1).empty());
    EXPECT_THROW(sliding_windows(100, 0, 1), ConfigError);
}

TEST(MeanCi, StudentT) {
    const auto r = mean_ci95({1, 2, 3, 4, 5});
    EXPECT_DOUBLE_EQ(r.mean, 3);
    // t_{0.975,4} = 2.7764451; sd = sqrt(2.5)
    EXPECT_NEAR(r.upper - r.mean, 2.7764451 * std::sqrt(2.5) / std::sqrt(5.0), 1e-6);
    EXPECT_EQ(mean_ci95({7}).lower, 7);
    EXPECT_EQ(mean_ci95({}).n, 0u);
}
