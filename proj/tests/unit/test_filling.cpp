#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"

using namespace diskprep;
using testutil::make_disk;

namespace {

// Natural cubic spline by brute force: unknowns are the 4 coefficients of
// each piece p_i(x) = a + b(x-x_i) + c(x-x_i)^2 + d(x-x_i)^3, solved densely
// from interpolation, C1/C2 continuity and zero end curvature.
struct DenseSpline {
    std::vector<double> x, coef;

    DenseSpline(const std::vector<double>& xs, const std::vector<double>& ys) : x(xs) {
        const std::size_t p = xs.size() - 1, n = 4 * p;
        std::vector<std::vector<double>> A(n, std::vector<double>(n + 1, 0.0));
        std::size_t r = 0;
        for (std::size_t i = 0; i < p; ++i) {
            const double h = xs[i + 1] - xs[i];
            A[r][4 * i] = 1;
            A[r++][n] = ys[i];
            A[r][4 * i] = 1, A[r][4 * i + 1] = h, A[r][4 * i + 2] = h * h, A[r][4 * i + 3] = h * h * h;
            A[r++][n] = ys[i + 1];
            if (i + 1 < p) {
                A[r][4 * i + 1] = 1, A[r][4 * i + 2] = 2 * h, A[r][4 * i + 3] = 3 * h * h, A[r][4 * (i + 1) + 1] = -1;
                ++r;
                A[r][4 * i + 2] = 2, A[r][4 * i + 3] = 6 * h, A[r][4 * (i + 1) + 2] = -2;
                ++r;
            }
        }
        A[r++][2] = 2;
        const double hl = xs[p] - xs[p - 1];
        A[r][4 * (p - 1) + 2] = 2, A[r][4 * (p - 1) + 3] = 6 * hl;
        // Gauss-Jordan with partial pivoting.
        for (std::size_t c = 0; c < n; ++c) {
            std::size_t piv = c;
            for (std::size_t k = c + 1; k < n; ++k)
                if (std::abs(A[k][c]) > std::abs(A[piv][c])) piv = k;
            std::swap(A[c], A[piv]);
            for (std::size_t k = 0; k < n; ++k) {
                if (k == c) continue;
                const double f = A[k][c] / A[c][c];
                for (std::size_t j = c; j <= n; ++j) A[k][j] -= f * A[c][j];
            }
        }
        coef.resize(n);
        for (std::size_t k = 0; k < n; ++k) coef[k] = A[k][n] / A[k][k];
    }

    double operator()(double v) const {
        std::size_t i = 0;
        while (i + 2 < x.size() && v > x[i + 1]) ++i;
        const double t = v - x[i];
        return coef[4 * i] + coef[4 * i + 1] * t + coef[4 * i + 2] * t * t + coef[4 * i + 3] * t * t * t;
    }
};

DiskSeries worked_series() {
    // days 1..5 = [1, 2, miss, 3, 4]
    auto d = make_disk("s", "M", {1, 2, 4, 5}, {{1, 2, 3, 4}});
    return d;
}

} // namespace

TEST(Spline, MatchesDenseOracleOnRandomKnots) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> step(0.5, 5), val(-10, 10);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 2 + static_cast<std::size_t>(t % 6);
        std::vector<double> xs(n), ys(n);
        double x = val(rng);
        for (std::size_t i = 0; i < n; ++i) {
            xs[i] = x;
            x += step(rng);
            ys[i] = val(rng);
        }
        const NaturalCubicSpline s(xs, ys);
        const DenseSpline o(xs, ys);
        for (int k = 0; k <= 20; ++k) {
            const double q = xs.front() + (xs.back() - xs.front()) * k / 20.0;
            EXPECT_NEAR(s(q), o(q), 1e-8 * (1 + std::abs(o(q))));
        }
    }
}

TEST(Spline, RejectsBadKnots) {
    const std::vector<double> one = {1}, two = {1, 1};
    EXPECT_THROW(NaturalCubicSpline(one, one), DataError);
    EXPECT_THROW(NaturalCubicSpline(two, std::vector<double>{1, 2}), DataError);
}

TEST(Fill, WorkedExampleForwardAndLinear) {
    const auto f = fill_series(worked_series(), FillMethod::Forward);
    ASSERT_TRUE(f.series);
    EXPECT_EQ(f.series->columns[0], (std::vector<double>{1, 2, 2, 3, 4}));
    const auto l = fill_series(worked_series(), FillMethod::Linear);
    EXPECT_EQ(l.series->columns[0], (std::vector<double>{1, 2, 2.5, 3, 4}));
    EXPECT_EQ(l.report.filled_days, 1u);
    EXPECT_EQ(l.report.extrapolated_days, 0u);
}

TEST(Fill, WorkedExampleSplineMatchesOracle) {
    const auto s = fill_series(worked_series(), FillMethod::Spline);
    ASSERT_TRUE(s.series);
    const DenseSpline o({1, 2, 4, 5}, {1, 2, 3, 4});
    EXPECT_NEAR(s.series->columns[0][2], o(3), 1e-12);
    EXPECT_NEAR(s.series->columns[0][2], 2.5, 1e-12);  // symmetric knots
}

TEST(Fill, SplineInteriorGapUsesFourNearestKnots) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> val(0, 100);
    for (int t = 0; t < 200; ++t) {
        // Knots at 0,1,2,3 then gap 4..9, knots at 10,11,12,13.
        std::vector<Day> days = {0, 1, 2, 3, 10, 11, 12, 13};
        std::vector<double> v(days.size());
        for (auto& x : v) x = val(rng);
        const auto f = fill_series(make_disk("s", "M", days, {v}), FillMethod::Spline);
        ASSERT_TRUE(f.series);
        const DenseSpline o({2, 3, 10, 11}, {v[2], v[3], v[4], v[5]});
        for (Day d = 4; d <= 9; ++d) EXPECT_NEAR(f.series->columns[0][static_cast<std::size_t>(d)], std::max(0.0, o(d)), 1e-9);
        for (std::size_t i = 0; i < days.size(); ++i)
            EXPECT_EQ(f.series->columns[0][static_cast<std::size_t>(days[i])], v[i]);
    }
}

TEST(Fill, CollinearKnotsReduceToLinear) {
    std::vector<Day> days = {0, 3, 9, 12, 20, 22};
    std::vector<double> v;
    for (Day d : days) v.push_back(5 + 2.5 * d);
    const auto s = fill_series(make_disk("s", "M", days, {v}), FillMethod::Spline);
    const auto l = fill_series(make_disk("s", "M", days, {v}), FillMethod::Linear);
    for (std::size_t i = 0; i < s.series->size(); ++i)
        EXPECT_NEAR(s.series->columns[0][i], l.series->columns[0][i], 1e-9);
}

TEST(Fill, BoundaryDegradesToQuadratic) {
    // Gap after the first knot: only one knot on the left, so three knots.
    const auto f = fill_series(make_disk("s", "M", {0, 3, 4}, {{0, 9, 16}}), FillMethod::Spline);
    ASSERT_TRUE(f.series);
    EXPECT_NEAR(f.series->columns[0][1], 1, 1e-12);  // x^2 through (0,0),(3,9),(4,16)
    EXPECT_NEAR(f.series->columns[0][2], 4, 1e-12);
    // Two samples only: linear.
    const auto g = fill_series(make_disk("s", "M", {0, 4}, {{0, 8}}), FillMethod::Spline);
    EXPECT_NEAR(g.series->columns[0][1], 2, 1e-12);
}

TEST(Fill, TrailingGapReusesLastPiece) {
    auto d = make_disk("s", "M", {0, 1, 2, 3, 4}, {{0, 1, 4, 9, 16}});
    d.last_day = 6;
    const auto f = fill_series(d, FillMethod::Spline);
    ASSERT_TRUE(f.series);
    const NaturalCubicSpline last4(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 4, 9, 16});
    EXPECT_NEAR(f.series->columns[0][5], last4.piece(2, 5), 1e-12);
    EXPECT_NEAR(f.series->columns[0][6], last4.piece(2, 6), 1e-12);
    EXPECT_EQ(f.report.extrapolated_days, 2u);
    const auto ff = fill_series(d, FillMethod::Forward);
    EXPECT_EQ(ff.series->columns[0][6], 16);
}

TEST(Fill, ClampsAtZero) {
    auto d = make_disk("s", "M", {0, 1, 2, 3}, {{9, 4, 1, 0}});
    d.last_day = 8;
    const auto f = fill_series(d, FillMethod::Linear);
    for (double v : f.series->columns[0]) EXPECT_GE(v, 0.0);
}

TEST(Fill, CompleteSeriesUnchangedForEveryMethod) {
    const auto d = make_disk("s", "M", {3, 4, 5, 6}, {{1, 5, 2, 8}, {0, 0, 1, 1}});
    for (auto m : {FillMethod::None, FillMethod::Forward, FillMethod::Linear, FillMethod::Spline}) {
        const auto f = fill_series(d, m);
        ASSERT_TRUE(f.series);
        EXPECT_EQ(*f.series, d);
        EXPECT_EQ(f.report.filled_days, 0u);
    }
}

TEST(Fill, GapLongerThanMaxGapDrops) {
    // Days 0 and 32 observed: 31 missing days in between.
    const auto f = fill_series(make_disk("s", "M", {0, 32}, {{1, 2}}), FillMethod::Spline, 30);
    EXPECT_FALSE(f.series);
    ASSERT_EQ(f.report.dropped_disks.size(), 1u);
    EXPECT_EQ(f.report.dropped_disks[0].serial, "s");
    // Exactly 30 is kept.
    EXPECT_TRUE(fill_series(make_disk("s", "M", {0, 31}, {{1, 2}}), FillMethod::Spline, 30).series);
    EXPECT_THROW(fill_series(make_disk("s", "M", {0}, {{1}}), FillMethod::Spline, 0), ConfigError);
}

TEST(Fill, SingleSampleWithGapDrops) {
    auto d = make_disk("s", "M", {0}, {{1}});
    d.last_day = 3;
    EXPECT_FALSE(fill_series(d, FillMethod::Spline).series);
    d.last_day = 0;
    EXPECT_TRUE(fill_series(d, FillMethod::Spline).series);
}

TEST(Fill, AttributesAreIndependent) {
    std::vector<Day> days = {0, 1, 2, 5, 6, 9, 10, 11};
    std::vector<double> a = {1, 3, 2, 8, 9, 4, 4, 7}, b = {0, 0, 10, 20, 20, 30, 31, 31};
    b[3] = kMissing;
    const auto ab = fill_series(make_disk("s", "M", days, {a, b}), FillMethod::Spline);
    const auto ba = fill_series(make_disk("s", "M", days, {b, a}), FillMethod::Spline);
    ASSERT_TRUE(ab.series && ba.series);
    EXPECT_EQ(ab.series->columns[0], ba.series->columns[1]);
    EXPECT_EQ(ab.series->columns[1], ba.series->columns[0]);
}

TEST(FillDataset, DropsDiskAndItsTicket) {
    Dataset ds;
    ds.span_days = 60;
    ds.model_attributes["M"] = {"a"};
    ds.disks["ok1"] = make_disk("ok1", "M", {0, 1, 3}, {{1, 2, 4}});
    ds.disks["ok2"] = make_disk("ok2", "M", {0, 1, 2}, {{1, 1, 1}});
    ds.disks["bad"] = make_disk("bad", "M", {0, 41}, {{1, 2}});
    ds.add_ticket({"bad", 41, FailureType::Other});
    const auto [out, report] = fill_dataset(ds, FillMethod::Spline);
    EXPECT_EQ(out.disks.size(), 2u);
    EXPECT_TRUE(out.tickets.empty());
    ASSERT_EQ(report.dropped_disks.size(), 1u);
    EXPECT_EQ(report.dropped_disks[0].serial, "bad");
    EXPECT_EQ(report.filled_days, 1u);
    for (const auto& [s, d] : out.disks) EXPECT_EQ(d.missing_days(), 0u);

    const auto [same, r2] = fill_dataset(ds, FillMethod::None);
    EXPECT_EQ(same, ds);
}

TEST(FillMethodNames, ParseRoundTrip) {
    for (auto m : {FillMethod::None, FillMethod::Forward, FillMethod::Linear, FillMethod::Spline})
        EXPECT_EQ(parse_fill_method(to_string(m)), m);
    EXPECT_EQ(parse_fill_method("forward"), FillMethod::Forward);
    EXPECT_FALSE(parse_fill_method("cubic").has_value());
}
