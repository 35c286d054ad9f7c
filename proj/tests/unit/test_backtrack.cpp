#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"

using namespace diskprep;
using testutil::make_disk;

namespace {

DiskSeries daily(const std::string& serial, Day first, Day last, double value = 1.0) {
    std::vector<Day> days;
    for (Day d = first; d <= last; ++d) days.push_back(d);
    return make_disk(serial, "M", days, {std::vector<double>(days.size(), value)});
}

// Flat noisy counter that steps up `k` days before `failure_day`.
DiskSeries ramping(const std::string& serial, Day failure_day, int k, std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0, 1);
    std::vector<Day> days;
    std::vector<double> v;
    for (Day d = 0; d <= failure_day; ++d) {
        days.push_back(d);
        v.push_back(10 + noise(rng) + (d >= failure_day - k ? 20.0 : 0.0));
    }
    return make_disk(serial, "M", days, {v});
}

} // namespace

TEST(Labels, PositiveSpanCoversNPlusOneDays) {
    Dataset ds;
    ds.model_attributes["M"] = {"a"};
    ds.disks["f"] = daily("f", 0, 300);
    ds.add_ticket({"f", 300, FailureType::DataCorruption});
    const auto plan = label_samples(ds, ds.tickets, 29, false, 400);
    const auto& p = plan.disks.at("f");
    ASSERT_TRUE(p.positive);
    EXPECT_EQ(*p.positive, (DaySpan{271, 300}));
    int pos = 0;
    for (Day d = 0; d <= 300; ++d) pos += plan.label("f", d) == Label::Positive;
    EXPECT_EQ(pos, 30);
    EXPECT_EQ(plan.label("f", 270), Label::Negative);
    EXPECT_EQ(plan.label("f", 301), Label::Excluded);
}

TEST(Labels, ZeroWindowOnlyFailureDay) {
    Dataset ds;
    ds.model_attributes["M"] = {"a"};
    ds.disks["f"] = daily("f", 0, 50);
    ds.disks["h"] = daily("h", 0, 60);
    ds.add_ticket({"f", 50, FailureType::Other});
    const auto plan = label_samples(ds, ds.tickets, 0, true, 60);
    EXPECT_EQ(*plan.disks.at("f").positive, (DaySpan{50, 50}));
    EXPECT_FALSE(plan.disks.at("h").dropped);
    for (Day d = 0; d <= 60; ++d) EXPECT_NE(plan.label("h", d), Label::Dropped);
}

TEST(Labels, ObservationWindowDropsLastNHealthySamples) {
    Dataset ds;
    ds.model_attributes["M"] = {"a"};
    ds.disks["h"] = daily("h", 0, 450);
    const auto on = label_samples(ds, {}, 27, true, 400);
    EXPECT_EQ(*on.disks.at("h").dropped, (DaySpan{374, 400}));
    int dropped = 0;
    for (Day d = 0; d <= 450; ++d) dropped += on.label("h", d) == Label::Dropped;
    EXPECT_EQ(dropped, 27);
    EXPECT_EQ(on.label("h", 373), Label::Negative);
    EXPECT_EQ(on.label("h", 401), Label::Excluded);

    const auto off = label_samples(ds, {}, 27, false, 400);
    for (Day d = 0; d <= 400; ++d) EXPECT_EQ(off.label("h", d), Label::Negative);
}

TEST(Labels, ObservationWindowCountsSamplesNotDays) {
    Dataset ds;
    ds.model_attributes["M"] = {"a"};
    ds.disks["h"] = make_disk("h", "M", {0, 10, 20, 30, 40}, {{1, 1, 1, 1, 1}});
    const auto plan = label_samples(ds, {}, 3, true, 40);
    EXPECT_EQ(*plan.disks.at("h").dropped, (DaySpan{20, 40}));
    // Fully inside the window: every sample dropped.
    ds.disks["s"] = make_disk("s", "M", {38, 39}, {{1, 1}});
    const auto p2 = label_samples(ds, {}, 3, true, 40);
    EXPECT_EQ(p2.label("s", 38), Label::Dropped);
    EXPECT_EQ(p2.label("s", 39), Label::Dropped);
}

TEST(Labels, ShortHistoryTruncatesAtFirstDay) {
    Dataset ds;
    ds.model_attributes["M"] = {"a"};
    ds.disks["f"] = daily("f", 10, 15);
    ds.add_ticket({"f", 15, FailureType::Other});
    const auto plan = label_samples(ds, ds.tickets, 29, true, 100);
    EXPECT_EQ(*plan.disks.at("f").positive, (DaySpan{10, 15}));
}

TEST(Labels, FilteredTypeIsExcludedAndLaterFailureIsHealthy) {
    Dataset ds;
    ds.model_attributes["M"] = {"a"};
    ds.disks["x"] = daily("x", 0, 50);
    ds.disks["late"] = daily("late", 0, 120);
    ds.add_ticket({"x", 50, FailureType::IoRequestError});
    ds.add_ticket({"late", 120, FailureType::DataCorruption});
    TicketMap kept = {{"late", ds.tickets.at("late")}};
    const auto plan = label_samples(ds, kept, 5, true, 100);
    EXPECT_TRUE(plan.disks.at("x").excluded);
    EXPECT_EQ(plan.label("x", 10), Label::Excluded);
    // Fails after the training phase: treated as healthy up to train_end.
    EXPECT_FALSE(plan.disks.at("late").failed);
    EXPECT_EQ(*plan.disks.at("late").dropped, (DaySpan{96, 100}));
    EXPECT_THROW(label_samples(ds, kept, -1, false, 100), ConfigError);
}

TEST(Labels, PartitionIsTotal) {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> len(1, 80), n(0, 30);
    for (int t = 0; t < 100; ++t) {
        Dataset ds;
        ds.model_attributes["M"] = {"a"};
        for (int i = 0; i < 5; ++i) {
            const std::string s = std::to_string(i);
            ds.disks[s] = daily(s, 0, len(rng));
            if (i % 2) ds.add_ticket({s, ds.disks[s].last_day, FailureType::Other});
        }
        const int nn = n(rng);
        const auto plan = label_samples(ds, ds.tickets, nn, true, 60);
        for (const auto& [s, d] : ds.disks) {
            int pos = 0;
            for (Day day : d.days) {
                const Label l = plan.label(s, day);
                if (day > 60) EXPECT_EQ(l, Label::Excluded);
                pos += l == Label::Positive;
                if (l == Label::Dropped) EXPECT_EQ(ds.ticket_for(s) && ds.ticket_for(s)->day <= 60, false);
            }
            if (const TicketEvent* tk = ds.ticket_for(s); tk && tk->day <= 60)
                EXPECT_EQ(pos, std::min(nn, tk->day) + 1);
        }
    }
}

TEST(ChangeToFailure, StepDetected) {
    std::mt19937_64 rng(3);
    const auto d = ramping("f", 200, 12, rng);
    const auto g = change_to_failure_days(d, 0, 200);
    ASSERT_TRUE(g.has_value());
    EXPECT_NEAR(*g, 12, 2);
    EXPECT_FALSE(change_to_failure_days(daily("c", 0, 100), 0, 100).has_value());
}

TEST(PrefailurePeriod, SingletonIsItsOwnPercentile) {
    Dataset ds;
    ds.model_attributes["M"] = {"a"};
    // Clean step 12 days before failure, no noise.
    std::vector<Day> days;
    std::vector<double> v;
    for (Day d = 0; d <= 100; ++d) {
        days.push_back(d);
        v.push_back(d >= 88 ? 50.0 : 0.0);
    }
    ds.disks["f"] = make_disk("f", "M", days, {v});
    ds.add_ticket({"f", 100, FailureType::Other});
    const auto p = prefailure_period(ds, "M", ds.tickets, {"a"});
    EXPECT_EQ(p.n_days, 12);
    EXPECT_EQ(p.per_attribute_p75.at("a"), 12);
    EXPECT_EQ(p.failed_disks, 1u);
}

TEST(PrefailurePeriod, RecoversInjectedRamp) {
    std::mt19937_64 rng(5);
    Dataset ds;
    ds.model_attributes["M"] = {"a"};
    for (int i = 0; i < 40; ++i) {
        const std::string s = "f" + std::to_string(i);
        ds.disks[s] = ramping(s, 150, 20, rng);
        ds.add_ticket({s, 150, FailureType::Other});
    }
    const auto p = prefailure_period(ds, "M", ds.tickets, {"a"});
    EXPECT_GE(p.n_days, 18);
    EXPECT_LE(p.n_days, 22);
}

TEST(PrefailurePeriod, MaxOverAttributes) {
    Dataset ds;
    ds.model_attributes["M"] = {"a", "b"};
    std::vector<Day> days;
    std::vector<double> a, b;
    for (Day d = 0; d <= 100; ++d) {
        days.push_back(d);
        a.push_back(d >= 95 ? 9.0 : 0.0);
        b.push_back(d >= 80 ? 9.0 : 0.0);
    }
    ds.disks["f"] = make_disk("f", "M", days, {a, b});
    ds.add_ticket({"f", 100, FailureType::Other});
    const auto p = prefailure_period(ds, "M", ds.tickets, {"a", "b"});
    EXPECT_EQ(p.per_attribute_p75.at("a"), 5);
    EXPECT_EQ(p.per_attribute_p75.at("b"), 20);
    EXPECT_EQ(p.n_days, 20);
}

TEST(PrefailurePeriod, NoDetectionIsAnError) {
    Dataset ds;
    ds.model_attributes["M"] = {"a"};
    ds.disks["f"] = daily("f", 0, 100);
    ds.add_ticket({"f", 100, FailureType::Other});
    EXPECT_THROW(prefailure_period(ds, "M", ds.tickets, {"a"}), DataError);
    BacktrackOptions bad;
    bad.detection_window = 1;
    EXPECT_THROW(prefailure_period(ds, "M", ds.tickets, {"a"}, bad), ConfigError);
}
