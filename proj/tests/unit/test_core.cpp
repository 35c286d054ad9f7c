#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace diskprep;

TEST(FailureType, RoundTripsEveryType) {
    for (FailureType t : kAllFailureTypes) {
        auto back = parse_failure_type(to_string(t));
        ASSERT_TRUE(back.has_value());
        EXPECT_EQ(*back, t);
    }
}

TEST(FailureType, ParsingIgnoresCaseAndSeparators) {
    EXPECT_EQ(parse_failure_type("DataCorruption"), FailureType::DataCorruption);
    EXPECT_EQ(parse_failure_type("DATA-CORRUPTION"), FailureType::DataCorruption);
    EXPECT_EQ(parse_failure_type("io request error"), FailureType::IoRequestError);
    EXPECT_FALSE(parse_failure_type("melted").has_value());
}

TEST(Missing, NanIsMissing) {
    EXPECT_TRUE(is_missing(kMissing));
    EXPECT_FALSE(is_missing(0.0));
}

TEST(Fnv1a, KnownVectors) {
    EXPECT_EQ(Fnv1a{}.digest(), 0xcbf29ce484222325ULL);
    EXPECT_EQ(Fnv1a{}.update("a").digest(), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(Fnv1a{}.update("foobar").digest(), 0x85944171f73967e8ULL);
}

TEST(Fnv1a, IncrementalMatchesWhole) {
    EXPECT_EQ(Fnv1a{}.update("foo").update("bar").digest(), Fnv1a{}.update("foobar").digest());
}

TEST(Hex64, FormatsSixteenDigits) {
    EXPECT_EQ(hex64(0), "0000000000000000");
    EXPECT_EQ(hex64(0xdeadbeefULL), "00000000deadbeef");
}

TEST(Splitmix64, KnownSequence) {
    // First outputs of the reference generator seeded with 0.
    std::uint64_t s = 0;
    s += 0x9e3779b97f4a7c15ULL;
    EXPECT_EQ(detail::splitmix64(0), 0xe220a8397b1dcdafULL);
    EXPECT_EQ(detail::splitmix64(s), 0x6e789e6aa1b965f4ULL);
}

TEST(Warnings, SinkCanBeReplaced) {
    testutil::WarningCapture cap;
    warn("hello");
    ASSERT_EQ(cap.messages.size(), 1u);
    EXPECT_EQ(cap.messages[0], "hello");
}

TEST(Errors, HierarchyIsCatchable) {
    EXPECT_THROW(throw UndefinedStatistic("x"), DataError);
    EXPECT_THROW(throw ConfigError("x"), Error);
    EXPECT_THROW(throw DataError("x"), std::runtime_error);
}

TEST(DiskSeries, TruncateAndMissingDays) {
    auto d = testutil::make_disk("s", "m", {0, 1, 3, 6}, {{1, 2, 3, 4}});
    d.last_day = 9;
    EXPECT_EQ(d.missing_days(), 6u);
    d.truncate_after(3);
    EXPECT_EQ(d.size(), 3u);
    EXPECT_EQ(d.last_day, 3);
    EXPECT_EQ(d.missing_days(), 1u);
    EXPECT_NO_THROW(d.validate());
}

TEST(DiskSeries, ValidateRejectsBrokenInvariants) {
    auto d = testutil::make_disk("s", "m", {2, 1}, {{1, 2}});
    d.first_day = 1;
    d.last_day = 2;
    EXPECT_THROW(d.validate(), DataError);
    auto e = testutil::make_disk("s", "m", {1, 2}, {{1}});
    EXPECT_THROW(e.validate(), DataError);
}

TEST(DiskSeries, EqualityTreatsMissingAsEqual) {
    auto a = testutil::make_disk("s", "m", {0, 1}, {{kMissing, 1}});
    auto b = a;
    EXPECT_EQ(a, b);
    b.columns[0][0] = 0;
    EXPECT_NE(a, b);
}

TEST(Dataset, EarliestTicketWins) {
    Dataset ds;
    ds.add_ticket({"x", 10, FailureType::Other});
    ds.add_ticket({"x", 4, FailureType::DiskNotFound});
    ds.add_ticket({"x", 7, FailureType::Unknown});
    ASSERT_NE(ds.ticket_for("x"), nullptr);
    EXPECT_EQ(ds.ticket_for("x")->day, 4);
    EXPECT_EQ(ds.ticket_for("x")->failure_type, FailureType::DiskNotFound);
}

TEST(Dataset, RestrictedToKeepsOneModel) {
    Dataset ds;
    ds.model_attributes["A"] = {"a"};
    ds.model_attributes["B"] = {"b"};
    ds.disks["1"] = testutil::make_disk("1", "A", {0}, {{1}});
    ds.disks["2"] = testutil::make_disk("2", "B", {0}, {{1}});
    ds.add_ticket({"2", 0, FailureType::Other});
    auto r = ds.restricted_to("B");
    EXPECT_EQ(r.disks.size(), 1u);
    EXPECT_EQ(r.tickets.size(), 1u);
    EXPECT_EQ(r.models(), std::vector<std::string>{"B"});
    EXPECT_THROW(ds.attribute_index("A", "zz"), DataError);
}
