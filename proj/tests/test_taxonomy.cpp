#include <gtest/gtest.h>

#include "needcast/taxonomy.hpp"
#include "test_util.hpp"

using namespace needcast;
using needcast::testing::TempDir;

namespace {

const char* kTwoRows = "food\t\t1\tFood\nrestaurant\tfood\t2\tRestaurant\n";

std::string error_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(Taxonomy, LoadsMinimalTree) {
    TempDir dir;
    auto tax = load_taxonomy(dir.file("t.tsv", kTwoRows));
    EXPECT_EQ(tax.size(), 2u);
    EXPECT_EQ(tax.level(ActivityId{"restaurant"}), 2);
    EXPECT_EQ(*tax.parent(ActivityId{"restaurant"}), ActivityId{"food"});
    EXPECT_EQ(tax.at_level(ActivityId{"restaurant"}, 1), ActivityId{"food"});
    EXPECT_FALSE(tax.at_level(ActivityId{"food"}, 2));
}

TEST(Taxonomy, RejectsLevelThree) {
    TempDir dir;
    auto path = dir.file("t.tsv", "food\t\t1\tFood\nx\tfood\t3\tX\n");
    auto msg = error_of([&] { load_taxonomy(path); });
    EXPECT_NE(msg.find("level outside {1,2}"), std::string::npos) << msg;
    EXPECT_NE(msg.find(":2:"), std::string::npos) << msg;
}

TEST(Taxonomy, RejectsStructuralErrors) {
    TempDir dir;
    auto orphan = error_of([&] { load_taxonomy(dir.file("a.tsv", "r\tnope\t2\tR\n")); });
    EXPECT_NE(orphan.find("orphan parent"), std::string::npos) << orphan;

    auto dup = error_of([&] { load_taxonomy(dir.file("b.tsv", "f\t\t1\tF\nf\t\t1\tG\n")); });
    EXPECT_NE(dup.find("duplicate id"), std::string::npos) << dup;
    EXPECT_NE(dup.find(":2:"), std::string::npos) << dup;

    auto malformed = error_of([&] { load_taxonomy(dir.file("c.tsv", "f\t\t1\tF\nbroken\t1\n")); });
    EXPECT_NE(malformed.find(":2:"), std::string::npos) << malformed;

    auto nested = error_of([&] { load_taxonomy(dir.file("d.tsv", "f\t\t1\tF\nr\tf\t2\tR\ns\tr\t2\tS\n")); });
    EXPECT_NE(nested.find("not level 1"), std::string::npos) << nested;

    auto rootless = error_of([&] { load_taxonomy(dir.file("e.tsv", "r\t\t2\tR\n")); });
    EXPECT_NE(rootless.find("without parent"), std::string::npos) << rootless;

    EXPECT_THROW(load_taxonomy(dir.path("missing.tsv")), DataError);
}

TEST(Taxonomy, PaperScaleCounts) {
    std::ostringstream ss;
    for (int t = 0; t < 9; ++t) ss << "top" << t << "\t\t1\tTop " << t << '\n';
    for (int s = 0; s < 287; ++s) ss << "sub" << s << "\ttop" << s % 9 << "\t2\tSub " << s << '\n';
    TempDir dir;
    auto tax = load_taxonomy(dir.file("t.tsv", ss.str()));
    EXPECT_EQ(tax.activities_at(1).size(), 9u);
    EXPECT_EQ(tax.activities_at(2).size(), 287u);
}

TEST(Taxonomy, RoundTrip) {
    TempDir dir;
    auto tax = load_taxonomy(dir.file("t.tsv", "b\t\t1\tBee\na\t\t1\tAy\nb1\tb\t2\tBee one\na1\ta\t2\tAy one\n"));
    std::ostringstream out;
    write_taxonomy(out, tax);
    auto again = load_taxonomy(dir.file("t2.tsv", out.str()));
    EXPECT_EQ(tax, again);
}

TEST(Venues, LoadAndValidate) {
    TempDir dir;
    auto tax = load_taxonomy(dir.file("t.tsv", kTwoRows));
    auto venues = load_venues(dir.file("v.tsv", "v1\tJoe's\tDublin\trestaurant\tIE\n"), tax);
    ASSERT_EQ(venues.size(), 1u);
    EXPECT_EQ(venues.at(VenueId{"v1"}).city, "Dublin");

    auto msg = error_of([&] { load_venues(dir.file("bad.tsv", "v1\tX\tY\tcinema\tUS\n"), tax); });
    EXPECT_NE(msg.find("cinema"), std::string::npos) << msg;

    EXPECT_THROW(load_venues(dir.file("dup.tsv", "v1\tA\tB\tfood\tUS\nv1\tC\tD\tfood\tUS\n"), tax), DataError);
}

TEST(Venues, CountryFilter) {
    TempDir dir;
    auto tax = load_taxonomy(dir.file("t.tsv", kTwoRows));
    std::string rows;
    const char* codes[] = {"US", "GB", "IE", "AU", "NZ", "ZA", "DE", "JP", "BR"};
    for (int i = 0; i < 9; ++i) rows += "v" + std::to_string(i) + "\tN\tC\tfood\t" + codes[i] + "\n";
    auto venues = load_venues(dir.file("v.tsv", rows), tax, {"US", "GB", "IE", "AU", "NZ", "ZA"});
    EXPECT_EQ(venues.size(), 6u);
    for (const auto& [id, v] : venues) EXPECT_NE(v.country, "DE");
}

TEST(Venues, RoundTripWithCheckins) {
    TempDir dir;
    auto tax = load_taxonomy(dir.file("t.tsv", kTwoRows));
    auto venues = load_venues(dir.file("v.tsv", "v2\tB\tC\tfood\tUS\nv1\tA\tC\trestaurant\tGB\n"), tax);
    std::ostringstream vs;
    write_venues(vs, venues);
    EXPECT_EQ(load_venues(dir.file("v2.tsv", vs.str()), tax), venues);

    auto log = load_checkins(dir.file("c.tsv", "u1\tv1\t2012-04-03T18:00:09Z\t-240\nu2\tv2\t2012-04-04T01:02:03Z\t60\n"));
    ASSERT_EQ(log.size(), 2u);
    EXPECT_EQ(log[0].tz_offset_minutes, -240);
    std::ostringstream cs;
    write_checkins(cs, log);
    EXPECT_EQ(load_checkins(dir.file("c2.tsv", cs.str())), log);

    EXPECT_THROW(load_checkins(dir.file("bad.tsv", "u\tv\t2012-13-03T18:00:09Z\t0\n")), DataError);
}

TEST(Venues, RejectsTabsOnWrite) {
    VenueTable t;
    t[VenueId{"v"}] = Venue{VenueId{"v"}, "a\tb", "c", ActivityId{"food"}, "US"};
    std::ostringstream os;
    EXPECT_THROW(write_venues(os, t), DataError);
}

TEST(TopVenues, OrdersByCountThenId) {
    TempDir dir;
    auto tax = load_taxonomy(dir.file("t.tsv", kTwoRows));
    auto venues = load_venues(dir.file("v.tsv", "c\tC\tX\trestaurant\tUS\nb\tB\tX\trestaurant\tUS\na\tA\tX\trestaurant\tUS\n"), tax);
    CheckInLog log;
    auto add = [&](const char* v, int n) {
        for (int i = 0; i < n; ++i) log.push_back({UserId{"u"}, VenueId{v}, needcast::testing::at_minutes(i), 0});
    };
    add("a", 2);
    add("b", 5);
    add("c", 2);
    auto top = top_venues_per_category(tax, venues, log, 200);
    const auto& list = top.at(ActivityId{"restaurant"});
    ASSERT_EQ(list.size(), 3u);
    EXPECT_EQ(list[0], (VenueVisits{VenueId{"b"}, 5}));
    EXPECT_EQ(list[1], (VenueVisits{VenueId{"a"}, 2}));
    EXPECT_EQ(list[2], (VenueVisits{VenueId{"c"}, 2}));
    EXPECT_THROW(top_venues_per_category(tax, venues, log, 0), UsageError);
}

TEST(TopVenues, MatchesFullScanAndIsPrefixStable) {
    std::mt19937 rng(7);
    std::map<ActivityId, Activity> acts;
    acts[ActivityId{"top"}] = {"Top", 1, std::nullopt};
    for (int s = 0; s < 4; ++s) acts[ActivityId{"s" + std::to_string(s)}] = {"S", 2, ActivityId{"top"}};
    acts[ActivityId{"empty"}] = {"Empty", 2, ActivityId{"top"}};
    ActivityTaxonomy tax{acts};

    for (int trial = 0; trial < 20; ++trial) {
        VenueTable venues;
        for (int v = 0; v < 30; ++v) {
            VenueId id{"v" + std::to_string(v)};
            venues[id] = Venue{id, "n", "c", ActivityId{"s" + std::to_string(rng() % 4)}, "US"};
        }
        CheckInLog log;
        for (int c = 0; c < 200; ++c) {
            log.push_back({UserId{"u"}, VenueId{"v" + std::to_string(rng() % 30)}, needcast::testing::at_minutes(c), 0});
        }
        // full-scan tally
        std::map<std::string, long> tally;
        for (const auto& c : log) {
            long n = 0;
            for (const auto& d : log) n += d.venue == c.venue;
            tally[c.venue.str()] = n;
        }
        auto all = top_venues_per_category(tax, venues, log, 1000);
        EXPECT_TRUE(all.at(ActivityId{"empty"}).empty());
        for (const auto& [a, list] : all) {
            for (std::size_t r = 0; r < list.size(); ++r) {
                EXPECT_EQ(list[r].checkins, tally.count(list[r].venue.str()) ? tally[list[r].venue.str()] : 0);
                if (r) {
                    EXPECT_TRUE(list[r - 1].checkins > list[r].checkins ||
                                (list[r - 1].checkins == list[r].checkins && list[r - 1].venue < list[r].venue));
                }
            }
        }
        for (std::size_t k = 1; k < 10; ++k) {
            auto small = top_venues_per_category(tax, venues, log, k);
            auto big = top_venues_per_category(tax, venues, log, k + 1);
            for (const auto& [a, list] : small) {
                const auto& longer = big.at(a);
                ASSERT_LE(list.size(), longer.size());
                EXPECT_TRUE(std::equal(list.begin(), list.end(), longer.begin()));
            }
        }
    }
}

TEST(Timestamps, ParseAndFormat) {
    auto t = parse_iso8601("2012-04-03T18:00:09Z");
    ASSERT_TRUE(t);
    EXPECT_EQ(format_iso8601(*t), "2012-04-03T18:00:09Z");
    EXPECT_TRUE(parse_iso8601("2012-04-03T18:00:09+00:00"));
    EXPECT_FALSE(parse_iso8601("2012-02-30T00:00:00Z"));
    EXPECT_FALSE(parse_iso8601("yesterday"));
}
