#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "tempo/evalharness.hpp"
#include "tempo/temporal.hpp"
#include "test_common.hpp"

using namespace tempo;
using tempo::test::make_classifier;
using tempo::test::ts;

namespace {

std::vector<std::string> corpus_texts() {
    auto rows = read_scenario_csv(tempo::test::data_dir() / "corpus.csv");
    std::vector<std::string> out;
    for (const auto& r : rows) out.push_back(r.text);
    return out;
}

}  // namespace

TEST_CASE("classify: bucket examples") {
    auto c = make_classifier();
    CHECK(c.classify("what is the status of work order WO-1234") == TemporalBucket::Volatile);
    CHECK(c.classify("Failure modes detectable by Chiller 6 Efficiency sensor") ==
          TemporalBucket::Static);
    CHECK(c.classify("show anomalies from yesterday") == TemporalBucket::Relative);
    CHECK(c.classify("sensor readings from 2020-06-01 to 2020-06-07") ==
          TemporalBucket::Anchored);
    CHECK(c.classify("current chiller load") == TemporalBucket::Volatile);
    CHECK(c.classify("June 2020 anomaly report") == TemporalBucket::Anchored);
    // Anchored date rules outrank relative phrases, so natural-month text with
    // a relative qualifier stays on the anchored path.
    CHECK(c.classify("the last week of December 2020") == TemporalBucket::Anchored);
}

TEST_CASE("classify: volatile triggers are sticky under any other content") {
    auto c = make_classifier();
    for (const auto& text : corpus_texts()) {
        for (const char* trigger : {"status", "now", "current", "live", "latest"}) {
            CHECK(c.classify(text + " " + trigger) == TemporalBucket::Volatile);
        }
    }
    // Word boundaries: substrings must not trigger.
    CHECK(c.classify("snowfall analysis for the knowledge base") == TemporalBucket::Static);
    CHECK(c.classify("currently unavailable") == TemporalBucket::Static);
}

TEST_CASE("classify: deterministic and total over randomized corpus samples") {
    auto c = make_classifier();
    auto texts = corpus_texts();
    std::vector<std::string> extras = {"yesterday", "today",     "last week", "2020-06-01",
                                       "now",       "June 2020", "chiller",   "report"};
    std::mt19937_64 rng(7);
    for (int i = 0; i < 10000; ++i) {
        std::string t = texts[rng() % texts.size()];
        if (rng() % 2) t += " " + extras[rng() % extras.size()];
        if (rng() % 3 == 0) t = extras[rng() % extras.size()] + " " + t;
        CHECK(c.classify(t) == c.classify(t));
    }
}

TEST_CASE("resolve_window: relative phrases against the issue timestamp") {
    auto c = make_classifier();
    auto t = ts("2020-06-10T09:00:00Z");

    auto w = c.resolve_window(TemporalBucket::Relative, "yesterday", t);
    REQUIRE(w.has_value());
    CHECK(w->start == ts("2020-06-09T00:00:00Z"));
    CHECK(w->end == ts("2020-06-10T00:00:00Z"));

    w = c.resolve_window(TemporalBucket::Relative, "today", t);
    REQUIRE(w.has_value());
    CHECK(*w == TimeWindow{ts("2020-06-10T00:00:00Z"), ts("2020-06-11T00:00:00Z")});

    // 2020-06-10 is a Wednesday; the previous full Monday-to-Monday week is
    // June 1 to June 8.
    w = c.resolve_window(TemporalBucket::Relative, "last week", t);
    REQUIRE(w.has_value());
    CHECK(*w == TimeWindow{ts("2020-06-01T00:00:00Z"), ts("2020-06-08T00:00:00Z")});

    w = c.resolve_window(TemporalBucket::Relative, "last month", ts("2020-03-05T10:00:00Z"));
    REQUIRE(w.has_value());
    CHECK(*w == TimeWindow{ts("2020-02-01T00:00:00Z"), ts("2020-03-01T00:00:00Z")});

    w = c.resolve_window(TemporalBucket::Relative, "past 24 hours", t);
    REQUIRE(w.has_value());
    CHECK(*w == TimeWindow{ts("2020-06-09T09:00:00Z"), t});

    w = c.resolve_window(TemporalBucket::Relative, "last 3 days", t);
    REQUIRE(w.has_value());
    CHECK(*w == TimeWindow{ts("2020-06-07T09:00:00Z"), t});
}

TEST_CASE("resolve_window: anchored ISO grammar") {
    auto c = make_classifier();
    auto any = ts("2021-01-01T00:00:00Z");

    auto w = c.resolve_window(TemporalBucket::Anchored, "from 2020-06-01 to 2020-06-07", any);
    REQUIRE(w.has_value());
    // End date is inclusive by day.
    CHECK(*w == TimeWindow{ts("2020-06-01T00:00:00Z"), ts("2020-06-08T00:00:00Z")});

    w = c.resolve_window(TemporalBucket::Anchored, "on 2020-06-03", any);
    REQUIRE(w.has_value());
    CHECK(*w == TimeWindow{ts("2020-06-03T00:00:00Z"), ts("2020-06-04T00:00:00Z")});

    // Natural-month phrases extract as anchored but resolve to no window.
    CHECK_FALSE(c.resolve_window(TemporalBucket::Anchored, "June 2020", any).has_value());
    // Calendar-invalid dates fall back to no window rather than erroring.
    CHECK_FALSE(c.resolve_window(TemporalBucket::Anchored, "on 2020-13-40", any).has_value());
    // Reversed ranges are unparseable.
    CHECK_FALSE(c.resolve_window(TemporalBucket::Anchored, "from 2020-06-07 to 2020-06-01", any)
                    .has_value());
    // Same-day range covers that single day.
    w = c.resolve_window(TemporalBucket::Anchored, "from 2020-06-07 to 2020-06-07", any);
    REQUIRE(w.has_value());
    CHECK(*w == TimeWindow{ts("2020-06-07T00:00:00Z"), ts("2020-06-08T00:00:00Z")});
}

TEST_CASE("classify_and_resolve: composition and demotion") {
    auto c = make_classifier();

    Query q1{"q1", "yesterday's anomalies", ts("2020-06-10T09:00:00Z"), ""};
    auto cq1 = c.classify_and_resolve(q1);
    CHECK(cq1.bucket == TemporalBucket::Anchored);
    REQUIRE(cq1.window.has_value());
    CHECK(*cq1.window == TimeWindow{ts("2020-06-09T00:00:00Z"), ts("2020-06-10T00:00:00Z")});

    Query q2{"q2", "current chiller load", ts("2020-06-10T09:00:00Z"), ""};
    auto cq2 = c.classify_and_resolve(q2);
    CHECK(cq2.bucket == TemporalBucket::Volatile);
    CHECK_FALSE(cq2.window.has_value());

    Query q3{"q3", "list all failure modes for Chiller 9", ts("2020-06-10T09:00:00Z"), ""};
    auto cq3 = c.classify_and_resolve(q3);
    CHECK(cq3.bucket == TemporalBucket::Static);
    CHECK_FALSE(cq3.window.has_value());

    // Anchored without a parseable window survives as anchored/no-window (the
    // static path downstream).
    Query q4{"q4", "report for June 2020", ts("2020-06-10T09:00:00Z"), ""};
    auto cq4 = c.classify_and_resolve(q4);
    CHECK(cq4.bucket == TemporalBucket::Anchored);
    CHECK_FALSE(cq4.window.has_value());
}

TEST_CASE("property: no classified query ever carries the relative bucket") {
    auto c = make_classifier();
    auto texts = corpus_texts();
    std::vector<std::string> phrases = {"yesterday",     "today",       "last week",
                                        "last month",    "past 6 days", "past 24 hours",
                                        "next quarter",  "June 2020",   "2020-06-01"};
    std::mt19937_64 rng(11);
    for (int i = 0; i < 2000; ++i) {
        std::string t = texts[rng() % texts.size()] + " " + phrases[rng() % phrases.size()];
        UtcSeconds when = ts("2020-01-01T00:00:00Z") + std::chrono::seconds(rng() % 100000000);
        auto cq = c.classify_and_resolve(Query{"p", t, when, ""});
        CHECK(cq.bucket != TemporalBucket::Relative);
        if (cq.window) CHECK(cq.window->start < cq.window->end);
    }
}

TEST_CASE("property: unresolvable relative text demotes to volatile") {
    auto c = make_classifier();
    (void)c;
    // Force the relative bucket with text whose phrase grammar cannot resolve.
    std::istringstream rules("relative\tsometime recently\n");
    auto forced = TemporalClassifier::from_stream(rules, "inline");
    auto cq = forced.classify_and_resolve(
        Query{"q", "anomalies sometime recently", ts("2020-06-10T00:00:00Z"), ""});
    CHECK(cq.bucket == TemporalBucket::Volatile);
    CHECK_FALSE(cq.window.has_value());
}

TEST_CASE("property: day-granular phrases are equivariant under one-day shifts") {
    auto c = make_classifier();
    std::vector<std::string> phrases = {"yesterday", "today", "past 24 hours", "last 3 days",
                                        "past 5 hours"};
    std::mt19937_64 rng(13);
    for (int i = 0; i < 500; ++i) {
        UtcSeconds t = ts("2019-01-01T00:00:00Z") + std::chrono::seconds(rng() % 200000000);
        for (const auto& phrase : phrases) {
            auto w0 = c.resolve_window(TemporalBucket::Relative, phrase, t);
            auto w1 = c.resolve_window(TemporalBucket::Relative, phrase,
                                       t + std::chrono::days{1});
            REQUIRE(w0.has_value());
            REQUIRE(w1.has_value());
            CHECK(w1->start - w0->start == std::chrono::days{1});
            CHECK(w1->end - w0->end == std::chrono::days{1});
        }
    }
}

TEST_CASE("rule table: comments, precedence, and errors") {
    std::istringstream good("# comment line\n"
                            "\n"
                            "volatile\tlive\n"
                            "anchored\t\\d{4}-\\d{2}-\\d{2}\n"
                            "relative\tyesterday\n");
    auto c = TemporalClassifier::from_stream(good, "inline");
    CHECK(c.rule_count() == 3);
    // First match wins top-down.
    CHECK(c.classify("live data from 2020-06-01") == TemporalBucket::Volatile);
    CHECK(c.classify("data from 2020-06-01 and yesterday") == TemporalBucket::Anchored);
    CHECK(c.classify("nothing matches here") == TemporalBucket::Static);

    std::istringstream bad_bucket("weekly\tpattern\n");
    CHECK_THROWS(TemporalClassifier::from_stream(bad_bucket, "inline"));
    std::istringstream no_tab("volatile pattern\n");
    CHECK_THROWS(TemporalClassifier::from_stream(no_tab, "inline"));
    std::istringstream empty("# only a comment\n");
    CHECK_THROWS(TemporalClassifier::from_stream(empty, "inline"));
    CHECK_THROWS(TemporalClassifier::from_file("/nonexistent/rules.tsv"));
}

TEST_CASE("time_util: iso8601 round trips and day math") {
    CHECK(format_iso8601(ts("2020-06-10T09:30:05Z")) == "2020-06-10T09:30:05Z");
    CHECK(parse_iso8601("2020-06-10") == ts("2020-06-10T00:00:00Z"));
    CHECK(parse_iso8601("2020-06-10 09:30:05") == ts("2020-06-10T09:30:05Z"));
    CHECK_FALSE(parse_iso8601("2020-13-01").has_value());
    CHECK_FALSE(parse_iso8601("2020-02-30").has_value());
    CHECK_FALSE(parse_iso8601("garbage").has_value());
    CHECK_FALSE(parse_iso8601("2020-06-10T25:00:00Z").has_value());

    CHECK(format_iso_date(monday_on_or_before(*parse_iso_date("2020-06-10"))) == "2020-06-08");
    CHECK(format_iso_date(monday_on_or_before(*parse_iso_date("2020-06-08"))) == "2020-06-08");
    CHECK(format_iso_date(monday_on_or_before(*parse_iso_date("2020-06-07"))) == "2020-06-01");
    CHECK(format_iso_date(first_of_month(*parse_iso_date("2020-06-10"))) == "2020-06-01");
}
