#include <doctest.h>

#include <fstream>
#include <sstream>

#include "support/synth.hpp"
#include "tweetscope/error.hpp"
#include "tweetscope/ingest.hpp"

using namespace tweetscope;
using namespace tweetscope::ingest;
using nlohmann::json;

namespace {

ParseResult parse_string(const std::string& s) {
    std::istringstream in(s);
    return parse_tweet_stream(in);
}

FilterSpec covid_spec() {
    FilterSpec spec;
    spec.hashtags = {"کرونا", "covid19"};
    return spec;
}

TweetRecord rec(std::string id, TweetKind kind = TweetKind::original, std::string lang = "fa",
                std::vector<std::string> tags = {"کرونا"}) {
    TweetRecord r;
    r.id = std::move(id);
    r.created_at = *parse_timestamp("2020-03-01T12:00:00Z");
    r.text = "متن";
    r.kind = kind;
    r.lang = std::move(lang);
    r.hashtags = std::move(tags);
    return r;
}

}  // namespace

TEST_CASE("tweet kind precedence") {
    CHECK(classify_tweet_kind(json{{"id_str", "1"}}) == TweetKind::original);
    CHECK(classify_tweet_kind(json{{"retweeted_status", {{"id", 1}}}}) == TweetKind::retweet);
    CHECK(classify_tweet_kind(json{{"in_reply_to_status_id_str", "9"}}) == TweetKind::reply);
    CHECK(classify_tweet_kind(json{{"in_reply_to_status_id", nullptr}}) == TweetKind::original);
    CHECK(classify_tweet_kind(json{{"is_quote_status", true}}) == TweetKind::quote);
    CHECK(classify_tweet_kind(json{{"is_quote_status", false}}) == TweetKind::original);
    // a retweet of a quote is a retweet; a quoting reply is a quote
    CHECK(classify_tweet_kind(json{{"retweeted_status", json::object()}, {"is_quote_status", true}}) ==
          TweetKind::retweet);
    CHECK(classify_tweet_kind(json{{"is_quote_status", true}, {"in_reply_to_status_id_str", "9"}}) ==
          TweetKind::quote);
}

TEST_CASE("archive record fields") {
    const auto r = record_from_archive_json(json::parse(
        R"({"id":1234,"created_at":"Wed Mar 11 20:00:00 +0000 2020","text":"short",
            "extended_tweet":{"full_text":"long form","entities":{"hashtags":[{"text":"#Covid19"}]}},
            "lang":"fa","user":{"screen_name":"who"}})"));
    CHECK(r.id == "1234");
    CHECK(format_timestamp(r.created_at) == "2020-03-11T20:00:00Z");
    CHECK(r.text == "long form");
    CHECK(r.author_handle == "who");
    REQUIRE(r.hashtags.size() == 1);
    CHECK(r.hashtags[0] == "covid19");
    CHECK_THROWS_AS(record_from_archive_json(json{{"id_str", "1"}}), InputError);
    CHECK_THROWS_AS(record_from_archive_json(json{{"id_str", "1"}, {"created_at", "yesterday"}, {"text", "x"}}),
                    InputError);
}

TEST_CASE("malformed lines are reported and skipped") {
    const auto res = parse_string("{\"id_str\":\"1\",\"created_at\":\"2020-03-01T00:00:00Z\",\"text\":\"a\"}\n"
                                  "not json\n\n"
                                  "{\"id_str\":\"2\",\"created_at\":\"2020-03-01T00:00:00Z\",\"text\":\"b\"}\n");
    CHECK(res.records.size() == 2);
    REQUIRE(res.errors.size() == 1);
    CHECK(res.errors[0].line == 2);
}

TEST_CASE("filter keeps language, kind, hashtag and window") {
    const std::vector<TweetRecord> in{rec("1"), rec("2", TweetKind::retweet), rec("3", TweetKind::original, "en"),
                                      rec("4", TweetKind::original, "fa", {"other"}),
                                      rec("5", TweetKind::original, "fa", {"COVID19"})};
    const auto out = filter_corpus(in, covid_spec());
    REQUIRE(out.size() == 2);
    CHECK(out[0].id == "1");
    CHECK(out[1].id == "5");

    auto spec = covid_spec();
    spec.first_day = parse_iso_date("2020-03-02");
    CHECK(filter_corpus(in, spec).empty());
    spec.hashtags.clear();
    CHECK_THROWS_AS(filter_corpus(in, spec), ConfigError);
}

TEST_CASE("hashtags match after NFC and case folding") {
    CHECK(canonical_hashtag("#COVID19") == "covid19");
    CHECK(canonical_hashtag("Caf\xC3\xA9") == canonical_hashtag("CAFE\xCC\x81"));
    std::istringstream list("#کرونا\n\n  covid19  \n##double\n");
    const auto tags = read_hashtag_list(list);
    REQUIRE(tags.size() == 3);
    CHECK(tags[0] == "کرونا");
    CHECK(tags[2] == "#double");
}

TEST_CASE("dedupe by id keeps first occurrence and text duplicates") {
    auto a = rec("1");
    auto b = rec("1");
    b.text = "changed";
    auto c = rec("2");
    auto d = rec("3");  // same text as c, different id
    const auto res = dedupe({a, b, c, d});
    CHECK(res.dropped == 1);
    REQUIRE(res.records.size() == 3);
    CHECK(res.records[0].text == "متن");
}

TEST_CASE("dedupe property: unique ids and conservation") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<TweetRecord> in;
        const auto n = rng.below(60);
        for (std::uint64_t i = 0; i < n; ++i) in.push_back(rec(std::to_string(rng.below(20))));
        const auto res = dedupe(in);
        std::set<std::string> ids;
        for (const auto& r : res.records) ids.insert(r.id);
        CHECK(ids.size() == res.records.size());
        CHECK(res.records.size() + res.dropped == in.size());
    }
}

TEST_CASE("fixture manifest matches hand counts") {
    std::ifstream in(synth::fixture("archive_mixed.ndjson"));
    auto parsed = parse_tweet_stream(in);
    CHECK(parsed.errors.size() == 1);
    CHECK(parsed.errors[0].line == 5);
    auto deduped = dedupe(std::move(parsed.records));
    CHECK(deduped.dropped == 1);

    std::ifstream tags_in(synth::fixture("hashtags.txt"));
    FilterSpec spec;
    spec.hashtags = read_hashtag_list(tags_in);
    spec.kinds = {std::begin(kAllKinds), std::end(kAllKinds)};
    const auto retained = filter_corpus(deduped.records, spec);
    spec.kinds = {TweetKind::original};
    const auto corpus = filter_corpus(retained, spec);
    const auto m = build_manifest(retained, deduped.dropped, parsed.errors.size(), corpus.size());

    CHECK(m.tweet_count_by_kind.at(TweetKind::original) == 4);
    CHECK(m.tweet_count_by_kind.at(TweetKind::retweet) == 1);
    CHECK(m.tweet_count_by_kind.at(TweetKind::reply) == 1);
    CHECK(m.tweet_count_by_kind.at(TweetKind::quote) == 1);
    CHECK(m.unique_tweet_count == 7);
    CHECK(m.duplicate_dropped == 1);
    CHECK(m.corpus_count == 4);
    REQUIRE(m.date_range);
    CHECK(format_date(m.date_range->first) == "2020-03-01");
    CHECK(format_date(m.date_range->second) == "2020-03-05");
    std::size_t sum = 0;
    for (const auto& [kind, n] : m.tweet_count_by_kind) sum += n;
    CHECK(sum == m.unique_tweet_count);
}

TEST_CASE("case CSV parsing") {
    std::vector<ParseError> errors;
    std::istringstream ok("date,confirmed,deaths,recovered\n2020-03-01,1,2,3\n2020-03-02,-1,0,0\nbad,1,1,1\n");
    const auto rows = read_case_csv(ok, CaseSource::ministry, errors);
    CHECK(rows.size() == 1);
    CHECK(errors.size() == 2);

    std::istringstream no_header("2020-03-01,1,2,3\n");
    CHECK_THROWS_AS(read_case_csv(no_header, CaseSource::ministry, errors), InputError);
    std::istringstream dup("date,confirmed,deaths,recovered\n2020-03-01,1,2,3\n2020-03-01,4,5,6\n");
    CHECK_THROWS_AS(read_case_csv(dup, CaseSource::ministry, errors), ConfigError);
}

TEST_CASE("ministry rows take precedence over fallback") {
    const auto merged = load_case_counts(synth::fixture("cases_ministry.csv"), synth::fixture("cases_fallback.csv"));
    REQUIRE(merged.rows.size() == 5);
    CHECK(merged.errors.empty());
    std::vector<std::string> dates;
    for (const auto& r : merged.rows) dates.push_back(format_date(r.date));
    CHECK(dates == std::vector<std::string>{"2020-03-01", "2020-03-02", "2020-03-03", "2020-03-04", "2020-03-05"});
    CHECK(merged.rows[1].confirmed == 1501);
    CHECK(merged.rows[1].source == CaseSource::ministry);
    CHECK(merged.rows[2].source == CaseSource::fallback);
    CHECK(merged.rows[2].confirmed == 2336);
}

TEST_CASE("record JSON round trip") {
    auto r = rec("42", TweetKind::quote);
    r.author_handle = "x";
    const auto back = tweet_from_json(to_json(r));
    CHECK(back.id == r.id);
    CHECK(back.kind == r.kind);
    CHECK(back.created_at == r.created_at);
    CHECK(back.hashtags == r.hashtags);
    CHECK(back.author_handle == "x");
}
