#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tweetscope/date.hpp"

namespace tweetscope::ingest {

enum class TweetKind { original, retweet, reply, quote };

inline constexpr TweetKind kAllKinds[] = {TweetKind::original, TweetKind::retweet, TweetKind::reply,
                                          TweetKind::quote};

std::string_view to_string(TweetKind kind);
std::optional<TweetKind> parse_kind(std::string_view s);

struct TweetRecord {
    std::string id;
    Timestamp created_at{};
    std::string text;
    TweetKind kind = TweetKind::original;
    std::string lang;
    std::vector<std::string> hashtags;  // no leading '#', case-folded
    std::string author_handle;
};

struct ParseError {
    std::size_t line = 0;  // 1-based
    std::string message;
};

struct ParseResult {
    std::vector<TweetRecord> records;
    std::vector<ParseError> errors;
};

// Archive line-delimited JSON (v1.1 field names). Malformed lines are
// reported and skipped; a stream failure other than EOF throws InputError.
ParseResult parse_tweet_stream(std::istream& in);

TweetKind classify_tweet_kind(const nlohmann::json& raw);

// Throws InputError describing the first schema violation.
TweetRecord record_from_archive_json(const nlohmann::json& raw);

struct FilterSpec {
    std::vector<std::string> hashtags;
    std::string lang = "fa";
    std::set<TweetKind> kinds{TweetKind::original};
    std::optional<Date> first_day;  // inclusive, UTC
    std::optional<Date> last_day;   // inclusive, UTC
};

// Retains records in the language, of an accepted kind, carrying at least
// one listed hashtag (exact match after NFC + case folding), inside the
// optional date window. Order preserved. Empty hashtag list is a ConfigError.
std::vector<TweetRecord> filter_corpus(const std::vector<TweetRecord>& records, const FilterSpec& spec);

struct DedupeResult {
    std::vector<TweetRecord> records;
    std::size_t dropped = 0;
};

// First occurrence per id wins. Identical texts under different ids are kept.
DedupeResult dedupe(std::vector<TweetRecord> records);

enum class CaseSource { ministry, fallback };
std::string_view to_string(CaseSource source);

struct CaseCountRow {
    Date date{};
    std::int64_t confirmed = 0;
    std::int64_t deaths = 0;
    std::int64_t recovered = 0;
    CaseSource source = CaseSource::ministry;
    std::size_t input_line = 0;
};

struct CaseCountResult {
    std::vector<CaseCountRow> rows;  // sorted by date, one per date
    std::vector<ParseError> errors;  // row-level problems, prefixed by file
};

// Row-level problems are collected; a duplicate date inside one file is a
// ConfigError.
std::vector<CaseCountRow> read_case_csv(std::istream& in, CaseSource source, std::vector<ParseError>& errors);
CaseCountResult merge_case_counts(const std::vector<CaseCountRow>& ministry, const std::vector<CaseCountRow>& fallback);
CaseCountResult load_case_counts(const std::filesystem::path& ministry_csv,
                                 const std::optional<std::filesystem::path>& fallback_csv);

// One hashtag per line; a single leading '#' is stripped, never a comment.
std::vector<std::string> read_hashtag_list(std::istream& in);
std::string canonical_hashtag(std::string_view tag);

struct CorpusManifest {
    std::map<TweetKind, std::size_t> tweet_count_by_kind;
    std::optional<std::pair<Date, Date>> date_range;
    std::size_t unique_tweet_count = 0;
    std::size_t duplicate_dropped = 0;
    std::size_t parse_errors = 0;
    std::size_t corpus_count = 0;  // records passing the kind filter
};

CorpusManifest build_manifest(const std::vector<TweetRecord>& retained, std::size_t duplicate_dropped,
                              std::size_t parse_errors, std::size_t corpus_count);

nlohmann::json to_json(const CorpusManifest& m);
nlohmann::json to_json(const TweetRecord& r);
TweetRecord tweet_from_json(const nlohmann::json& j);

void write_records(std::ostream& out, const std::vector<TweetRecord>& records);
std::vector<TweetRecord> read_records(const std::filesystem::path& path);

}  // namespace tweetscope::ingest
