#include "tweetscope/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "tweetscope/error.hpp"
#include "tweetscope/unicode.hpp"

namespace tweetscope::ingest {

using nlohmann::json;

std::string_view to_string(TweetKind kind) {
    switch (kind) {
        case TweetKind::original: return "original";
        case TweetKind::retweet: return "retweet";
        case TweetKind::reply: return "reply";
        case TweetKind::quote: return "quote";
    }
    return "original";
}

std::optional<TweetKind> parse_kind(std::string_view s) {
    for (TweetKind k : kAllKinds)
        if (to_string(k) == s) return k;
    return std::nullopt;
}

std::string_view to_string(CaseSource source) {
    return source == CaseSource::ministry ? "ministry" : "fallback";
}

namespace {

bool present(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it != obj.end() && !it->is_null();
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

void collect_hashtags(const json& entities, std::vector<std::string>& out) {
    if (!entities.is_object()) return;
    auto it = entities.find("hashtags");
    if (it == entities.end() || !it->is_array()) return;
    for (const auto& h : *it) {
        if (!h.is_object() || !h.contains("text") || !h["text"].is_string()) continue;
        std::string tag = canonical_hashtag(h["text"].get<std::string>());
        if (!tag.empty() && std::find(out.begin(), out.end(), tag) == out.end()) out.push_back(std::move(tag));
    }
}

const json* find_text(const json& raw) {
    // "text" is truncated when an extended_tweet is present
    if (auto it = raw.find("full_text"); it != raw.end() && it->is_string()) return &*it;
    if (auto ext = raw.find("extended_tweet"); ext != raw.end() && ext->is_object()) {
        auto it = ext->find("full_text");
        if (it != ext->end() && it->is_string()) return &*it;
    }
    if (auto it = raw.find("text"); it != raw.end() && it->is_string()) return &*it;
    return nullptr;
}

}  // namespace

std::string canonical_hashtag(std::string_view tag) {
    std::string s = trim(tag);
    if (!s.empty() && s.front() == '#') s.erase(0, 1);
    return unicode::nfc(unicode::fold_case(unicode::nfc(s)));
}

TweetKind classify_tweet_kind(const json& raw) {
    if (!raw.is_object()) return TweetKind::original;
    if (present(raw, "retweeted_status")) return TweetKind::retweet;
    auto quote = raw.find("is_quote_status");
    if (quote != raw.end() && quote->is_boolean() && quote->get<bool>()) return TweetKind::quote;
    if (present(raw, "in_reply_to_status_id") || present(raw, "in_reply_to_status_id_str")) return TweetKind::reply;
    return TweetKind::original;
}

TweetRecord record_from_archive_json(const json& raw) {
    if (!raw.is_object()) throw InputError("line is not a JSON object");
    TweetRecord r;
    if (auto it = raw.find("id_str"); it != raw.end() && it->is_string()) {
        r.id = it->get<std::string>();
    } else if (auto id = raw.find("id"); id != raw.end() && id->is_number_unsigned()) {
        r.id = std::to_string(id->get<std::uint64_t>());
    }
    if (r.id.empty()) throw InputError("missing id_str");

    auto created = raw.find("created_at");
    if (created == raw.end() || !created->is_string()) throw InputError("missing created_at");
    auto ts = parse_timestamp(created->get<std::string>());
    if (!ts) throw InputError("unparsable created_at '" + created->get<std::string>() + "'");
    r.created_at = *ts;

    const json* text = find_text(raw);
    if (text == nullptr) throw InputError("missing full_text/text");
    r.text = text->get<std::string>();
    unicode::require_valid(r.text);

    r.kind = classify_tweet_kind(raw);
    if (auto lang = raw.find("lang"); lang != raw.end() && lang->is_string()) r.lang = lang->get<std::string>();
    if (auto entities = raw.find("entities"); entities != raw.end()) collect_hashtags(*entities, r.hashtags);
    if (auto ext = raw.find("extended_tweet"); ext != raw.end() && ext->is_object() && ext->contains("entities"))
        collect_hashtags((*ext)["entities"], r.hashtags);
    if (auto user = raw.find("user"); user != raw.end() && user->is_object()) {
        auto handle = user->find("screen_name");
        if (handle != user->end() && handle->is_string()) r.author_handle = handle->get<std::string>();
    }
    return r;
}

ParseResult parse_tweet_stream(std::istream& in) {
    ParseResult result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            result.records.push_back(record_from_archive_json(json::parse(line)));
        } catch (const json::exception& e) {
            result.errors.push_back({line_no, std::string("malformed JSON: ") + e.what()});
        } catch (const InputError& e) {
            result.errors.push_back({line_no, e.what()});
        }
    }
    if (in.bad()) throw InputError("read failure after line " + std::to_string(line_no));
    return result;
}

std::vector<TweetRecord> filter_corpus(const std::vector<TweetRecord>& records, const FilterSpec& spec) {
    if (spec.hashtags.empty()) throw ConfigError("hashtag list is empty");
    std::unordered_set<std::string> wanted;
    for (const auto& h : spec.hashtags) {
        auto tag = canonical_hashtag(h);
        if (!tag.empty()) wanted.insert(std::move(tag));
    }
    if (wanted.empty()) throw ConfigError("hashtag list has no usable entries");

    std::vector<TweetRecord> out;
    for (const auto& r : records) {
        if (r.lang != spec.lang || !spec.kinds.contains(r.kind)) continue;
        const Date day = utc_day(r.created_at);
        if ((spec.first_day && day < *spec.first_day) || (spec.last_day && day > *spec.last_day)) continue;
        const bool tagged = std::any_of(r.hashtags.begin(), r.hashtags.end(),
                                        [&](const std::string& h) { return wanted.contains(canonical_hashtag(h)); });
        if (tagged) out.push_back(r);
    }
    return out;
}

DedupeResult dedupe(std::vector<TweetRecord> records) {
    DedupeResult result;
    std::unordered_set<std::string> seen;
    result.records.reserve(records.size());
    for (auto& r : records) {
        if (seen.insert(r.id).second)
            result.records.push_back(std::move(r));
        else
            ++result.dropped;
    }
    return result;
}

namespace {

bool parse_count(const std::string& field, std::int64_t& out) {
    const char* first = field.data();
    const char* last = first + field.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

}  // namespace

std::vector<CaseCountRow> read_case_csv(std::istream& in, CaseSource source, std::vector<ParseError>& errors) {
    std::vector<CaseCountRow> rows;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::map<Date, std::size_t> seen;
    const std::string where = std::string(to_string(source)) + " ";
    while (std::getline(in, line)) {
        ++line_no;
        const std::string trimmed = trim(line);
        if (trimmed.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(trimmed);
        for (std::string f; std::getline(ss, f, ',');) fields.push_back(trim(f));
        if (!header_seen) {
            if (fields != std::vector<std::string>{"date", "confirmed", "deaths", "recovered"})
                throw InputError(where + "CSV header must be date,confirmed,deaths,recovered");
            header_seen = true;
            continue;
        }
        auto fail = [&](const std::string& msg) { errors.push_back({line_no, where + msg}); };
        if (fields.size() != 4) {
            fail("expected 4 fields, got " + std::to_string(fields.size()));
            continue;
        }
        CaseCountRow row;
        row.source = source;
        row.input_line = line_no;
        auto date = parse_iso_date(fields[0]);
        if (!date) {
            fail("unparsable date '" + fields[0] + "'");
            continue;
        }
        row.date = *date;
        if (!parse_count(fields[1], row.confirmed) || !parse_count(fields[2], row.deaths) ||
            !parse_count(fields[3], row.recovered)) {
            fail("non-integer count");
            continue;
        }
        if (row.confirmed < 0 || row.deaths < 0 || row.recovered < 0) {
            fail("negative count");
            continue;
        }
        if (auto [it, fresh] = seen.emplace(row.date, line_no); !fresh)
            throw ConfigError(where + "CSV repeats date " + format_date(row.date) + " on lines " +
                              std::to_string(it->second) + " and " + std::to_string(line_no));
        rows.push_back(row);
    }
    if (in.bad()) throw InputError(where + "CSV read failure");
    return rows;
}

CaseCountResult merge_case_counts(const std::vector<CaseCountRow>& ministry, const std::vector<CaseCountRow>& fallback) {
    std::map<Date, CaseCountRow> by_date;
    for (const auto& r : ministry) by_date.insert_or_assign(r.date, r);
    for (const auto& r : fallback) by_date.emplace(r.date, r);
    CaseCountResult result;
    result.rows.reserve(by_date.size());
    for (auto& [_, row] : by_date) result.rows.push_back(row);
    return result;
}

CaseCountResult load_case_counts(const std::filesystem::path& ministry_csv,
                                 const std::optional<std::filesystem::path>& fallback_csv) {
    std::vector<ParseError> errors;
    std::ifstream ministry_in(ministry_csv);
    if (!ministry_in) throw InputError("cannot open " + ministry_csv.string());
    auto ministry = read_case_csv(ministry_in, CaseSource::ministry, errors);
    std::vector<CaseCountRow> fallback;
    if (fallback_csv) {
        std::ifstream fallback_in(*fallback_csv);
        if (!fallback_in) throw InputError("cannot open " + fallback_csv->string());
        fallback = read_case_csv(fallback_in, CaseSource::fallback, errors);
    }
    auto result = merge_case_counts(ministry, fallback);
    result.errors = std::move(errors);
    return result;
}

std::vector<std::string> read_hashtag_list(std::istream& in) {
    std::vector<std::string> tags;
    std::string line;
    while (std::getline(in, line)) {
        std::string tag = canonical_hashtag(line);
        if (!tag.empty() && std::find(tags.begin(), tags.end(), tag) == tags.end()) tags.push_back(std::move(tag));
    }
    return tags;
}

CorpusManifest build_manifest(const std::vector<TweetRecord>& retained, std::size_t duplicate_dropped,
                              std::size_t parse_errors, std::size_t corpus_count) {
    CorpusManifest m;
    for (TweetKind k : kAllKinds) m.tweet_count_by_kind[k] = 0;
    for (const auto& r : retained) {
        ++m.tweet_count_by_kind[r.kind];
        const Date day = utc_day(r.created_at);
        if (!m.date_range)
            m.date_range = {day, day};
        else
            m.date_range = std::pair{std::min(m.date_range->first, day), std::max(m.date_range->second, day)};
    }
    m.unique_tweet_count = retained.size();
    m.duplicate_dropped = duplicate_dropped;
    m.parse_errors = parse_errors;
    m.corpus_count = corpus_count;
    return m;
}

json to_json(const CorpusManifest& m) {
    json by_kind = json::object();
    for (const auto& [kind, n] : m.tweet_count_by_kind) by_kind[std::string(to_string(kind))] = n;
    json j{{"tweet_count_by_kind", by_kind},
           {"unique_tweet_count", m.unique_tweet_count},
           {"duplicate_dropped", m.duplicate_dropped},
           {"parse_errors", m.parse_errors},
           {"corpus_count", m.corpus_count}};
    j["date_range"] = m.date_range ? json::array({format_date(m.date_range->first), format_date(m.date_range->second)})
                                   : json(nullptr);
    return j;
}

json to_json(const TweetRecord& r) {
    return json{{"id", r.id},
                {"created_at", format_timestamp(r.created_at)},
                {"kind", to_string(r.kind)},
                {"lang", r.lang},
                {"hashtags", r.hashtags},
                {"author_handle", r.author_handle},
                {"text", r.text}};
}

TweetRecord tweet_from_json(const json& j) {
    TweetRecord r;
    r.id = j.at("id").get<std::string>();
    auto ts = parse_timestamp(j.at("created_at").get<std::string>());
    if (!ts) throw InputError("bad created_at for tweet " + r.id);
    r.created_at = *ts;
    auto kind = parse_kind(j.at("kind").get<std::string>());
    if (!kind) throw InputError("bad kind for tweet " + r.id);
    r.kind = *kind;
    r.lang = j.value("lang", "");
    r.hashtags = j.value("hashtags", std::vector<std::string>{});
    r.author_handle = j.value("author_handle", "");
    r.text = j.at("text").get<std::string>();
    return r;
}

void write_records(std::ostream& out, const std::vector<TweetRecord>& records) {
    for (const auto& r : records) out << to_json(r).dump() << '\n';
}

std::vector<TweetRecord> read_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<TweetRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(tweet_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace tweetscope::ingest
