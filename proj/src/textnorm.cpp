#include "tweetscope/textnorm.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "tweetscope/error.hpp"
#include "tweetscope/unicode.hpp"

namespace tweetscope::textnorm {

std::vector<CharMapping> default_char_map() {
    std::vector<CharMapping> map{{0x064A, 0x06CC}, {0x0643, 0x06A9}};
    for (char32_t cp = 0x064B; cp <= 0x0652; ++cp) map.push_back({cp, std::nullopt});
    return map;
}

void NormalizationConfig::validate() const {
    std::unordered_map<char32_t, std::optional<char32_t>> seen;
    for (const auto& m : char_map)
        if (!seen.emplace(m.from, m.to).second)
            throw ConfigError("char_map lists U+" + std::to_string(static_cast<unsigned>(m.from)) + " twice");
    for (const auto& m : char_map)
        if (m.to && seen.contains(*m.to))
            throw ConfigError("char_map target U+" + std::to_string(static_cast<unsigned>(*m.to)) +
                              " is also a source");
}

namespace {

constexpr char32_t kSpace = U' ';

bool is_ascii_alnum(char32_t c) {
    return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') || (c >= U'0' && c <= U'9');
}

char32_t ascii_lower(char32_t c) { return (c >= U'A' && c <= U'Z') ? c + 32 : c; }

bool starts_with_ci(const std::u32string& s, std::size_t pos, std::u32string_view prefix) {
    if (pos + prefix.size() > s.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i)
        if (ascii_lower(s[pos + i]) != prefix[i]) return false;
    return true;
}

// Printable ASCII excluding space.
bool is_url_char(char32_t c) { return c > 0x20 && c < 0x7F; }

void strip_urls(std::u32string& s) {
    static constexpr std::array<std::u32string_view, 4> prefixes{U"http://", U"https://", U"www.", U"t.co/"};
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const bool at_word_start = i == 0 || !is_ascii_alnum(s[i - 1]);
        bool matched = false;
        if (at_word_start) {
            for (auto p : prefixes)
                if (starts_with_ci(s, i, p)) {
                    matched = true;
                    break;
                }
        }
        if (matched) {
            while (i < s.size() && is_url_char(s[i])) ++i;
            out.push_back(kSpace);
        } else {
            out.push_back(s[i++]);
        }
    }
    s = std::move(out);
}

bool is_handle_char(char32_t c) { return is_ascii_alnum(c) || c == U'_'; }

void strip_mentions(std::u32string& s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] == U'@' && i + 1 < s.size() && is_handle_char(s[i + 1])) {
            ++i;
            while (i < s.size() && is_handle_char(s[i])) ++i;
            out.push_back(kSpace);
        } else {
            out.push_back(s[i++]);
        }
    }
    s = std::move(out);
}

bool is_hashtag_body(char32_t c) {
    return c == U'_' || (!unicode::is_whitespace(c) && !unicode::is_punctuation(c));
}

// "#کرونا_ویروس" -> " کرونا ویروس"
void rewrite_hashtags(std::u32string& s) {
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] == U'#' && i + 1 < s.size() && is_hashtag_body(s[i + 1])) {
            s[i++] = kSpace;
            while (i < s.size() && is_hashtag_body(s[i])) {
                if (s[i] == U'_') s[i] = kSpace;
                ++i;
            }
        } else {
            ++i;
        }
    }
}

void apply_codepoint_rules(std::u32string& s, const NormalizationConfig& cfg,
                           const std::unordered_map<char32_t, std::optional<char32_t>>& map) {
    std::u32string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        char32_t c = s[i];
        if (auto it = map.find(c); it != map.end()) {
            if (!it->second) continue;
            c = *it->second;
        }
        if (cfg.strip_emoji) {
            if (unicode::is_emoji_component(c)) {
                out.push_back(kSpace);
                continue;
            }
            if (c == unicode::kZwj) {
                const bool prev = i > 0 && unicode::is_emoji_component(s[i - 1]);
                const bool next = i + 1 < s.size() && unicode::is_emoji_component(s[i + 1]);
                if (prev || next) {
                    out.push_back(kSpace);
                    continue;
                }
            }
        }
        if (cfg.strip_punctuation && unicode::is_punctuation(c)) {
            out.push_back(kSpace);
            continue;
        }
        if ((cfg.strip_digits == DigitPolicy::ascii_only && c >= U'0' && c <= U'9') ||
            (cfg.strip_digits == DigitPolicy::all_scripts && unicode::is_decimal_digit(c))) {
            out.push_back(kSpace);
            continue;
        }
        out.push_back(c);
    }
    s = std::move(out);
}

void collapse(std::u32string& s) {
    std::u32string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char32_t c : s) {
        if (unicode::is_whitespace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(kSpace);
        pending_space = false;
        out.push_back(c);
    }
    s = std::move(out);
}

std::string single_pass(std::string_view input, const NormalizationConfig& cfg,
                        const std::unordered_map<char32_t, std::optional<char32_t>>& map) {
    std::u32string s = unicode::decode(unicode::nfc(input));
    if (cfg.strip_urls) strip_urls(s);
    if (cfg.strip_mentions) strip_mentions(s);
    rewrite_hashtags(s);
    apply_codepoint_rules(s, cfg, map);
    if (cfg.collapse_whitespace) collapse(s);
    return unicode::encode(s);
}

}  // namespace

std::string normalize_text(std::string_view raw, const NormalizationConfig& cfg) {
    std::unordered_map<char32_t, std::optional<char32_t>> map;
    for (const auto& m : cfg.char_map) map.emplace(m.from, m.to);

    // Removing one construct can expose another (e.g. an emoji inside a URL
    // scheme when punctuation is kept), so iterate to a fixed point. Every
    // pass after the first only deletes or blanks codepoints.
    std::string current = single_pass(raw, cfg, map);
    for (int pass = 0; pass < 16; ++pass) {
        std::string next = single_pass(current, cfg, map);
        if (next == current) break;
        current = std::move(next);
    }
    return current;
}

std::vector<std::string> tokenize(std::string_view normalized) {
    std::vector<std::string> tokens;
    std::string current;
    for (char32_t c : unicode::decode(normalized)) {
        if (unicode::is_whitespace(c)) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else {
            unicode::append_utf8(current, c);
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

StopwordList::StopwordList(std::unordered_set<std::string> words, std::string source_path)
    : words_(std::move(words)), source_path_(std::move(source_path)) {}

StopwordList StopwordList::load(std::istream& in, const NormalizationConfig& cfg, std::string source_path) {
    std::unordered_set<std::string> words;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line.compare(first, 2, "//") == 0) continue;
        unicode::require_valid(line);
        auto tokens = tokenize(normalize_text(line, cfg));
        if (tokens.empty()) continue;
        if (tokens.size() > 1)
            throw ConfigError(source_path + ":" + std::to_string(line_no) + ": stopword normalizes to " +
                              std::to_string(tokens.size()) + " tokens");
        words.insert(std::move(tokens.front()));
    }
    return StopwordList(std::move(words), std::move(source_path));
}

StopwordList StopwordList::load_file(const std::filesystem::path& path, const NormalizationConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open stopword file " + path.string());
    return load(in, cfg, path.string());
}

FilteredTokens remove_stopwords(const std::vector<std::string>& tokens, const StopwordList& stopwords) {
    FilteredTokens out;
    std::copy_if(tokens.begin(), tokens.end(), std::back_inserter(out.tokens),
                 [&](const std::string& t) { return !stopwords.contains(t); });
    out.empty_document = out.tokens.empty();
    return out;
}

TokenizedDoc preprocess(std::string tweet_id, std::string_view raw, const NormalizationConfig& cfg,
                        const StopwordList& stopwords) {
    return {std::move(tweet_id), remove_stopwords(tokenize(normalize_text(raw, cfg)), stopwords).tokens};
}

void write_docs(std::ostream& out, const std::vector<TokenizedDoc>& docs) {
    for (const auto& d : docs) out << nlohmann::json{{"id", d.tweet_id}, {"tokens", d.tokens}}.dump() << '\n';
}

std::vector<TokenizedDoc> read_docs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<TokenizedDoc> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            docs.push_back({j.at("id").get<std::string>(), j.at("tokens").get<std::vector<std::string>>()});
        } catch (const nlohmann::json::exception& e) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return docs;
}

}  // namespace tweetscope::textnorm
