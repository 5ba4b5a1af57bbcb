#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace tweetscope::textnorm {

enum class DigitPolicy { ascii_only, all_scripts, none };

struct CharMapping {
    char32_t from = 0;
    std::optional<char32_t> to;  // nullopt deletes the codepoint
};

// Arabic Yeh -> Persian Yeh, Arabic Kaf -> Persian Kaf, tashkil U+064B..U+0652 deleted.
std::vector<CharMapping> default_char_map();

struct NormalizationConfig {
    bool strip_urls = true;
    bool strip_mentions = true;
    bool strip_emoji = true;
    bool strip_punctuation = true;
    DigitPolicy strip_digits = DigitPolicy::all_scripts;
    std::vector<CharMapping> char_map = default_char_map();
    bool collapse_whitespace = true;

    // Throws ConfigError if char_map has a duplicate source or maps onto a source.
    void validate() const;
};

std::string normalize_text(std::string_view raw, const NormalizationConfig& cfg = {});

// Splits on Unicode whitespace. ZWNJ stays inside tokens.
std::vector<std::string> tokenize(std::string_view normalized);

class StopwordList {
public:
    StopwordList() = default;
    StopwordList(std::unordered_set<std::string> words, std::string source_path = {});

    // UTF-8, one token per line, "//" comments, blank lines skipped. Each
    // entry is normalized with cfg; entries that normalize to nothing are
    // dropped, entries that split into several tokens are a ConfigError.
    static StopwordList load(std::istream& in, const NormalizationConfig& cfg, std::string source_path = {});
    static StopwordList load_file(const std::filesystem::path& path, const NormalizationConfig& cfg);

    bool contains(const std::string& token) const { return words_.contains(token); }
    std::size_t size() const { return words_.size(); }
    const std::unordered_set<std::string>& words() const { return words_; }
    const std::string& source_path() const { return source_path_; }

private:
    std::unordered_set<std::string> words_;
    std::string source_path_;
};

struct FilteredTokens {
    std::vector<std::string> tokens;
    bool empty_document = false;
};

FilteredTokens remove_stopwords(const std::vector<std::string>& tokens, const StopwordList& stopwords);

struct TokenizedDoc {
    std::string tweet_id;
    std::vector<std::string> tokens;
};

TokenizedDoc preprocess(std::string tweet_id, std::string_view raw, const NormalizationConfig& cfg,
                        const StopwordList& stopwords);

void write_docs(std::ostream& out, const std::vector<TokenizedDoc>& docs);
std::vector<TokenizedDoc> read_docs(const std::filesystem::path& path);

}  // namespace tweetscope::textnorm
