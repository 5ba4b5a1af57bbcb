#include <algorithm>
#include <map>

#include "tweetscope/error.hpp"
#include "tweetscope/lda.hpp"

namespace tweetscope::lda {

Dictionary::Dictionary(std::vector<std::string> tokens, std::vector<std::uint32_t> doc_freq)
    : id_to_token_(std::move(tokens)), doc_freq_(std::move(doc_freq)) {
    if (doc_freq_.size() != id_to_token_.size()) throw InputError("dictionary: token/doc_freq length mismatch");
    token_to_id_.reserve(id_to_token_.size());
    for (WordId i = 0; i < id_to_token_.size(); ++i)
        if (!token_to_id_.emplace(id_to_token_[i], i).second)
            throw InputError("dictionary: duplicate token '" + id_to_token_[i] + "'");
}

std::optional<WordId> Dictionary::id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    if (it == token_to_id_.end()) return std::nullopt;
    return it->second;
}

std::uint32_t BowDoc::length() const {
    std::uint32_t n = 0;
    for (const auto& [_, c] : counts) n += c;
    return n;
}

CorpusBuild build_corpus(const std::vector<textnorm::TokenizedDoc>& docs, std::uint32_t min_doc_freq,
                         double max_doc_fraction) {
    if (docs.empty()) throw ConfigError("build_corpus: no documents");
    if (!(max_doc_fraction > 0.0) || max_doc_fraction > 1.0)
        throw ConfigError("build_corpus: max_doc_fraction must be in (0, 1]");

    // First pass: first-appearance order and document frequencies.
    std::unordered_map<std::string, std::uint32_t> first_seen;
    std::vector<std::string> order;
    std::vector<std::uint32_t> df;
    std::size_t nonempty = 0;
    for (const auto& doc : docs) {
        if (doc.tokens.empty()) continue;
        ++nonempty;
        std::vector<std::uint32_t> ids;
        for (const auto& t : doc.tokens) {
            auto [it, fresh] = first_seen.emplace(t, static_cast<std::uint32_t>(order.size()));
            if (fresh) {
                order.push_back(t);
                df.push_back(0);
            }
            ids.push_back(it->second);
        }
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        for (auto i : ids) ++df[i];
    }

    const double max_df = max_doc_fraction * static_cast<double>(nonempty);
    std::vector<std::string> kept_tokens;
    std::vector<std::uint32_t> kept_df;
    std::vector<std::optional<WordId>> remap(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (df[i] < min_doc_freq || static_cast<double>(df[i]) > max_df) continue;
        remap[i] = static_cast<WordId>(kept_tokens.size());
        kept_tokens.push_back(order[i]);
        kept_df.push_back(df[i]);
    }

    CorpusBuild build;
    build.dictionary = Dictionary(std::move(kept_tokens), std::move(kept_df));
    for (const auto& doc : docs) {
        std::map<WordId, std::uint32_t> counts;
        for (const auto& t : doc.tokens)
            if (auto w = remap[first_seen.at(t)]) ++counts[*w];
        if (counts.empty()) {
            build.excluded_ids.push_back(doc.tweet_id);
            continue;
        }
        BowDoc bow{doc.tweet_id, {counts.begin(), counts.end()}};
        build.corpus.total_tokens += bow.length();
        build.corpus.docs.push_back(std::move(bow));
    }
    if (build.corpus.docs.empty()) throw ConfigError("build_corpus: corpus is empty after pruning");
    return build;
}

}  // namespace tweetscope::lda
