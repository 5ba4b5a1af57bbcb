#include <algorithm>
#include <numeric>
#include <ostream>
#include <set>

#include "tweetscope/lda.hpp"
#include "tweetscope/util.hpp"

namespace tweetscope::lda {

std::vector<std::size_t> word_association_counts(const LdaModel& model) {
    std::vector<std::size_t> counts(model.num_topics(), 0);
    for (TopicId k = 0; k < model.num_topics(); ++k)
        for (WordId w = 0; w < model.vocab_size(); ++w)
            if (model.n_kw(k, w) > 0) ++counts[k];
    return counts;
}

namespace {

std::vector<std::pair<std::string, double>> top_words_of(const LdaModel& model, TopicId k, std::size_t n) {
    std::vector<WordId> ids(model.vocab_size());
    std::iota(ids.begin(), ids.end(), 0);
    const auto phi = model.topic_word_dist(k);
    n = std::min(n, ids.size());
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end(),
                      [&](WordId a, WordId b) { return phi[a] != phi[b] ? phi[a] > phi[b] : a < b; });
    std::vector<std::pair<std::string, double>> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.emplace_back(model.dictionary().token(ids[i]), phi[ids[i]]);
    return out;
}

}  // namespace

std::vector<TopicSummary> topic_prevalence_report(const LdaModel& model, ReportOrder order, std::size_t count,
                                                  std::size_t top_words, std::size_t starred_topics) {
    const std::uint32_t K = model.num_topics();
    std::vector<std::size_t> dominant(K, 0);
    for (std::size_t d = 0; d < model.num_docs(); ++d) ++dominant[model.dominant_topic(d)];

    const auto assoc = word_association_counts(model);
    std::vector<TopicId> by_assoc(K);
    std::iota(by_assoc.begin(), by_assoc.end(), 0);
    std::stable_sort(by_assoc.begin(), by_assoc.end(), [&](TopicId a, TopicId b) { return assoc[a] > assoc[b]; });
    std::set<TopicId> starred(by_assoc.begin(), by_assoc.begin() + std::min<std::size_t>(starred_topics, K));

    std::vector<TopicId> ranking(K);
    std::iota(ranking.begin(), ranking.end(), 0);
    std::stable_sort(ranking.begin(), ranking.end(), [&](TopicId a, TopicId b) { return dominant[a] > dominant[b]; });
    if (order == ReportOrder::ascending) std::reverse(ranking.begin(), ranking.end());
    ranking.resize(std::min<std::size_t>(count, K));

    const double D = static_cast<double>(model.num_docs());
    std::vector<TopicSummary> report;
    report.reserve(ranking.size());
    for (TopicId k : ranking) {
        TopicSummary s;
        s.topic_id = k;
        s.top_words = top_words_of(model, k, top_words);
        s.dominant_docs = dominant[k];
        s.percent = static_cast<double>(dominant[k]) / D;
        s.nonzero_word_count = assoc[k];
        s.starred = starred.contains(k);
        report.push_back(std::move(s));
    }
    return report;
}

void write_report_csv(std::ostream& out, const std::vector<TopicSummary>& report) {
    out << "topic_id,percent,starred,top_words\n";
    for (const auto& s : report) {
        out << s.topic_id << ',' << format_double(s.percent) << ',' << (s.starred ? 1 : 0) << ',';
        for (std::size_t i = 0; i < s.top_words.size(); ++i) out << (i ? "|" : "") << s.top_words[i].first;
        out << '\n';
    }
}

std::vector<TopicOverlap> topic_overlap(const LdaModel& model, std::size_t top_words) {
    const std::uint32_t K = model.num_topics();
    std::vector<std::set<std::string>> sets(K);
    for (TopicId k = 0; k < K; ++k)
        for (auto& [word, _] : top_words_of(model, k, top_words)) sets[k].insert(word);
    std::vector<TopicOverlap> out;
    for (TopicId a = 0; a < K; ++a)
        for (TopicId b = a + 1; b < K; ++b) {
            std::size_t common = 0;
            for (const auto& w : sets[a]) common += sets[b].count(w);
            const std::size_t uni = sets[a].size() + sets[b].size() - common;
            out.push_back({a, b, uni == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(uni)});
        }
    return out;
}

}  // namespace tweetscope::lda
