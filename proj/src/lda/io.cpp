#include "tweetscope/error.hpp"
#include "tweetscope/lda.hpp"
#include "tweetscope/util.hpp"

namespace tweetscope::lda {

using nlohmann::json;

namespace {
constexpr const char* kFormat = "tweetscope-lda";
constexpr int kVersion = 1;
}  // namespace

json LdaModel::to_json() const {
    json docs = json::array();
    for (std::size_t d = 0; d < num_docs(); ++d)
        docs.push_back({{"id", doc_ids_[d]}, {"words", words_[d]}, {"z", z_[d]}});
    json doc_topics = json::array();
    for (std::size_t d = 0; d < num_docs(); ++d)
        doc_topics.push_back(std::vector<std::uint32_t>(n_dk_.begin() + d * num_topics_,
                                                  n_dk_.begin() + (d + 1) * num_topics_));
    json topic_words = json::array();
    for (TopicId k = 0; k < num_topics_; ++k) {
        json row = json::array();
        for (WordId w = 0; w < vocab_size(); ++w)
            if (auto c = n_kw(k, w)) row.push_back(json::array({w, c}));
        topic_words.push_back(std::move(row));
    }
    return json{{"format", kFormat},
                {"version", kVersion},
                {"num_topics", num_topics_},
                {"alpha", alpha_},
                {"beta", beta_},
                {"seed", seed_},
                {"iterations_run", iterations_run_},
                {"total_tokens", total_tokens_},
                {"dictionary", {{"tokens", dictionary_.tokens()}, {"doc_freq", dictionary_.doc_freqs()}}},
                {"docs", std::move(docs)},
                {"n_k", n_k_},
                {"n_dk", std::move(doc_topics)},
                {"n_kw", std::move(topic_words)}};
}

LdaModel LdaModel::from_json(const json& j) {
    try {
        if (j.at("format") != kFormat) throw InputError("not an LDA model file");
        if (j.at("version").get<int>() != kVersion)
            throw InputError("unsupported LDA model version " + j.at("version").dump());
        LdaModel m;
        m.num_topics_ = j.at("num_topics").get<std::uint32_t>();
        m.alpha_ = j.at("alpha").get<std::vector<double>>();
        m.beta_ = j.at("beta").get<double>();
        m.seed_ = j.at("seed").get<std::uint64_t>();
        m.iterations_run_ = j.at("iterations_run").get<std::uint32_t>();
        m.dictionary_ = Dictionary(j.at("dictionary").at("tokens").get<std::vector<std::string>>(),
                                   j.at("dictionary").at("doc_freq").get<std::vector<std::uint32_t>>());
        if (m.num_topics_ == 0 || m.alpha_.size() != m.num_topics_) throw InputError("model: bad K/alpha");
        const std::size_t V = m.dictionary_.size();
        for (const auto& doc : j.at("docs")) {
            m.doc_ids_.push_back(doc.at("id").get<std::string>());
            m.words_.push_back(doc.at("words").get<std::vector<WordId>>());
            m.z_.push_back(doc.at("z").get<std::vector<TopicId>>());
            if (m.words_.back().size() != m.z_.back().size()) throw InputError("model: words/z length mismatch");
            m.total_tokens_ += m.words_.back().size();
        }
        m.n_dk_.assign(m.doc_ids_.size() * m.num_topics_, 0);
        m.n_kw_.assign(static_cast<std::size_t>(m.num_topics_) * V, 0);
        m.n_k_.assign(m.num_topics_, 0);
        for (std::size_t d = 0; d < m.words_.size(); ++d)
            for (std::size_t i = 0; i < m.words_[d].size(); ++i) {
                if (m.words_[d][i] >= V || m.z_[d][i] >= m.num_topics_) throw InputError("model: id out of range");
                m.assign(d, i, m.z_[d][i]);
            }
        if (j.at("n_k").get<std::vector<std::uint64_t>>() != m.n_k_ ||
            j.at("total_tokens").get<std::uint64_t>() != m.total_tokens_)
            throw InputError("model: stored counts disagree with assignments");
        m.check_invariants();
        return m;
    } catch (const json::exception& e) {
        throw InputError(std::string("model: ") + e.what());
    } catch (const StateError& e) {
        throw InputError(std::string("model: ") + e.what());
    }
}

void LdaModel::save(const std::filesystem::path& path) const { write_file_atomic(path, to_json().dump() + "\n"); }

LdaModel LdaModel::load(const std::filesystem::path& path) {
    try {
        return from_json(json::parse(read_file(path)));
    } catch (const json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

}  // namespace tweetscope::lda
