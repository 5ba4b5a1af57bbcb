#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tweetscope/random.hpp"
#include "tweetscope/textnorm.hpp"

namespace tweetscope::lda {

using WordId = std::uint32_t;
using TopicId = std::uint32_t;

class Dictionary {
public:
    Dictionary() = default;
    Dictionary(std::vector<std::string> tokens, std::vector<std::uint32_t> doc_freq);

    std::optional<WordId> id(const std::string& token) const;
    const std::string& token(WordId id) const { return id_to_token_.at(id); }
    std::uint32_t doc_freq(WordId id) const { return doc_freq_.at(id); }
    std::size_t size() const { return id_to_token_.size(); }
    const std::vector<std::string>& tokens() const { return id_to_token_; }
    const std::vector<std::uint32_t>& doc_freqs() const { return doc_freq_; }

private:
    std::unordered_map<std::string, WordId> token_to_id_;
    std::vector<std::string> id_to_token_;
    std::vector<std::uint32_t> doc_freq_;
};

struct BowDoc {
    std::string tweet_id;
    std::vector<std::pair<WordId, std::uint32_t>> counts;  // ascending word id, counts >= 1

    std::uint32_t length() const;
};

struct BowCorpus {
    std::vector<BowDoc> docs;
    std::uint64_t total_tokens = 0;
};

struct CorpusBuild {
    Dictionary dictionary;
    BowCorpus corpus;
    std::vector<std::string> excluded_ids;  // empty after stopwording or pruning
};

// Word ids are assigned in order of first appearance. Words with document
// frequency below min_doc_freq or above max_doc_fraction * D are dropped.
CorpusBuild build_corpus(const std::vector<textnorm::TokenizedDoc>& docs, std::uint32_t min_doc_freq = 1,
                         double max_doc_fraction = 1.0);

struct TrainParams {
    std::uint32_t num_topics = 50;
    std::optional<double> alpha0;  // symmetric starting value, defaults to 5 / K
    double beta = 0.01;
    std::uint32_t iterations = 1000;
    std::uint32_t optimize_interval = 10;  // 0 disables prior optimization
    std::uint32_t burn_in = 100;
    std::uint64_t seed = 1;

    double initial_alpha() const { return alpha0.value_or(5.0 / num_topics); }
    void validate() const;
};

// Trained (or in-training) state. Counts are stored densely: n_dk is D x K
// and n_kw is K x V, both row-major.
class LdaModel {
public:
    LdaModel() = default;
    LdaModel(Dictionary dictionary, const BowCorpus& corpus, std::uint32_t num_topics, std::vector<double> alpha,
             double beta, std::uint64_t seed);

    std::uint32_t num_topics() const { return num_topics_; }
    std::size_t num_docs() const { return doc_ids_.size(); }
    std::size_t vocab_size() const { return dictionary_.size(); }
    std::uint64_t total_tokens() const { return total_tokens_; }
    const Dictionary& dictionary() const { return dictionary_; }
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }
    const std::vector<double>& alpha() const { return alpha_; }
    double beta() const { return beta_; }
    std::uint64_t seed() const { return seed_; }
    std::uint32_t iterations_run() const { return iterations_run_; }

    std::uint32_t doc_length(std::size_t d) const { return static_cast<std::uint32_t>(words_.at(d).size()); }
    const std::vector<WordId>& doc_words(std::size_t d) const { return words_.at(d); }
    const std::vector<TopicId>& assignments(std::size_t d) const { return z_.at(d); }

    std::uint32_t n_dk(std::size_t d, TopicId k) const { return n_dk_[d * num_topics_ + k]; }
    std::uint32_t n_kw(TopicId k, WordId w) const { return n_kw_[static_cast<std::size_t>(k) * vocab_size() + w]; }
    std::uint64_t n_k(TopicId k) const { return n_k_[k]; }

    // theta_dk = (n_dk + alpha_k) / (len_d + sum alpha)
    std::vector<double> doc_topic_dist(std::size_t d) const;
    // phi_kw = (n_kw + beta) / (n_k + V beta)
    double topic_word_prob(TopicId k, WordId w) const;
    std::vector<double> topic_word_dist(TopicId k) const;
    TopicId dominant_topic(std::size_t d) const;

    // Throws StateError naming the first broken count identity.
    void check_invariants() const;

    nlohmann::json to_json() const;
    static LdaModel from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static LdaModel load(const std::filesystem::path& path);

private:
    friend class GibbsSampler;

    void assign(std::size_t d, std::size_t i, TopicId k);
    void unassign(std::size_t d, std::size_t i);

    Dictionary dictionary_;
    std::vector<std::string> doc_ids_;
    std::vector<std::vector<WordId>> words_;
    std::vector<std::vector<TopicId>> z_;
    std::uint32_t num_topics_ = 0;
    std::vector<double> alpha_;
    double beta_ = 0.01;
    std::uint64_t seed_ = 0;
    std::uint32_t iterations_run_ = 0;
    std::uint64_t total_tokens_ = 0;
    std::vector<std::uint32_t> n_dk_;
    std::vector<std::uint32_t> n_kw_;
    std::vector<std::uint64_t> n_k_;
};

// Argmax with ties to the lowest index.
TopicId argmax_topic(const std::vector<double>& weights);

// Collapsed Gibbs sampler over an LdaModel's token assignments.
class GibbsSampler {
public:
    // Initializes every z uniformly at random from params.seed.
    GibbsSampler(Dictionary dictionary, const BowCorpus& corpus, const TrainParams& params);
    // Continues from an existing assignment state.
    GibbsSampler(LdaModel model, std::uint64_t rng_seed);

    // p(z_i = k | z_-i, w), normalized, with token i's own counts removed.
    std::vector<double> full_conditional(std::size_t d, std::size_t i) const;

    // Removes token i, draws from the full conditional, re-adds it.
    TopicId resample_token(std::size_t d, std::size_t i);
    void set_assignment(std::size_t d, std::size_t i, TopicId k);

    // One pass over every token in corpus order.
    void sweep();
    void set_alpha(std::vector<double> alpha);

    const LdaModel& model() const { return model_; }
    LdaModel release() && { return std::move(model_); }

private:
    void unnormalized_weights(std::size_t d, WordId w, std::optional<TopicId> held_out,
                              std::vector<double>& out) const;

    LdaModel model_;
    Rng rng_;
    std::vector<double> weights_;
};

struct AlphaUpdate {
    std::vector<double> alpha;
    bool converged = false;
    bool aborted = false;  // non-finite intermediate; alpha is the previous value
    std::uint32_t steps = 0;
};

// Minka fixed-point re-fit of the asymmetric document-topic prior from the
// current n_dk counts, iterated to relative change < 1e-5 or 1000 steps.
AlphaUpdate optimize_alpha(const LdaModel& model);

// Same update from raw per-document topic counts.
AlphaUpdate optimize_alpha(const std::vector<std::vector<std::uint32_t>>& doc_topic_counts,
                           const std::vector<double>& alpha);

using IterationObserver = std::function<void(const GibbsSampler&, std::uint32_t iteration)>;

LdaModel gibbs_train(const Dictionary& dictionary, const BowCorpus& corpus, const TrainParams& params,
                     const IterationObserver& observer = {});

// ---- reports ----

struct TopicSummary {
    TopicId topic_id = 0;
    std::vector<std::pair<std::string, double>> top_words;
    double percent = 0.0;
    std::size_t dominant_docs = 0;
    std::size_t nonzero_word_count = 0;
    bool starred = false;
};

enum class ReportOrder { descending, ascending };

// Per topic, the number of words with n_kw > 0.
std::vector<std::size_t> word_association_counts(const LdaModel& model);

// Topics ranked by share of documents whose dominant topic they are.
// Descending ranks by percent then lowest id; ascending is the exact reverse
// of that ranking, so top-n and bottom-(K-n) partition the topics.
std::vector<TopicSummary> topic_prevalence_report(const LdaModel& model, ReportOrder order, std::size_t count,
                                                  std::size_t top_words = 10, std::size_t starred_topics = 10);

void write_report_csv(std::ostream& out, const std::vector<TopicSummary>& report);

struct TopicOverlap {
    TopicId a = 0;
    TopicId b = 0;
    double jaccard = 0.0;
};

// Jaccard similarity of the top-n word sets for every topic pair a < b.
std::vector<TopicOverlap> topic_overlap(const LdaModel& model, std::size_t top_words = 10);

}  // namespace tweetscope::lda
