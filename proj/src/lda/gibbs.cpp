#include <cmath>
#include <iostream>
#include <numeric>

#include "tweetscope/error.hpp"
#include "tweetscope/lda.hpp"

namespace tweetscope::lda {

void TrainParams::validate() const {
    if (num_topics == 0) throw ConfigError("lda: number of topics must be >= 1");
    if (iterations == 0) throw ConfigError("lda: iterations must be >= 1");
    if (!(initial_alpha() > 0.0) || !std::isfinite(initial_alpha())) throw ConfigError("lda: alpha0 must be > 0");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("lda: beta must be > 0");
}

LdaModel::LdaModel(Dictionary dictionary, const BowCorpus& corpus, std::uint32_t num_topics, std::vector<double> alpha,
                   double beta, std::uint64_t seed)
    : dictionary_(std::move(dictionary)),
      num_topics_(num_topics),
      alpha_(std::move(alpha)),
      beta_(beta),
      seed_(seed) {
    if (corpus.docs.empty()) throw ConfigError("lda: corpus is empty");
    if (alpha_.size() != num_topics_) throw ConfigError("lda: alpha length must equal K");
    const std::size_t vocab = dictionary_.size();
    doc_ids_.reserve(corpus.docs.size());
    words_.reserve(corpus.docs.size());
    for (const auto& doc : corpus.docs) {
        std::vector<WordId> words;
        for (const auto& [w, c] : doc.counts) {
            if (w >= vocab) throw ConfigError("lda: word id out of dictionary range");
            words.insert(words.end(), c, w);
        }
        if (words.empty()) throw ConfigError("lda: corpus contains an empty document");
        total_tokens_ += words.size();
        doc_ids_.push_back(doc.tweet_id);
        z_.emplace_back(words.size(), 0);
        words_.push_back(std::move(words));
    }
    n_dk_.assign(doc_ids_.size() * num_topics_, 0);
    n_kw_.assign(static_cast<std::size_t>(num_topics_) * vocab, 0);
    n_k_.assign(num_topics_, 0);
    for (std::size_t d = 0; d < words_.size(); ++d)
        for (std::size_t i = 0; i < words_[d].size(); ++i) assign(d, i, 0);
}

void LdaModel::assign(std::size_t d, std::size_t i, TopicId k) {
    const WordId w = words_[d][i];
    z_[d][i] = k;
    ++n_dk_[d * num_topics_ + k];
    ++n_kw_[static_cast<std::size_t>(k) * vocab_size() + w];
    ++n_k_[k];
}

void LdaModel::unassign(std::size_t d, std::size_t i) {
    const WordId w = words_[d][i];
    const TopicId k = z_[d][i];
    --n_dk_[d * num_topics_ + k];
    --n_kw_[static_cast<std::size_t>(k) * vocab_size() + w];
    --n_k_[k];
}

std::vector<double> LdaModel::doc_topic_dist(std::size_t d) const {
    if (d >= num_docs()) throw std::out_of_range("doc index " + std::to_string(d) + " out of range");
    const double alpha_sum = std::accumulate(alpha_.begin(), alpha_.end(), 0.0);
    const double denom = static_cast<double>(doc_length(d)) + alpha_sum;
    std::vector<double> theta(num_topics_);
    for (TopicId k = 0; k < num_topics_; ++k) theta[k] = (n_dk(d, k) + alpha_[k]) / denom;
    return theta;
}

double LdaModel::topic_word_prob(TopicId k, WordId w) const {
    return (n_kw(k, w) + beta_) / (static_cast<double>(n_k_[k]) + static_cast<double>(vocab_size()) * beta_);
}

std::vector<double> LdaModel::topic_word_dist(TopicId k) const {
    std::vector<double> phi(vocab_size());
    for (WordId w = 0; w < vocab_size(); ++w) phi[w] = topic_word_prob(k, w);
    return phi;
}

TopicId argmax_topic(const std::vector<double>& weights) {
    TopicId best = 0;
    for (TopicId k = 1; k < weights.size(); ++k)
        if (weights[k] > weights[best]) best = k;
    return best;
}

TopicId LdaModel::dominant_topic(std::size_t d) const { return argmax_topic(doc_topic_dist(d)); }

void LdaModel::check_invariants() const {
    std::vector<std::uint64_t> topic_totals(num_topics_, 0);
    for (std::size_t d = 0; d < num_docs(); ++d) {
        std::uint64_t row = 0;
        for (TopicId k = 0; k < num_topics_; ++k) row += n_dk(d, k);
        if (row != doc_length(d)) throw StateError("n_dk row " + std::to_string(d) + " does not sum to doc length");
    }
    std::uint64_t all = 0;
    for (TopicId k = 0; k < num_topics_; ++k) {
        std::uint64_t col = 0;
        for (WordId w = 0; w < vocab_size(); ++w) col += n_kw(k, w);
        if (col != n_k_[k]) throw StateError("n_kw row " + std::to_string(k) + " does not sum to n_k");
        all += n_k_[k];
    }
    if (all != total_tokens_) throw StateError("sum of n_k differs from total tokens");
    for (double a : alpha_)
        if (!(a > 0.0)) throw StateError("alpha component not positive");
    if (!(beta_ > 0.0)) throw StateError("beta not positive");
}

// ---- sampler ----

GibbsSampler::GibbsSampler(Dictionary dictionary, const BowCorpus& corpus, const TrainParams& params)
    : rng_(params.seed) {
    params.validate();
    model_ = LdaModel(std::move(dictionary), corpus, params.num_topics,
                      std::vector<double>(params.num_topics, params.initial_alpha()), params.beta, params.seed);
    for (std::size_t d = 0; d < model_.num_docs(); ++d)
        for (std::size_t i = 0; i < model_.doc_length(d); ++i)
            set_assignment(d, i, static_cast<TopicId>(rng_.below(params.num_topics)));
    weights_.resize(params.num_topics);
}

GibbsSampler::GibbsSampler(LdaModel model, std::uint64_t rng_seed) : model_(std::move(model)), rng_(rng_seed) {
    weights_.resize(model_.num_topics());
}

void GibbsSampler::unnormalized_weights(std::size_t d, WordId w, std::optional<TopicId> held_out,
                                        std::vector<double>& out) const {
    const double vbeta = static_cast<double>(model_.vocab_size()) * model_.beta_;
    const TopicId K = model_.num_topics_;
    for (TopicId k = 0; k < K; ++k) {
        const double own = (held_out && *held_out == k) ? 1.0 : 0.0;
        out[k] = (model_.n_dk(d, k) - own + model_.alpha_[k]) * (model_.n_kw(k, w) - own + model_.beta_) /
                 (static_cast<double>(model_.n_k_[k]) - own + vbeta);
    }
}

std::vector<double> GibbsSampler::full_conditional(std::size_t d, std::size_t i) const {
    std::vector<double> p(model_.num_topics_);
    unnormalized_weights(d, model_.words_.at(d).at(i), model_.z_[d][i], p);
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& x : p) x /= total;
    return p;
}

TopicId GibbsSampler::resample_token(std::size_t d, std::size_t i) {
    model_.unassign(d, i);
    unnormalized_weights(d, model_.words_[d][i], std::nullopt, weights_);
    double total = 0.0;
    for (double& wgt : weights_) {
        total += wgt;
        wgt = total;
    }
    const double u = rng_.uniform() * total;
    TopicId k = 0;
    const TopicId last = model_.num_topics_ - 1;
    while (k < last && weights_[k] <= u) ++k;
    model_.assign(d, i, k);
    return k;
}

void GibbsSampler::set_assignment(std::size_t d, std::size_t i, TopicId k) {
    if (k >= model_.num_topics_) throw std::out_of_range("topic id out of range");
    model_.unassign(d, i);
    model_.assign(d, i, k);
}

void GibbsSampler::sweep() {
    for (std::size_t d = 0; d < model_.num_docs(); ++d)
        for (std::size_t i = 0; i < model_.doc_length(d); ++i) resample_token(d, i);
    ++model_.iterations_run_;
}

void GibbsSampler::set_alpha(std::vector<double> alpha) {
    if (alpha.size() != model_.num_topics_) throw ConfigError("alpha length must equal K");
    model_.alpha_ = std::move(alpha);
}

LdaModel gibbs_train(const Dictionary& dictionary, const BowCorpus& corpus, const TrainParams& params,
                     const IterationObserver& observer) {
    GibbsSampler sampler(dictionary, corpus, params);
    for (std::uint32_t iter = 1; iter <= params.iterations; ++iter) {
        sampler.sweep();
        if (params.optimize_interval > 0 && iter > params.burn_in && iter % params.optimize_interval == 0) {
            auto update = optimize_alpha(sampler.model());
            if (update.aborted)
                std::cerr << "warning: alpha optimization at iteration " << iter
                          << " hit a non-finite value; keeping previous alpha\n";
            else
                sampler.set_alpha(std::move(update.alpha));
        }
        if (observer) observer(sampler, iter);
    }
    return std::move(sampler).release();
}

}  // namespace tweetscope::lda
