#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/digamma.hpp>

#include "support/synth.hpp"
#include "tweetscope/error.hpp"
#include "tweetscope/lda.hpp"

using namespace tweetscope;
using namespace tweetscope::lda;

namespace {

textnorm::TokenizedDoc doc(std::string id, std::vector<std::string> tokens) { return {std::move(id), std::move(tokens)}; }

TrainParams params(std::uint32_t k, double alpha, double beta) {
    TrainParams p;
    p.num_topics = k;
    p.alpha0 = alpha;
    p.beta = beta;
    p.optimize_interval = 0;
    return p;
}

// log p(w, z) under the collapsed model, straight from the Gamma-function form.
double log_joint(const LdaModel& m) {
    const auto K = m.num_topics();
    const auto V = m.vocab_size();
    const double alpha_sum = std::accumulate(m.alpha().begin(), m.alpha().end(), 0.0);
    std::vector<std::vector<double>> nkw(K, std::vector<double>(V, 0.0));
    std::vector<double> nk(K, 0.0);
    double lp = 0.0;
    for (std::size_t d = 0; d < m.num_docs(); ++d) {
        std::vector<double> ndk(K, 0.0);
        for (std::size_t i = 0; i < m.doc_length(d); ++i) {
            const auto k = m.assignments(d)[i];
            ndk[k] += 1;
            nkw[k][m.doc_words(d)[i]] += 1;
            nk[k] += 1;
        }
        for (std::uint32_t k = 0; k < K; ++k) lp += std::lgamma(ndk[k] + m.alpha()[k]) - std::lgamma(m.alpha()[k]);
        lp += std::lgamma(alpha_sum) - std::lgamma(m.doc_length(d) + alpha_sum);
    }
    for (std::uint32_t k = 0; k < K; ++k) {
        for (std::size_t w = 0; w < V; ++w) lp += std::lgamma(nkw[k][w] + m.beta()) - std::lgamma(m.beta());
        lp += std::lgamma(V * m.beta()) - std::lgamma(nk[k] + V * m.beta());
    }
    return lp;
}

// Conditional of token (d, i) by ratio of joints over its K possible topics.
std::vector<double> conditional_from_joint(GibbsSampler& s, std::size_t d, std::size_t i) {
    const auto K = s.model().num_topics();
    const auto original = s.model().assignments(d)[i];
    std::vector<double> lp(K);
    for (TopicId k = 0; k < K; ++k) {
        s.set_assignment(d, i, k);
        lp[k] = log_joint(s.model());
    }
    s.set_assignment(d, i, original);
    const double mx = *std::max_element(lp.begin(), lp.end());
    double z = 0.0;
    for (auto& v : lp) z += (v = std::exp(v - mx));
    for (auto& v : lp) v /= z;
    return lp;
}

GibbsSampler micro_instance() {
    // doc0 = [w, u], doc1 = [w]; u -> topic 0, doc1's w -> topic 1.
    auto build = build_corpus({doc("d0", {"w", "u"}), doc("d1", {"w"})});
    GibbsSampler s(build.dictionary, build.corpus, params(2, 0.5, 0.1));
    s.set_assignment(0, 0, 0);
    s.set_assignment(0, 1, 0);
    s.set_assignment(1, 0, 1);
    return s;
}

}  // namespace

TEST_CASE("corpus building assigns ids in first-appearance order") {
    const auto build = build_corpus({doc("1", {"b", "a", "b"}), doc("2", {}), doc("3", {"c", "a"})});
    CHECK(build.dictionary.tokens() == std::vector<std::string>{"b", "a", "c"});
    CHECK(build.dictionary.doc_freq(1) == 2);
    CHECK(build.excluded_ids == std::vector<std::string>{"2"});
    CHECK(build.corpus.total_tokens == 5);
    REQUIRE(build.corpus.docs.size() == 2);
    CHECK(build.corpus.docs[0].counts == std::vector<std::pair<WordId, std::uint32_t>>{{0, 2}, {1, 1}});

    const auto pruned = build_corpus({doc("1", {"a", "x"}), doc("2", {"a", "y"}), doc("3", {"a", "x"})}, 2, 0.9);
    CHECK(pruned.dictionary.tokens() == std::vector<std::string>{"x"});
    CHECK(pruned.excluded_ids == std::vector<std::string>{"2"});
    CHECK_THROWS_AS(build_corpus({doc("1", {"a"})}, 2), ConfigError);
}

TEST_CASE("training parameters are validated") {
    CHECK_THROWS_AS(params(0, 0.1, 0.01).validate(), ConfigError);
    CHECK_THROWS_AS(params(2, 0.0, 0.01).validate(), ConfigError);
    CHECK_THROWS_AS(params(2, 0.1, -1.0).validate(), ConfigError);
    CHECK(TrainParams{}.initial_alpha() == doctest::Approx(0.1));
}

TEST_CASE("full conditional matches the closed form on the micro instance") {
    auto s = micro_instance();
    const auto p = s.full_conditional(0, 0);
    const double p0 = 1.5 * 0.1 / 1.2, p1 = 0.5 * 1.1 / 1.2;
    CHECK(p[0] == doctest::Approx(p0 / (p0 + p1)).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(p1 / (p0 + p1)).epsilon(1e-12));
    CHECK(p[0] == doctest::Approx(0.2143).epsilon(1e-4));
}

TEST_CASE("full conditional equals the ratio of collapsed joints") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<textnorm::TokenizedDoc> docs;
        for (int d = 0; d < 3; ++d) {
            std::vector<std::string> tokens;
            for (std::uint64_t i = 0, n = 1 + rng.below(5); i < n; ++i) tokens.push_back("w" + std::to_string(rng.below(4)));
            docs.push_back(doc(std::to_string(d), tokens));
        }
        auto build = build_corpus(docs);
        auto p = params(static_cast<std::uint32_t>(2 + rng.below(3)), 0.1 + rng.uniform(), 0.01 + rng.uniform());
        p.seed = rng.next();
        GibbsSampler s(build.dictionary, build.corpus, p);
        for (std::size_t d = 0; d < s.model().num_docs(); ++d)
            for (std::size_t i = 0; i < s.model().doc_length(d); ++i) {
                const auto fast = s.full_conditional(d, i);
                const auto slow = conditional_from_joint(s, d, i);
                for (std::size_t k = 0; k < fast.size(); ++k) CHECK(fast[k] == doctest::Approx(slow[k]).epsilon(1e-9));
            }
    }
}

TEST_CASE("sampled frequencies pass a chi-square test") {
    auto s = micro_instance();
    const auto expected = s.full_conditional(0, 0);
    const int draws = 100000;
    std::array<int, 2> counts{};
    for (int n = 0; n < draws; ++n) ++counts[s.resample_token(0, 0)];
    double chi2 = 0.0;
    for (int k = 0; k < 2; ++k) {
        const double e = expected[k] * draws;
        chi2 += (counts[k] - e) * (counts[k] - e) / e;
    }
    const double p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(1.0), chi2));
    CHECK(p_value > 0.001);
    s.model().check_invariants();
}

TEST_CASE("invariants hold after every sweep and recovery is near perfect") {
    const auto corpus = synth::two_topic_corpus(200, 5);
    const auto build = build_corpus(corpus.docs);
    auto p = params(2, 0.5, 0.01);
    p.iterations = 200;
    int checked = 0;
    const auto model = gibbs_train(build.dictionary, build.corpus, p, [&](const GibbsSampler& s, std::uint32_t) {
        s.model().check_invariants();
        ++checked;
    });
    CHECK(checked == 200);
    CHECK(model.alpha() == std::vector<double>{0.5, 0.5});
    CHECK(model.iterations_run() == 200);
    std::size_t agree = 0, total = 0;
    for (std::size_t d = 0; d < model.num_docs(); ++d)
        for (std::size_t i = 0; i < model.doc_length(d); ++i) {
            const int truth = model.dictionary().token(model.doc_words(d)[i])[0] == 'a' ? 0 : 1;
            agree += static_cast<int>(model.assignments(d)[i]) == truth;
            ++total;
        }
    const double acc = std::max(agree, total - agree) / static_cast<double>(total);
    CHECK(acc >= 0.95);
}

TEST_CASE("broken counts are detected") {
    auto s = micro_instance();
    auto j = s.model().to_json();
    auto out_of_range = j;
    out_of_range["docs"][0]["z"][0] = 7;
    CHECK_THROWS_AS(LdaModel::from_json(out_of_range), InputError);
    auto flipped = j;
    flipped["docs"][0]["z"][0] = 1;
    CHECK_THROWS_AS(LdaModel::from_json(flipped), InputError);
}

TEST_CASE("model JSON round trip preserves counts") {
    const auto corpus = synth::two_topic_corpus(20, 3);
    const auto build = build_corpus(corpus.docs);
    auto p = params(3, 0.2, 0.05);
    p.iterations = 5;
    const auto m = gibbs_train(build.dictionary, build.corpus, p);
    const auto back = LdaModel::from_json(m.to_json());
    CHECK(back.to_json() == m.to_json());
    for (TopicId k = 0; k < 3; ++k) CHECK(back.n_k(k) == m.n_k(k));
}

TEST_CASE("training is deterministic for a seed") {
    const auto corpus = synth::two_topic_corpus(40, 9);
    const auto build = build_corpus(corpus.docs);
    auto p = params(4, 0.3, 0.01);
    p.iterations = 30;
    p.burn_in = 5;
    p.optimize_interval = 5;
    const auto a = gibbs_train(build.dictionary, build.corpus, p).to_json().dump();
    const auto b = gibbs_train(build.dictionary, build.corpus, p).to_json().dump();
    CHECK(a == b);
    p.seed = 2;
    CHECK(gibbs_train(build.dictionary, build.corpus, p).to_json().dump() != a);
}

TEST_CASE("alpha optimization keeps symmetric counts symmetric") {
    std::vector<std::vector<std::uint32_t>> counts;
    const std::vector<std::uint32_t> base{6, 2, 1};
    auto perm = base;
    std::sort(perm.begin(), perm.end());
    do {
        for (int r = 0; r < 5; ++r) counts.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const auto up = optimize_alpha(counts, {0.3, 0.3, 0.3});
    CHECK(up.converged);
    CHECK_FALSE(up.aborted);
    for (double a : up.alpha) CHECK(std::abs(a - up.alpha[0]) <= 1e-10);
}

TEST_CASE("alpha optimization favors the concentrated topic") {
    Rng rng(12);
    const auto counts = synth::dominant_topic_counts(rng, 40, 3, 0.7);
    const auto up = optimize_alpha(counts, {0.5, 0.5, 0.5});
    CHECK(up.converged);
    CHECK(up.alpha[0] > up.alpha[1]);
    CHECK(up.alpha[0] > up.alpha[2]);
}

TEST_CASE("optimized alpha is a fixed point of the Minka update") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const auto counts = synth::dominant_topic_counts(rng, 40, 4, 0.6);
        const auto up = optimize_alpha(counts, {0.1, 0.1, 0.1, 0.1});
        REQUIRE(up.converged);
        using boost::math::digamma;
        const double sum = std::accumulate(up.alpha.begin(), up.alpha.end(), 0.0);
        double denom = 0.0;
        for (const auto& row : counts) {
            const double n = std::accumulate(row.begin(), row.end(), 0.0);
            denom += digamma(n + sum) - digamma(sum);
        }
        for (std::size_t k = 0; k < 4; ++k) {
            double num = 0.0;
            for (const auto& row : counts) num += digamma(row[k] + up.alpha[k]) - digamma(up.alpha[k]);
            CHECK(up.alpha[k] * num / denom == doctest::Approx(up.alpha[k]).epsilon(1e-4));
        }
    }
}

TEST_CASE("non-finite optimization keeps the previous alpha") {
    const std::vector<std::vector<std::uint32_t>> empty_docs(3, std::vector<std::uint32_t>(2, 0));
    const auto up = optimize_alpha(empty_docs, {0.2, 0.4});
    CHECK(up.alpha == std::vector<double>{0.2, 0.4});
    CHECK(up.aborted);
    CHECK_FALSE(up.converged);
}

TEST_CASE("prevalence report on a hand-built model") {
    // dominant topics: d0 -> 0, d1 -> 0, d2 -> 1, d3 -> 2
    auto build = build_corpus({doc("a", {"x", "x"}), doc("b", {"x", "y"}), doc("c", {"y", "y"}), doc("d", {"z", "z"})});
    GibbsSampler s(build.dictionary, build.corpus, params(3, 0.01, 0.01));
    const std::vector<TopicId> dom{0, 0, 1, 2};
    for (std::size_t d = 0; d < 4; ++d)
        for (std::size_t i = 0; i < 2; ++i) s.set_assignment(d, i, dom[d]);
    const auto report = topic_prevalence_report(s.model(), ReportOrder::descending, 3);
    REQUIRE(report.size() == 3);
    CHECK(report[0].topic_id == 0);
    CHECK(report[0].percent == 0.5);
    CHECK(report[1].topic_id == 1);
    CHECK(report[1].percent == 0.25);
    CHECK(report[2].percent == 0.25);
    CHECK(report[0].top_words[0].first == "x");

    const auto assoc = word_association_counts(s.model());
    CHECK(assoc == std::vector<std::size_t>{2, 1, 1});

    const auto asc = topic_prevalence_report(s.model(), ReportOrder::ascending, 3);
    CHECK(asc[0].topic_id == 2);
    CHECK(asc[2].topic_id == 0);

    std::ostringstream csv;
    write_report_csv(csv, report);
    CHECK(csv.str().rfind("topic_id,percent,starred,top_words\n0,0.5,1,x|y", 0) == 0);
}

TEST_CASE("top and bottom halves partition the topics") {
    const auto corpus = synth::two_topic_corpus(300, 4);
    const auto build = build_corpus(corpus.docs);
    auto p = params(50, 0.1, 0.01);
    p.iterations = 3;
    const auto m = gibbs_train(build.dictionary, build.corpus, p);
    const auto top = topic_prevalence_report(m, ReportOrder::descending, 25);
    const auto bottom = topic_prevalence_report(m, ReportOrder::ascending, 25);
    std::set<TopicId> ids;
    for (const auto& t : top) ids.insert(t.topic_id);
    for (const auto& t : bottom) ids.insert(t.topic_id);
    CHECK(ids.size() == 50);
    double total = 0.0;
    for (const auto& t : topic_prevalence_report(m, ReportOrder::descending, 50)) total += t.percent;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("topic overlap") {
    auto build = build_corpus({doc("a", {"x", "y"}), doc("b", {"x", "z"})});
    GibbsSampler s(build.dictionary, build.corpus, params(2, 0.1, 0.01));
    s.set_assignment(0, 0, 0);
    s.set_assignment(0, 1, 0);
    s.set_assignment(1, 0, 1);
    s.set_assignment(1, 1, 1);
    const auto ov = topic_overlap(s.model(), 2);
    REQUIRE(ov.size() == 1);
    CHECK(ov[0].jaccard == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("dominant topic ties go to the lowest id") {
    CHECK(argmax_topic({0.2, 0.4, 0.4}) == 1);
    CHECK(argmax_topic({0.5}) == 0);
}

TEST_CASE("optimization runs only after burn-in and on the interval") {
    const auto corpus = synth::two_topic_corpus(60, 1);
    const auto build = build_corpus(corpus.docs);
    auto p = params(3, 0.4, 0.01);
    p.iterations = 30;
    p.burn_in = 10;
    p.optimize_interval = 10;
    std::vector<std::uint32_t> changed_at;
    std::vector<double> last{0.4, 0.4, 0.4};
    gibbs_train(build.dictionary, build.corpus, p, [&](const GibbsSampler& s, std::uint32_t it) {
        if (s.model().alpha() != last) changed_at.push_back(it);
        last = s.model().alpha();
    });
    for (auto it : changed_at) CHECK(it > 10);
    CHECK_FALSE(changed_at.empty());
}
