#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <boost/math/special_functions/digamma.hpp>

#include "tweetscope/lda.hpp"

namespace tweetscope::lda {

namespace {

constexpr double kMinAlpha = 1e-10;
constexpr double kTolerance = 1e-5;
constexpr std::uint32_t kMaxSteps = 1000;

double digamma(double x) {
    try {
        return boost::math::digamma(x);
    } catch (const std::exception&) {
        return std::nan("");
    }
}

// Docs with n_dk = 0 contribute digamma(alpha_k) - digamma(alpha_k) = 0 to the
// numerator, so sum_d [psi(n_dk + a_k) - psi(a_k)] only needs a histogram of
// the non-zero counts. Likewise for document lengths in the denominator.
struct CountHistograms {
    std::vector<std::map<std::uint32_t, std::uint64_t>> per_topic;
    std::map<std::uint32_t, std::uint64_t> lengths;
};

}  // namespace

AlphaUpdate optimize_alpha(const std::vector<std::vector<std::uint32_t>>& doc_topic_counts,
                           const std::vector<double>& alpha) {
    const std::size_t K = alpha.size();
    AlphaUpdate result{alpha, false, false, 0};
    if (K == 0 || doc_topic_counts.empty()) return result;

    CountHistograms hist;
    hist.per_topic.resize(K);
    for (const auto& row : doc_topic_counts) {
        std::uint32_t len = 0;
        for (std::size_t k = 0; k < K; ++k) {
            const std::uint32_t c = row.at(k);
            if (c > 0) ++hist.per_topic[k][c];
            len += c;
        }
        if (len > 0) ++hist.lengths[len];
    }

    std::vector<double> current = alpha;
    std::vector<double> next(K);
    for (std::uint32_t step = 1; step <= kMaxSteps; ++step) {
        const double sum = std::accumulate(current.begin(), current.end(), 0.0);
        const double psi_sum = digamma(sum);
        double denom = 0.0;
        for (const auto& [len, n] : hist.lengths) denom += static_cast<double>(n) * (digamma(len + sum) - psi_sum);

        double max_rel = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double psi_a = digamma(current[k]);
            double numer = 0.0;
            for (const auto& [c, n] : hist.per_topic[k])
                numer += static_cast<double>(n) * (digamma(c + current[k]) - psi_a);
            const double raw = current[k] * numer / denom;
            if (!std::isfinite(raw) || !(denom > 0.0)) {
                result.aborted = true;
                result.steps = step;
                return result;
            }
            next[k] = std::max(kMinAlpha, raw);
            max_rel = std::max(max_rel, std::abs(next[k] - current[k]) / current[k]);
        }
        current.swap(next);
        result.steps = step;
        if (max_rel < kTolerance) {
            result.converged = true;
            break;
        }
    }
    result.alpha = std::move(current);
    return result;
}

AlphaUpdate optimize_alpha(const LdaModel& model) {
    std::vector<std::vector<std::uint32_t>> counts(model.num_docs(), std::vector<std::uint32_t>(model.num_topics()));
    for (std::size_t d = 0; d < model.num_docs(); ++d)
        for (TopicId k = 0; k < model.num_topics(); ++k) counts[d][k] = model.n_dk(d, k);
    return optimize_alpha(counts, model.alpha());
}

}  // namespace tweetscope::lda
