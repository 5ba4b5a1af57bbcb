#include <doctest.h>

#include <cmath>
#include <sstream>

#include "support/synth.hpp"
#include "tweetscope/cluster.hpp"
#include "tweetscope/error.hpp"

using namespace tweetscope;
using namespace tweetscope::cluster;

namespace {

SparseMatrix one_d(std::vector<double> xs) {
    std::vector<std::vector<double>> dense;
    for (double x : xs) dense.push_back({x});
    return SparseMatrix::from_dense(dense);
}

KMeansParams kparams(std::uint32_t k, std::uint64_t seed = 1) {
    KMeansParams p;
    p.k = k;
    p.seed = seed;
    return p;
}

double brute_inertia(const SparseMatrix& m, const ClusterModel& model) {
    double total = 0.0;
    for (std::size_t r = 0; r < m.num_rows(); ++r) {
        std::vector<double> x(m.num_cols, 0.0);
        for (std::size_t j = 0; j < m.rows[r].cols.size(); ++j) x[m.rows[r].cols[j]] = m.rows[r].vals[j];
        double best = INFINITY;
        for (std::uint32_t c = 0; c < model.k; ++c) {
            double d = 0.0;
            for (std::size_t j = 0; j < m.num_cols; ++j) d += (x[j] - model.centroid(c)[j]) * (x[j] - model.centroid(c)[j]);
            best = std::min(best, d);
        }
        total += best;
    }
    return total;
}

}  // namespace

TEST_CASE("idf closed form") {
    // D = 2: a term in both docs -> ln(3/3)+1; in one doc -> ln(3/2)+1
    const auto res = tfidf_fit_transform({{"1", {"a", "b"}}, {"2", {"a"}}});
    REQUIRE(res.model.terms == std::vector<std::string>{"a", "b"});
    CHECK(std::abs(res.model.idf[0] - 1.0) <= 1e-12);
    CHECK(std::abs(res.model.idf[1] - (std::log(1.5) + 1.0)) <= 1e-12);
    const auto& row = res.matrix.rows[0];
    const double norm = std::hypot(1.0, std::log(1.5) + 1.0);
    CHECK(row.vals[0] == doctest::Approx(1.0 / norm).epsilon(1e-12));
    CHECK(row.squared_norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("empty documents become zero rows") {
    const auto res = tfidf_fit_transform({{"1", {"a"}}, {"2", {}}});
    CHECK(res.zero_rows == std::vector<std::size_t>{1});
    CHECK(res.matrix.rows[1].cols.empty());
}

TEST_CASE("term frequency is the raw count") {
    const auto res = tfidf_fit_transform({{"1", {"a", "a", "b"}}, {"2", {"b"}}});
    const auto& row = res.matrix.rows[0];
    const double ia = std::log(1.5) + 1.0;
    CHECK(row.vals[0] / row.vals[1] == doctest::Approx(2.0 * ia).epsilon(1e-12));
}

TEST_CASE("1-D fixture gives inertia exactly 1") {
    const auto m = one_d({0, 1, 10, 11});
    const auto model = minibatch_kmeans(m, kparams(2));
    CHECK(model.inertia == 1.0);
    CHECK(model.labels[0] == model.labels[1]);
    CHECK(model.labels[2] == model.labels[3]);
    CHECK(model.labels[0] != model.labels[2]);
    CHECK(model.cluster_ratios == std::vector<double>{0.5, 0.5});
}

TEST_CASE("invalid k is rejected") {
    const auto m = one_d({0, 1});
    CHECK_THROWS_AS(minibatch_kmeans(m, kparams(0)), ConfigError);
    CHECK_THROWS_AS(minibatch_kmeans(m, kparams(3)), ConfigError);
}

TEST_CASE("k-means properties on random data") {
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const auto pts = synth::blobs(3, 40, 4, rng.next());
        const auto m = SparseMatrix::from_dense(pts);
        auto p = kparams(static_cast<std::uint32_t>(2 + rng.below(4)), rng.next());
        p.batch_size = 32;
        const auto model = minibatch_kmeans(m, p);
        CHECK(model.labels.size() == pts.size());
        double sum = 0.0;
        for (double r : model.cluster_ratios) sum += r;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(model.inertia == doctest::Approx(brute_inertia(m, model)).epsilon(1e-9));
        const auto [labels, inertia] = assign_labels(m, model.centroids, model.k);
        CHECK(labels == model.labels);
        CHECK(inertia == doctest::Approx(model.inertia).epsilon(1e-12));
        for (auto l : model.labels) CHECK(l < model.k);
    }
}

TEST_CASE("k-means is deterministic for a seed") {
    const auto m = SparseMatrix::from_dense(synth::blobs(4, 50, 3, 8));
    auto p = kparams(4, 99);
    p.batch_size = 40;
    const auto a = minibatch_kmeans(m, p);
    const auto b = minibatch_kmeans(m, p);
    CHECK(a.centroids == b.centroids);
    CHECK(a.labels == b.labels);
}

TEST_CASE("knee of a synthetic curve") {
    const std::vector<std::uint32_t> ks{1, 2, 3, 4, 5, 6};
    CHECK(knee_index(ks, {100, 40, 10, 8, 7, 6}) == 2);
    std::vector<std::string> warnings;
    CHECK(knee_index({1, 2, 3}, {3, 2, 1}, &warnings) == 0);
    CHECK_FALSE(warnings.empty());
}

TEST_CASE("elbow on eight blobs") {
    const auto m = SparseMatrix::from_dense(synth::cube_blobs(60, 10.0, 2024));
    std::vector<std::uint32_t> ks;
    for (std::uint32_t k = 2; k <= 16; ++k) ks.push_back(k);
    auto p = kparams(8, 5);
    p.batch_size = 256;
    const auto curve = elbow_select(m, ks, p);
    CHECK(curve.inertias.size() == ks.size());
    CHECK(curve.chosen_k >= 7);
    CHECK(curve.chosen_k <= 9);
    CHECK_THROWS_AS(elbow_select(m, {2, 3}, p), ConfigError);

    std::ostringstream csv;
    write_elbow_csv(csv, curve);
    CHECK(csv.str().rfind("k,inertia,chosen\n", 0) == 0);
}

TEST_CASE("stratified sample") {
    std::vector<std::uint32_t> labels;
    for (int i = 0; i < 100; ++i) labels.push_back(i % 3 == 0 ? 0 : (i % 3 == 1 ? 1 : 2));
    labels[99] = 3;  // a singleton cluster
    const auto s = stratified_sample(labels, 10, 4);
    CHECK(s.size() == 4);
    for (const auto& [c, rows] : s) {
        CHECK(rows.size() == (c == 3 ? 1u : 10u));
        CHECK(std::is_sorted(rows.begin(), rows.end()));
        CHECK(std::adjacent_find(rows.begin(), rows.end()) == rows.end());
        for (auto r : rows) CHECK(labels[r] == c);
    }
    CHECK(stratified_sample(labels, 10, 4) == s);
}
