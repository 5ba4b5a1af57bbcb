#include "tweetscope/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "tweetscope/error.hpp"
#include "tweetscope/random.hpp"
#include "tweetscope/util.hpp"

namespace tweetscope::cluster {

double SparseRow::squared_norm() const {
    double s = 0.0;
    for (double v : vals) s += v * v;
    return s;
}

SparseMatrix SparseMatrix::from_dense(const std::vector<std::vector<double>>& dense) {
    SparseMatrix m;
    for (const auto& row : dense) {
        m.num_cols = std::max(m.num_cols, row.size());
        SparseRow r;
        for (std::uint32_t c = 0; c < row.size(); ++c)
            if (row[c] != 0.0) {
                r.cols.push_back(c);
                r.vals.push_back(row[c]);
            }
        m.rows.push_back(std::move(r));
    }
    return m;
}

TfIdfResult tfidf_fit_transform(const std::vector<textnorm::TokenizedDoc>& docs) {
    if (docs.empty()) throw ConfigError("tfidf: no documents");
    std::set<std::string> terms;
    for (const auto& d : docs) terms.insert(d.tokens.begin(), d.tokens.end());
    if (terms.empty()) throw ConfigError("tfidf: empty vocabulary");

    TfIdfResult result;
    auto& model = result.model;
    model.terms.assign(terms.begin(), terms.end());
    for (std::uint32_t i = 0; i < model.terms.size(); ++i) model.vocabulary.emplace(model.terms[i], i);
    model.doc_count = docs.size();

    std::vector<std::map<std::uint32_t, double>> counts(docs.size());
    std::vector<std::uint32_t> df(model.terms.size(), 0);
    for (std::size_t d = 0; d < docs.size(); ++d) {
        for (const auto& t : docs[d].tokens) counts[d][model.vocabulary.at(t)] += 1.0;
        for (const auto& [col, _] : counts[d]) ++df[col];
    }
    const double D = static_cast<double>(docs.size());
    model.idf.resize(df.size());
    for (std::size_t c = 0; c < df.size(); ++c) model.idf[c] = std::log((1.0 + D) / (1.0 + df[c])) + 1.0;

    result.matrix.num_cols = model.terms.size();
    result.matrix.rows.resize(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
        auto& row = result.matrix.rows[d];
        for (const auto& [col, tf] : counts[d]) {
            row.cols.push_back(col);
            row.vals.push_back(tf * model.idf[col]);
        }
        const double norm = std::sqrt(row.squared_norm());
        if (norm == 0.0) {
            result.zero_rows.push_back(d);
            continue;
        }
        for (double& v : row.vals) v /= norm;
    }
    return result;
}

double squared_distance(const SparseRow& row, double row_norm, const double* centroid, double centroid_norm) {
    double dot = 0.0;
    for (std::size_t i = 0; i < row.cols.size(); ++i) dot += row.vals[i] * centroid[row.cols[i]];
    return std::max(0.0, row_norm - 2.0 * dot + centroid_norm);
}

namespace {

double dense_squared_norm(const double* c, std::size_t dim) {
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) s += c[i] * c[i];
    return s;
}

std::vector<double> all_centroid_norms(const std::vector<double>& centroids, std::uint32_t k, std::size_t dim) {
    std::vector<double> norms(k);
    for (std::uint32_t j = 0; j < k; ++j) norms[j] = dense_squared_norm(centroids.data() + j * dim, dim);
    return norms;
}

struct Nearest {
    std::uint32_t label = 0;
    double distance = 0.0;
};

Nearest nearest(const SparseRow& row, double row_norm, const std::vector<double>& centroids,
                const std::vector<double>& norms, std::size_t dim) {
    Nearest best{0, std::numeric_limits<double>::infinity()};
    for (std::uint32_t j = 0; j < norms.size(); ++j) {
        const double d = squared_distance(row, row_norm, centroids.data() + j * dim, norms[j]);
        if (d < best.distance) best = {j, d};
    }
    return best;
}

void place_row(const SparseRow& row, double* centroid, std::size_t dim) {
    std::fill(centroid, centroid + dim, 0.0);
    for (std::size_t i = 0; i < row.cols.size(); ++i) centroid[row.cols[i]] = row.vals[i];
}

std::size_t pick_weighted(const std::vector<double>& weights, double total, Rng& rng) {
    const double u = rng.uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    for (std::size_t i = weights.size(); i-- > 0;)
        if (weights[i] > 0.0) return i;
    return weights.size() - 1;
}

// Greedy k-means++: each new center is the best of several D^2-weighted candidates.
std::vector<double> kmeanspp(const SparseMatrix& m, const std::vector<double>& row_norms, std::uint32_t k, Rng& rng) {
    const std::size_t n = m.num_rows();
    const std::size_t dim = m.num_cols;
    const std::uint32_t trials = 2 + static_cast<std::uint32_t>(std::log(static_cast<double>(k)));
    std::vector<double> centroids(static_cast<std::size_t>(k) * dim, 0.0);
    std::vector<double> candidate(dim);

    auto distances_to = [&](const SparseRow& center_row) {
        place_row(center_row, candidate.data(), dim);
        const double cn = center_row.squared_norm();
        std::vector<double> d(n);
        for (std::size_t i = 0; i < n; ++i) d[i] = squared_distance(m.rows[i], row_norms[i], candidate.data(), cn);
        return d;
    };

    const std::size_t first = rng.below(n);
    place_row(m.rows[first], centroids.data(), dim);
    std::vector<double> closest = distances_to(m.rows[first]);

    for (std::uint32_t c = 1; c < k; ++c) {
        const double potential = std::accumulate(closest.begin(), closest.end(), 0.0);
        std::size_t best_index = 0;
        std::vector<double> best_closest;
        double best_potential = std::numeric_limits<double>::infinity();
        for (std::uint32_t t = 0; t < trials; ++t) {
            const std::size_t idx = potential > 0.0 ? pick_weighted(closest, potential, rng) : rng.below(n);
            auto d = distances_to(m.rows[idx]);
            for (std::size_t i = 0; i < n; ++i) d[i] = std::min(d[i], closest[i]);
            const double pot = std::accumulate(d.begin(), d.end(), 0.0);
            if (pot < best_potential) {
                best_potential = pot;
                best_index = idx;
                best_closest = std::move(d);
            }
        }
        place_row(m.rows[best_index], centroids.data() + static_cast<std::size_t>(c) * dim, dim);
        closest = std::move(best_closest);
    }
    return centroids;
}

// Moves centroids that own no rows onto the row farthest from its centroid.
void reseed_empty(const SparseMatrix& m, const std::vector<double>& row_norms, std::vector<double>& centroids,
                  std::uint32_t k) {
    const std::size_t dim = m.num_cols;
    for (std::uint32_t attempt = 0; attempt < k; ++attempt) {
        auto norms = all_centroid_norms(centroids, k, dim);
        std::vector<std::size_t> sizes(k, 0);
        std::vector<Nearest> near(m.num_rows());
        for (std::size_t i = 0; i < m.num_rows(); ++i) {
            near[i] = nearest(m.rows[i], row_norms[i], centroids, norms, dim);
            ++sizes[near[i].label];
        }
        auto empty = std::find(sizes.begin(), sizes.end(), 0);
        if (empty == sizes.end()) return;
        std::size_t far = m.num_rows();
        for (std::size_t i = 0; i < m.num_rows(); ++i)
            if (sizes[near[i].label] > 1 && (far == m.num_rows() || near[i].distance > near[far].distance)) far = i;
        if (far == m.num_rows()) return;
        place_row(m.rows[far], centroids.data() + static_cast<std::size_t>(empty - sizes.begin()) * dim, dim);
    }
}

ClusterModel run_once(const SparseMatrix& m, const std::vector<double>& row_norms, const KMeansParams& p,
                      std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t n = m.num_rows();
    const std::size_t dim = m.num_cols;
    const std::uint32_t k = p.k;

    ClusterModel model;
    model.k = k;
    model.dim = dim;
    model.centroids = kmeanspp(m, row_norms, k, rng);
    reseed_empty(m, row_norms, model.centroids, k);

    std::vector<double> sums(static_cast<std::size_t>(k) * dim, 0.0);
    std::vector<std::uint64_t> counts(k, 0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = std::min(p.batch_size, n);
    std::vector<std::uint32_t> batch_labels(batch);

    for (std::uint32_t it = 1; it <= p.max_iters; ++it) {
        if (batch < n) {
            // Partial Fisher-Yates: the first `batch` slots become the sample.
            for (std::size_t i = 0; i < batch; ++i) std::swap(order[i], order[i + rng.below(n - i)]);
        }
        const auto norms = all_centroid_norms(model.centroids, k, dim);
        for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t i = order[b];
            batch_labels[b] = nearest(m.rows[i], row_norms[i], model.centroids, norms, dim).label;
        }
        // Running sums per centroid: c = sum / count is the 1/count learning-rate update.
        for (std::size_t b = 0; b < batch; ++b) {
            const auto& row = m.rows[order[b]];
            double* s = sums.data() + static_cast<std::size_t>(batch_labels[b]) * dim;
            for (std::size_t q = 0; q < row.cols.size(); ++q) s[row.cols[q]] += row.vals[q];
            ++counts[batch_labels[b]];
        }
        double max_shift = 0.0;
        for (std::uint32_t j = 0; j < k; ++j) {
            if (counts[j] == 0) continue;
            double* c = model.centroids.data() + static_cast<std::size_t>(j) * dim;
            const double* s = sums.data() + static_cast<std::size_t>(j) * dim;
            const double cnt = static_cast<double>(counts[j]);
            double shift = 0.0;
            for (std::size_t q = 0; q < dim; ++q) {
                const double next = s[q] / cnt;
                shift += (next - c[q]) * (next - c[q]);
                c[q] = next;
            }
            max_shift = std::max(max_shift, std::sqrt(shift));
        }
        model.iterations_run = it;
        if (max_shift < p.tolerance) {
            model.converged = true;
            break;
        }
    }

    auto [labels, inertia] = assign_labels(m, model.centroids, k);
    model.labels = std::move(labels);
    model.inertia = inertia;
    model.cluster_ratios = cluster_ratios(model.labels, k);
    model.cluster_sizes.assign(k, 0);
    for (auto l : model.labels) ++model.cluster_sizes[l];
    return model;
}

}  // namespace

std::pair<std::vector<std::uint32_t>, double> assign_labels(const SparseMatrix& matrix,
                                                            const std::vector<double>& centroids, std::uint32_t k) {
    const std::size_t dim = matrix.num_cols;
    const auto norms = all_centroid_norms(centroids, k, dim);
    std::vector<std::uint32_t> labels(matrix.num_rows());
    double inertia = 0.0;
    for (std::size_t i = 0; i < matrix.num_rows(); ++i) {
        const auto best = nearest(matrix.rows[i], matrix.rows[i].squared_norm(), centroids, norms, dim);
        labels[i] = best.label;
        inertia += best.distance;
    }
    return {std::move(labels), inertia};
}

std::vector<double> cluster_ratios(const std::vector<std::uint32_t>& labels, std::uint32_t k) {
    std::vector<double> ratios(k, 0.0);
    if (labels.empty()) return ratios;
    std::vector<std::size_t> sizes(k, 0);
    for (auto l : labels) ++sizes.at(l);
    for (std::uint32_t j = 0; j < k; ++j)
        ratios[j] = static_cast<double>(sizes[j]) / static_cast<double>(labels.size());
    return ratios;
}

ClusterModel minibatch_kmeans(const SparseMatrix& matrix, const KMeansParams& params) {
    if (params.k == 0) throw ConfigError("kmeans: k must be >= 1");
    if (params.k > matrix.num_rows())
        throw ConfigError("kmeans: k=" + std::to_string(params.k) + " exceeds " +
                          std::to_string(matrix.num_rows()) + " rows");
    if (params.batch_size == 0 || params.max_iters == 0 || params.n_init == 0)
        throw ConfigError("kmeans: batch_size, max_iters and n_init must be >= 1");

    std::vector<double> row_norms(matrix.num_rows());
    for (std::size_t i = 0; i < matrix.num_rows(); ++i) row_norms[i] = matrix.rows[i].squared_norm();

    ClusterModel best;
    for (std::uint32_t run = 0; run < params.n_init; ++run) {
        auto model = run_once(matrix, row_norms, params, mix_seed(params.seed, run));
        if (run == 0 || model.inertia < best.inertia) best = std::move(model);
    }
    return best;
}

std::size_t knee_index(const std::vector<std::uint32_t>& ks, const std::vector<double>& inertias,
                       std::vector<std::string>* warnings) {
    const std::size_t n = ks.size();
    if (n < 2) return 0;
    const double x0 = ks.front(), y0 = inertias.front();
    const double x1 = ks.back(), y1 = inertias.back();
    const double slope = (y1 - y0) / (x1 - x0);
    // Perpendicular distance is the vertical gap times a constant, so the
    // vertical gap below the chord ranks points identically.
    const double scale = std::max({std::abs(y0), std::abs(y1), 1e-300});
    std::size_t best = 0;
    double best_gap = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double chord = y0 + slope * (ks[i] - x0);
        const double gap = chord - inertias[i];
        if (gap > best_gap + 1e-12 * scale) {
            best_gap = gap;
            best = i;
        }
    }
    if (best == 0 && warnings) warnings->push_back("no point lies below the chord; defaulting to the first candidate");
    return best;
}

ElbowCurve elbow_select(const SparseMatrix& matrix, const std::vector<std::uint32_t>& candidate_ks,
                        const KMeansParams& base) {
    if (candidate_ks.size() < 3) throw ConfigError("elbow: need at least 3 candidate k values");
    for (std::size_t i = 1; i < candidate_ks.size(); ++i)
        if (candidate_ks[i] <= candidate_ks[i - 1]) throw ConfigError("elbow: candidate k values must ascend");

    ElbowCurve curve;
    curve.candidate_ks = candidate_ks;
    for (auto k : candidate_ks) {
        KMeansParams p = base;
        p.k = k;
        p.seed = mix_seed(base.seed, k);
        curve.inertias.push_back(minibatch_kmeans(matrix, p).inertia);
    }
    const double range = std::abs(curve.inertias.front() - curve.inertias.back());
    for (std::size_t i = 1; i < curve.inertias.size(); ++i)
        if (curve.inertias[i] > curve.inertias[i - 1] + 0.01 * range)
            curve.warnings.push_back("inertia rises from k=" + std::to_string(candidate_ks[i - 1]) + " to k=" +
                                     std::to_string(candidate_ks[i]));
    curve.chosen_k = candidate_ks[knee_index(candidate_ks, curve.inertias, &curve.warnings)];
    return curve;
}

std::map<std::uint32_t, std::vector<std::size_t>> stratified_sample(const std::vector<std::uint32_t>& labels,
                                                                    std::size_t per_cluster_n, std::uint64_t seed) {
    if (per_cluster_n == 0) throw ConfigError("sample: per-cluster size must be >= 1");
    std::map<std::uint32_t, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
    std::map<std::uint32_t, std::vector<std::size_t>> sample;
    for (auto& [cluster, rows] : members) {
        Rng rng(mix_seed(seed, cluster));
        const std::size_t take = std::min(per_cluster_n, rows.size());
        for (std::size_t i = 0; i < take; ++i) std::swap(rows[i], rows[i + rng.below(rows.size() - i)]);
        rows.resize(take);
        std::sort(rows.begin(), rows.end());
        sample[cluster] = std::move(rows);
    }
    return sample;
}

void write_assignments_csv(std::ostream& out, const std::vector<std::string>& ids,
                           const std::vector<std::uint32_t>& labels) {
    out << "tweet_id,cluster_id\n";
    for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << ',' << labels.at(i) << '\n';
}

void write_elbow_csv(std::ostream& out, const ElbowCurve& curve) {
    out << "k,inertia,chosen\n";
    for (std::size_t i = 0; i < curve.candidate_ks.size(); ++i)
        out << curve.candidate_ks[i] << ',' << format_double(curve.inertias[i]) << ','
            << (curve.candidate_ks[i] == curve.chosen_k ? 1 : 0) << '\n';
}

nlohmann::json to_json(const ClusterModel& model, const TfIdfModel& tfidf, const std::vector<std::string>& ids) {
    nlohmann::json centroids = nlohmann::json::array();
    for (std::uint32_t j = 0; j < model.k; ++j) {
        nlohmann::json row = nlohmann::json::array();
        const double* c = model.centroid(j);
        for (std::size_t q = 0; q < model.dim; ++q)
            if (c[q] != 0.0) row.push_back(nlohmann::json::array({q, c[q]}));
        centroids.push_back(std::move(row));
    }
    return {{"format", "tweetscope-cluster"},
            {"version", 1},
            {"k", model.k},
            {"inertia", model.inertia},
            {"iterations_run", model.iterations_run},
            {"converged", model.converged},
            {"cluster_sizes", model.cluster_sizes},
            {"cluster_ratios", model.cluster_ratios},
            {"tfidf", {{"terms", tfidf.terms}, {"idf", tfidf.idf}, {"doc_count", tfidf.doc_count}}},
            {"centroids", std::move(centroids)},
            {"tweet_ids", ids},
            {"labels", model.labels}};
}

}  // namespace tweetscope::cluster
