#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "tweetscope/textnorm.hpp"

namespace tweetscope::cluster {

struct SparseRow {
    std::vector<std::uint32_t> cols;  // ascending
    std::vector<double> vals;

    double squared_norm() const;
};

struct SparseMatrix {
    std::vector<SparseRow> rows;
    std::size_t num_cols = 0;

    std::size_t num_rows() const { return rows.size(); }
    static SparseMatrix from_dense(const std::vector<std::vector<double>>& dense);
};

struct TfIdfModel {
    std::vector<std::string> terms;  // column index -> term, sorted
    std::unordered_map<std::string, std::uint32_t> vocabulary;
    std::vector<double> idf;
    std::size_t doc_count = 0;
};

struct TfIdfResult {
    TfIdfModel model;
    SparseMatrix matrix;
    std::vector<std::size_t> zero_rows;
};

// tf = raw count, idf = ln((1 + D) / (1 + df)) + 1, rows L2-normalized.
TfIdfResult tfidf_fit_transform(const std::vector<textnorm::TokenizedDoc>& docs);

struct KMeansParams {
    std::uint32_t k = 8;
    std::size_t batch_size = 1024;
    std::uint32_t max_iters = 100;
    std::uint32_t n_init = 3;
    double tolerance = 1e-4;  // max centroid shift (Euclidean)
    std::uint64_t seed = 1;
};

struct ClusterModel {
    std::uint32_t k = 0;
    std::size_t dim = 0;
    std::vector<double> centroids;  // k x dim, row-major
    std::vector<std::uint32_t> labels;
    double inertia = 0.0;
    std::vector<double> cluster_ratios;
    std::vector<std::size_t> cluster_sizes;
    std::uint32_t iterations_run = 0;
    bool converged = false;

    const double* centroid(std::uint32_t j) const { return centroids.data() + static_cast<std::size_t>(j) * dim; }
};

// Squared Euclidean distance between a sparse row and a dense point.
double squared_distance(const SparseRow& row, double row_norm, const double* centroid, double centroid_norm);

// Mini-batch k-means: greedy k-means++ seeding, per-centroid learning rate
// 1/count, stop at max shift < tolerance or max_iters; labels and inertia
// come from a final nearest-centroid pass over all rows. The best of n_init
// seedings (by final inertia) is kept.
ClusterModel minibatch_kmeans(const SparseMatrix& matrix, const KMeansParams& params);

// Nearest centroid for each row (ties to the lowest index) and the inertia.
std::pair<std::vector<std::uint32_t>, double> assign_labels(const SparseMatrix& matrix,
                                                            const std::vector<double>& centroids, std::uint32_t k);

std::vector<double> cluster_ratios(const std::vector<std::uint32_t>& labels, std::uint32_t k);

struct ElbowCurve {
    std::vector<std::uint32_t> candidate_ks;
    std::vector<double> inertias;
    std::uint32_t chosen_k = 0;
    std::vector<std::string> warnings;
};

// Index of the point farthest below the chord joining the first and last
// points; 0 (with a warning) when no point lies below it.
std::size_t knee_index(const std::vector<std::uint32_t>& ks, const std::vector<double>& inertias,
                       std::vector<std::string>* warnings = nullptr);

ElbowCurve elbow_select(const SparseMatrix& matrix, const std::vector<std::uint32_t>& candidate_ks,
                        const KMeansParams& base);

// Uniform sample without replacement of up to per_cluster_n row indices per
// cluster, each cluster's list in ascending row order.
std::map<std::uint32_t, std::vector<std::size_t>> stratified_sample(const std::vector<std::uint32_t>& labels,
                                                                    std::size_t per_cluster_n, std::uint64_t seed);

void write_assignments_csv(std::ostream& out, const std::vector<std::string>& ids,
                           const std::vector<std::uint32_t>& labels);
void write_elbow_csv(std::ostream& out, const ElbowCurve& curve);

nlohmann::json to_json(const ClusterModel& model, const TfIdfModel& tfidf, const std::vector<std::string>& ids);

}  // namespace tweetscope::cluster
