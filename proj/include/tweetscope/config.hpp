#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tweetscope/annotate.hpp"
#include "tweetscope/date.hpp"
#include "tweetscope/ingest.hpp"
#include "tweetscope/lda.hpp"
#include "tweetscope/textnorm.hpp"

namespace tweetscope::config {

struct Paths {
    std::filesystem::path archive;
    std::filesystem::path hashtags;
    std::filesystem::path stopwords;
    std::filesystem::path cases_ministry;
    std::optional<std::filesystem::path> cases_fallback;
    std::filesystem::path output_dir = "out";
};

struct CorpusParams {
    std::uint32_t min_doc_freq = 1;
    double max_doc_fraction = 1.0;
};

struct ClusterParams {
    std::vector<std::uint32_t> candidate_ks;  // defaults to 2..16
    std::optional<std::uint32_t> k;           // skips the elbow search when set
    std::size_t batch_size = 1024;
    std::uint32_t max_iters = 100;
    std::uint32_t n_init = 3;
    std::uint64_t seed = 1;
    std::size_t per_cluster_n = 30;
};

struct AnnotateParams {
    std::string session_id = "main";
    std::vector<std::string> annotators{"annotator-a", "annotator-b"};
    annotate::LabelSet label_set = annotate::LabelSet::defaults();
};

struct ServiceParams {
    std::string bind = "127.0.0.1";
    int port = 8080;
    std::optional<std::filesystem::path> session_store;  // defaults to <output_dir>/sessions
    std::optional<std::filesystem::path> static_dir;
};

struct PipelineConfig {
    Paths paths;
    std::optional<Date> window_start;
    std::optional<Date> window_end;
    std::string lang = "fa";
    std::vector<ingest::TweetKind> kinds{ingest::TweetKind::original};
    textnorm::NormalizationConfig normalize;
    CorpusParams corpus;
    lda::TrainParams lda;
    ClusterParams cluster;
    AnnotateParams annotate;
    ServiceParams service;

    std::filesystem::path session_store() const {
        return service.session_store.value_or(paths.output_dir / "sessions");
    }

    // Canonical JSON of every effective setting; hashed into artifacts.
    nlohmann::json to_json() const;
    std::string hash() const;
};

// Relative paths in the file resolve against the file's directory.
// Overrides are "section.key=value" with TOML value syntax (bare words are strings).
PipelineConfig load(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides = {});
PipelineConfig parse(std::string_view toml_text, const std::filesystem::path& base_dir,
                     const std::vector<std::string>& overrides = {});

}  // namespace tweetscope::config
